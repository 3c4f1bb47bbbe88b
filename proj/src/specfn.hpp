#pragma once

// Special functions used by the belief and ranking layers. All functions are
// pure and thread-safe; invalid arguments raise DomainError.

namespace akgrank {

/// ln Γ(x) for x > 0 (Lanczos, g = 7, ~15 significant digits).
double log_gamma(double x);

/// ln B(a, b). Evaluated from the Lanczos ratio form, so large arguments do
/// not lose precision to cancellation between three log-gamma values.
double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b), continued fraction with the
/// symmetry switch at x = (a+1)/(a+b+2).
double reg_inc_beta(double x, double a, double b);

/// Pr(θ_i > θ_j) for θ ~ Dir(α) with α_i = alpha_i, α_j = alpha_j.
/// Equal to I_{1/2}(alpha_j, alpha_i).
double pr_theta_greater(double alpha_i, double alpha_j);

}  // namespace akgrank
