#pragma once

// Exact-posterior reference for validating the moment-matching recursion.
//
// The unnormalized posterior of θ (and of each worker's ρ) given a history is
// integrated directly, without any Dirichlet approximation:
//   quadrature   tensor-product Gauss–Jacobi rule in a stick-breaking
//                parameterization of the simplex; the first observed pair is
//                split off as θ_a = s·u, θ_b = s·(1-u) so single-observation
//                histories integrate exactly. K ≤ 4.
//   monte_carlo  self-normalized importance sampling from a Dirichlet
//                proposal (the moment-matched approximation by default).
// Worker reliabilities are integrated analytically: the likelihood is a
// polynomial in ρ_w whose Beta expectations are closed form.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "belief.hpp"

namespace akgrank {

enum class OracleMethod { quadrature, monte_carlo };

struct OracleOptions {
  OracleMethod method = OracleMethod::quadrature;
  /// Initial nodes per dimension (quadrature) or sample count (Monte Carlo).
  std::size_t budget = 24;
  /// Absolute accuracy target. Quadrature refines until successive estimates
  /// agree to this; Monte Carlo flags the report when 3 standard errors exceed it.
  double tolerance = 1e-8;
  std::uint64_t seed = 1;
  std::optional<DirichletBelief> proposal;
};

struct MomentReport {
  std::vector<double> mean;
  double sum_second = 0.0;
  std::vector<double> worker_mean;
  std::vector<double> worker_spread;  // E[ρ² + (1-ρ)²]

  /// Standard errors; all zero for quadrature.
  std::vector<double> mean_se;
  double sum_second_se = 0.0;
  std::vector<double> worker_mean_se;
  std::vector<double> worker_spread_se;

  /// ln H(M, α⁰): log of the integral of the unnormalized posterior density.
  double log_normalizer = 0.0;
  /// Quadrature: largest change between the last two refinements.
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
  bool accuracy_warning = false;
  std::string warning;
};

/// Gauss–Jacobi rule for the Beta(p, q) distribution on (0, 1); weights sum to 1.
struct BetaRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
BetaRule beta_gauss_rule(double p, double q, std::size_t n);

/// Posterior moments given the prior and the full history. `worker_priors`
/// must cover every worker referenced by the history (or be empty for a
/// homogeneous history).
MomentReport exact_posterior_moments(const DirichletBelief& prior,
                                     const HistoryState& history,
                                     std::span<const WorkerBelief> worker_priors,
                                     const OracleOptions& options = {});

}  // namespace akgrank
