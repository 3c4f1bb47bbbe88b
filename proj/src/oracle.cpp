#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "errors.hpp"
#include "specfn.hpp"

namespace akgrank {
namespace {

constexpr std::size_t kMaxQuadratureItems = 4;
constexpr std::size_t kMaxTotalPoints = 4'000'000;
constexpr std::size_t kMaxNodesPerDim = 256;

// Per-worker likelihood as a polynomial in ρ, integrated against Beta(μ, ν).
struct WorkerTerm {
  std::size_t worker;
  std::vector<std::size_t> records;  // indices into history.records()
  std::vector<double> raw_moments;   // E[ρ^m], m = 0 .. records+2
};

class Likelihood {
 public:
  Likelihood(const HistoryState& history, std::span<const WorkerBelief> priors)
      : records_(history.records().begin(), history.records().end()),
        worker_count_(priors.size()) {
    std::vector<std::vector<std::size_t>> by_worker(priors.size());
    for (std::size_t r = 0; r < records_.size(); ++r) {
      const auto& rec = records_[r];
      if (!rec.worker) {
        plain_.push_back(r);
        continue;
      }
      if (*rec.worker >= priors.size()) {
        throw DomainError("exact_posterior_moments: missing prior for worker " +
                          std::to_string(*rec.worker));
      }
      by_worker[*rec.worker].push_back(r);
    }
    for (std::size_t w = 0; w < by_worker.size(); ++w) {
      if (by_worker[w].empty()) continue;
      WorkerTerm term{w, std::move(by_worker[w]), {}};
      const double mu = priors[w].mu();
      const double nu = priors[w].nu();
      term.raw_moments.push_back(1.0);
      for (std::size_t m = 0; m < term.records.size() + 2; ++m) {
        term.raw_moments.push_back(term.raw_moments.back() * (mu + m) / (mu + nu + m));
      }
      terms_.push_back(std::move(term));
    }
    poly_.resize(records_.size() + 1);
  }

  const std::vector<WorkerTerm>& terms() const { return terms_; }

  // Returns the likelihood; fills per-term (Z, Z·E[ρ], Z·E[ρ²+(1-ρ)²]).
  double evaluate(std::span<const double> theta, std::vector<double>& z,
                  std::vector<double>& z1, std::vector<double>& z2) {
    double value = 1.0;
    for (std::size_t r : plain_) value *= agree_prob(records_[r], theta);
    for (std::size_t t = 0; t < terms_.size(); ++t) {
      const auto& term = terms_[t];
      // Coefficients of Π_r (1 - q_r + ρ (2 q_r - 1)).
      std::fill(poly_.begin(), poly_.end(), 0.0);
      poly_[0] = 1.0;
      std::size_t degree = 0;
      for (std::size_t r : term.records) {
        const double q = agree_prob(records_[r], theta);
        const double c0 = 1.0 - q;
        const double c1 = 2.0 * q - 1.0;
        for (std::size_t m = degree + 1; m-- > 0;) {
          poly_[m + 1] += c1 * poly_[m];
          poly_[m] *= c0;
        }
        ++degree;
      }
      const auto& rm = term.raw_moments;
      double e0 = 0.0, e1 = 0.0, e2 = 0.0;
      for (std::size_t m = 0; m <= degree; ++m) {
        e0 += poly_[m] * rm[m];
        e1 += poly_[m] * rm[m + 1];
        e2 += poly_[m] * rm[m + 2];
      }
      z[t] = e0;
      z1[t] = e1;
      z2[t] = e0 - 2.0 * e1 + 2.0 * e2;
      value *= e0;
    }
    return value;
  }

 private:
  static double agree_prob(const ComparisonRecord& r, std::span<const double> theta) {
    const double winner = r.outcome == Outcome::first_preferred ? theta[r.i] : theta[r.j];
    return winner / (theta[r.i] + theta[r.j]);
  }

  std::vector<ComparisonRecord> records_;
  std::size_t worker_count_;
  std::vector<std::size_t> plain_;
  std::vector<WorkerTerm> terms_;
  std::vector<double> poly_;
};

// Weighted sums shared by both integration methods.
struct Accumulator {
  explicit Accumulator(std::size_t items, std::size_t terms)
      : s1(items, 0.0), w1(terms, 0.0), w2(terms, 0.0) {}
  double s0 = 0.0;
  std::vector<double> s1;
  double s2 = 0.0;
  std::vector<double> w1;
  std::vector<double> w2;
};

double log_multivariate_beta(std::span<const double> alpha) {
  double sum = 0.0, out = 0.0;
  for (double a : alpha) {
    out += log_gamma(a);
    sum += a;
  }
  return out - log_gamma(sum);
}

void fill_worker_moments(MomentReport& report, std::span<const WorkerBelief> priors) {
  report.worker_mean.clear();
  report.worker_spread.clear();
  for (const auto& w : priors) {
    const auto m = beta_moments(w);
    report.worker_mean.push_back(m.mean);
    report.worker_spread.push_back(m.spread);
  }
  report.worker_mean_se.assign(priors.size(), 0.0);
  report.worker_spread_se.assign(priors.size(), 0.0);
}

struct QuadratureResult {
  MomentReport report;
  std::size_t points = 0;
};

QuadratureResult integrate_grid(const DirichletBelief& prior, Likelihood& lik,
                                std::span<const WorkerBelief> priors,
                                std::size_t pivot_a, std::size_t pivot_b,
                                std::size_t nodes) {
  const auto alpha = prior.alpha();
  const std::size_t k = alpha.size();
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < k; ++i) {
    if (i != pivot_a && i != pivot_b) others.push_back(i);
  }
  // Merged vector (θ_a + θ_b, θ_others...) ~ Dir(α_a + α_b, α_others...).
  std::vector<double> merged{alpha[pivot_a] + alpha[pivot_b]};
  for (std::size_t i : others) merged.push_back(alpha[i]);

  std::vector<BetaRule> rules;
  rules.push_back(beta_gauss_rule(alpha[pivot_a], alpha[pivot_b], nodes));
  for (std::size_t l = 0; l + 1 < merged.size(); ++l) {
    double tail = 0.0;
    for (std::size_t r = l + 1; r < merged.size(); ++r) tail += merged[r];
    rules.push_back(beta_gauss_rule(merged[l], tail, nodes));
  }
  const std::size_t dims = rules.size();

  const auto& terms = lik.terms();
  Accumulator acc(k, terms.size());
  std::vector<double> z(terms.size()), z1(terms.size()), z2(terms.size());
  std::vector<double> theta(k), parts(merged.size());
  std::vector<std::size_t> idx(dims, 0);
  std::size_t points = 0;
  while (true) {
    double weight = 1.0;
    for (std::size_t d = 0; d < dims; ++d) weight *= rules[d].weights[idx[d]];
    double remaining = 1.0;
    for (std::size_t l = 0; l + 1 < merged.size(); ++l) {
      const double v = rules[l + 1].nodes[idx[l + 1]];
      parts[l] = remaining * v;
      remaining *= 1.0 - v;
    }
    parts.back() = remaining;
    const double u = rules[0].nodes[idx[0]];
    theta[pivot_a] = parts[0] * u;
    theta[pivot_b] = parts[0] * (1.0 - u);
    for (std::size_t l = 0; l < others.size(); ++l) theta[others[l]] = parts[l + 1];

    const double w = weight * lik.evaluate(theta, z, z1, z2);
    acc.s0 += w;
    double sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      acc.s1[i] += w * theta[i];
      sq += theta[i] * theta[i];
    }
    acc.s2 += w * sq;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      acc.w1[t] += w * z1[t] / z[t];
      acc.w2[t] += w * z2[t] / z[t];
    }
    ++points;

    std::size_t d = 0;
    for (; d < dims; ++d) {
      if (++idx[d] < nodes) break;
      idx[d] = 0;
    }
    if (d == dims) break;
  }

  QuadratureResult out;
  out.points = points;
  auto& rep = out.report;
  fill_worker_moments(rep, priors);
  rep.mean.resize(k);
  for (std::size_t i = 0; i < k; ++i) rep.mean[i] = acc.s1[i] / acc.s0;
  rep.sum_second = acc.s2 / acc.s0;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    rep.worker_mean[terms[t].worker] = acc.w1[t] / acc.s0;
    rep.worker_spread[terms[t].worker] = acc.w2[t] / acc.s0;
  }
  rep.mean_se.assign(k, 0.0);
  rep.log_normalizer = std::log(acc.s0) + log_multivariate_beta(alpha);
  return out;
}

double max_difference(const MomentReport& a, const MomentReport& b) {
  double diff = std::fabs(a.sum_second - b.sum_second);
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    diff = std::max(diff, std::fabs(a.mean[i] - b.mean[i]));
  }
  for (std::size_t w = 0; w < a.worker_mean.size(); ++w) {
    diff = std::max(diff, std::fabs(a.worker_mean[w] - b.worker_mean[w]));
    diff = std::max(diff, std::fabs(a.worker_spread[w] - b.worker_spread[w]));
  }
  return diff;
}

MomentReport quadrature_moments(const DirichletBelief& prior, const HistoryState& history,
                                std::span<const WorkerBelief> priors,
                                const OracleOptions& options) {
  const std::size_t k = prior.size();
  if (k > kMaxQuadratureItems) {
    throw DomainError("exact_posterior_moments: quadrature supports at most " +
                      std::to_string(kMaxQuadratureItems) + " items");
  }
  Likelihood lik(history, priors);
  std::size_t pivot_a = 0, pivot_b = 1;
  if (!history.records().empty()) {
    pivot_a = history.records().front().i;
    pivot_b = history.records().front().j;
  }
  const std::size_t dims = k - 1;
  std::size_t cap = kMaxNodesPerDim;
  while (cap > 2 && std::pow(static_cast<double>(cap), static_cast<double>(dims)) >
                        static_cast<double>(kMaxTotalPoints)) {
    cap /= 2;
  }
  std::size_t nodes = std::clamp<std::size_t>(options.budget, 2, cap);
  auto current = integrate_grid(prior, lik, priors, pivot_a, pivot_b, nodes);
  std::size_t evaluations = current.points;
  double error = std::numeric_limits<double>::infinity();
  while (nodes * 2 <= cap) {
    nodes *= 2;
    auto refined = integrate_grid(prior, lik, priors, pivot_a, pivot_b, nodes);
    evaluations += refined.points;
    error = max_difference(current.report, refined.report);
    current = std::move(refined);
    if (error <= options.tolerance) break;
  }
  MomentReport rep = std::move(current.report);
  rep.error_estimate = error;
  rep.evaluations = evaluations;
  if (!(error <= options.tolerance)) {
    rep.accuracy_warning = true;
    std::ostringstream os;
    os << "quadrature refinement stopped at " << nodes
       << " nodes per dimension with estimated error " << error << " > target "
       << options.tolerance;
    rep.warning = os.str();
  }
  return rep;
}

DirichletBelief default_proposal(const DirichletBelief& prior, const HistoryState& history,
                                 std::span<const WorkerBelief> priors) {
  try {
    DirichletBelief belief = prior;
    std::vector<WorkerBelief> workers(priors.begin(), priors.end());
    for (const auto& r : history.records()) {
      if (r.worker) {
        auto next = mm_update_heterogeneous(belief, workers.at(*r.worker), r.i, r.j, r.outcome);
        belief = std::move(next.belief);
        workers.at(*r.worker) = next.worker;
      } else {
        belief = mm_update_homogeneous(belief, r.i, r.j, r.outcome);
      }
    }
    return belief;
  } catch (const Error&) {
    return prior;
  }
}

MomentReport monte_carlo_moments(const DirichletBelief& prior, const HistoryState& history,
                                 std::span<const WorkerBelief> priors,
                                 const OracleOptions& options) {
  const std::size_t k = prior.size();
  const std::size_t n = std::max<std::size_t>(options.budget, 2);
  const DirichletBelief proposal =
      options.proposal ? *options.proposal : default_proposal(prior, history, priors);
  if (proposal.size() != k) throw DomainError("exact_posterior_moments: proposal size mismatch");
  Likelihood lik(history, priors);
  const auto& terms = lik.terms();

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::gamma_distribution<double>> gammas;
  for (double a : proposal.alpha()) gammas.emplace_back(a < 1.0 ? a + 1.0 : a, 1.0);

  // Samples are stored so the weights can be normalized before summing.
  std::vector<double> log_w(n);
  std::vector<double> thetas(n * k);
  std::vector<double> zr1(n * terms.size()), zr2(n * terms.size());
  std::vector<double> z(terms.size()), z1(terms.size()), z2(terms.size());
  std::vector<double> log_g(k), theta(k);
  const auto pa = prior.alpha();
  const auto qa = proposal.alpha();
  const double log_norm_ratio = log_multivariate_beta(qa) - log_multivariate_beta(pa);
  for (std::size_t s = 0; s < n; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      double g = gammas[i](rng);
      double lg = std::log(g);
      if (qa[i] < 1.0) lg += std::log(unif(rng)) / qa[i];
      log_g[i] = lg;
      mx = std::max(mx, lg);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += std::exp(log_g[i] - mx);
    const double log_total = mx + std::log(total);
    double lw = log_norm_ratio;
    for (std::size_t i = 0; i < k; ++i) {
      const double lt = log_g[i] - log_total;
      theta[i] = std::exp(lt);
      lw += (pa[i] - qa[i]) * lt;
    }
    const double l = lik.evaluate(theta, z, z1, z2);
    log_w[s] = lw + std::log(l);
    std::copy(theta.begin(), theta.end(), thetas.begin() + s * k);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      zr1[s * terms.size() + t] = z1[t] / z[t];
      zr2[s * terms.size() + t] = z2[t] / z[t];
    }
  }
  const double mx = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> w(n);
  double wsum = 0.0, wsq = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    w[s] = std::exp(log_w[s] - mx);
    wsum += w[s];
    wsq += w[s] * w[s];
  }

  // Self-normalized estimate and its delta-method standard error.
  auto estimate = [&](auto&& g) {
    double m = 0.0;
    for (std::size_t s = 0; s < n; ++s) m += w[s] * g(s);
    m /= wsum;
    double v = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double dlt = g(s) - m;
      v += w[s] * w[s] * dlt * dlt;
    }
    return std::pair{m, std::sqrt(v) / wsum};
  };

  MomentReport rep;
  fill_worker_moments(rep, priors);
  rep.mean.resize(k);
  rep.mean_se.resize(k);
  double max_se = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    auto [m, se] = estimate([&](std::size_t s) { return thetas[s * k + i]; });
    rep.mean[i] = m;
    rep.mean_se[i] = se;
    max_se = std::max(max_se, se);
  }
  {
    auto [m, se] = estimate([&](std::size_t s) {
      double sq = 0.0;
      for (std::size_t i = 0; i < k; ++i) sq += thetas[s * k + i] * thetas[s * k + i];
      return sq;
    });
    rep.sum_second = m;
    rep.sum_second_se = se;
    max_se = std::max(max_se, se);
  }
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const std::size_t wk = terms[t].worker;
    auto [m1, se1] = estimate([&](std::size_t s) { return zr1[s * terms.size() + t]; });
    auto [m2, se2] = estimate([&](std::size_t s) { return zr2[s * terms.size() + t]; });
    rep.worker_mean[wk] = m1;
    rep.worker_mean_se[wk] = se1;
    rep.worker_spread[wk] = m2;
    rep.worker_spread_se[wk] = se2;
    max_se = std::max({max_se, se1, se2});
  }
  // H = B(α⁰) E_q[(prior/q) L]; the stored log-weights already carry prior/q.
  rep.log_normalizer =
      mx + std::log(wsum / static_cast<double>(n)) + log_multivariate_beta(pa);
  rep.error_estimate = 3.0 * max_se;
  rep.evaluations = n;
  const double ess = wsum * wsum / wsq;
  if (rep.error_estimate > options.tolerance) {
    rep.accuracy_warning = true;
    std::ostringstream os;
    os << "Monte Carlo budget " << n << " (effective sample size " << ess
       << ") gives 3 standard errors " << rep.error_estimate << " > target "
       << options.tolerance;
    rep.warning = os.str();
  }
  return rep;
}

}  // namespace

BetaRule beta_gauss_rule(double p, double q, std::size_t n) {
  if (!(p > 0.0) || !(q > 0.0) || n == 0) {
    throw DomainError("beta_gauss_rule: need p, q > 0 and n >= 1");
  }
  // Jacobi weight (1-x)^α (1+x)^β on [-1, 1] maps to t^{p-1}(1-t)^{q-1}.
  const double al = q - 1.0;
  const double be = p - 1.0;
  Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
  for (std::size_t i = 0; i < n; ++i) {
    const double nn = static_cast<double>(i);
    if (i == 0) {
      diag[0] = (be - al) / (al + be + 2.0);
    } else {
      const double s = 2.0 * nn + al + be;
      diag[static_cast<Eigen::Index>(i)] = (be * be - al * al) / (s * (s + 2.0));
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double nn = static_cast<double>(i);
    const double s = 2.0 * nn + al + be;
    double b2;
    if (i == 1) {
      b2 = 4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + al + be) * (2.0 + al + be) * (3.0 + al + be));
    } else {
      b2 = 4.0 * nn * (nn + al) * (nn + be) * (nn + al + be) / (s * s * (s + 1.0) * (s - 1.0));
    }
    sub[static_cast<Eigen::Index>(i - 1)] = std::sqrt(b2);
  }
  BetaRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = 0.5 * (1.0 + diag[0]);
    rule.weights[0] = 1.0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw DegeneracyError("beta_gauss_rule: eigensolver failed");
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    rule.nodes[i] = 0.5 * (1.0 + es.eigenvalues()[ii]);
    const double v = es.eigenvectors()(0, ii);
    rule.weights[i] = v * v;
  }
  return rule;
}

MomentReport exact_posterior_moments(const DirichletBelief& prior,
                                     const HistoryState& history,
                                     std::span<const WorkerBelief> worker_priors,
                                     const OracleOptions& options) {
  if (history.items() != prior.size()) {
    throw DomainError("exact_posterior_moments: history and prior disagree on item count");
  }
  if (options.method == OracleMethod::quadrature) {
    return quadrature_moments(prior, history, worker_priors, options);
  }
  return monte_carlo_moments(prior, history, worker_priors, options);
}

}  // namespace akgrank
