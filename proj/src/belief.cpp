#include "belief.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "errors.hpp"

namespace akgrank {
namespace {

constexpr double kSumTolerance = 1e-10;
constexpr double kDivisorFloor = 1e-14;

void check_pair(std::size_t i, std::size_t j, std::size_t items, const char* fn) {
  if (!(i < j) || j >= items) {
    std::ostringstream os;
    os << fn << ": need i < j < " << items << ", got (" << i << ", " << j << ")";
    throw DomainError(os.str());
  }
}

// Solves Σ C_k (C_k α'_0 + 1) = D (α'_0 + 1) for α'_0 and scales C by it.
DirichletBelief solve_dirichlet(std::vector<double> c, double d, const char* fn) {
  const double c_sum = std::accumulate(c.begin(), c.end(), 0.0);
  if (!std::isfinite(c_sum) || std::fabs(c_sum - 1.0) > kSumTolerance) {
    std::ostringstream os;
    os << fn << ": matched means do not sum to one (sum = " << c_sum << ")";
    throw DegeneracyError(os.str());
  }
  double c_sq = 0.0;
  for (double v : c) c_sq += v * v;
  const double divisor = c_sq - d;
  if (!std::isfinite(divisor) || std::fabs(divisor) < kDivisorFloor) {
    std::ostringstream os;
    os << fn << ": degenerate divisor sum(C^2) - D = " << divisor;
    throw DegeneracyError(os.str());
  }
  const double a0 = (d - 1.0) / divisor;
  if (!std::isfinite(a0) || !(a0 > 0.0)) {
    std::ostringstream os;
    os << fn << ": non-positive concentration alpha'_0 = " << a0;
    throw DegeneracyError(os.str());
  }
  for (double& v : c) {
    v *= a0;
    if (!std::isfinite(v) || !(v > 0.0)) {
      std::ostringstream os;
      os << fn << ": non-positive component " << v;
      throw DegeneracyError(os.str());
    }
  }
  return DirichletBelief(std::move(c));
}

double beta_variance(double a, double b) {
  const double s = a + b;
  return a * b / (s * s * (s + 1.0));
}

}  // namespace

Outcome outcome_from_int(int y) {
  if (y == 1) return Outcome::first_preferred;
  if (y == -1) return Outcome::second_preferred;
  throw DomainError("outcome must be +1 or -1, got " + std::to_string(y));
}

DirichletBelief::DirichletBelief(std::vector<double> alpha)
    : alpha_(std::move(alpha)), alpha0_(0.0) {
  if (alpha_.size() < 2) throw DomainError("DirichletBelief: need at least two items");
  for (double a : alpha_) {
    if (!std::isfinite(a) || !(a > 0.0)) {
      std::ostringstream os;
      os << "DirichletBelief: components must be positive and finite, got " << a;
      throw DomainError(os.str());
    }
    alpha0_ += a;
  }
}

DirichletBelief DirichletBelief::uniform(std::size_t items, double fill) {
  return DirichletBelief(std::vector<double>(items, fill));
}

WorkerBelief::WorkerBelief(double mu, double nu) : mu_(mu), nu_(nu) {
  if (!std::isfinite(mu) || !std::isfinite(nu) || !(mu > 0.0) || !(nu > 0.0)) {
    std::ostringstream os;
    os << "WorkerBelief: mu and nu must be positive and finite, got (" << mu
       << ", " << nu << ")";
    throw DomainError(os.str());
  }
}

HistoryState::HistoryState(std::size_t items, std::size_t workers, bool heterogeneous)
    : items_(items),
      workers_(workers),
      heterogeneous_(heterogeneous),
      counts_(items * items, 0),
      used_(heterogeneous ? items * items * workers : 0, 0) {
  if (items < 2) throw DomainError("HistoryState: need at least two items");
}

HistoryState HistoryState::homogeneous(std::size_t items) {
  return HistoryState(items, 0, false);
}

HistoryState HistoryState::heterogeneous(std::size_t items, std::size_t workers) {
  if (workers == 0) throw DomainError("HistoryState: heterogeneous mode needs workers");
  return HistoryState(items, workers, true);
}

bool HistoryState::used(std::size_t i, std::size_t j, std::size_t worker) const {
  if (!heterogeneous_) return false;
  return used_[(i * items_ + j) * workers_ + worker] != 0;
}

void HistoryState::record(const ComparisonRecord& r) {
  check_pair(r.i, r.j, items_, "record_outcome");
  if (heterogeneous_) {
    if (!r.worker || *r.worker >= workers_) {
      throw DomainError("record_outcome: heterogeneous record needs a valid worker");
    }
    auto& cell = used_[(r.i * items_ + r.j) * workers_ + *r.worker];
    if (cell) {
      std::ostringstream os;
      os << "record_outcome: worker " << *r.worker << " already compared pair ("
         << r.i << ", " << r.j << ")";
      throw ConstraintError(os.str());
    }
    cell = 1;
  }
  if (r.outcome == Outcome::first_preferred) {
    ++counts_[r.i * items_ + r.j];
  } else {
    ++counts_[r.j * items_ + r.i];
  }
  records_.push_back(r);
}

HistoryState record_outcome(HistoryState history, const ComparisonRecord& r) {
  history.record(r);
  return history;
}

DirichletBelief mm_update_homogeneous(const DirichletBelief& belief, std::size_t i,
                                      std::size_t j, Outcome y) {
  check_pair(i, j, belief.size(), "mm_update_homogeneous");
  const auto alpha = belief.alpha();
  const double a0 = belief.alpha0();
  const double ai = alpha[i];
  const double aj = alpha[j];
  const double s = ai + aj;
  const double wi = y == Outcome::first_preferred ? 1.0 : 0.0;
  const double wj = 1.0 - wi;

  const double mean_den = a0 * (s + 1.0);
  const double rest_den = a0 * (a0 + 1.0);
  const double pair_den = rest_den * (s + 2.0);

  std::vector<double> c(alpha.size());
  double d = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k == i || k == j) continue;
    c[k] = alpha[k] / a0;
    d += alpha[k] * (alpha[k] + 1.0) / rest_den;
  }
  c[i] = (ai + wi) * s / mean_den;
  c[j] = (aj + wj) * s / mean_den;
  d += (ai + wi) * (ai + wi + 1.0) * s / pair_den;
  d += (aj + wj) * (aj + wj + 1.0) * s / pair_den;
  return solve_dirichlet(std::move(c), d, "mm_update_homogeneous");
}

double reliability_weight(const DirichletBelief& belief, const WorkerBelief& wb,
                          std::size_t i, std::size_t j, Outcome y) {
  const double ai = belief[i];
  const double aj = belief[j];
  const double agree = y == Outcome::first_preferred ? wb.mu() : wb.nu();
  const double disagree = y == Outcome::first_preferred ? wb.nu() : wb.mu();
  return agree * ai / (agree * ai + disagree * aj);
}

HeterogeneousUpdate mm_update_heterogeneous(const DirichletBelief& belief,
                                            const WorkerBelief& wb, std::size_t i,
                                            std::size_t j, Outcome y) {
  check_pair(i, j, belief.size(), "mm_update_heterogeneous");
  const double eta = reliability_weight(belief, wb, i, j, y);
  const auto alpha = belief.alpha();
  const double a0 = belief.alpha0();
  const double ai = alpha[i];
  const double aj = alpha[j];
  const double s = ai + aj;

  const double mean_den = a0 * (s + 1.0);
  const double rest_den = a0 * (a0 + 1.0);
  const double pair_den = rest_den * (s + 2.0);

  // η weights the branch where item i is the BTL winner.
  std::vector<double> c(alpha.size());
  double d = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k == i || k == j) continue;
    c[k] = alpha[k] / a0;
    d += alpha[k] * (alpha[k] + 1.0) / rest_den;
  }
  c[i] = (eta * (ai + 1.0) + (1.0 - eta) * ai) * s / mean_den;
  c[j] = (eta * aj + (1.0 - eta) * (aj + 1.0)) * s / mean_den;
  d += (eta * (ai + 1.0) * (ai + 2.0) + (1.0 - eta) * ai * (ai + 1.0)) * s / pair_den;
  d += (eta * aj * (aj + 1.0) + (1.0 - eta) * (aj + 1.0) * (aj + 2.0)) * s / pair_den;
  DirichletBelief items = solve_dirichlet(std::move(c), d, "mm_update_heterogeneous");

  // Reliability posterior is the mixture η Beta(μ+p, ν+q) + (1-η) Beta(μ+q, ν+p)
  // with p = (1+y)/2, q = (1-y)/2.
  const double mu = wb.mu();
  const double nu = wb.nu();
  const double p = y == Outcome::first_preferred ? 1.0 : 0.0;
  const double q = 1.0 - p;
  const double mean_a = (mu + p) / (mu + nu + 1.0);
  const double mean_b = (mu + q) / (mu + nu + 1.0);
  const double e = eta * mean_a + (1.0 - eta) * mean_b;
  // E² + (1-E)² - F equals -2 Var(ρ | y); the variance is assembled from the
  // mixture components so that near-certain workers keep full precision.
  const double var = eta * beta_variance(mu + p, nu + q) +
                     (1.0 - eta) * beta_variance(mu + q, nu + p) +
                     eta * (1.0 - eta) * (mean_a - mean_b) * (mean_a - mean_b);
  const double divisor = -2.0 * var;
  const double f_minus_one = -2.0 * (e * (1.0 - e) - var);
  if (!std::isfinite(divisor) || std::fabs(divisor) < kDivisorFloor) {
    std::ostringstream os;
    os << "mm_update_heterogeneous: degenerate divisor E^2+(1-E)^2-F = " << divisor;
    throw DegeneracyError(os.str());
  }
  const double mu_new = f_minus_one * e / divisor;
  const double nu_new = f_minus_one * (1.0 - e) / divisor;
  if (!std::isfinite(mu_new) || !std::isfinite(nu_new) || !(mu_new > 0.0) ||
      !(nu_new > 0.0)) {
    std::ostringstream os;
    os << "mm_update_heterogeneous: non-positive worker parameters (" << mu_new
       << ", " << nu_new << ")";
    throw DegeneracyError(os.str());
  }
  return {std::move(items), WorkerBelief(mu_new, nu_new)};
}

DirichletMoments dirichlet_moments(const DirichletBelief& belief) {
  DirichletMoments m;
  const double a0 = belief.alpha0();
  m.mean.reserve(belief.size());
  for (double a : belief.alpha()) {
    m.mean.push_back(a / a0);
    m.sum_second += a * (a + 1.0) / (a0 * (a0 + 1.0));
  }
  return m;
}

BetaMoments beta_moments(const WorkerBelief& wb) {
  const double s = wb.mu() + wb.nu();
  return {wb.mean(),
          (wb.mu() * (wb.mu() + 1.0) + wb.nu() * (wb.nu() + 1.0)) / (s * (s + 1.0))};
}

nlohmann::json to_json(const BeliefSnapshot& s) {
  nlohmann::json workers = nlohmann::json::array();
  for (const auto& w : s.workers) workers.push_back({{"mu", w.mu()}, {"nu", w.nu()}});
  return {{"alpha", std::vector<double>(s.items.alpha().begin(), s.items.alpha().end())},
          {"workers", workers},
          {"t", s.stage}};
}

BeliefSnapshot snapshot_from_json(const nlohmann::json& j) {
  try {
    BeliefSnapshot s{DirichletBelief(j.at("alpha").get<std::vector<double>>()), {},
                     j.value("t", std::size_t{0})};
    if (j.contains("workers")) {
      for (const auto& w : j.at("workers")) {
        s.workers.emplace_back(w.at("mu").get<double>(), w.at("nu").get<double>());
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("belief snapshot: ") + e.what());
  }
}

}  // namespace akgrank
