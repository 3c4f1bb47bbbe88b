#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "belief.hpp"
#include "errors.hpp"
#include "oracle.hpp"
#include "policy.hpp"
#include "ranking.hpp"

namespace akgrank {
namespace {

constexpr std::size_t kUnforcedMaxItems = 6;

std::string describe(const DirichletBelief& prior, std::size_t i, std::size_t j, Outcome y,
                     const WorkerBelief* wb) {
  std::ostringstream os;
  os.precision(6);
  os << "alpha=(";
  for (std::size_t k = 0; k < prior.size(); ++k) os << (k ? "," : "") << prior[k];
  os << ") pair=(" << i << "," << j << ") y=" << to_int(y);
  if (wb) os << " worker=Beta(" << wb->mu() << "," << wb->nu() << ")";
  return os.str();
}

}  // namespace

OracleCheckResult run_oracle_check(const OracleCheckOptions& options) {
  if (options.cases == 0) throw InvalidArgument("oracle-check: need at least one case");
  if (!(options.tolerance > 0.0)) throw InvalidArgument("oracle-check: tolerance must be positive");
  Rng rng(options.seed);
  std::uniform_real_distribution<double> alpha_draw(0.5, 5.0);
  std::uniform_real_distribution<double> worker_draw(0.5, 8.0);
  std::bernoulli_distribution coin(0.5);

  OracleCheckResult res;
  for (std::size_t c = 0; c < options.cases; ++c) {
    // Alternate K and mode so both appear in every run.
    const std::size_t items = c % 2 == 0 ? 2 : 3;
    const bool het = (c / 2) % 2 == 1;
    std::vector<double> a(items);
    for (auto& v : a) v = alpha_draw(rng);
    const DirichletBelief prior(a);
    std::uniform_int_distribution<std::size_t> pick(0, items - 1);
    std::size_t i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    if (i > j) std::swap(i, j);
    const Outcome y = coin(rng) ? Outcome::first_preferred : Outcome::second_preferred;
    const Outcome used = options.negative_control ? flipped(y) : y;

    OracleCase oc;
    oc.items = items;
    oc.heterogeneous = het;
    if (het) {
      const WorkerBelief wb(worker_draw(rng), worker_draw(rng));
      auto history = HistoryState::heterogeneous(items, 1);
      history.record({i, j, 0, y});
      const std::vector<WorkerBelief> workers{wb};
      const auto exact = exact_posterior_moments(prior, history, workers);
      const auto up = mm_update_heterogeneous(prior, wb, i, j, used);
      const auto dm = dirichlet_moments(up.belief);
      const auto bm = beta_moments(up.worker);
      for (std::size_t k = 0; k < items; ++k) {
        oc.discrepancy = std::max(oc.discrepancy, std::fabs(dm.mean[k] - exact.mean[k]));
      }
      oc.discrepancy = std::max({oc.discrepancy, std::fabs(dm.sum_second - exact.sum_second),
                                 std::fabs(bm.mean - exact.worker_mean[0]),
                                 std::fabs(bm.spread - exact.worker_spread[0])});
      oc.description = describe(prior, i, j, y, &wb);
    } else {
      auto history = HistoryState::homogeneous(items);
      history.record({i, j, std::nullopt, y});
      const auto exact = exact_posterior_moments(prior, history, {});
      const auto dm = dirichlet_moments(mm_update_homogeneous(prior, i, j, used));
      for (std::size_t k = 0; k < items; ++k) {
        oc.discrepancy = std::max(oc.discrepancy, std::fabs(dm.mean[k] - exact.mean[k]));
      }
      oc.discrepancy = std::max(oc.discrepancy, std::fabs(dm.sum_second - exact.sum_second));
      oc.description = describe(prior, i, j, y, nullptr);
    }
    res.max_discrepancy = std::max(res.max_discrepancy, oc.discrepancy);
    if (oc.discrepancy > options.tolerance && res.failure.empty()) {
      std::ostringstream os;
      os << "case " << c << " (" << oc.description << "): discrepancy " << oc.discrepancy
         << " > " << options.tolerance;
      res.failure = os.str();
    }
    res.cases.push_back(std::move(oc));
  }

  // K = 2: moment matching of a Beta is exact, so the recursion must land on
  // the conjugate posterior after any label sequence.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < options.sequences; ++s) {
    const double a1 = alpha_draw(rng), a2 = alpha_draw(rng);
    const double p = unit(rng);
    DirichletBelief b({a1, a2});
    double wins1 = 0.0, wins2 = 0.0;
    for (std::size_t t = 0; t < options.sequence_length; ++t) {
      const Outcome y = unit(rng) < p ? Outcome::first_preferred : Outcome::second_preferred;
      (y == Outcome::first_preferred ? wins1 : wins2) += 1.0;
      b = mm_update_homogeneous(b, 0, 1, options.negative_control ? flipped(y) : y);
    }
    const double err = std::max(std::fabs(b[0] - (a1 + wins1)), std::fabs(b[1] - (a2 + wins2)));
    res.sequence_max_error = std::max(res.sequence_max_error, err);
    if (err > options.sequence_tolerance && res.failure.empty()) {
      std::ostringstream os;
      os << "sequence " << s << ": iterated update off the conjugate posterior by " << err;
      res.failure = os.str();
    }
  }
  res.passed = res.failure.empty();
  return res;
}

nlohmann::json to_json(const OracleCheckResult& r) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : r.cases) {
    cases.push_back({{"items", c.items},
                     {"heterogeneous", c.heterogeneous},
                     {"discrepancy", c.discrepancy},
                     {"case", c.description}});
  }
  return {{"passed", r.passed},
          {"max_discrepancy", r.max_discrepancy},
          {"sequence_max_error", r.sequence_max_error},
          {"failure", r.failure},
          {"cases", cases}};
}

LopCheckResult run_lop_check(const LopCheckOptions& options) {
  if (options.min_items < 2 || options.min_items > options.max_items) {
    throw InvalidArgument("lop-check: need 2 <= min items <= max items");
  }
  if (options.max_items > kUnforcedMaxItems && !options.force) {
    throw RefusedError("lop-check: " + std::to_string(options.max_items) +
                       " items needs --force (brute force enumerates K! rankings)");
  }
  Rng rng(options.seed);
  std::uniform_int_distribution<std::size_t> size_draw(options.min_items, options.max_items);
  std::lognormal_distribution<double> alpha_draw(0.0, 1.0);

  LopCheckResult res;
  for (std::size_t c = 0; c < options.cases; ++c) {
    const std::size_t items = size_draw(rng);
    std::vector<double> a(items);
    for (auto& v : a) v = alpha_draw(rng);
    const DirichletBelief belief(a);
    const auto p = pairwise_probabilities(belief);
    const Ranking sorted = optimal_ranking(belief);
    const double by_sort = lop_objective(p, sorted);
    const LopSolution best = brute_force_max_lop(p, items);
    const double gap = best.value - by_sort;
    res.max_gap = std::max(res.max_gap, std::fabs(gap));
    if (!(best.ranking == sorted)) ++res.rankings_differing;
    if (std::fabs(gap) > options.tolerance && res.failure.empty()) {
      std::ostringstream os;
      os.precision(17);
      os << "case " << c << " (K=" << items << "): sorted objective " << by_sort
         << " vs brute force " << best.value;
      res.failure = os.str();
    }
    ++res.cases;
  }
  res.passed = res.failure.empty();
  return res;
}

nlohmann::json to_json(const LopCheckResult& r) {
  return {{"passed", r.passed},
          {"cases", r.cases},
          {"max_gap", r.max_gap},
          {"rankings_differing", r.rankings_differing},
          {"failure", r.failure}};
}

}  // namespace akgrank
