#include "policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <tuple>

#include "errors.hpp"
#include "ranking.hpp"

namespace akgrank {
namespace {

// Scores closer than this are ties; lexicographic order decides.
bool clearly_greater(double a, double b) {
  return a > b + 1e-14 + 1e-10 * std::max(std::fabs(a), std::fabs(b));
}

void require_nonempty(const AvailabilitySet& avail, const char* fn) {
  if (avail.empty()) throw ExhaustedError(std::string(fn) + ": no available actions");
}

double outcome_weight(const DirichletBelief& b, std::size_t i, std::size_t j) {
  return b[i] / (b[i] + b[j]);
}

double outcome_weight(const DirichletBelief& b, const WorkerBelief& w, std::size_t i,
                      std::size_t j) {
  return (w.mu() * b[i] + w.nu() * b[j]) / ((w.mu() + w.nu()) * (b[i] + b[j]));
}

// Scores every available action. Heterogeneous scores depend on the worker
// only through (μ_w, ν_w), so workers with identical beliefs share one
// evaluation.
std::vector<double> score_all(const DirichletBelief& belief, const AvailabilitySet& avail,
                              std::span<const WorkerBelief> workers) {
  const double baseline = max_expected_accuracy(belief);
  std::vector<double> scores;
  scores.reserve(avail.size());
  if (!avail.heterogeneous()) {
    for (const auto& d : avail.actions()) scores.push_back(akg_score(belief, d.i, d.j, baseline));
    return scores;
  }
  std::map<std::tuple<std::size_t, std::size_t, double, double>, double> memo;
  for (const auto& d : avail.actions()) {
    if (*d.worker >= workers.size()) {
      throw DomainError("akg_select_heterogeneous: no belief for worker " +
                        std::to_string(*d.worker));
    }
    const auto& wb = workers[*d.worker];
    const auto key = std::make_tuple(d.i, d.j, wb.mu(), wb.nu());
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, akg_score(belief, wb, d.i, d.j, baseline)).first;
    scores.push_back(it->second);
  }
  return scores;
}

std::size_t argmax_first(std::span<const double> scores, const std::vector<bool>& taken) {
  std::size_t best = scores.size();
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (taken[k]) continue;
    if (best == scores.size() || clearly_greater(scores[k], scores[best])) best = k;
  }
  return best;
}

}  // namespace

AvailabilitySet::AvailabilitySet(std::vector<Decision> actions) : actions_(std::move(actions)) {
  std::sort(actions_.begin(), actions_.end());
  actions_.erase(std::unique(actions_.begin(), actions_.end()), actions_.end());
  for (const auto& d : actions_) {
    if (!(d.i < d.j)) throw DomainError("AvailabilitySet: actions need i < j");
    if (d.worker.has_value() != actions_.front().worker.has_value()) {
      throw DomainError("AvailabilitySet: cannot mix pair and triplet actions");
    }
  }
}

AvailabilitySet AvailabilitySet::all_pairs(std::size_t items) {
  std::vector<Decision> out;
  out.reserve(items * (items - 1) / 2);
  for (std::size_t i = 0; i < items; ++i) {
    for (std::size_t j = i + 1; j < items; ++j) out.push_back({i, j, std::nullopt});
  }
  return AvailabilitySet(std::move(out));
}

AvailabilitySet AvailabilitySet::open_triplets(const HistoryState& history) {
  if (!history.heterogeneous()) {
    throw DomainError("open_triplets: history is not heterogeneous");
  }
  std::vector<Decision> out;
  for (std::size_t i = 0; i < history.items(); ++i) {
    for (std::size_t j = i + 1; j < history.items(); ++j) {
      for (std::size_t w = 0; w < history.workers(); ++w) {
        if (!history.used(i, j, w)) out.push_back({i, j, w});
      }
    }
  }
  return AvailabilitySet(std::move(out));
}

bool AvailabilitySet::contains(const Decision& d) const {
  return std::binary_search(actions_.begin(), actions_.end(), d);
}

double approx_stage_reward(const DirichletBelief& belief, std::size_t i, std::size_t j,
                           Outcome y) {
  return max_expected_accuracy(mm_update_homogeneous(belief, i, j, y)) -
         max_expected_accuracy(belief);
}

double approx_stage_reward(const DirichletBelief& belief, const WorkerBelief& worker,
                           std::size_t i, std::size_t j, Outcome y) {
  return max_expected_accuracy(mm_update_heterogeneous(belief, worker, i, j, y).belief) -
         max_expected_accuracy(belief);
}

double akg_score(const DirichletBelief& belief, std::size_t i, std::size_t j, double baseline) {
  const double p = outcome_weight(belief, i, j);
  const double up = max_expected_accuracy(
      mm_update_homogeneous(belief, i, j, Outcome::first_preferred));
  const double down = max_expected_accuracy(
      mm_update_homogeneous(belief, i, j, Outcome::second_preferred));
  return p * (up - baseline) + (1.0 - p) * (down - baseline);
}

double akg_score(const DirichletBelief& belief, const WorkerBelief& worker, std::size_t i,
                 std::size_t j, double baseline) {
  const double p = outcome_weight(belief, worker, i, j);
  const double up = max_expected_accuracy(
      mm_update_heterogeneous(belief, worker, i, j, Outcome::first_preferred).belief);
  const double down = max_expected_accuracy(
      mm_update_heterogeneous(belief, worker, i, j, Outcome::second_preferred).belief);
  return p * (up - baseline) + (1.0 - p) * (down - baseline);
}

Decision akg_select_homogeneous(const DirichletBelief& belief, const AvailabilitySet& avail) {
  require_nonempty(avail, "akg_select_homogeneous");
  if (avail.heterogeneous()) {
    throw DomainError("akg_select_homogeneous: availability holds worker triplets");
  }
  return top_b_batch(belief, avail, 1).front();
}

Decision akg_select_heterogeneous(const DirichletBelief& belief,
                                  std::span<const WorkerBelief> workers,
                                  const AvailabilitySet& avail) {
  require_nonempty(avail, "akg_select_heterogeneous");
  if (!avail.heterogeneous()) {
    throw DomainError("akg_select_heterogeneous: availability holds plain pairs");
  }
  return top_b_batch(belief, avail, 1, workers).front();
}

Decision random_select(const AvailabilitySet& avail, Rng& rng) {
  require_nonempty(avail, "random_select");
  std::uniform_int_distribution<std::size_t> pick(0, avail.size() - 1);
  return avail.actions()[pick(rng)];
}

Decision distance_select(const DirichletBelief& belief, const AvailabilitySet& avail) {
  require_nonempty(avail, "distance_select");
  const Decision* best = nullptr;
  double best_gap = 0.0;
  for (const auto& d : avail.actions()) {
    const double gap = std::fabs(belief[d.i] - belief[d.j]);
    if (!best || gap < best_gap) {
      best = &d;
      best_gap = gap;
    }
  }
  return *best;
}

std::vector<Decision> top_b_batch(const DirichletBelief& belief, const AvailabilitySet& avail,
                                  std::size_t batch, std::span<const WorkerBelief> workers) {
  require_nonempty(avail, "top_b_batch");
  if (batch == 0 || batch > avail.size()) {
    throw DomainError("top_b_batch: batch size " + std::to_string(batch) +
                      " outside 1.." + std::to_string(avail.size()));
  }
  const auto scores = score_all(belief, avail, workers);
  std::vector<bool> taken(scores.size(), false);
  std::vector<Decision> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t k = argmax_first(scores, taken);
    taken[k] = true;
    out.push_back(avail.actions()[k]);
  }
  return out;
}

PolicySpec PolicySpec::parse(std::string_view id) {
  if (id == "akg") return {Kind::akg, 1};
  if (id == "random") return {Kind::random, 1};
  if (id == "distance") return {Kind::distance, 1};
  constexpr std::string_view prefix = "akg-batch:";
  if (id.starts_with(prefix)) {
    const auto digits = id.substr(prefix.size());
    std::size_t b = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), b);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && b > 0) {
      return {Kind::akg_batch, b};
    }
  }
  throw InvalidArgument("unknown policy '" + std::string(id) +
                        "' (expected akg, random, distance or akg-batch:B)");
}

std::string PolicySpec::id() const {
  switch (kind) {
    case Kind::akg: return "akg";
    case Kind::random: return "random";
    case Kind::distance: return "distance";
    case Kind::akg_batch: return "akg-batch:" + std::to_string(batch);
  }
  return "akg";
}

std::vector<Decision> select_decisions(const PolicySpec& spec, const DirichletBelief& belief,
                                       std::span<const WorkerBelief> workers,
                                       const AvailabilitySet& avail, Rng& rng) {
  require_nonempty(avail, "select_decisions");
  switch (spec.kind) {
    case PolicySpec::Kind::random:
      return {random_select(avail, rng)};
    case PolicySpec::Kind::distance:
      return {distance_select(belief, avail)};
    case PolicySpec::Kind::akg:
      return top_b_batch(belief, avail, 1, workers);
    case PolicySpec::Kind::akg_batch:
      return top_b_batch(belief, avail, std::min(spec.batch, avail.size()), workers);
  }
  return {};
}

}  // namespace akgrank
