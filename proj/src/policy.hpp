#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "belief.hpp"

namespace akgrank {

using Rng = std::mt19937_64;

/// A query: compare items i < j, optionally by a specific worker.
struct Decision {
  std::size_t i = 0;
  std::size_t j = 0;
  std::optional<std::size_t> worker;

  auto operator<=>(const Decision&) const = default;
};

/// Actions currently selectable, kept in lexicographic (i, j, worker) order.
class AvailabilitySet {
 public:
  explicit AvailabilitySet(std::vector<Decision> actions);

  static AvailabilitySet all_pairs(std::size_t items);
  /// Every (pair, worker) triplet not yet used in the history.
  static AvailabilitySet open_triplets(const HistoryState& history);

  bool empty() const { return actions_.empty(); }
  std::size_t size() const { return actions_.size(); }
  bool heterogeneous() const { return !actions_.empty() && actions_.front().worker.has_value(); }
  std::span<const Decision> actions() const { return actions_; }
  bool contains(const Decision& d) const;

 private:
  std::vector<Decision> actions_;
};

/// R̃(α, i, j, y) = h̃(MM(α, i, j, y)) - h̃(α).
double approx_stage_reward(const DirichletBelief& belief, std::size_t i, std::size_t j,
                           Outcome y);

/// Same with the heterogeneous update MM_α(α, i, j, w, y).
double approx_stage_reward(const DirichletBelief& belief, const WorkerBelief& worker,
                           std::size_t i, std::size_t j, Outcome y);

/// Expected one-step reward of querying (i, j); `baseline` is h̃(α).
double akg_score(const DirichletBelief& belief, std::size_t i, std::size_t j,
                 double baseline);
double akg_score(const DirichletBelief& belief, const WorkerBelief& worker, std::size_t i,
                 std::size_t j, double baseline);

Decision akg_select_homogeneous(const DirichletBelief& belief, const AvailabilitySet& avail);
Decision akg_select_heterogeneous(const DirichletBelief& belief,
                                  std::span<const WorkerBelief> workers,
                                  const AvailabilitySet& avail);
Decision random_select(const AvailabilitySet& avail, Rng& rng);
Decision distance_select(const DirichletBelief& belief, const AvailabilitySet& avail);

/// The B best actions by AKG score, best first. `workers` is required only
/// for heterogeneous availability.
std::vector<Decision> top_b_batch(const DirichletBelief& belief, const AvailabilitySet& avail,
                                  std::size_t batch,
                                  std::span<const WorkerBelief> workers = {});

/// Parsed policy identifier: "akg", "random", "distance" or "akg-batch:B".
struct PolicySpec {
  enum class Kind { akg, random, distance, akg_batch };
  Kind kind = Kind::akg;
  std::size_t batch = 1;

  static PolicySpec parse(std::string_view id);
  std::string id() const;
  bool operator==(const PolicySpec&) const = default;
};

/// Dispatches to the selected rule. Returns `batch` decisions for
/// akg-batch, otherwise one. Throws ExhaustedError on empty availability.
std::vector<Decision> select_decisions(const PolicySpec& spec, const DirichletBelief& belief,
                                       std::span<const WorkerBelief> workers,
                                       const AvailabilitySet& avail, Rng& rng);

}  // namespace akgrank
