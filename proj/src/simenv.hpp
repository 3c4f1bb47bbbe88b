#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "belief.hpp"
#include "policy.hpp"
#include "ranking.hpp"

namespace akgrank {

/// Ground truth: θ on the open simplex, optional per-worker reliabilities.
class TrueWorld {
 public:
  TrueWorld(std::vector<double> theta, std::vector<double> rho = {});

  std::span<const double> theta() const { return theta_; }
  std::span<const double> rho() const { return rho_; }
  std::size_t items() const { return theta_.size(); }
  std::size_t workers() const { return rho_.size(); }

  /// Pr(label = +1) for the pair, optionally through a worker.
  double first_preferred_probability(std::size_t i, std::size_t j,
                                     std::optional<std::size_t> worker = {}) const;

  bool operator==(const TrueWorld&) const = default;

 private:
  std::vector<double> theta_;
  std::vector<double> rho_;
};

struct BetaReliability {
  double a = 4.0;
  double b = 1.0;

  bool operator==(const BetaReliability&) const = default;
};
/// Either ρ_w ~ Beta(a, b) i.i.d., or a fixed list of length M.
using ReliabilitySource = std::variant<BetaReliability, std::vector<double>>;

/// M values from lo to hi inclusive, equally spaced.
std::vector<double> equally_spaced(double lo, double hi, std::size_t count);

std::vector<double> sample_reliabilities(std::size_t workers, Rng& rng,
                                         const ReliabilitySource& source);

/// θ uniform on the simplex (normalized unit exponentials); ρ from `source`.
TrueWorld sample_true_world(std::size_t items, std::size_t workers, Rng& rng,
                            const ReliabilitySource& source = BetaReliability{});

/// θ increasing with item index; the bottom two and the top two items differ
/// by a relative gap of 1e-3; consecutive scores in between differ by a
/// factor of 2.
std::vector<double> close_extremes_theta(std::size_t items);

/// One label. Consumes exactly one uniform draw from `rng`.
Outcome simulate_label(const TrueWorld& world, std::size_t i, std::size_t j,
                       std::optional<std::size_t> worker, Rng& rng);

struct ReplayRecord {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t worker = 0;
  Outcome outcome = Outcome::first_preferred;
};

/// A fixed log of labels. An active policy may only pick logged entries, and
/// each entry can be used once.
class ReplayPool {
 public:
  explicit ReplayPool(std::vector<ReplayRecord> records,
                      std::optional<ScoreLevels> levels = std::nullopt);

  /// Parses `item_a,item_b,worker,outcome` CSV; `source` names the input in
  /// error messages.
  static ReplayPool parse(std::istream& csv, const std::string& source = "<input>");
  static ScoreLevels parse_levels(std::istream& csv, const std::string& source = "<input>");
  static ReplayPool load(const std::filesystem::path& csv,
                         const std::optional<std::filesystem::path>& levels = std::nullopt);

  std::size_t items() const { return items_; }
  std::size_t workers() const { return workers_; }
  std::size_t remaining() const { return remaining_; }
  std::size_t size() const { return records_.size(); }
  const std::optional<ScoreLevels>& levels() const { return levels_; }

  /// Unconsumed actions: triplets when `per_worker`, distinct pairs otherwise.
  AvailabilitySet availability(bool per_worker) const;

  /// Returns the logged outcome and marks the record used. A pair decision
  /// takes the earliest unused record for that pair. Throws UnavailableError
  /// when nothing matches.
  ComparisonRecord consume(const Decision& d);

 private:
  std::vector<ReplayRecord> records_;
  std::vector<bool> consumed_;
  std::optional<ScoreLevels> levels_;
  std::size_t items_ = 0;
  std::size_t workers_ = 0;
  std::size_t remaining_ = 0;
};

}  // namespace akgrank
