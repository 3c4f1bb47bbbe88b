#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace akgrank {

/// Comparison outcome: +1 means the lower-indexed item of the pair was
/// preferred.
enum class Outcome : int { first_preferred = 1, second_preferred = -1 };

inline int to_int(Outcome y) { return static_cast<int>(y); }
Outcome outcome_from_int(int y);
inline Outcome flipped(Outcome y) {
  return y == Outcome::first_preferred ? Outcome::second_preferred
                                       : Outcome::first_preferred;
}

/// Dirichlet belief Dir(α) over the latent item scores.
class DirichletBelief {
 public:
  explicit DirichletBelief(std::vector<double> alpha);
  static DirichletBelief uniform(std::size_t items, double fill = 1.0);

  std::span<const double> alpha() const { return alpha_; }
  double alpha0() const { return alpha0_; }
  std::size_t size() const { return alpha_.size(); }
  double operator[](std::size_t k) const { return alpha_[k]; }

  bool operator==(const DirichletBelief&) const = default;

 private:
  std::vector<double> alpha_;
  double alpha0_;
};

/// Beta(μ, ν) belief over a worker's reliability ρ.
class WorkerBelief {
 public:
  WorkerBelief(double mu, double nu);

  double mu() const { return mu_; }
  double nu() const { return nu_; }
  double mean() const { return mu_ / (mu_ + nu_); }

  bool operator==(const WorkerBelief&) const = default;

 private:
  double mu_;
  double nu_;
};

struct ComparisonRecord {
  std::size_t i = 0;
  std::size_t j = 0;
  std::optional<std::size_t> worker;
  Outcome outcome = Outcome::first_preferred;

  bool operator==(const ComparisonRecord&) const = default;
};

/// Observed comparisons. The count matrix M_ij (wins of i over j) is kept for
/// both modes; heterogeneous mode additionally tracks which (pair, worker)
/// cells are used, since each worker may label a pair at most once.
class HistoryState {
 public:
  static HistoryState homogeneous(std::size_t items);
  static HistoryState heterogeneous(std::size_t items, std::size_t workers);

  /// Appends one record in place. Throws ConstraintError on a reused
  /// (pair, worker) cell in heterogeneous mode.
  void record(const ComparisonRecord& r);

  std::size_t items() const { return items_; }
  std::size_t workers() const { return workers_; }
  bool heterogeneous() const { return heterogeneous_; }
  std::size_t stage() const { return records_.size(); }

  std::uint32_t wins(std::size_t i, std::size_t j) const {
    return counts_[i * items_ + j];
  }
  bool used(std::size_t i, std::size_t j, std::size_t worker) const;
  std::span<const ComparisonRecord> records() const { return records_; }

 private:
  HistoryState(std::size_t items, std::size_t workers, bool heterogeneous);

  std::size_t items_;
  std::size_t workers_;
  bool heterogeneous_;
  std::vector<std::uint32_t> counts_;
  std::vector<std::uint8_t> used_;
  std::vector<ComparisonRecord> records_;
};

/// Value-semantics form of HistoryState::record.
HistoryState record_outcome(HistoryState history, const ComparisonRecord& r);

/// Closed-form moment-matching step for one homogeneous comparison.
DirichletBelief mm_update_homogeneous(const DirichletBelief& belief,
                                      std::size_t i, std::size_t j, Outcome y);

struct HeterogeneousUpdate {
  DirichletBelief belief;
  WorkerBelief worker;
};

/// Posterior probability that the observed label agrees with the BTL draw,
/// i.e. the mixture weight η of the "item i truly preferred" branch when
/// y = +1 (and of the "item j truly preferred" branch when y = -1).
double reliability_weight(const DirichletBelief& belief, const WorkerBelief& wb,
                          std::size_t i, std::size_t j, Outcome y);

/// Moment-matching step for one label from a worker of uncertain
/// reliability. Updates the item belief and that worker's belief.
HeterogeneousUpdate mm_update_heterogeneous(const DirichletBelief& belief,
                                            const WorkerBelief& wb,
                                            std::size_t i, std::size_t j,
                                            Outcome y);

/// E[θ_k] and E[Σθ_k²] of a Dirichlet.
struct DirichletMoments {
  std::vector<double> mean;
  double sum_second = 0.0;
};
DirichletMoments dirichlet_moments(const DirichletBelief& belief);

/// E[ρ] and E[ρ² + (1-ρ)²] of a Beta.
struct BetaMoments {
  double mean = 0.0;
  double spread = 0.0;
};
BetaMoments beta_moments(const WorkerBelief& wb);

/// Snapshot of the running posterior approximation.
struct BeliefSnapshot {
  DirichletBelief items;
  std::vector<WorkerBelief> workers;
  std::size_t stage = 0;

  bool operator==(const BeliefSnapshot&) const = default;
};

nlohmann::json to_json(const BeliefSnapshot& s);
BeliefSnapshot snapshot_from_json(const nlohmann::json& j);

}  // namespace akgrank
