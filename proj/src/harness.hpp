#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "belief.hpp"
#include "errors.hpp"
#include "policy.hpp"
#include "ranking.hpp"
#include "simenv.hpp"

namespace akgrank {

enum class WorldKind { uniform, close_extremes, fixed, replay };
enum class EvalMode { tau, ties };
enum class Estimator { posterior, centrality };

struct WorldSpec {
  WorldKind kind = WorldKind::uniform;
  std::vector<double> theta;  // fixed worlds; normalized on use
  std::vector<double> rho;    // fixed reliabilities, one per worker
  BetaReliability rho_prior;
  std::optional<std::pair<double, double>> rho_grid;  // equally spaced lo..hi
  std::string replay_path;
  std::string levels_path;

  bool operator==(const WorldSpec&) const = default;
};

struct ExperimentConfig {
  std::size_t items = 10;
  std::size_t workers = 0;  // 0 = homogeneous labels
  std::size_t budget = 100;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::vector<std::string> policies{"akg"};
  std::size_t batch = 1;  // turns plain "akg" into "akg-batch:B"
  double alpha0 = 1.0;
  double mu0 = 4.0;
  double nu0 = 1.0;
  WorldSpec world;
  EvalMode eval = EvalMode::tau;
  Estimator estimator = Estimator::posterior;
  std::vector<std::size_t> checkpoints;  // empty = default schedule
  std::size_t threads = 0;               // 0 = hardware concurrency

  /// Throws InvalidArgument on any inconsistent combination.
  void validate() const;
  std::vector<PolicySpec> policy_specs() const;
  /// Every stage for K ≤ 25, every 10th otherwise; always 0 and T.
  std::vector<std::size_t> checkpoint_stages() const;

  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Missing keys keep the values in `base`.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});

/// Online active-ranking loop: choose, observe, repeat.
class RankingSession {
 public:
  RankingSession(std::size_t items, std::size_t workers, double alpha0, double mu0, double nu0,
                 PolicySpec policy, Rng rng);

  /// Next decisions over every action still open (all pairs, or unused
  /// triplets in heterogeneous mode).
  std::vector<Decision> select();
  std::vector<Decision> select(const AvailabilitySet& avail);
  AvailabilitySet open_actions() const;

  /// Records the label and applies one moment-matching step.
  void observe(const ComparisonRecord& r);

  const DirichletBelief& belief() const { return belief_; }
  std::span<const WorkerBelief> workers() const { return workers_; }
  const HistoryState& history() const { return history_; }
  const PolicySpec& policy() const { return policy_; }
  Ranking ranking(Estimator estimator = Estimator::posterior) const;
  BeliefSnapshot snapshot() const;

 private:
  DirichletBelief belief_;
  std::vector<WorkerBelief> workers_;
  HistoryState history_;
  PolicySpec policy_;
  Rng rng_;
};

struct TrialResult {
  std::string policy;
  std::size_t trial = 0;
  std::vector<std::size_t> stages;
  std::vector<double> accuracy;
  std::vector<int> final_ranking;
  /// Symmetric K×K label counts, indexed by item and by true rank
  /// (rank 1 = most preferred at row 0).
  std::vector<std::uint32_t> pair_counts;
  std::vector<std::uint32_t> pair_counts_by_rank;
  std::vector<std::uint32_t> worker_counts;
  std::vector<double> worker_reliability;  // simulated worlds only
  std::vector<double> stage_seconds;
  std::size_t realized = 0;
  bool truncated = false;
};

/// Ground truth shared by every policy within one trial.
struct TrialWorld {
  std::optional<TrueWorld> world;
  std::optional<ReplayPool> pool;
  std::vector<std::size_t> true_order;  // most preferred first
  std::optional<ScoreLevels> levels;
};

TrialWorld make_trial_world(const ExperimentConfig& config, std::size_t trial);

/// Deterministic in (config.seed, trial, policy).
TrialResult run_trial(const ExperimentConfig& config, std::size_t trial,
                      const PolicySpec& policy);
TrialResult run_trial(const ExperimentConfig& config, std::size_t trial,
                      const PolicySpec& policy, const TrialWorld& world);

struct PolicyReport {
  std::string policy;
  std::vector<std::size_t> stages;
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::vector<std::size_t> count;  // trials that reached each stage
  std::vector<double> frequency;
  std::vector<double> frequency_by_rank;
  std::vector<double> worker_counts;
  /// Counts with workers ordered by ascending true reliability within each
  /// trial, and the mean reliability at each position.
  std::vector<double> worker_counts_by_reliability;
  std::vector<double> reliability_by_position;
  /// h̃ at the prior; a constant offset of the objective.
  double initial_expected_accuracy = 0.0;
  double mean_realized = 0.0;
  std::size_t truncated_trials = 0;
  double mean_stage_seconds = 0.0;  // not exported

  bool operator==(const PolicyReport&) const;
};

struct Report {
  ExperimentConfig config;
  std::size_t items = 0;
  std::size_t workers = 0;
  std::size_t trials_completed = 0;
  std::vector<PolicyReport> policies;

  bool operator==(const Report&) const = default;
  const PolicyReport& policy(const std::string& id) const;
};

/// Mean over trials in index order. Trials missing a stage are skipped for it.
Report aggregate(const ExperimentConfig& config, std::size_t items, std::size_t workers,
                 const std::vector<std::vector<TrialResult>>& by_trial);

/// Raised when a trial fails; carries the report over the trials that
/// completed before it.
class ExperimentError : public Error {
 public:
  ExperimentError(ErrorKind kind, const std::string& what, Report partial)
      : Error(kind, what), partial_(std::move(partial)) {}
  const Report& partial() const { return partial_; }

 private:
  Report partial_;
};

Report run_experiment(const ExperimentConfig& config);

nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

enum class ExportFormat { csv, json, both };

/// Writes accuracy.csv, frequency_<policy>.csv, frequency_by_rank_<policy>.csv,
/// workers_<policy>.csv (heterogeneous only) and report.json under `dir`.
/// Returns the paths written.
std::vector<std::filesystem::path> export_report(const Report& r,
                                                 const std::filesystem::path& dir,
                                                 ExportFormat format = ExportFormat::both);

std::string accuracy_csv(const Report& r);
std::string matrix_csv(std::span<const double> m, std::size_t cols);

}  // namespace akgrank
