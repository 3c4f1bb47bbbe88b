#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "belief.hpp"

namespace akgrank {

/// A ranking π over K items: rank(i) ∈ {1..K}, larger means more preferred.
class Ranking {
 public:
  explicit Ranking(std::vector<int> rank);

  std::size_t size() const { return rank_.size(); }
  int operator[](std::size_t i) const { return rank_[i]; }
  std::span<const int> ranks() const { return rank_; }
  Ranking reversed() const;

  /// Items ordered from most to least preferred.
  std::vector<std::size_t> order() const;

  bool operator==(const Ranking&) const = default;

 private:
  std::vector<int> rank_;
};

/// Ordinal ground-truth levels; ties allowed.
using ScoreLevels = std::vector<long>;

/// Ranking from strictly ordered scores (ties: lower index ranked higher).
Ranking ranking_from_scores(std::span<const double> scores);

/// A member of Π_α: sorts α descending, lower index wins ties.
Ranking optimal_ranking(const DirichletBelief& belief);

/// E[τ(π, π*)] for θ ~ Dir(α).
double expected_accuracy(const DirichletBelief& belief, const Ranking& pi);

/// max_π E[τ(π, π*)] under Dir(α); the mean over unordered pairs of
/// max(p, 1-p) with p = Pr(θ_a > θ_b).
double max_expected_accuracy(const DirichletBelief& belief);

/// Normalized Kendall's tau: fraction of unordered pairs on which π and π*
/// agree.
double kendall_tau(const Ranking& pi, const Ranking& pi_star);

/// Fraction of unordered pairs where the higher-ranked item's level is at
/// least the lower-ranked item's level.
double tie_tolerant_accuracy(const Ranking& pi, const ScoreLevels& levels);

struct LopSolution {
  Ranking ranking;
  double value;
};

/// Exhaustive MAX-LOP over all K! rankings; p is row-major K×K with
/// p[i][j] + p[j][i] = 1. Refuses K > 9.
LopSolution brute_force_max_lop(std::span<const double> p, std::size_t items);

/// Objective (2/(K(K-1))) Σ_{π(i)>π(j)} p_ij of a given ranking.
double lop_objective(std::span<const double> p, const Ranking& pi);

/// Row-major matrix p_ij = Pr(θ_i > θ_j) under Dir(α).
std::vector<double> pairwise_probabilities(const DirichletBelief& belief);

struct RankCentralityResult {
  std::vector<double> scores;
  Ranking ranking;
  bool empty_history = false;
  bool converged = true;
  std::size_t iterations = 0;
};

/// Spectral aggregation by the stationary distribution of the
/// comparison-induced random walk.
RankCentralityResult rank_centrality(const HistoryState& history);

}  // namespace akgrank
