#include "ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "errors.hpp"
#include "specfn.hpp"

namespace akgrank {
namespace {

constexpr std::size_t kMaxLopItems = 9;
constexpr double kCentralityTolerance = 1e-10;
constexpr std::size_t kCentralityMaxIter = 100'000;
// Pseudo-count added to both sides of every compared pair.
constexpr double kCentralityPrior = 1.0;

double pair_normalizer(std::size_t k) {
  return 2.0 / (static_cast<double>(k) * static_cast<double>(k - 1));
}

Ranking ranking_from_order(std::span<const std::size_t> order) {
  std::vector<int> rank(order.size());
  int r = static_cast<int>(order.size());
  for (std::size_t item : order) rank[item] = r--;
  return Ranking(std::move(rank));
}

}  // namespace

Ranking::Ranking(std::vector<int> rank) : rank_(std::move(rank)) {
  std::vector<bool> seen(rank_.size() + 1, false);
  for (int r : rank_) {
    if (r < 1 || static_cast<std::size_t>(r) > rank_.size() || seen[r]) {
      throw DomainError("Ranking: not a permutation of 1..K");
    }
    seen[r] = true;
  }
}

Ranking Ranking::reversed() const {
  std::vector<int> r(rank_.size());
  const int k = static_cast<int>(rank_.size());
  for (std::size_t i = 0; i < rank_.size(); ++i) r[i] = k + 1 - rank_[i];
  return Ranking(std::move(r));
}

std::vector<std::size_t> Ranking::order() const {
  std::vector<std::size_t> out(rank_.size());
  for (std::size_t i = 0; i < rank_.size(); ++i) out[rank_.size() - rank_[i]] = i;
  return out;
}

Ranking ranking_from_scores(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return ranking_from_order(order);
}

Ranking optimal_ranking(const DirichletBelief& belief) {
  return ranking_from_scores(belief.alpha());
}

double expected_accuracy(const DirichletBelief& belief, const Ranking& pi) {
  const std::size_t k = belief.size();
  if (pi.size() != k) throw DomainError("expected_accuracy: size mismatch");
  const auto alpha = belief.alpha();
  double total = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a != b && pi[a] > pi[b]) total += pr_theta_greater(alpha[a], alpha[b]);
    }
  }
  return pair_normalizer(k) * total;
}

double max_expected_accuracy(const DirichletBelief& belief) {
  const std::size_t k = belief.size();
  const auto alpha = belief.alpha();
  double total = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      total += pr_theta_greater(std::max(alpha[a], alpha[b]), std::min(alpha[a], alpha[b]));
    }
  }
  return pair_normalizer(k) * total;
}

double kendall_tau(const Ranking& pi, const Ranking& pi_star) {
  const std::size_t k = pi.size();
  if (k < 2) throw DomainError("kendall_tau: need at least two items");
  if (pi_star.size() != k) throw DomainError("kendall_tau: size mismatch");
  std::size_t agree = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if ((pi[a] > pi[b]) == (pi_star[a] > pi_star[b])) ++agree;
    }
  }
  return pair_normalizer(k) * static_cast<double>(agree);
}

double tie_tolerant_accuracy(const Ranking& pi, const ScoreLevels& levels) {
  const std::size_t k = pi.size();
  if (k < 2) throw DomainError("tie_tolerant_accuracy: need at least two items");
  if (levels.size() != k) throw DomainError("tie_tolerant_accuracy: size mismatch");
  std::size_t credited = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const std::size_t hi = pi[a] > pi[b] ? a : b;
      const std::size_t lo = hi == a ? b : a;
      if (levels[hi] >= levels[lo]) ++credited;
    }
  }
  return pair_normalizer(k) * static_cast<double>(credited);
}

double lop_objective(std::span<const double> p, const Ranking& pi) {
  const std::size_t k = pi.size();
  double total = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a != b && pi[a] > pi[b]) total += p[a * k + b];
    }
  }
  return pair_normalizer(k) * total;
}

LopSolution brute_force_max_lop(std::span<const double> p, std::size_t items) {
  if (items > kMaxLopItems) {
    throw RefusedError("brute_force_max_lop: refusing to enumerate " +
                       std::to_string(items) + "! rankings (limit " +
                       std::to_string(kMaxLopItems) + " items)");
  }
  if (items < 2) throw DomainError("brute_force_max_lop: need at least two items");
  if (p.size() != items * items) throw DomainError("brute_force_max_lop: matrix size mismatch");
  std::vector<int> perm(items);
  std::iota(perm.begin(), perm.end(), 1);
  std::vector<int> best = perm;
  double best_value = -1.0;
  do {
    const double v = lop_objective(p, Ranking(perm));
    if (v > best_value) {
      best_value = v;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {Ranking(std::move(best)), best_value};
}

std::vector<double> pairwise_probabilities(const DirichletBelief& belief) {
  const std::size_t k = belief.size();
  const auto alpha = belief.alpha();
  std::vector<double> p(k * k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      p[a * k + b] = pr_theta_greater(alpha[a], alpha[b]);
      p[b * k + a] = 1.0 - p[a * k + b];
    }
  }
  return p;
}

RankCentralityResult rank_centrality(const HistoryState& history) {
  const std::size_t k = history.items();
  std::vector<std::size_t> degree(k, 0);
  std::vector<std::size_t> parent(k);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (history.wins(a, b) + history.wins(b, a) == 0) continue;
      ++degree[a];
      ++degree[b];
      parent[find(a)] = find(b);
    }
  }
  const std::size_t d_max = *std::max_element(degree.begin(), degree.end());
  if (d_max == 0) {
    std::vector<double> scores(k, 1.0 / static_cast<double>(k));
    Ranking r = ranking_from_scores(scores);
    return {std::move(scores), std::move(r), true, true, 0};
  }

  // Lazy walk (I + P)/2: same stationary law, aperiodic.
  std::vector<double> trans(k * k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    double out = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      const double n = history.wins(a, b) + history.wins(b, a);
      if (n == 0) continue;
      const double step = (history.wins(b, a) + kCentralityPrior) /
                          (n + 2.0 * kCentralityPrior) / static_cast<double>(d_max);
      trans[a * k + b] = 0.5 * step;
      out += step;
    }
    trans[a * k + a] = 1.0 - 0.5 * out;
  }

  std::vector<std::vector<std::size_t>> components;
  {
    std::vector<std::size_t> slot(k, k);
    for (std::size_t a = 0; a < k; ++a) {
      const std::size_t root = find(a);
      if (slot[root] == k) {
        slot[root] = components.size();
        components.emplace_back();
      }
      components[slot[root]].push_back(a);
    }
  }
  // Larger components first, then by smallest member.
  std::stable_sort(components.begin(), components.end(),
                   [](const auto& x, const auto& y) { return x.size() > y.size(); });

  RankCentralityResult result{std::vector<double>(k, 0.0), Ranking(std::vector<int>(1, 1))};
  std::vector<std::size_t> order;
  for (const auto& comp : components) {
    const std::size_t n = comp.size();
    std::vector<double> x(n, 1.0 / static_cast<double>(n)), next(n);
    bool converged = n == 1;
    std::size_t it = 0;
    for (; !converged && it < kCentralityMaxIter; ++it) {
      for (std::size_t c = 0; c < n; ++c) {
        double v = 0.0;
        for (std::size_t r = 0; r < n; ++r) v += x[r] * trans[comp[r] * k + comp[c]];
        next[c] = v;
      }
      const double norm = std::accumulate(next.begin(), next.end(), 0.0);
      double change = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        next[c] /= norm;
        change += std::fabs(next[c] - x[c]);
      }
      x.swap(next);
      converged = change < kCentralityTolerance;
    }
    result.converged = result.converged && converged;
    result.iterations = std::max(result.iterations, it);
    const double share = static_cast<double>(n) / static_cast<double>(k);
    std::vector<std::size_t> local(n);
    std::iota(local.begin(), local.end(), std::size_t{0});
    std::stable_sort(local.begin(), local.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });
    for (std::size_t c = 0; c < n; ++c) result.scores[comp[c]] = x[c] * share;
    for (std::size_t c : local) order.push_back(comp[c]);
  }
  result.ranking = ranking_from_order(order);
  return result;
}

}  // namespace akgrank
