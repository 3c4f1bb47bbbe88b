// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "belief.hpp"
#include "checks.hpp"
#include "harness.hpp"
#include "policy.hpp"
#include "ranking.hpp"
#include "simenv.hpp"
#include "specfn.hpp"

using namespace akgrank;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!r.pass) ++failures;
  std::printf("%s %2d %s: %s [%.1fs]\n", r.pass ? "PASS" : "FAIL", id, name, r.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t s = 0; s < idx.size();) {
    std::size_t e = s;
    while (e + 1 < idx.size() && x[idx[e + 1]] == x[idx[s]]) ++e;
    for (std::size_t k = s; k <= e; ++k) r[idx[k]] = 0.5 * static_cast<double>(s + e) + 1.0;
    s = e + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double at_stage(const PolicyReport& p, std::size_t stage) {
  for (std::size_t k = 0; k < p.stages.size(); ++k) {
    if (p.stages[k] == stage) return p.mean[k];
  }
  return std::nan("");
}

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.items = 10;
  c.budget = 100;
  c.trials = 100;
  c.seed = 7;
  return c;
}

}  // namespace

int main() {
  criterion(1, "one-step moment matching vs exact posterior", [] {
    OracleCheckOptions o;
    o.cases = 50;
    o.tolerance = 1e-6;
    o.sequences = 0;
    const auto r = run_oracle_check(o);
    std::size_t het = 0, k3 = 0;
    for (const auto& c : r.cases) het += c.heterogeneous, k3 += c.items == 3;
    const bool ok = r.passed && r.max_discrepancy <= 1e-6 && het > 0 && k3 > 0;
    return Verdict{ok, fmt("50 cases (%g heterogeneous, %g at K=3), max discrepancy %.3g <= 1e-6",
                            static_cast<double>(het), static_cast<double>(k3), r.max_discrepancy)};
  });

  criterion(2, "K=2 conjugacy of iterated updates", [] {
    Rng rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
      const double a1 = 0.2 + 5 * unit(rng), a2 = 0.2 + 5 * unit(rng), p = unit(rng);
      DirichletBelief b({a1, a2});
      double w1 = 0, w2 = 0;
      for (int t = 0; t < 50; ++t) {
        const bool first = unit(rng) < p;
        (first ? w1 : w2) += 1;
        b = mm_update_homogeneous(b, 0, 1, first ? Outcome::first_preferred : Outcome::second_preferred);
      }
      worst = std::max({worst, std::fabs(b[0] - a1 - w1), std::fabs(b[1] - a2 - w2)});
    }
    return Verdict{worst <= 1e-8, fmt("100 sequences x 50 labels, max error %.3g <= 1e-8", worst)};
  });

  criterion(3, "sorting solves MAX-LOP under the Dirichlet belief", [] {
    LopCheckOptions o;
    o.cases = 200;
    o.min_items = 3;
    o.max_items = 6;
    o.tolerance = 1e-12;
    const auto r = run_lop_check(o);
    return Verdict{r.passed && r.max_gap <= 1e-12,
                    fmt("200 cases K=3..6, max gap %.3g <= 1e-12", r.max_gap)};
  });

  Report desk;
  bool desk_ok = false;
  criterion(4, "K=10 T=100 accuracy: AKG >= 0.65 at stage 20 and >= random at 100", [&] {
    auto c = desk_config();
    c.policies = {"akg", "random"};
    desk = run_experiment(c);
    desk_ok = true;
    const auto& akg = desk.policy("akg");
    const auto& rnd = desk.policy("random");
    const double a20 = at_stage(akg, 20), a100 = at_stage(akg, 100), r100 = at_stage(rnd, 100);
    return Verdict{a20 >= 0.65 && a100 >= r100,
                    fmt("AKG %.4f at 20, AKG %.4f vs random %.4f at 100", a20, a100, r100)};
  });

  criterion(5, "budget concentrates on adjacent pairs (ratio >= 2)", [&] {
    if (!desk_ok) return Verdict{false, "criterion 4 run failed"};
    const auto& f = desk.policy("akg").frequency_by_rank;
    const std::size_t k = desk.items;
    double adj = 0, far = 0;
    int n_adj = 0, n_far = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        if (b - a == 1) adj += f[a * k + b], ++n_adj;
        if (b - a >= 5) far += f[a * k + b], ++n_far;
      }
    }
    adj /= n_adj;
    far /= n_far;
    const double ratio = adj / far;
    return Verdict{ratio >= 2.0, fmt("adjacent %.3f vs distance>=5 %.3f labels/pair, ratio %.2f", adj, far, ratio)};
  });

  criterion(6, "close-extremes preset: near-tied pairs in the top 3", [] {
    auto c = desk_config();
    c.world.kind = WorldKind::close_extremes;
    const auto rep = run_experiment(c);
    const auto& f = rep.policy("akg").frequency_by_rank;
    const std::size_t k = rep.items;
    auto rank_of = [&](std::size_t a, std::size_t b) {
      const double v = f[a * k + b];
      int above = 0;
      for (std::size_t x = 0; x < k; ++x) {
        for (std::size_t y = x + 1; y < k; ++y) above += f[x * k + y] > v;
      }
      return above + 1;
    };
    const int top = rank_of(0, 1), bottom = rank_of(k - 2, k - 1);
    return Verdict{top <= 3 && bottom <= 3,
                    fmt("pair (1,2) is #%g with %.2f labels, pair (9,10) is #%g with %.2f", top, f[1],
                        bottom, f[(k - 2) * k + k - 1])};
  });

  criterion(7, "workers: reliability vs assignments, Spearman > 0.5", [] {
    ExperimentConfig c;
    c.items = 10;
    c.workers = 15;
    c.budget = 250;
    c.trials = 50;
    c.seed = 7;
    c.world.rho_grid = std::pair{0.4, 1.0};
    c.checkpoints = {250};
    const auto rep = run_experiment(c);
    const auto& p = rep.policy("akg");
    const double rho = spearman(p.reliability_by_position, p.worker_counts_by_reliability);
    return Verdict{rho > 0.5, fmt("15 workers, 50 trials, Spearman %.3f (least reliable %.1f labels, most %.1f)",
                                   rho, p.worker_counts_by_reliability.front(),
                                   p.worker_counts_by_reliability.back())};
  });

  criterion(8, "special functions on grids", [] {
    double sym = 0, uni = 0, comp = 0;
    for (double a = 1e-2; a <= 1e6; a *= 1.05) sym = std::max(sym, std::fabs(reg_inc_beta(0.5, a, a) - 0.5));
    for (int s = 0; s <= 10000; ++s) {
      const double x = s / 10000.0;
      uni = std::max(uni, std::fabs(reg_inc_beta(x, 1, 1) - x));
    }
    Rng rng(8);
    std::uniform_real_distribution<double> expo(-2.0, 6.0);
    for (int n = 0; n < 20000; ++n) {
      const double a = std::pow(10.0, expo(rng)), b = std::pow(10.0, expo(rng));
      comp = std::max(comp, std::fabs(pr_theta_greater(a, b) + pr_theta_greater(b, a) - 1.0));
    }
    const bool ok = sym <= 1e-12 && uni <= 1e-12 && comp <= 1e-12;
    return Verdict{ok, fmt("|I_1/2(a,a)-1/2| %.2g, |I_x(1,1)-x| %.2g, complement %.2g (all <= 1e-12)", sym,
                            uni, comp)};
  });

  criterion(9, "rank centrality sanity", [] {
    Rng rng(9);
    std::vector<int> truth(10);
    std::iota(truth.begin(), truth.end(), 1);
    std::shuffle(truth.begin(), truth.end(), rng);
    auto h = HistoryState::homogeneous(10);
    auto sym = HistoryState::homogeneous(10);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = i + 1; j < 10; ++j) {
        h.record({i, j, std::nullopt, truth[i] > truth[j] ? Outcome::first_preferred : Outcome::second_preferred});
        sym.record({i, j, std::nullopt, Outcome::first_preferred});
        sym.record({i, j, std::nullopt, Outcome::second_preferred});
      }
    }
    const bool exact = rank_centrality(h).ranking == Ranking(truth);
    double dev = 0.0;
    for (double s : rank_centrality(sym).scores) dev = std::max(dev, std::fabs(s - 0.1));
    return Verdict{exact && dev <= 1e-8,
                    std::string(exact ? "true order recovered" : "order NOT recovered") +
                        fmt(", symmetric-count deviation %.2g <= 1e-8", dev)};
  });

  criterion(10, "AKG stage time growth: log-log slope <= 4.3", [] {
    const std::size_t sizes[] = {10, 25, 100};
    const std::size_t stages[] = {100, 30, 4};
    std::vector<double> lx, ly;
    std::string detail;
    for (int s = 0; s < 3; ++s) {
      const std::size_t k = sizes[s];
      Rng rng(10 + k);
      const auto world = sample_true_world(k, 0, rng);
      RankingSession session(k, 0, 1.0, 4.0, 1.0, PolicySpec::parse("akg"), Rng(k));
      std::vector<double> times;
      for (std::size_t t = 0; t < stages[s]; ++t) {
        const auto t0 = Clock::now();
        const auto d = session.select();
        times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        session.observe({d[0].i, d[0].j, std::nullopt, simulate_label(world, d[0].i, d[0].j, {}, rng)});
      }
      std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
      const double med = times[times.size() / 2];
      lx.push_back(std::log(static_cast<double>(k)));
      ly.push_back(std::log(med));
      detail += fmt("K=%g %.3gs; ", static_cast<double>(k), med);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / 3;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / 3;
    double sxy = 0, sxx = 0;
    for (int s = 0; s < 3; ++s) sxy += (lx[s] - mx) * (ly[s] - my), sxx += (lx[s] - mx) * (lx[s] - mx);
    const double slope = sxy / sxx;
    return Verdict{slope <= 4.3, detail + fmt("slope %.2f", slope)};
  });

  criterion(11, "near-perfect workers reproduce the homogeneous trajectory", [] {
    ExperimentConfig base = desk_config();
    base.trials = 50;
    base.seed = 11;
    ExperimentConfig het = base;
    het.workers = 5;
    het.mu0 = 1e6;
    het.nu0 = 1.0;
    het.world.rho.assign(5, 1.0);
    const auto a = run_experiment(base).policy("akg");
    const auto b = run_experiment(het).policy("akg");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.stages.size(); ++k) {
      if (a.stages[k] != b.stages[k]) return Verdict{false, "checkpoint mismatch"};
      worst = std::max(worst, std::fabs(a.mean[k] - b.mean[k]));
    }
    return Verdict{worst <= 0.03, fmt("max |mean difference| over %g checkpoints %.4f <= 0.03",
                                       static_cast<double>(a.stages.size()), worst)};
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
