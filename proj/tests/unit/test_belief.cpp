#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "belief.hpp"
#include "errors.hpp"
#include "oracle.hpp"

using namespace akgrank;

namespace {

constexpr Outcome kPlus = Outcome::first_preferred;
constexpr Outcome kMinus = Outcome::second_preferred;

void check_alpha(const DirichletBelief& b, const std::vector<double>& want, double tol) {
  REQUIRE(b.size() == want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    CAPTURE(k);
    CHECK(std::fabs(b[k] - want[k]) < tol);
  }
}

// Constants C_k = E[θ_k | y=+1] and D = E[Σθ_k² | y=+1] for one label on
// (i, j), written via S = θ_i + θ_j and U = θ_i / S, where U ~ Beta(α_i, α_j)
// is independent of S and of the other components.
struct HandConstants {
  std::vector<double> c;
  double d;
};

HandConstants hand_constants(const std::vector<double>& a, std::size_t i, std::size_t j) {
  const double a0 = std::accumulate(a.begin(), a.end(), 0.0);
  const double s = a[i] + a[j];
  HandConstants h;
  h.c.resize(a.size());
  const double py = a[i] / s;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double num;
    if (k == i) {
      num = a[i] * (a[i] + 1) / (s * (s + 1)) * s / a0;
    } else if (k == j) {
      num = a[i] * a[j] / (s * (s + 1)) * s / a0;
    } else {
      num = a[k] / a0 * py;
    }
    h.c[k] = num / py;
  }
  // Σ E[θ_k² θ_i/(θ_i+θ_j)] / Pr(y).
  double second = 0.0;
  const double r2 = a0 * (a0 + 1);
  for (std::size_t k = 0; k < a.size(); ++k) {
    double num;
    if (k == i) {
      num = a[i] * (a[i] + 1) * (a[i] + 2) / (s * (s + 1) * (s + 2)) * s * (s + 1) / r2;
    } else if (k == j) {
      num = a[i] * a[j] * (a[j] + 1) / (s * (s + 1) * (s + 2)) * s * (s + 1) / r2;
    } else {
      num = a[k] * (a[k] + 1) / r2 * py;
    }
    second += num;
  }
  h.d = second / py;
  return h;
}

}  // namespace

TEST_CASE("DirichletBelief validation") {
  CHECK_THROWS_AS(DirichletBelief({1.0}), DomainError);
  CHECK_THROWS_AS(DirichletBelief({1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(DirichletBelief({1.0, -2.0}), DomainError);
  CHECK_THROWS_AS(DirichletBelief({1.0, std::nan("")}), DomainError);
  const DirichletBelief b({1.5, 2.5, 3.0});
  CHECK(b.alpha0() == doctest::Approx(7.0));
  CHECK(DirichletBelief::uniform(4, 2.0).alpha0() == doctest::Approx(8.0));
  CHECK_THROWS_AS(WorkerBelief(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(WorkerBelief(1.0, INFINITY), DomainError);
  CHECK(WorkerBelief(4, 1).mean() == doctest::Approx(0.8));
}

TEST_CASE("outcome conversion") {
  CHECK(to_int(kPlus) == 1);
  CHECK(to_int(kMinus) == -1);
  CHECK(outcome_from_int(-1) == kMinus);
  CHECK(flipped(kPlus) == kMinus);
  CHECK_THROWS_AS(outcome_from_int(0), DomainError);
}

TEST_CASE("homogeneous update examples") {
  check_alpha(mm_update_homogeneous(DirichletBelief({1, 1}), 0, 1, kPlus), {2, 1}, 1e-12);
  check_alpha(mm_update_homogeneous(DirichletBelief({1, 1}), 0, 1, kMinus), {1, 2}, 1e-12);
  check_alpha(mm_update_homogeneous(DirichletBelief({1, 1, 1}), 0, 1, kPlus),
              {36.0 / 23, 18.0 / 23, 27.0 / 23}, 1e-12);
}

TEST_CASE("homogeneous update against hand-derived constants") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> draw(0.2, 20.0);
  for (int c = 0; c < 300; ++c) {
    const std::size_t k = 2 + c % 6;
    std::vector<double> a(k);
    for (auto& v : a) v = draw(rng);
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::size_t i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    if (i > j) std::swap(i, j);
    const auto h = hand_constants(a, i, j);
    CHECK(std::fabs(std::accumulate(h.c.begin(), h.c.end(), 0.0) - 1.0) < 1e-10);
    const double sum_c2 = std::inner_product(h.c.begin(), h.c.end(), h.c.begin(), 0.0);
    const double a0 = (h.d - 1) / (sum_c2 - h.d);
    const auto got = mm_update_homogeneous(DirichletBelief(a), i, j, kPlus);
    for (std::size_t m = 0; m < k; ++m) {
      CHECK(got[m] == doctest::Approx(h.c[m] * a0).epsilon(1e-10));
    }
    // y = -1 on (i, j) is y = +1 on the relabelled pair.
    std::vector<double> swapped = a;
    std::swap(swapped[i], swapped[j]);
    const auto mirror = mm_update_homogeneous(DirichletBelief(swapped), i, j, kPlus);
    const auto minus = mm_update_homogeneous(DirichletBelief(a), i, j, kMinus);
    CHECK(minus[i] == doctest::Approx(mirror[j]).epsilon(1e-12));
    CHECK(minus[j] == doctest::Approx(mirror[i]).epsilon(1e-12));
  }
}

TEST_CASE("one-step moment matching equals the exact posterior") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> draw(0.5, 6.0);
  for (int c = 0; c < 40; ++c) {
    const std::size_t k = 2 + c % 3;
    std::vector<double> a(k);
    for (auto& v : a) v = draw(rng);
    const DirichletBelief prior(a);
    const Outcome y = c % 2 ? kPlus : kMinus;
    const std::size_t i = 0, j = k - 1;

    auto h = HistoryState::homogeneous(k);
    h.record({i, j, std::nullopt, y});
    const auto exact = exact_posterior_moments(prior, h, {});
    const auto mm = dirichlet_moments(mm_update_homogeneous(prior, i, j, y));
    for (std::size_t m = 0; m < k; ++m) CHECK(std::fabs(mm.mean[m] - exact.mean[m]) < 1e-8);
    CHECK(std::fabs(mm.sum_second - exact.sum_second) < 1e-8);

    const WorkerBelief wb(draw(rng), draw(rng));
    auto hh = HistoryState::heterogeneous(k, 1);
    hh.record({i, j, 0, y});
    const std::vector<WorkerBelief> workers{wb};
    const auto ex2 = exact_posterior_moments(prior, hh, workers);
    const auto up = mm_update_heterogeneous(prior, wb, i, j, y);
    const auto dm = dirichlet_moments(up.belief);
    const auto bm = beta_moments(up.worker);
    for (std::size_t m = 0; m < k; ++m) CHECK(std::fabs(dm.mean[m] - ex2.mean[m]) < 1e-8);
    CHECK(std::fabs(dm.sum_second - ex2.sum_second) < 1e-8);
    CHECK(std::fabs(bm.mean - ex2.worker_mean[0]) < 1e-8);
    CHECK(std::fabs(bm.spread - ex2.worker_spread[0]) < 1e-8);
  }
}

TEST_CASE("heterogeneous update examples") {
  SUBCASE("an uninformative worker leaves the means alone") {
    const auto up = mm_update_heterogeneous(DirichletBelief({1, 1}), WorkerBelief(1, 1), 0, 1, kPlus);
    CHECK(up.belief[0] / up.belief.alpha0() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(up.worker.mu() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(up.worker.nu() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(reliability_weight(DirichletBelief({1, 1}), WorkerBelief(1, 1), 0, 1, kPlus) ==
          doctest::Approx(0.5));
  }
  SUBCASE("mirror symmetry") {
    const WorkerBelief wb(3, 2);
    const auto a = mm_update_heterogeneous(DirichletBelief({2, 5, 1}), wb, 0, 1, kPlus);
    const auto b = mm_update_heterogeneous(DirichletBelief({5, 2, 1}), wb, 0, 1, kMinus);
    CHECK(a.belief[0] == doctest::Approx(b.belief[1]).epsilon(1e-12));
    CHECK(a.belief[1] == doctest::Approx(b.belief[0]).epsilon(1e-12));
    CHECK(a.belief[2] == doctest::Approx(b.belief[2]).epsilon(1e-12));
    CHECK(a.worker.mu() == doctest::Approx(b.worker.mu()).epsilon(1e-12));
    CHECK(a.worker.nu() == doctest::Approx(b.worker.nu()).epsilon(1e-12));
  }
  SUBCASE("a reliable worker moves both beliefs") {
    const auto up = mm_update_heterogeneous(DirichletBelief({1, 1}), WorkerBelief(4, 1), 0, 1, kPlus);
    CHECK(up.belief[0] / up.belief.alpha0() > 0.5);
    CHECK(up.worker.mean() > 0.8);
  }
}

TEST_CASE("K=2 iterated updates stay conjugate") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    const double a1 = 0.3 + 5 * unit(rng), a2 = 0.3 + 5 * unit(rng);
    DirichletBelief b({a1, a2});
    double w1 = 0, w2 = 0;
    for (int t = 0; t < 50; ++t) {
      const Outcome y = unit(rng) < 0.6 ? kPlus : kMinus;
      (y == kPlus ? w1 : w2) += 1;
      b = mm_update_homogeneous(b, 0, 1, y);
    }
    CHECK(std::fabs(b[0] - (a1 + w1)) < 1e-10);
    CHECK(std::fabs(b[1] - (a2 + w2)) < 1e-10);
  }
}

TEST_CASE("near-perfect workers reduce to the homogeneous update") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> draw(0.5, 10.0);
  for (int c = 0; c < 100; ++c) {
    std::vector<double> a(4);
    for (auto& v : a) v = draw(rng);
    const DirichletBelief prior(a);
    const Outcome y = c % 2 ? kPlus : kMinus;
    const auto het = mm_update_heterogeneous(prior, WorkerBelief(1e6, 1), 1, 3, y);
    const auto hom = mm_update_homogeneous(prior, 1, 3, y);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::fabs(het.belief[k] - hom[k]) < 1e-4);
  }
}

TEST_CASE("parameters stay positive along long trajectories") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t k = 10;
  std::vector<double> theta(k);
  for (auto& t : theta) t = -std::log(unit(rng));
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  DirichletBelief hom = DirichletBelief::uniform(k);
  DirichletBelief het = DirichletBelief::uniform(k);
  std::vector<WorkerBelief> workers(5, WorkerBelief(4, 1));
  bool ok = true;
  for (int t = 0; t < 10000; ++t) {
    std::size_t i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    if (i > j) std::swap(i, j);
    const Outcome y = unit(rng) < theta[i] / (theta[i] + theta[j]) ? kPlus : kMinus;
    hom = mm_update_homogeneous(hom, i, j, y);
    const std::size_t w = t % workers.size();
    const Outcome yw = unit(rng) < 0.2 ? flipped(y) : y;
    auto up = mm_update_heterogeneous(het, workers[w], i, j, yw);
    het = up.belief;
    workers[w] = up.worker;
    for (std::size_t m = 0; m < k; ++m) ok = ok && hom[m] > 0 && het[m] > 0;
  }
  CHECK(ok);
  for (const auto& w : workers) CHECK(w.mean() > 0.6);
}

TEST_CASE("history bookkeeping") {
  auto h = HistoryState::homogeneous(3);
  h.record({0, 1, std::nullopt, kPlus});
  CHECK(h.wins(0, 1) == 1);
  CHECK(h.stage() == 1);
  h = record_outcome(h, {0, 1, std::nullopt, kMinus});
  CHECK(h.wins(0, 1) == 1);
  CHECK(h.wins(1, 0) == 1);
  CHECK(h.stage() == 2);
  CHECK_THROWS_AS(h.record({1, 0, std::nullopt, kPlus}), DomainError);
  CHECK_THROWS_AS(h.record({0, 3, std::nullopt, kPlus}), DomainError);
  CHECK_THROWS_AS(HistoryState::homogeneous(1), DomainError);
  CHECK_THROWS_AS(HistoryState::heterogeneous(3, 0), DomainError);

  auto hh = HistoryState::heterogeneous(3, 4);
  hh.record({0, 1, 3, kPlus});
  CHECK(hh.used(0, 1, 3));
  CHECK_FALSE(hh.used(0, 1, 2));
  CHECK_THROWS_AS(hh.record({0, 1, 3, kMinus}), ConstraintError);
  CHECK(hh.stage() == 1);
  CHECK_THROWS_AS(hh.record({0, 1, std::nullopt, kPlus}), DomainError);
  CHECK_THROWS_AS(hh.record({0, 1, 4, kPlus}), DomainError);
}

TEST_CASE("moments of Dirichlet and Beta") {
  const auto m = dirichlet_moments(DirichletBelief({1, 2, 3}));
  CHECK(m.mean[2] == doctest::Approx(0.5));
  CHECK(m.sum_second == doctest::Approx((2.0 + 6.0 + 12.0) / 42.0));
  const auto b = beta_moments(WorkerBelief(4, 1));
  CHECK(b.mean == doctest::Approx(0.8));
  CHECK(b.spread == doctest::Approx((20.0 + 2.0) / 30.0));
}

TEST_CASE("snapshot JSON round trip") {
  const BeliefSnapshot s{DirichletBelief({1.25, 3.5}), {WorkerBelief(4, 1), WorkerBelief(2, 3)}, 7};
  const auto j = to_json(s);
  CHECK(j.at("t") == 7);
  CHECK(j.at("workers").size() == 2);
  CHECK(snapshot_from_json(j) == s);
  CHECK(snapshot_from_json(nlohmann::json::parse(j.dump())) == s);
  CHECK_THROWS_AS(snapshot_from_json(nlohmann::json{{"t", 1}}), ParseError);
}
