#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

namespace akgrank {
namespace {

using nlohmann::json;

constexpr std::size_t kDenseCheckpointItems = 25;
constexpr std::size_t kSparseCheckpointStep = 10;

// Stream tags keep the world, the labels and the policy's own randomness
// independent, so paired policies see the same world and label draws.
enum StreamTag : std::uint32_t { kWorldStream = 0, kLabelStream = 1, kPolicyStream = 2 };

Rng make_stream(std::uint64_t seed, std::size_t trial, StreamTag tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(trial) >> 32),
                    static_cast<std::uint32_t>(tag)};
  return Rng(seq);
}

const std::map<WorldKind, std::string> kWorldNames{{WorldKind::uniform, "uniform"},
                                                   {WorldKind::close_extremes, "close-extremes"},
                                                   {WorldKind::fixed, "fixed"},
                                                   {WorldKind::replay, "replay"}};

template <typename E>
std::string name_of(const std::map<E, std::string>& names, E v) {
  return names.at(v);
}

template <typename E>
E parse_name(const std::map<E, std::string>& names, const std::string& s, const char* what) {
  for (const auto& [k, v] : names) {
    if (v == s) return k;
  }
  std::string expected;
  for (const auto& [k, v] : names) expected += (expected.empty() ? "" : ", ") + v;
  throw InvalidArgument(std::string("unknown ") + what + " '" + s + "' (expected " + expected +
                        ")");
}

const std::map<EvalMode, std::string> kEvalNames{{EvalMode::tau, "tau"}, {EvalMode::ties, "ties"}};
const std::map<Estimator, std::string> kEstimatorNames{{Estimator::posterior, "posterior"},
                                                       {Estimator::centrality, "centrality"}};

std::size_t pair_count(std::size_t items) { return items * (items - 1) / 2; }

std::vector<double> normalized(std::vector<double> v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= total;
  // Put the rounding residue on the largest entry so the simplex check is exact.
  const auto big = std::max_element(v.begin(), v.end());
  *big += 1.0 - std::accumulate(v.begin(), v.end(), 0.0);
  return v;
}

// Grid values are dealt to workers in a random order per trial, so the
// lexicographic tie-break on worker index favors no reliability level.
ReliabilitySource reliability_source(const ExperimentConfig& c, Rng& rng) {
  if (!c.world.rho.empty()) return c.world.rho;
  if (c.world.rho_grid) {
    auto grid = equally_spaced(c.world.rho_grid->first, c.world.rho_grid->second, c.workers);
    std::shuffle(grid.begin(), grid.end(), rng);
    return grid;
  }
  return c.world.rho_prior;
}

std::vector<std::size_t> order_by_descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

TrialWorld build_world(const ExperimentConfig& c, std::size_t trial, const ReplayPool* pool) {
  TrialWorld tw;
  Rng rng = make_stream(c.seed, trial, kWorldStream);
  switch (c.world.kind) {
    case WorldKind::uniform:
      tw.world = sample_true_world(c.items, c.workers, rng, reliability_source(c, rng));
      break;
    case WorldKind::close_extremes:
      tw.world = TrueWorld(close_extremes_theta(c.items),
                           sample_reliabilities(c.workers, rng, reliability_source(c, rng)));
      break;
    case WorldKind::fixed:
      tw.world = TrueWorld(normalized(c.world.theta),
                           sample_reliabilities(c.workers, rng, reliability_source(c, rng)));
      break;
    case WorldKind::replay:
      tw.pool = pool ? *pool
                     : ReplayPool::load(c.world.replay_path,
                                        c.world.levels_path.empty()
                                            ? std::nullopt
                                            : std::optional<std::filesystem::path>(
                                                  c.world.levels_path));
      break;
  }
  if (tw.world) {
    tw.true_order = order_by_descending(tw.world->theta());
    ScoreLevels levels(tw.world->items());
    for (std::size_t pos = 0; pos < tw.true_order.size(); ++pos) {
      levels[tw.true_order[pos]] = static_cast<long>(tw.true_order.size() - pos);
    }
    tw.levels = std::move(levels);
  } else if (tw.pool->levels()) {
    tw.levels = tw.pool->levels();
    std::vector<double> as_scores(tw.levels->begin(), tw.levels->end());
    tw.true_order = order_by_descending(as_scores);
  }
  return tw;
}

double sample_stderr(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1)) /
         std::sqrt(static_cast<double>(xs.size()));
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string file_safe(const std::string& id) {
  std::string out = id;
  for (auto& ch : out) {
    if (ch == ':' || ch == '/' || ch == '\\') ch = '-';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

json world_to_json(const WorldSpec& w) {
  json j{{"kind", name_of(kWorldNames, w.kind)},
         {"rho_prior", {w.rho_prior.a, w.rho_prior.b}}};
  if (!w.theta.empty()) j["theta"] = w.theta;
  if (!w.rho.empty()) j["rho"] = w.rho;
  if (w.rho_grid) j["rho_grid"] = {w.rho_grid->first, w.rho_grid->second};
  if (!w.replay_path.empty()) j["replay"] = w.replay_path;
  if (!w.levels_path.empty()) j["levels"] = w.levels_path;
  return j;
}

WorldSpec world_from_json(const json& j, WorldSpec w) {
  if (j.is_string()) {
    w.kind = parse_name(kWorldNames, j.get<std::string>(), "world");
    return w;
  }
  for (const auto& [key, v] : j.items()) {
    if (key == "kind") {
      w.kind = parse_name(kWorldNames, v.get<std::string>(), "world");
    } else if (key == "theta") {
      w.theta = v.get<std::vector<double>>();
    } else if (key == "rho") {
      w.rho = v.get<std::vector<double>>();
    } else if (key == "rho_prior") {
      const auto ab = v.get<std::vector<double>>();
      if (ab.size() != 2) throw InvalidArgument("world.rho_prior needs [a, b]");
      w.rho_prior = {ab[0], ab[1]};
    } else if (key == "rho_grid") {
      const auto lh = v.get<std::vector<double>>();
      if (lh.size() != 2) throw InvalidArgument("world.rho_grid needs [lo, hi]");
      w.rho_grid = std::make_pair(lh[0], lh[1]);
    } else if (key == "replay") {
      w.replay_path = v.get<std::string>();
    } else if (key == "levels") {
      w.levels_path = v.get<std::string>();
    } else {
      throw InvalidArgument("unknown world key '" + key + "'");
    }
  }
  return w;
}

}  // namespace

// ---- configuration ---------------------------------------------------------

void ExperimentConfig::validate() const {
  const bool replay = world.kind == WorldKind::replay;
  if (!replay && items < 2) throw InvalidArgument("items must be at least 2");
  if (budget < 1) throw InvalidArgument("budget must be at least 1");
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  if (batch < 1) throw InvalidArgument("batch must be at least 1");
  if (!(alpha0 > 0.0 && std::isfinite(alpha0))) throw InvalidArgument("alpha0 must be positive");
  if (!(mu0 > 0.0 && std::isfinite(mu0)) || !(nu0 > 0.0 && std::isfinite(nu0))) {
    throw InvalidArgument("mu0 and nu0 must be positive");
  }
  if (policies.empty()) throw InvalidArgument("at least one policy is required");
  policy_specs();
  if (!replay && workers > 0 && budget > workers * pair_count(items)) {
    throw InvalidArgument("budget " + std::to_string(budget) + " exceeds the " +
                          std::to_string(workers * pair_count(items)) +
                          " distinct (pair, worker) labels available");
  }
  if (!world.rho.empty() && world.rho_grid) {
    throw InvalidArgument("give either fixed reliabilities or a reliability grid, not both");
  }
  if (!world.rho.empty() && world.rho.size() != workers) {
    throw InvalidArgument("expected " + std::to_string(workers) + " reliabilities, got " +
                          std::to_string(world.rho.size()));
  }
  for (double r : world.rho) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument("reliabilities must lie in [0, 1]");
  }
  if (world.rho_grid) {
    if (workers == 0) throw InvalidArgument("a reliability grid needs workers > 0");
    const auto [lo, hi] = *world.rho_grid;
    if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) {
      throw InvalidArgument("reliability grid must satisfy 0 <= lo <= hi <= 1");
    }
  }
  if (!(world.rho_prior.a > 0.0 && world.rho_prior.b > 0.0)) {
    throw InvalidArgument("reliability prior parameters must be positive");
  }
  switch (world.kind) {
    case WorldKind::uniform:
      break;
    case WorldKind::close_extremes:
      if (items < 4) throw InvalidArgument("the close-extremes world needs at least 4 items");
      break;
    case WorldKind::fixed:
      if (world.theta.size() != items) {
        throw InvalidArgument("fixed world needs " + std::to_string(items) + " scores, got " +
                              std::to_string(world.theta.size()));
      }
      for (double t : world.theta) {
        if (!(t > 0.0 && std::isfinite(t))) throw InvalidArgument("fixed scores must be positive");
      }
      break;
    case WorldKind::replay:
      if (world.replay_path.empty()) throw InvalidArgument("replay world needs a log path");
      if (eval == EvalMode::ties && world.levels_path.empty()) {
        throw InvalidArgument("tie-tolerant evaluation of a replay needs a levels file");
      }
      break;
  }
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (checkpoints[k] > budget) throw InvalidArgument("checkpoint beyond the budget");
    if (k > 0 && checkpoints[k] <= checkpoints[k - 1]) {
      throw InvalidArgument("checkpoints must be strictly increasing");
    }
  }
}

std::vector<PolicySpec> ExperimentConfig::policy_specs() const {
  std::vector<PolicySpec> out;
  for (const auto& id : policies) {
    PolicySpec p = PolicySpec::parse(id);
    if (p.kind == PolicySpec::Kind::akg && batch > 1) p = {PolicySpec::Kind::akg_batch, batch};
    if (std::find(out.begin(), out.end(), p) != out.end()) {
      throw InvalidArgument("policy '" + p.id() + "' listed twice");
    }
    out.push_back(p);
  }
  return out;
}

std::vector<std::size_t> ExperimentConfig::checkpoint_stages() const {
  if (!checkpoints.empty()) return checkpoints;
  const std::size_t step = items <= kDenseCheckpointItems ? 1 : kSparseCheckpointStep;
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < budget; s += step) out.push_back(s);
  out.push_back(budget);
  return out;
}

json to_json(const ExperimentConfig& c) {
  return json{{"items", c.items},
              {"workers", c.workers},
              {"budget", c.budget},
              {"trials", c.trials},
              {"seed", c.seed},
              {"policies", c.policies},
              {"batch", c.batch},
              {"alpha0", c.alpha0},
              {"mu0", c.mu0},
              {"nu0", c.nu0},
              {"world", world_to_json(c.world)},
              {"eval", name_of(kEvalNames, c.eval)},
              {"estimator", name_of(kEstimatorNames, c.estimator)},
              {"checkpoints", c.checkpoints},
              {"threads", c.threads}};
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "items") c.items = v.get<std::size_t>();
      else if (key == "workers") c.workers = v.get<std::size_t>();
      else if (key == "budget") c.budget = v.get<std::size_t>();
      else if (key == "trials") c.trials = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "policies" || key == "policy") {
        c.policies = v.is_string() ? std::vector<std::string>{v.get<std::string>()}
                                   : v.get<std::vector<std::string>>();
      } else if (key == "batch") c.batch = v.get<std::size_t>();
      else if (key == "alpha0") c.alpha0 = v.get<double>();
      else if (key == "mu0") c.mu0 = v.get<double>();
      else if (key == "nu0") c.nu0 = v.get<double>();
      else if (key == "world") c.world = world_from_json(v, c.world);
      else if (key == "eval") c.eval = parse_name(kEvalNames, v.get<std::string>(), "eval mode");
      else if (key == "estimator") {
        c.estimator = parse_name(kEstimatorNames, v.get<std::string>(), "estimator");
      } else if (key == "checkpoints") c.checkpoints = v.get<std::vector<std::size_t>>();
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else throw InvalidArgument("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

// ---- online session ----------------------------------------------------------

RankingSession::RankingSession(std::size_t items, std::size_t workers, double alpha0,
                               double mu0, double nu0, PolicySpec policy, Rng rng)
    : belief_(DirichletBelief::uniform(items, alpha0)),
      workers_(workers, WorkerBelief(mu0, nu0)),
      history_(workers > 0 ? HistoryState::heterogeneous(items, workers)
                           : HistoryState::homogeneous(items)),
      policy_(policy),
      rng_(std::move(rng)) {}

AvailabilitySet RankingSession::open_actions() const {
  return history_.heterogeneous() ? AvailabilitySet::open_triplets(history_)
                                  : AvailabilitySet::all_pairs(history_.items());
}

std::vector<Decision> RankingSession::select() { return select(open_actions()); }

std::vector<Decision> RankingSession::select(const AvailabilitySet& avail) {
  if (!avail.empty() && avail.heterogeneous() != history_.heterogeneous()) {
    throw DomainError("select: availability mode does not match the session");
  }
  return select_decisions(policy_, belief_, workers_, avail, rng_);
}

void RankingSession::observe(const ComparisonRecord& r) {
  if (r.i >= history_.items() || r.j >= history_.items() || !(r.i < r.j)) {
    throw DomainError("observe: pair must satisfy i < j < K");
  }
  if (history_.heterogeneous()) {
    if (!r.worker || *r.worker >= workers_.size()) {
      throw DomainError("observe: heterogeneous session needs a valid worker index");
    }
    // Check the cell before touching the belief so a rejected label leaves no trace.
    if (history_.used(r.i, r.j, *r.worker)) {
      throw ConstraintError("observe: worker " + std::to_string(*r.worker) +
                            " already labeled pair (" + std::to_string(r.i) + ", " +
                            std::to_string(r.j) + ")");
    }
    auto up = mm_update_heterogeneous(belief_, workers_[*r.worker], r.i, r.j, r.outcome);
    history_.record(r);
    belief_ = std::move(up.belief);
    workers_[*r.worker] = up.worker;
    return;
  }
  if (r.worker) throw DomainError("observe: homogeneous session takes no worker index");
  auto next = mm_update_homogeneous(belief_, r.i, r.j, r.outcome);
  history_.record(r);
  belief_ = std::move(next);
}

Ranking RankingSession::ranking(Estimator estimator) const {
  return estimator == Estimator::posterior ? optimal_ranking(belief_)
                                           : rank_centrality(history_).ranking;
}

BeliefSnapshot RankingSession::snapshot() const {
  return {belief_, workers_, history_.stage()};
}

// ---- trials ----------------------------------------------------------------

TrialWorld make_trial_world(const ExperimentConfig& config, std::size_t trial) {
  return build_world(config, trial, nullptr);
}

TrialResult run_trial(const ExperimentConfig& config, std::size_t trial,
                      const PolicySpec& policy) {
  return run_trial(config, trial, policy, make_trial_world(config, trial));
}

TrialResult run_trial(const ExperimentConfig& config, std::size_t trial,
                      const PolicySpec& policy, const TrialWorld& tw) {
  std::optional<ReplayPool> pool = tw.pool;
  const std::size_t items = pool ? pool->items() : tw.world->items();
  const std::size_t workers =
      config.workers == 0 ? 0 : (pool ? std::max(config.workers, pool->workers()) : config.workers);
  if (tw.world && workers > tw.world->workers()) {
    throw DomainError("run_trial: world has fewer reliabilities than workers");
  }

  Rng label_rng = make_stream(config.seed, trial, kLabelStream);
  RankingSession session(items, workers, config.alpha0, config.mu0, config.nu0, policy,
                         make_stream(config.seed, trial, kPolicyStream));

  TrialResult res;
  res.policy = policy.id();
  res.trial = trial;
  res.pair_counts.assign(items * items, 0);
  res.worker_counts.assign(workers, 0);
  if (tw.world) res.worker_reliability.assign(tw.world->rho().begin(), tw.world->rho().end());
  const bool has_truth = !tw.true_order.empty();
  std::vector<std::size_t> position(items, 0);
  if (has_truth) {
    res.pair_counts_by_rank.assign(items * items, 0);
    for (std::size_t p = 0; p < items; ++p) position[tw.true_order[p]] = p;
  }
  std::optional<Ranking> truth;
  if (has_truth) {
    std::vector<int> ranks(items);
    for (std::size_t p = 0; p < items; ++p) ranks[tw.true_order[p]] = static_cast<int>(items - p);
    truth = Ranking(std::move(ranks));
  }

  const auto checkpoints = config.checkpoint_stages();
  std::size_t next_cp = 0;
  auto evaluate = [&](std::size_t stage) {
    while (next_cp < checkpoints.size() && checkpoints[next_cp] < stage) ++next_cp;
    if (next_cp >= checkpoints.size() || checkpoints[next_cp] != stage) return;
    ++next_cp;
    if (!has_truth) return;
    const Ranking r = session.ranking(config.estimator);
    res.stages.push_back(stage);
    res.accuracy.push_back(config.eval == EvalMode::tau ? kendall_tau(r, *truth)
                                                        : tie_tolerant_accuracy(r, *tw.levels));
  };

  evaluate(0);
  std::size_t stage = 0;
  while (stage < config.budget) {
    const AvailabilitySet avail = pool ? pool->availability(workers > 0) : session.open_actions();
    if (avail.empty()) {
      res.truncated = true;
      break;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto decisions = session.select(avail);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& d : decisions) {
      if (stage >= config.budget) break;
      ComparisonRecord rec;
      if (pool) {
        rec = pool->consume(d);
        if (workers == 0) rec.worker.reset();
      } else {
        rec = {d.i, d.j, d.worker, simulate_label(*tw.world, d.i, d.j, d.worker, label_rng)};
      }
      session.observe(rec);
      ++res.pair_counts[rec.i * items + rec.j];
      ++res.pair_counts[rec.j * items + rec.i];
      if (has_truth) {
        const std::size_t a = position[rec.i], b = position[rec.j];
        ++res.pair_counts_by_rank[a * items + b];
        ++res.pair_counts_by_rank[b * items + a];
      }
      if (rec.worker) ++res.worker_counts[*rec.worker];
      res.stage_seconds.push_back(seconds / static_cast<double>(decisions.size()));
      ++stage;
      evaluate(stage);
    }
  }
  res.realized = stage;
  const Ranking final_ranking = session.ranking(config.estimator);
  res.final_ranking.assign(final_ranking.ranks().begin(), final_ranking.ranks().end());
  return res;
}

// ---- aggregation -------------------------------------------------------------

bool PolicyReport::operator==(const PolicyReport& o) const {
  return policy == o.policy && stages == o.stages && mean == o.mean && stderr_ == o.stderr_ &&
         count == o.count && frequency == o.frequency &&
         frequency_by_rank == o.frequency_by_rank && worker_counts == o.worker_counts &&
         worker_counts_by_reliability == o.worker_counts_by_reliability &&
         reliability_by_position == o.reliability_by_position &&
         initial_expected_accuracy == o.initial_expected_accuracy &&
         mean_realized == o.mean_realized && truncated_trials == o.truncated_trials;
}

const PolicyReport& Report::policy(const std::string& id) const {
  for (const auto& p : policies) {
    if (p.policy == id) return p;
  }
  throw InvalidArgument("report has no policy '" + id + "'");
}

Report aggregate(const ExperimentConfig& config, std::size_t items, std::size_t workers,
                 const std::vector<std::vector<TrialResult>>& by_trial) {
  Report rep;
  rep.config = config;
  rep.items = items;
  rep.workers = workers;
  rep.trials_completed = by_trial.size();
  const auto specs = config.policy_specs();
  const auto checkpoints = config.checkpoint_stages();
  const double n = static_cast<double>(by_trial.size());
  for (std::size_t p = 0; p < specs.size(); ++p) {
    PolicyReport pr;
    pr.policy = specs[p].id();
    pr.initial_expected_accuracy =
        items >= 2 ? max_expected_accuracy(DirichletBelief::uniform(items, config.alpha0)) : 0.0;
    if (by_trial.empty()) {
      rep.policies.push_back(std::move(pr));
      continue;
    }
    pr.frequency.assign(items * items, 0.0);
    pr.worker_counts.assign(workers, 0.0);
    bool by_rank = true;
    double seconds = 0.0;
    std::size_t stage_total = 0;
    for (const auto& trial : by_trial) {
      const TrialResult& t = trial[p];
      for (std::size_t k = 0; k < t.pair_counts.size(); ++k) pr.frequency[k] += t.pair_counts[k];
      for (std::size_t w = 0; w < t.worker_counts.size(); ++w) pr.worker_counts[w] += t.worker_counts[w];
      by_rank = by_rank && !t.pair_counts_by_rank.empty();
      pr.mean_realized += static_cast<double>(t.realized);
      if (t.truncated) ++pr.truncated_trials;
      for (double s : t.stage_seconds) seconds += s;
      stage_total += t.stage_seconds.size();
    }
    if (workers > 0 && by_trial.front()[p].worker_reliability.size() == workers) {
      pr.worker_counts_by_reliability.assign(workers, 0.0);
      pr.reliability_by_position.assign(workers, 0.0);
      for (const auto& trial : by_trial) {
        const auto& t = trial[p];
        const auto order = order_by_descending(t.worker_reliability);
        for (std::size_t pos = 0; pos < workers; ++pos) {
          const std::size_t w = order[workers - 1 - pos];
          pr.worker_counts_by_reliability[pos] += t.worker_counts[w];
          pr.reliability_by_position[pos] += t.worker_reliability[w];
        }
      }
      for (auto& v : pr.worker_counts_by_reliability) v /= n;
      for (auto& v : pr.reliability_by_position) v /= n;
    }
    if (by_rank) {
      pr.frequency_by_rank.assign(items * items, 0.0);
      for (const auto& trial : by_trial) {
        const auto& c = trial[p].pair_counts_by_rank;
        for (std::size_t k = 0; k < c.size(); ++k) pr.frequency_by_rank[k] += c[k];
      }
      for (auto& f : pr.frequency_by_rank) f /= n;
    }
    for (auto& f : pr.frequency) f /= n;
    for (auto& w : pr.worker_counts) w /= n;
    pr.mean_realized /= n;
    pr.mean_stage_seconds = stage_total ? seconds / static_cast<double>(stage_total) : 0.0;

    for (std::size_t s : checkpoints) {
      std::vector<double> acc;
      for (const auto& trial : by_trial) {
        const auto& t = trial[p];
        const auto it = std::find(t.stages.begin(), t.stages.end(), s);
        if (it != t.stages.end()) acc.push_back(t.accuracy[it - t.stages.begin()]);
      }
      if (acc.empty()) continue;
      const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
      pr.stages.push_back(s);
      pr.mean.push_back(mean);
      pr.stderr_.push_back(sample_stderr(acc, mean));
      pr.count.push_back(acc.size());
    }
    rep.policies.push_back(std::move(pr));
  }
  return rep;
}

Report run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto specs = config.policy_specs();
  std::optional<ReplayPool> pool;
  if (config.world.kind == WorldKind::replay) {
    pool = build_world(config, 0, nullptr).pool;
  }
  const std::size_t items = pool ? pool->items() : config.items;
  const std::size_t workers =
      config.workers == 0 ? 0 : (pool ? std::max(config.workers, pool->workers()) : config.workers);

  std::vector<std::vector<TrialResult>> results(config.trials);
  std::vector<std::exception_ptr> errors(config.trials);
  std::vector<char> done(config.trials, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto work = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t t = next.fetch_add(1);
      if (t >= config.trials) return;
      try {
        const TrialWorld tw = build_world(config, t, pool ? &*pool : nullptr);
        for (const auto& spec : specs) results[t].push_back(run_trial(config, t, spec, tw));
        done[t] = 1;
      } catch (...) {
        errors[t] = std::current_exception();
        failed.store(true);
      }
    }
  };

  std::size_t threads = config.threads ? config.threads
                                       : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, config.trials);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool_threads;
    for (std::size_t k = 0; k < threads; ++k) pool_threads.emplace_back(work);
    for (auto& th : pool_threads) th.join();
  }

  const auto first_error = std::find_if(errors.begin(), errors.end(),
                                        [](const auto& e) { return static_cast<bool>(e); });
  if (first_error == errors.end()) return aggregate(config, items, workers, results);

  const std::size_t bad = static_cast<std::size_t>(first_error - errors.begin());
  std::vector<std::vector<TrialResult>> completed;
  for (std::size_t t = 0; t < bad && done[t]; ++t) completed.push_back(std::move(results[t]));
  Report partial = aggregate(config, items, workers, completed);
  try {
    std::rethrow_exception(*first_error);
  } catch (const Error& e) {
    throw ExperimentError(e.kind(), "trial " + std::to_string(bad) + ": " + e.what(),
                          std::move(partial));
  } catch (const std::exception& e) {
    throw ExperimentError(ErrorKind::numerical, "trial " + std::to_string(bad) + ": " + e.what(),
                          std::move(partial));
  }
}

// ---- serialization -----------------------------------------------------------

json to_json(const Report& r) {
  json policies = json::array();
  for (const auto& p : r.policies) {
    policies.push_back({{"policy", p.policy},
                        {"stages", p.stages},
                        {"mean", p.mean},
                        {"stderr", p.stderr_},
                        {"count", p.count},
                        {"frequency", p.frequency},
                        {"frequency_by_rank", p.frequency_by_rank},
                        {"worker_counts", p.worker_counts},
                        {"worker_counts_by_reliability", p.worker_counts_by_reliability},
                        {"reliability_by_position", p.reliability_by_position},
                        {"initial_expected_accuracy", p.initial_expected_accuracy},
                        {"mean_realized", p.mean_realized},
                        {"truncated_trials", p.truncated_trials}});
  }
  return json{{"config", to_json(r.config)},
              {"items", r.items},
              {"workers", r.workers},
              {"trials_completed", r.trials_completed},
              {"policies", policies}};
}

Report report_from_json(const json& j) {
  try {
    Report r;
    r.config = config_from_json(j.at("config"));
    r.items = j.at("items").get<std::size_t>();
    r.workers = j.at("workers").get<std::size_t>();
    r.trials_completed = j.at("trials_completed").get<std::size_t>();
    for (const auto& pj : j.at("policies")) {
      PolicyReport p;
      p.policy = pj.at("policy").get<std::string>();
      p.stages = pj.at("stages").get<std::vector<std::size_t>>();
      p.mean = pj.at("mean").get<std::vector<double>>();
      p.stderr_ = pj.at("stderr").get<std::vector<double>>();
      p.count = pj.at("count").get<std::vector<std::size_t>>();
      p.frequency = pj.at("frequency").get<std::vector<double>>();
      p.frequency_by_rank = pj.at("frequency_by_rank").get<std::vector<double>>();
      p.worker_counts = pj.at("worker_counts").get<std::vector<double>>();
      p.worker_counts_by_reliability =
          pj.at("worker_counts_by_reliability").get<std::vector<double>>();
      p.reliability_by_position = pj.at("reliability_by_position").get<std::vector<double>>();
      p.initial_expected_accuracy = pj.at("initial_expected_accuracy").get<double>();
      p.mean_realized = pj.at("mean_realized").get<double>();
      p.truncated_trials = pj.at("truncated_trials").get<std::size_t>();
      r.policies.push_back(std::move(p));
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

std::string accuracy_csv(const Report& r) {
  std::string out = "policy,stage,mean,stderr\n";
  for (const auto& p : r.policies) {
    for (std::size_t k = 0; k < p.stages.size(); ++k) {
      out += p.policy + "," + std::to_string(p.stages[k]) + "," + format_number(p.mean[k]) +
             "," + format_number(p.stderr_[k]) + "\n";
    }
  }
  return out;
}

std::string matrix_csv(std::span<const double> m, std::size_t cols) {
  std::string out;
  if (cols == 0) return out;
  for (std::size_t row = 0; row * cols < m.size(); ++row) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out += ",";
      out += format_number(m[row * cols + c]);
    }
    out += "\n";
  }
  return out;
}

std::vector<std::filesystem::path> export_report(const Report& r,
                                                 const std::filesystem::path& dir,
                                                 ExportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = dir / name;
    write_file(path, content);
    written.push_back(path);
  };
  if (format != ExportFormat::json) {
    emit("accuracy.csv", accuracy_csv(r));
    for (const auto& p : r.policies) {
      const std::string tag = file_safe(p.policy);
      if (!p.frequency.empty()) emit("frequency_" + tag + ".csv", matrix_csv(p.frequency, r.items));
      if (!p.frequency_by_rank.empty()) {
        emit("frequency_by_rank_" + tag + ".csv", matrix_csv(p.frequency_by_rank, r.items));
      }
      if (!p.worker_counts.empty()) {
        std::string csv = "worker,mean_count\n";
        for (std::size_t w = 0; w < p.worker_counts.size(); ++w) {
          csv += std::to_string(w) + "," + format_number(p.worker_counts[w]) + "\n";
        }
        emit("workers_" + tag + ".csv", csv);
      }
      if (!p.worker_counts_by_reliability.empty()) {
        std::string csv = "position,mean_reliability,mean_count\n";
        for (std::size_t k = 0; k < p.worker_counts_by_reliability.size(); ++k) {
          csv += std::to_string(k) + "," + format_number(p.reliability_by_position[k]) + "," +
                 format_number(p.worker_counts_by_reliability[k]) + "\n";
        }
        emit("workers_by_reliability_" + tag + ".csv", csv);
      }
    }
  }
  if (format != ExportFormat::csv) emit("report.json", to_json(r).dump(2) + "\n");
  return written;
}

}  // namespace akgrank
