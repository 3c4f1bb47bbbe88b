// Command-line front end: simulate, replay, oracle-check, lop-check.
// Exit codes: 0 success, 1 runtime or validation failure, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "akgrank/akgrank.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(int status) {
  if (status == AKGRANK_OK) return kExitOk;
  if (status == AKGRANK_E_INVALID_ARGUMENT || status == AKGRANK_E_REFUSED) return kExitUsage;
  return kExitFailure;
}

int report_status(int status, const char* what) {
  if (status != AKGRANK_OK) {
    std::cerr << "akgrank: " << what << ": " << akgrank_status_name(status) << ": "
              << akgrank_last_error() << "\n";
  }
  return exit_code_for(status);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  akgrank_string_free(s);
  return out;
}

std::vector<double> parse_pair(const std::string& text, char sep, const char* flag) {
  const auto cut = text.find(sep);
  if (cut == std::string::npos) {
    throw UsageError(std::string(flag) + " expects two numbers separated by '" + sep + "'");
  }
  try {
    return {std::stod(text.substr(0, cut)), std::stod(text.substr(cut + 1))};
  } catch (const std::exception&) {
    throw UsageError(std::string(flag) + ": cannot parse '" + text + "'");
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t count_log_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) return 0;
  std::string line;
  std::size_t rows = 0;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (header) {
      header = false;
      continue;
    }
    ++rows;
  }
  return rows;
}

// Flags shared by simulate and replay; values apply only when given.
struct RunFlags {
  std::string config_path;
  std::size_t trials = 100;
  std::string policy = "akg";
  std::uint64_t seed = 1;
  std::size_t batch = 1;
  std::string eval = "tau";
  std::string estimator = "posterior";
  std::string out = "akgrank-out";
  std::string format = "both";
  std::size_t threads = 0;
  double alpha0 = 1.0;
  double mu0 = 4.0;
  double nu0 = 1.0;
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  f.opts["config"] = cmd->add_option("--config", f.config_path, "JSON config; flags override it");
  f.opts["trials"] = cmd->add_option("--trials", f.trials, "independent trials")->check(CLI::PositiveNumber);
  f.opts["policy"] = cmd->add_option("--policy", f.policy,
                                     "akg, random, distance or akg-batch:B (comma list allowed)");
  f.opts["seed"] = cmd->add_option("--seed", f.seed, "master seed (fallback: $AKGRANK_SEED)");
  f.opts["batch"] = cmd->add_option("--batch", f.batch, "labels per AKG batch")->check(CLI::PositiveNumber);
  f.opts["eval"] = cmd->add_option("--eval", f.eval, "accuracy measure")->check(CLI::IsMember({"tau", "ties"}));
  f.opts["estimator"] = cmd->add_option("--estimator", f.estimator, "ranking estimator")
                            ->check(CLI::IsMember({"posterior", "centrality"}));
  f.opts["out"] = cmd->add_option("--out", f.out, "output directory");
  f.opts["format"] = cmd->add_option("--format", f.format, "export format")
                         ->check(CLI::IsMember({"csv", "json", "both"}));
  f.opts["threads"] = cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  f.opts["alpha0"] = cmd->add_option("--alpha0", f.alpha0, "Dirichlet prior fill")->check(CLI::PositiveNumber);
  f.opts["mu0"] = cmd->add_option("--mu0", f.mu0, "worker reliability prior, first parameter")
                      ->check(CLI::PositiveNumber);
  f.opts["nu0"] = cmd->add_option("--nu0", f.nu0, "worker reliability prior, second parameter")
                      ->check(CLI::PositiveNumber);
}

// Defaults < config file < flags; the seed falls back to $AKGRANK_SEED.
json merge_run_flags(const RunFlags& f) {
  json cfg = f.config_path.empty() ? json::object() : read_json_file(f.config_path);
  if (!cfg.is_object()) throw UsageError("config must be a JSON object");
  if (f.given("trials")) cfg["trials"] = f.trials;
  if (f.given("policy")) cfg["policies"] = split_list(f.policy);
  if (f.given("batch")) cfg["batch"] = f.batch;
  if (f.given("eval")) cfg["eval"] = f.eval;
  if (f.given("estimator")) cfg["estimator"] = f.estimator;
  if (f.given("threads")) cfg["threads"] = f.threads;
  if (f.given("alpha0")) cfg["alpha0"] = f.alpha0;
  if (f.given("mu0")) cfg["mu0"] = f.mu0;
  if (f.given("nu0")) cfg["nu0"] = f.nu0;
  if (f.given("seed")) {
    cfg["seed"] = f.seed;
  } else if (!cfg.contains("seed")) {
    if (const char* env = std::getenv("AKGRANK_SEED")) {
      try {
        cfg["seed"] = std::stoull(env);
      } catch (const std::exception&) {
        throw UsageError(std::string("AKGRANK_SEED is not an unsigned integer: ") + env);
      }
    }
  }
  return cfg;
}

void print_summary(const json& rep) {
  for (const auto& p : rep.at("policies")) {
    std::printf("%s", p.at("policy").get<std::string>().c_str());
    if (!p.at("stages").empty()) {
      std::printf(" stage %zu: accuracy %.4f (stderr %.4f)", p.at("stages").back().get<std::size_t>(),
                  p.at("mean").back().get<double>(), p.at("stderr").back().get<double>());
    }
    const auto truncated = p.at("truncated_trials").get<std::size_t>();
    if (truncated > 0) {
      std::printf(" [truncated in %zu trial(s), mean %.1f labels]", truncated,
                  p.at("mean_realized").get<double>());
    }
    std::printf("\n");
  }
  std::fflush(stdout);
}

int run_and_export(const json& cfg, const RunFlags& f) {
  akgrank_report* report = nullptr;
  const int status = akgrank_experiment_run(cfg.dump().c_str(), &report);
  if (status != AKGRANK_OK) {
    const std::string message = akgrank_last_error();
    if (report) {
      const int st = akgrank_report_export(report, f.out.c_str(), f.format.c_str());
      if (st == AKGRANK_OK) std::cerr << "akgrank: partial results written to " << f.out << "\n";
      akgrank_report_destroy(report);
    }
    std::cerr << "akgrank: " << akgrank_status_name(status) << ": " << message << "\n";
    return exit_code_for(status);
  }
  char* text = nullptr;
  int st = akgrank_report_json(report, &text);
  if (st == AKGRANK_OK) print_summary(json::parse(take_string(text)));
  if (st == AKGRANK_OK) st = akgrank_report_export(report, f.out.c_str(), f.format.c_str());
  akgrank_report_destroy(report);
  if (st != AKGRANK_OK) return report_status(st, "export");
  std::cout << "results written to " << f.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active pairwise ranking: simulation, replay and self-checks"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(akgrank_version()));

  // simulate
  RunFlags sim;
  std::size_t items = 10, workers = 0, budget = 100;
  std::string world = "uniform", world_file, rho_prior = "4,1", rho_grid;
  auto* simulate = app.add_subcommand("simulate", "run synthetic experiments");
  auto* items_opt = simulate->add_option("--items", items, "number of items K")->check(CLI::Range(2, 100000));
  auto* workers_opt = simulate->add_option("--workers", workers, "number of workers M (0 = homogeneous)");
  auto* budget_opt = simulate->add_option("--budget", budget, "labels per trial T (required)")
                         ->check(CLI::PositiveNumber);
  auto* world_opt = simulate->add_option("--world", world, "ground truth")
                        ->check(CLI::IsMember({"uniform", "close-extremes", "file"}));
  auto* world_file_opt = simulate->add_option("--world-file", world_file,
                                              "JSON {\"theta\": [...], \"rho\": [...]} for --world file");
  auto* rho_prior_opt = simulate->add_option("--rho-prior", rho_prior, "worker reliability ~ Beta(a,b), as a,b");
  auto* rho_grid_opt = simulate->add_option("--rho-grid", rho_grid, "equally spaced reliabilities lo:hi");
  add_run_flags(simulate, sim);

  // replay
  RunFlags rep;
  rep.trials = 1;
  rep.eval = "ties";
  std::string log_path, levels_path;
  std::size_t replay_budget = 0;
  bool per_worker = false;
  auto* replay = app.add_subcommand("replay", "run a policy restricted to a label log");
  replay->add_option("--log", log_path, "CSV item_a,item_b,worker,outcome")->required()->check(CLI::ExistingFile);
  auto* levels_opt = replay->add_option("--levels", levels_path, "CSV item,level ground truth")
                         ->check(CLI::ExistingFile);
  auto* replay_budget_opt = replay->add_option("--budget", replay_budget, "labels to draw (0 = whole log)");
  replay->add_flag("--per-worker", per_worker, "model worker reliability and pick (pair, worker) triplets");
  add_run_flags(replay, rep);

  // oracle-check
  std::size_t oc_cases = 50;
  double oc_tol = 1e-6;
  std::uint64_t oc_seed = 1;
  bool oc_negative = false, oc_json = false;
  auto* oracle = app.add_subcommand("oracle-check", "compare moment matching with the exact posterior");
  oracle->add_option("--cases", oc_cases, "random single-observation cases")->check(CLI::PositiveNumber);
  oracle->add_option("--tolerance", oc_tol, "largest allowed moment discrepancy")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oc_seed, "case generator seed");
  oracle->add_flag("--negative-control", oc_negative, "flip the label inside the update (must fail)");
  oracle->add_flag("--json", oc_json, "print the full result as JSON");

  // lop-check
  std::size_t lc_cases = 200, lc_min = 3, lc_max = 6;
  std::uint64_t lc_seed = 1;
  bool lc_force = false, lc_json = false;
  auto* lop = app.add_subcommand("lop-check", "compare sorting with brute-force linear ordering");
  lop->add_option("--cases", lc_cases, "random Dirichlet parameter vectors")->check(CLI::PositiveNumber);
  lop->add_option("--min-items", lc_min, "smallest K")->check(CLI::Range(2, 9));
  lop->add_option("--max-items", lc_max, "largest K (above 6 needs --force, above 9 refused)");
  lop->add_option("--seed", lc_seed, "case generator seed");
  lop->add_flag("--force", lc_force, "allow K = 7..9");
  lop->add_flag("--json", lc_json, "print the full result as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) {
      json cfg = merge_run_flags(sim);
      if (items_opt->count()) cfg["items"] = items;
      if (workers_opt->count()) cfg["workers"] = workers;
      if (budget_opt->count()) cfg["budget"] = budget;
      if (!cfg.contains("budget")) throw UsageError("--budget is required (or set it in --config)");
      json w = cfg.contains("world") ? cfg["world"] : json::object();
      if (w.is_string()) w = json{{"kind", w}};
      if (world_opt->count()) {
        if (world == "file") {
          if (world_file.empty()) throw UsageError("--world file needs --world-file");
          const json wf = read_json_file(world_file);
          if (!wf.contains("theta")) throw UsageError(world_file + ": needs a \"theta\" array");
          w["kind"] = "fixed";
          w["theta"] = wf.at("theta");
          if (wf.contains("rho")) w["rho"] = wf.at("rho");
          if (!cfg.contains("items") && !items_opt->count()) cfg["items"] = wf.at("theta").size();
        } else {
          w["kind"] = world;
        }
      } else if (world_file_opt->count()) {
        throw UsageError("--world-file needs --world file");
      }
      if (rho_prior_opt->count()) w["rho_prior"] = parse_pair(rho_prior, ',', "--rho-prior");
      if (rho_grid_opt->count()) w["rho_grid"] = parse_pair(rho_grid, ':', "--rho-grid");
      if (!w.empty()) cfg["world"] = w;
      return run_and_export(cfg, sim);
    }

    if (*replay) {
      json cfg = merge_run_flags(rep);
      json w{{"kind", "replay"}, {"replay", log_path}};
      if (levels_opt->count()) w["levels"] = levels_path;
      cfg["world"] = w;
      cfg["workers"] = per_worker ? 1 : 0;
      if (!rep.given("trials") && !cfg.contains("trials")) cfg["trials"] = rep.trials;
      if (!rep.given("eval") && !cfg.contains("eval")) {
        cfg["eval"] = levels_opt->count() ? "ties" : "tau";
      }
      const std::size_t rows = count_log_rows(log_path);
      std::size_t b = replay_budget_opt->count() && replay_budget > 0 ? replay_budget : rows;
      if (b == 0) throw UsageError(log_path + " holds no records");
      cfg["budget"] = b;
      if (!levels_opt->count()) {
        std::cerr << "akgrank: no --levels given; accuracy is not evaluated\n";
      }
      return run_and_export(cfg, rep);
    }

    if (*oracle) {
      const json opts{{"cases", oc_cases},
                      {"tolerance", oc_tol},
                      {"seed", oc_seed},
                      {"negative_control", oc_negative}};
      char* text = nullptr;
      int passed = 0;
      const int st = akgrank_oracle_check(opts.dump().c_str(), &text, &passed);
      if (st != AKGRANK_OK) return report_status(st, "oracle-check");
      const json res = json::parse(take_string(text));
      if (oc_json) {
        std::cout << res.dump(2) << "\n";
      } else {
        std::printf("max moment discrepancy %.3e over %zu cases (tolerance %.1e)\n",
                    res.at("max_discrepancy").get<double>(), res.at("cases").size(), oc_tol);
        std::printf("K=2 conjugacy: max error %.3e over label sequences\n",
                    res.at("sequence_max_error").get<double>());
      }
      if (!passed) {
        std::cerr << "FAILED: " << res.at("failure").get<std::string>() << "\n";
        return kExitFailure;
      }
      std::cout << "oracle-check passed\n";
      return kExitOk;
    }

    if (*lop) {
      const json opts{{"cases", lc_cases},
                      {"min_items", lc_min},
                      {"max_items", lc_max},
                      {"seed", lc_seed},
                      {"force", lc_force}};
      char* text = nullptr;
      int passed = 0;
      const int st = akgrank_lop_check(opts.dump().c_str(), &text, &passed);
      if (st != AKGRANK_OK) return report_status(st, "lop-check");
      const json res = json::parse(take_string(text));
      if (lc_json) {
        std::cout << res.dump(2) << "\n";
      } else {
        std::printf("%zu cases, K in [%zu, %zu]: max objective gap %.3e\n",
                    res.at("cases").get<std::size_t>(), lc_min, lc_max,
                    res.at("max_gap").get<double>());
      }
      if (!passed) {
        std::cerr << "FAILED: " << res.at("failure").get<std::string>() << "\n";
        return kExitFailure;
      }
      std::cout << "lop-check passed\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "akgrank: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "akgrank: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
