#include "akgrank/akgrank.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "checks.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "specfn.hpp"

struct akgrank_session {
  akgrank::RankingSession engine;
};

struct akgrank_report {
  akgrank::Report report;
};

namespace {

using nlohmann::json;
using namespace akgrank;

thread_local std::string g_last_error;

int status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return AKGRANK_E_INVALID_ARGUMENT;
    case ErrorKind::domain: return AKGRANK_E_DOMAIN;
    case ErrorKind::numerical: return AKGRANK_E_NUMERICAL;
    case ErrorKind::exhausted: return AKGRANK_E_EXHAUSTED;
    case ErrorKind::constraint: return AKGRANK_E_CONSTRAINT;
    case ErrorKind::unavailable: return AKGRANK_E_UNAVAILABLE;
    case ErrorKind::io: return AKGRANK_E_IO;
    case ErrorKind::parse: return AKGRANK_E_PARSE;
    case ErrorKind::refused: return AKGRANK_E_REFUSED;
  }
  return AKGRANK_E_INTERNAL;
}

int fail(int status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename F>
int guarded(F&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const json::exception& e) {
    return fail(AKGRANK_E_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(AKGRANK_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(AKGRANK_E_INTERNAL, e.what());
  } catch (...) {
    return fail(AKGRANK_E_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_json(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

extern "C" {

const char* akgrank_version(void) { return "0.1.0"; }

const char* akgrank_last_error(void) { return g_last_error.c_str(); }

const char* akgrank_status_name(int status) {
  switch (status) {
    case AKGRANK_OK: return "ok";
    case AKGRANK_E_INVALID_ARGUMENT: return "invalid argument";
    case AKGRANK_E_DOMAIN: return "domain error";
    case AKGRANK_E_NUMERICAL: return "numerical error";
    case AKGRANK_E_EXHAUSTED: return "exhausted";
    case AKGRANK_E_CONSTRAINT: return "constraint violated";
    case AKGRANK_E_UNAVAILABLE: return "unavailable action";
    case AKGRANK_E_IO: return "i/o error";
    case AKGRANK_E_PARSE: return "parse error";
    case AKGRANK_E_REFUSED: return "refused";
    default: return "internal error";
  }
}

void akgrank_string_free(char* s) { std::free(s); }

int akgrank_log_beta(double a, double b, double* out) {
  if (!out) return fail(AKGRANK_E_INVALID_ARGUMENT, "out is null");
  return guarded([&] {
    *out = log_beta(a, b);
    return AKGRANK_OK;
  });
}

int akgrank_reg_inc_beta(double x, double a, double b, double* out) {
  if (!out) return fail(AKGRANK_E_INVALID_ARGUMENT, "out is null");
  return guarded([&] {
    *out = reg_inc_beta(x, a, b);
    return AKGRANK_OK;
  });
}

int akgrank_pr_theta_greater(double alpha_i, double alpha_j, double* out) {
  if (!out) return fail(AKGRANK_E_INVALID_ARGUMENT, "out is null");
  return guarded([&] {
    *out = pr_theta_greater(alpha_i, alpha_j);
    return AKGRANK_OK;
  });
}

int akgrank_session_create(const char* config_json, akgrank_session** out) {
  if (!out) return fail(AKGRANK_E_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  return guarded([&] {
    const json j = parse_json(config_json, "session config");
    if (!j.contains("items")) throw InvalidArgument("session config needs 'items'");
    for (const auto& [key, v] : j.items()) {
      static const char* known[] = {"items", "workers", "alpha0", "mu0", "nu0", "policy", "seed"};
      if (std::find_if(std::begin(known), std::end(known),
                       [&](const char* k) { return key == k; }) == std::end(known)) {
        throw InvalidArgument("unknown session key '" + key + "'");
      }
    }
    std::size_t items = 0, workers = 0;
    double alpha0 = 1.0, mu0 = 4.0, nu0 = 1.0;
    std::string policy = "akg";
    std::uint64_t seed = 1;
    take(j, "items", items);
    take(j, "workers", workers);
    take(j, "alpha0", alpha0);
    take(j, "mu0", mu0);
    take(j, "nu0", nu0);
    take(j, "policy", policy);
    take(j, "seed", seed);
    if (items < 2) throw InvalidArgument("items must be at least 2");
    auto s = std::unique_ptr<akgrank_session>(new akgrank_session{
        RankingSession(items, workers, alpha0, mu0, nu0, PolicySpec::parse(policy), Rng(seed))});
    *out = s.release();
    return AKGRANK_OK;
  });
}

void akgrank_session_destroy(akgrank_session* s) { delete s; }

int akgrank_session_select(akgrank_session* s, akgrank_decision* out, size_t capacity,
                           size_t* count) {
  if (!s || !count) return fail(AKGRANK_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto decisions = s->engine.select();
    *count = decisions.size();
    if (decisions.size() > capacity || (!out && !decisions.empty())) {
      throw InvalidArgument("decision buffer holds " + std::to_string(capacity) + ", need " +
                            std::to_string(decisions.size()));
    }
    for (std::size_t k = 0; k < decisions.size(); ++k) {
      out[k] = {decisions[k].i, decisions[k].j,
                decisions[k].worker ? static_cast<int64_t>(*decisions[k].worker) : -1};
    }
    return AKGRANK_OK;
  });
}

int akgrank_session_observe(akgrank_session* s, size_t i, size_t j, int64_t worker,
                            int outcome) {
  if (!s) return fail(AKGRANK_E_INVALID_ARGUMENT, "session is null");
  return guarded([&] {
    if (outcome != 1 && outcome != -1) throw InvalidArgument("outcome must be +1 or -1");
    ComparisonRecord r{i, j, std::nullopt, outcome_from_int(outcome)};
    if (worker >= 0) r.worker = static_cast<std::size_t>(worker);
    s->engine.observe(r);
    return AKGRANK_OK;
  });
}

int akgrank_session_stage(const akgrank_session* s, size_t* out) {
  if (!s || !out) return fail(AKGRANK_E_INVALID_ARGUMENT, "null argument");
  *out = s->engine.history().stage();
  return AKGRANK_OK;
}

int akgrank_session_ranking(const akgrank_session* s, int* ranks, size_t capacity) {
  if (!s || !ranks) return fail(AKGRANK_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const Ranking r = s->engine.ranking();
    if (capacity < r.size()) throw InvalidArgument("ranking buffer too small");
    std::copy(r.ranks().begin(), r.ranks().end(), ranks);
    return AKGRANK_OK;
  });
}

int akgrank_session_snapshot(const akgrank_session* s, char** json_out) {
  if (!s || !json_out) return fail(AKGRANK_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *json_out = dup_string(to_json(s->engine.snapshot()).dump());
    return AKGRANK_OK;
  });
}

int akgrank_experiment_run(const char* config_json, akgrank_report** out) {
  if (!out) return fail(AKGRANK_E_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  return guarded([&] {
    const ExperimentConfig config = config_from_json(parse_json(config_json, "experiment config"));
    try {
      *out = new akgrank_report{run_experiment(config)};
    } catch (const ExperimentError& e) {
      if (e.partial().trials_completed > 0) *out = new akgrank_report{e.partial()};
      throw;
    }
    return AKGRANK_OK;
  });
}

void akgrank_report_destroy(akgrank_report* r) { delete r; }

int akgrank_report_json(const akgrank_report* r, char** json_out) {
  if (!r || !json_out) return fail(AKGRANK_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *json_out = dup_string(to_json(r->report).dump());
    return AKGRANK_OK;
  });
}

int akgrank_report_export(const akgrank_report* r, const char* dir, const char* format) {
  if (!r || !dir) return fail(AKGRANK_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    ExportFormat f = ExportFormat::both;
    const std::string name = format ? format : "both";
    if (name == "csv") f = ExportFormat::csv;
    else if (name == "json") f = ExportFormat::json;
    else if (name != "both") throw InvalidArgument("format must be csv, json or both");
    export_report(r->report, dir, f);
    return AKGRANK_OK;
  });
}

int akgrank_oracle_check(const char* options_json, char** result_json, int* passed) {
  if (!result_json || !passed) return fail(AKGRANK_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const json j = parse_json(options_json, "oracle-check options");
    OracleCheckOptions o;
    take(j, "cases", o.cases);
    take(j, "tolerance", o.tolerance);
    take(j, "seed", o.seed);
    take(j, "negative_control", o.negative_control);
    take(j, "sequences", o.sequences);
    take(j, "sequence_length", o.sequence_length);
    const auto res = run_oracle_check(o);
    *passed = res.passed ? 1 : 0;
    *result_json = dup_string(to_json(res).dump());
    return AKGRANK_OK;
  });
}

int akgrank_lop_check(const char* options_json, char** result_json, int* passed) {
  if (!result_json || !passed) return fail(AKGRANK_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const json j = parse_json(options_json, "lop-check options");
    LopCheckOptions o;
    take(j, "cases", o.cases);
    take(j, "min_items", o.min_items);
    take(j, "max_items", o.max_items);
    take(j, "seed", o.seed);
    take(j, "force", o.force);
    const auto res = run_lop_check(o);
    *passed = res.passed ? 1 : 0;
    *result_json = dup_string(to_json(res).dump());
    return AKGRANK_OK;
  });
}

}  // extern "C"
