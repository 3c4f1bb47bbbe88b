#pragma once

// Self-validation suites behind `oracle-check` and `lop-check`.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace akgrank {

struct OracleCheckOptions {
  std::size_t cases = 50;
  double tolerance = 1e-6;
  std::uint64_t seed = 1;
  /// Flip the observed label before the moment-matching step; the suite is
  /// expected to fail.
  bool negative_control = false;
  std::size_t sequences = 100;
  std::size_t sequence_length = 50;
  double sequence_tolerance = 1e-8;
};

struct OracleCase {
  std::size_t items = 0;
  bool heterogeneous = false;
  double discrepancy = 0.0;
  std::string description;
};

struct OracleCheckResult {
  std::vector<OracleCase> cases;
  double max_discrepancy = 0.0;
  /// Largest |MM - conjugate| over the K = 2 label sequences.
  double sequence_max_error = 0.0;
  bool passed = false;
  std::string failure;  // first failing case, empty on success
};

/// One-step moment matching against the exact posterior at K ∈ {2, 3}, with
/// and without worker reliabilities, plus the K = 2 conjugacy sequences.
OracleCheckResult run_oracle_check(const OracleCheckOptions& options = {});
nlohmann::json to_json(const OracleCheckResult& r);

struct LopCheckOptions {
  std::size_t cases = 200;
  std::size_t min_items = 3;
  std::size_t max_items = 6;
  std::uint64_t seed = 1;
  double tolerance = 1e-12;
  /// Required above 6 items; above 9 the check is always refused.
  bool force = false;
};

struct LopCheckResult {
  std::size_t cases = 0;
  double max_gap = 0.0;
  std::size_t rankings_differing = 0;  // equal objective, different ranking
  bool passed = false;
  std::string failure;
};

/// Sorting the Dirichlet parameters against brute-force MAX-LOP.
LopCheckResult run_lop_check(const LopCheckOptions& options = {});
nlohmann::json to_json(const LopCheckResult& r);

}  // namespace akgrank
