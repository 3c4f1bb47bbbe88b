#include "simenv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "errors.hpp"

namespace akgrank {
namespace {

constexpr double kSimplexTolerance = 1e-12;
constexpr double kNearTieGap = 1e-3;
// Ratio between consecutive well-separated scores.
constexpr double kSeparatedRatio = 2.0;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

long parse_integer(const std::string& field, const std::string& where) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(where + ": expected an integer, got '" + field + "'");
  }
  return v;
}

std::size_t parse_index(const std::string& field, const std::string& where) {
  const long v = parse_integer(field, where);
  if (v < 0) throw ParseError(where + ": index must be non-negative, got " + field);
  return static_cast<std::size_t>(v);
}

// Reads the header line and returns the data lines paired with 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> read_table(std::istream& in,
                                                            const std::string& header,
                                                            const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  if (trim(line) != header) {
    throw ParseError(source + ":" + std::to_string(lineno) + ": expected header '" + header +
                     "'");
  }
  std::vector<std::pair<std::size_t, std::string>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    rows.emplace_back(lineno, line);
  }
  return rows;
}

}  // namespace

TrueWorld::TrueWorld(std::vector<double> theta, std::vector<double> rho)
    : theta_(std::move(theta)), rho_(std::move(rho)) {
  if (theta_.size() < 2) throw DomainError("TrueWorld: need at least two items");
  double sum = 0.0;
  for (double t : theta_) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("TrueWorld: θ must be positive");
    sum += t;
  }
  if (std::fabs(sum - 1.0) > kSimplexTolerance) {
    throw DomainError("TrueWorld: θ must sum to 1");
  }
  for (double r : rho_) {
    if (!(r >= 0.0 && r <= 1.0)) throw DomainError("TrueWorld: ρ must lie in [0, 1]");
  }
}

double TrueWorld::first_preferred_probability(std::size_t i, std::size_t j,
                                              std::optional<std::size_t> worker) const {
  if (i >= items() || j >= items() || i == j) throw DomainError("TrueWorld: bad pair");
  const double p = theta_[i] / (theta_[i] + theta_[j]);
  if (!worker) return p;
  if (*worker >= workers()) throw DomainError("TrueWorld: unknown worker");
  const double r = rho_[*worker];
  return r * p + (1.0 - r) * (1.0 - p);
}

std::vector<double> equally_spaced(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = count == 1 ? hi : lo + (hi - lo) * static_cast<double>(k) /
                                        static_cast<double>(count - 1);
  }
  return out;
}

std::vector<double> sample_reliabilities(std::size_t workers, Rng& rng,
                                         const ReliabilitySource& source) {
  std::vector<double> rho;
  if (const auto* prior = std::get_if<BetaReliability>(&source)) {
    if (!(prior->a > 0.0 && prior->b > 0.0)) {
      throw DomainError("sample_reliabilities: Beta parameters must be positive");
    }
    std::gamma_distribution<double> ga(prior->a, 1.0), gb(prior->b, 1.0);
    rho.resize(workers);
    for (auto& r : rho) {
      const double x = ga(rng);
      const double y = gb(rng);
      r = x + y > 0.0 ? x / (x + y) : 0.5;
    }
  } else {
    rho = std::get<std::vector<double>>(source);
    if (rho.size() != workers) {
      throw DomainError("sample_reliabilities: expected " + std::to_string(workers) +
                        " reliabilities, got " + std::to_string(rho.size()));
    }
  }
  return rho;
}

TrueWorld sample_true_world(std::size_t items, std::size_t workers, Rng& rng,
                            const ReliabilitySource& source) {
  if (items < 2) throw DomainError("sample_true_world: need at least two items");
  std::exponential_distribution<double> unit(1.0);
  std::vector<double> theta(items);
  for (auto& t : theta) {
    do t = unit(rng);
    while (t == 0.0);
  }
  const double total = std::accumulate(theta.begin(), theta.end(), 0.0);
  for (auto& t : theta) t /= total;

  return TrueWorld(std::move(theta), sample_reliabilities(workers, rng, source));
}

std::vector<double> close_extremes_theta(std::size_t items) {
  if (items < 4) throw DomainError("close_extremes_theta: need at least four items");
  std::vector<double> theta(items);
  theta[0] = 1.0;
  theta[1] = 1.0 + kNearTieGap;
  for (std::size_t k = 2; k + 1 < items; ++k) theta[k] = theta[k - 1] * kSeparatedRatio;
  theta[items - 1] = theta[items - 2] * (1.0 + kNearTieGap);
  const double total = std::accumulate(theta.begin(), theta.end(), 0.0);
  for (auto& t : theta) t /= total;
  // Absorb the rounding residue so the simplex check holds to the last bit.
  theta[items / 2] += 1.0 - std::accumulate(theta.begin(), theta.end(), 0.0);
  return theta;
}

Outcome simulate_label(const TrueWorld& world, std::size_t i, std::size_t j,
                       std::optional<std::size_t> worker, Rng& rng) {
  const double p = world.first_preferred_probability(i, j, worker);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < p ? Outcome::first_preferred : Outcome::second_preferred;
}

ReplayPool::ReplayPool(std::vector<ReplayRecord> records, std::optional<ScoreLevels> levels)
    : records_(std::move(records)),
      consumed_(records_.size(), false),
      levels_(std::move(levels)),
      remaining_(records_.size()) {
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (std::size_t r = 0; r < records_.size(); ++r) {
    const auto& rec = records_[r];
    if (!(rec.i < rec.j)) {
      throw DomainError("ReplayPool: record " + std::to_string(r) + " needs item_a < item_b");
    }
    if (!seen.emplace(rec.i, rec.j, rec.worker).second) {
      throw ConstraintError("ReplayPool: duplicate record (" + std::to_string(rec.i) + ", " +
                            std::to_string(rec.j) + ", worker " + std::to_string(rec.worker) +
                            ")");
    }
    items_ = std::max(items_, rec.j + 1);
    workers_ = std::max(workers_, rec.worker + 1);
  }
  if (levels_) {
    if (levels_->size() < items_) {
      throw DomainError("ReplayPool: levels cover " + std::to_string(levels_->size()) +
                        " items but the log mentions item " + std::to_string(items_ - 1));
    }
    items_ = levels_->size();
  }
}

ReplayPool ReplayPool::parse(std::istream& csv, const std::string& source) {
  std::vector<ReplayRecord> records;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const auto& [lineno, line] : read_table(csv, "item_a,item_b,worker,outcome", source)) {
    const std::string where = source + ":" + std::to_string(lineno);
    const auto f = split_fields(line);
    if (f.size() != 4) throw ParseError(where + ": expected 4 fields, got " + std::to_string(f.size()));
    ReplayRecord rec;
    rec.i = parse_index(f[0], where);
    rec.j = parse_index(f[1], where);
    rec.worker = parse_index(f[2], where);
    const long y = parse_integer(f[3], where);
    if (y != 1 && y != -1) throw ParseError(where + ": outcome must be 1 or -1");
    rec.outcome = outcome_from_int(static_cast<int>(y));
    if (!(rec.i < rec.j)) throw ParseError(where + ": item_a must be less than item_b");
    if (!seen.emplace(rec.i, rec.j, rec.worker).second) {
      throw ParseError(where + ": duplicate (item_a, item_b, worker) record");
    }
    records.push_back(rec);
  }
  return ReplayPool(std::move(records));
}

ScoreLevels ReplayPool::parse_levels(std::istream& csv, const std::string& source) {
  std::vector<std::pair<std::size_t, long>> entries;
  for (const auto& [lineno, line] : read_table(csv, "item,level", source)) {
    const std::string where = source + ":" + std::to_string(lineno);
    const auto f = split_fields(line);
    if (f.size() != 2) throw ParseError(where + ": expected 2 fields, got " + std::to_string(f.size()));
    entries.emplace_back(parse_index(f[0], where), parse_integer(f[1], where));
  }
  ScoreLevels levels(entries.size());
  std::vector<bool> set(entries.size(), false);
  for (const auto& [item, level] : entries) {
    if (item >= entries.size() || set[item]) {
      throw ParseError(source + ": items must be exactly 0.." +
                       std::to_string(entries.size() - 1) + " once each");
    }
    set[item] = true;
    levels[item] = level;
  }
  return levels;
}

ReplayPool ReplayPool::load(const std::filesystem::path& csv,
                            const std::optional<std::filesystem::path>& levels) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open replay log " + csv.string());
  ReplayPool pool = parse(in, csv.string());
  if (levels) {
    std::ifstream lin(*levels);
    if (!lin) throw IoError("cannot open levels file " + levels->string());
    return ReplayPool(std::move(pool.records_), parse_levels(lin, levels->string()));
  }
  return pool;
}

AvailabilitySet ReplayPool::availability(bool per_worker) const {
  std::vector<Decision> out;
  out.reserve(remaining_);
  for (std::size_t r = 0; r < records_.size(); ++r) {
    if (consumed_[r]) continue;
    const auto& rec = records_[r];
    out.push_back({rec.i, rec.j, per_worker ? std::optional(rec.worker) : std::nullopt});
  }
  return AvailabilitySet(std::move(out));
}

ComparisonRecord ReplayPool::consume(const Decision& d) {
  for (std::size_t r = 0; r < records_.size(); ++r) {
    if (consumed_[r]) continue;
    const auto& rec = records_[r];
    if (rec.i != d.i || rec.j != d.j) continue;
    if (d.worker && *d.worker != rec.worker) continue;
    consumed_[r] = true;
    --remaining_;
    return {rec.i, rec.j, rec.worker, rec.outcome};
  }
  std::string what = "no unused replay record for pair (" + std::to_string(d.i) + ", " +
                     std::to_string(d.j) + ")";
  if (d.worker) what += " and worker " + std::to_string(*d.worker);
  throw UnavailableError(what);
}

}  // namespace akgrank
