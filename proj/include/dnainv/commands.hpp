#pragma once

#include "dnainv/forward.hpp"
#include "dnainv/pdps.hpp"
#include "dnainv/records.hpp"
#include "dnainv/solver.hpp"

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dnainv {

/// Invalid flag values or combinations.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Method { DnaInverse, Pdps };

/// "dna-inverse" or "pdps".
const char* to_string(Method m) noexcept;
/// Accepts the names above and "pdps-adapted". Throws UsageError otherwise.
Method method_from_string(std::string_view s);

/// Thread count from DNAINV_THREADS when it holds a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t default_threads();

struct SimulateOptions {
  std::size_t n = 300;
  std::size_t count = 10;
  std::size_t breaks = 2;  // C
  double sigma = 0.05;
  NoiseKind noise = NoiseKind::BinomialThinning;
  std::uint64_t seed = 1;
  double dx = 0.1;
  CrossingPolicy policy = CrossingPolicy::Free;
  PulseModel::Params model;
  std::string id_prefix = "read";

  /// Throws UsageError for infeasible combinations.
  void validate() const;
};

/// `count` reads with ground truth; read k uses a seed derived from (seed, k).
std::vector<Read> cmd_simulate(const SimulateOptions& opt);

struct SolveOptions {
  Method method = Method::DnaInverse;
  SolverParams solver;
  PdpsConfig pdps;
  std::size_t threads = 1;
};

struct SolveOutcome {
  std::vector<ReportRecord> records;  // input order
  std::size_t failures = 0;           // reads without a report
};

/// Solves every read on a pool of opt.threads workers. A read that throws gets
/// a failed record; the others are unaffected.
SolveOutcome cmd_solve(const PulseModel& model, const std::vector<Read>& reads, const SolveOptions& opt);

/// One JSON line per read describing the oscillation windows (1-based,
/// inclusive), zero-set size and candidate count.
std::string preprocess_summary(const PulseModel& model, const Read& read, const SolverParams& params);

struct BenchRow {
  std::string method;
  std::size_t reads = 0;
  std::size_t failures = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double win_rate = 0.0;  // share of reads where this method's refined objective is lowest (ties count)
};

struct BenchReadRow {
  std::string id;
  std::vector<double> ms;         // per method, NaN on failure
  std::vector<double> objective;  // refined objective per method, NaN on failure
  bool d_agree = true;            // every method returned the same d_star
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<BenchReadRow> per_read;
  std::size_t d_agree = 0;  // reads where all methods agree on d_star
};

/// Runs each method over the reads (base.method is ignored).
BenchResult cmd_bench(const PulseModel& model, const std::vector<Read>& reads, const std::vector<Method>& methods,
                      const SolveOptions& base);

/// Tab-separated summary table, a blank line, then the per-read table.
std::string format_bench(const BenchResult& b);

/// Tab-separated, header line first: id, kind, index, position_kb, time_min,
/// speed_kb_per_min, direction.
std::string cmd_events(const std::vector<ReportRecord>& reports);

/// Inverse of cmd_events. Throws FormatError on malformed rows.
std::vector<std::pair<std::string, EventRecord>> parse_events_table(std::string_view table);

}  // namespace dnainv
