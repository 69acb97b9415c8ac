#pragma once

#include "dnainv/forward.hpp"
#include "dnainv/solver.hpp"

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dnainv {

/// Line-delimited JSON records, one object per line, each tagged with
/// "version". Doubles are written in shortest round-trip form so that
/// parse(emit(x)) == x bit for bit.
inline constexpr int kRecordVersion = 1;

class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }  // 1-based, 0 when unknown

 private:
  std::size_t line_;
};

/// Run-length encoding of a 0/1 vector as (value, length) pairs.
std::vector<std::pair<int, std::size_t>> run_length_encode(const std::vector<int>& d);
std::vector<int> run_length_decode(const std::vector<std::pair<int, std::size_t>>& runs);

// ReadFile: {version, id, dx, z, tau_true?, d_true?}

std::string emit_read(const Read& r);
/// Throws FormatError for malformed JSON, missing fields, unknown versions,
/// length mismatches or negative z.
Read parse_read(std::string_view line, std::size_t line_no = 0);
void write_reads(std::ostream& os, const std::vector<Read>& reads);
/// Blank lines are skipped; errors carry the 1-based line number.
std::vector<Read> read_reads(std::istream& is);

struct CandidateRecord {
  std::optional<double> F;  // empty when the candidate solve failed
  double kkt = 0.0;
  double ms = 0.0;
  std::string error;

  bool operator==(const CandidateRecord&) const = default;
};

struct EventRecord {
  std::string kind;
  std::size_t index = 0;  // 1-based
  double position = 0.0;  // kb
  double time = 0.0;      // min
  double speed = 0.0;     // kb/min
  int direction = 0;

  bool operator==(const EventRecord&) const = default;
};

/// Distances to the ground truth, present when the read carried it.
struct RecoveryRecord {
  double max_abs_error = 0.0;  // ||tau* - tau_true||_inf
  double rel_error = 0.0;      // divided by max tau_true
  std::size_t d_mismatch = 0;  // entries of d_refit differing from d_true

  bool operator==(const RecoveryRecord&) const = default;
};

// ReportFile: one record per read. A hard failure keeps id, solver, wall_ms
// and error only.
struct ReportRecord {
  std::string id;
  std::string solver;
  bool ok = true;
  std::string error;
  double dx = 0.1;
  double objective = 0.0;
  double objective_refined = 0.0;
  std::vector<std::pair<int, std::size_t>> d_star;  // run-length encoded
  std::vector<std::pair<int, std::size_t>> d_refit;
  std::vector<double> tau_star;
  std::vector<std::size_t> breakpoints;  // 1-based, borders included
  std::vector<EventRecord> events;
  std::vector<CandidateRecord> per_candidate;
  std::size_t windows = 0;
  bool degenerate = false;
  bool refit_failed = false;
  std::optional<RecoveryRecord> recovery;
  double wall_ms = 0.0;

  bool operator==(const ReportRecord&) const = default;
};

ReportRecord make_record(const Read& read, const SolveReport& rep);
ReportRecord failed_record(const Read& read, const std::string& solver, const std::string& error, double wall_ms);

/// Zeroes wall_ms and per-candidate ms.
ReportRecord without_timing(ReportRecord r);

std::string emit_report(const ReportRecord& r);
ReportRecord parse_report(std::string_view line, std::size_t line_no = 0);
void write_reports(std::ostream& os, const std::vector<ReportRecord>& reports);
std::vector<ReportRecord> read_reports(std::istream& is);

}  // namespace dnainv
