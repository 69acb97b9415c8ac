#include "dnainv/records.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dnainv {
namespace {

using Json = nlohmann::ordered_json;

Json parse_object(std::string_view line, std::size_t line_no) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw FormatError(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError(line_no, "record is not a JSON object");
  if (!j.contains("version")) throw FormatError(line_no, "missing field 'version'");
  if (!j["version"].is_number_integer() || j["version"].get<int>() != kRecordVersion)
    throw FormatError(line_no, "unsupported record version " + j["version"].dump() + " (expected " +
                                   std::to_string(kRecordVersion) + ")");
  return j;
}

const Json& field(const Json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(line_no, std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
T get(const Json& j, const char* key, std::size_t line_no) {
  try {
    return field(j, key, line_no).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(line_no, std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, std::size_t line_no) {
  return j.contains(key) ? get<T>(j, key, line_no) : fallback;
}

Json runs_to_json(const std::vector<std::pair<int, std::size_t>>& runs) {
  Json a = Json::array();
  for (const auto& [v, len] : runs) a.push_back(Json::array({v, len}));
  return a;
}

std::vector<std::pair<int, std::size_t>> runs_from_json(const Json& j, const char* key, std::size_t line_no) {
  auto runs = get<std::vector<std::pair<int, std::size_t>>>(j, key, line_no);
  for (const auto& [v, len] : runs)
    if ((v != 0 && v != 1) || len == 0) throw FormatError(line_no, std::string("field '") + key + "': bad run");
  return runs;
}

template <class F>
std::vector<std::invoke_result_t<F, std::string_view, std::size_t>> read_lines(std::istream& is, F parse) {
  std::vector<std::invoke_result_t<F, std::string_view, std::size_t>> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(is, line)) {
    ++no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    out.push_back(parse(line, no));
  }
  if (is.bad()) throw FormatError(0, "read error");
  return out;
}

}  // namespace

std::vector<std::pair<int, std::size_t>> run_length_encode(const std::vector<int>& d) {
  std::vector<std::pair<int, std::size_t>> runs;
  for (int v : d) {
    if (!runs.empty() && runs.back().first == v)
      ++runs.back().second;
    else
      runs.emplace_back(v, 1);
  }
  return runs;
}

std::vector<int> run_length_decode(const std::vector<std::pair<int, std::size_t>>& runs) {
  std::vector<int> d;
  for (const auto& [v, len] : runs) d.insert(d.end(), len, v);
  return d;
}

std::string emit_read(const Read& r) {
  Json j;
  j["version"] = kRecordVersion;
  j["id"] = r.id;
  j["dx"] = r.dx;
  j["z"] = r.z;
  if (r.tau_true) j["tau_true"] = *r.tau_true;
  if (r.d_true) j["d_true"] = *r.d_true;
  return j.dump();
}

Read parse_read(std::string_view line, std::size_t line_no) {
  const Json j = parse_object(line, line_no);
  Read r;
  r.id = get<std::string>(j, "id", line_no);
  r.dx = get<double>(j, "dx", line_no);
  r.z = get<std::vector<double>>(j, "z", line_no);
  if (j.contains("tau_true")) r.tau_true = get<std::vector<double>>(j, "tau_true", line_no);
  if (j.contains("d_true")) r.d_true = get<std::vector<int>>(j, "d_true", line_no);
  if (!(r.dx > 0.0)) throw FormatError(line_no, "dx must be > 0");
  for (double v : r.z)
    if (!std::isfinite(v) || v < 0.0) throw FormatError(line_no, "z entries must be finite and >= 0");
  if (r.tau_true && r.tau_true->size() != r.z.size()) throw FormatError(line_no, "tau_true length differs from z");
  if (r.d_true) {
    if (r.d_true->size() != r.z.size()) throw FormatError(line_no, "d_true length differs from z");
    for (int v : *r.d_true)
      if (v != 0 && v != 1) throw FormatError(line_no, "d_true entries must be 0 or 1");
  }
  return r;
}

void write_reads(std::ostream& os, const std::vector<Read>& reads) {
  for (const auto& r : reads) os << emit_read(r) << '\n';
}

std::vector<Read> read_reads(std::istream& is) { return read_lines(is, parse_read); }

ReportRecord make_record(const Read& read, const SolveReport& rep) {
  ReportRecord r;
  r.id = read.id;
  r.solver = rep.solver;
  r.dx = read.dx;
  r.objective = rep.objective;
  r.objective_refined = rep.objective_refined;
  r.d_star = run_length_encode(rep.d_star);
  r.d_refit = run_length_encode(rep.d_refit);
  r.tau_star = rep.tau_star.values;
  for (auto i : rep.breakpoints.indices) r.breakpoints.push_back(i + 1);
  for (const auto& e : rep.events)
    r.events.push_back({to_string(e.kind), e.index + 1, static_cast<double>(e.index) * read.dx, e.time, e.speed,
                        e.direction});
  for (const auto& c : rep.per_candidate) {
    CandidateRecord cr;
    if (c.ok && std::isfinite(c.F)) cr.F = c.F;
    cr.kkt = c.kkt;
    cr.ms = c.ms;
    cr.error = c.error;
    r.per_candidate.push_back(std::move(cr));
  }
  r.windows = rep.windows;
  r.degenerate = rep.degenerate;
  r.refit_failed = rep.refit_failed;
  r.wall_ms = rep.wall_ms;
  if (read.tau_true && read.tau_true->size() == rep.tau_star.size()) {
    RecoveryRecord rec;
    double peak = 0.0;
    for (std::size_t i = 0; i < rep.tau_star.size(); ++i) {
      rec.max_abs_error = std::max(rec.max_abs_error, std::abs(rep.tau_star.values[i] - (*read.tau_true)[i]));
      peak = std::max(peak, std::abs((*read.tau_true)[i]));
    }
    rec.rel_error = peak > 0.0 ? rec.max_abs_error / peak : rec.max_abs_error;
    if (read.d_true && read.d_true->size() == rep.d_refit.size())
      for (std::size_t i = 0; i < rep.d_refit.size(); ++i) rec.d_mismatch += rep.d_refit[i] != (*read.d_true)[i];
    r.recovery = rec;
  }
  return r;
}

ReportRecord failed_record(const Read& read, const std::string& solver, const std::string& error, double wall_ms) {
  ReportRecord r;
  r.id = read.id;
  r.solver = solver;
  r.ok = false;
  r.error = error;
  r.dx = read.dx;
  r.wall_ms = wall_ms;
  return r;
}

ReportRecord without_timing(ReportRecord r) {
  r.wall_ms = 0.0;
  for (auto& c : r.per_candidate) c.ms = 0.0;
  return r;
}

std::string emit_report(const ReportRecord& r) {
  Json j;
  j["version"] = kRecordVersion;
  j["id"] = r.id;
  j["solver"] = r.solver;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    j["dx"] = r.dx;
    j["wall_ms"] = r.wall_ms;
    return j.dump();
  }
  j["dx"] = r.dx;
  j["objective"] = r.objective;
  j["objective_refined"] = r.objective_refined;
  j["d_star"] = runs_to_json(r.d_star);
  j["d_refit"] = runs_to_json(r.d_refit);
  j["tau_star"] = r.tau_star;
  j["breakpoints"] = r.breakpoints;
  Json ev = Json::array();
  for (const auto& e : r.events)
    ev.push_back({{"kind", e.kind},
                  {"index", e.index},
                  {"position", e.position},
                  {"time", e.time},
                  {"speed", e.speed},
                  {"direction", e.direction}});
  j["events"] = std::move(ev);
  Json pc = Json::array();
  for (const auto& c : r.per_candidate) {
    Json cj;
    cj["F"] = c.F ? Json(*c.F) : Json(nullptr);
    cj["kkt"] = c.kkt;
    cj["ms"] = c.ms;
    if (!c.error.empty()) cj["error"] = c.error;
    pc.push_back(std::move(cj));
  }
  j["per_candidate"] = std::move(pc);
  j["windows"] = r.windows;
  j["degenerate"] = r.degenerate;
  j["refit_failed"] = r.refit_failed;
  if (r.recovery)
    j["recovery"] = {{"max_abs_error", r.recovery->max_abs_error},
                     {"rel_error", r.recovery->rel_error},
                     {"d_mismatch", r.recovery->d_mismatch}};
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

ReportRecord parse_report(std::string_view line, std::size_t line_no) {
  const Json j = parse_object(line, line_no);
  ReportRecord r;
  r.id = get<std::string>(j, "id", line_no);
  r.solver = get<std::string>(j, "solver", line_no);
  r.ok = get<bool>(j, "ok", line_no);
  r.dx = get<double>(j, "dx", line_no);
  r.wall_ms = get<double>(j, "wall_ms", line_no);
  if (!r.ok) {
    r.error = get<std::string>(j, "error", line_no);
    return r;
  }
  r.objective = get<double>(j, "objective", line_no);
  r.objective_refined = get<double>(j, "objective_refined", line_no);
  r.d_star = runs_from_json(j, "d_star", line_no);
  r.d_refit = runs_from_json(j, "d_refit", line_no);
  r.tau_star = get<std::vector<double>>(j, "tau_star", line_no);
  r.breakpoints = get<std::vector<std::size_t>>(j, "breakpoints", line_no);
  for (const auto& e : field(j, "events", line_no)) {
    EventRecord er;
    er.kind = get<std::string>(e, "kind", line_no);
    try {
      (void)event_kind_from_string(er.kind);
    } catch (const std::exception&) {
      throw FormatError(line_no, "unknown event kind '" + er.kind + "'");
    }
    er.index = get<std::size_t>(e, "index", line_no);
    er.position = get<double>(e, "position", line_no);
    er.time = get<double>(e, "time", line_no);
    er.speed = get<double>(e, "speed", line_no);
    er.direction = get<int>(e, "direction", line_no);
    r.events.push_back(std::move(er));
  }
  for (const auto& c : field(j, "per_candidate", line_no)) {
    CandidateRecord cr;
    const auto& f = field(c, "F", line_no);
    if (!f.is_null()) cr.F = get<double>(c, "F", line_no);
    cr.kkt = get<double>(c, "kkt", line_no);
    cr.ms = get<double>(c, "ms", line_no);
    cr.error = get_or<std::string>(c, "error", "", line_no);
    r.per_candidate.push_back(std::move(cr));
  }
  r.windows = get<std::size_t>(j, "windows", line_no);
  r.degenerate = get<bool>(j, "degenerate", line_no);
  r.refit_failed = get<bool>(j, "refit_failed", line_no);
  if (j.contains("recovery")) {
    const auto& rj = j["recovery"];
    r.recovery = RecoveryRecord{get<double>(rj, "max_abs_error", line_no), get<double>(rj, "rel_error", line_no),
                                get<std::size_t>(rj, "d_mismatch", line_no)};
  }
  const auto n = run_length_decode(r.d_star).size();
  if (n != r.tau_star.size() || run_length_decode(r.d_refit).size() != n)
    throw FormatError(line_no, "d_star, d_refit and tau_star lengths differ");
  return r;
}

void write_reports(std::ostream& os, const std::vector<ReportRecord>& reports) {
  for (const auto& r : reports) os << emit_report(r) << '\n';
}

std::vector<ReportRecord> read_reports(std::istream& is) { return read_lines(is, parse_report); }

}  // namespace dnainv
