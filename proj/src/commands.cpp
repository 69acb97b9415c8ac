#include "dnainv/commands.hpp"

#include "dnainv/preprocess.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace dnainv {
namespace {

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view s, std::size_t line_no, const char* what) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError(line_no, std::string("bad ") + what + " '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

constexpr const char* kEventsHeader = "id\tkind\tindex\tposition_kb\ttime_min\tspeed_kb_per_min\tdirection";

}  // namespace

const char* to_string(Method m) noexcept { return m == Method::DnaInverse ? "dna-inverse" : "pdps"; }

Method method_from_string(std::string_view s) {
  if (s == "dna-inverse") return Method::DnaInverse;
  if (s == "pdps" || s == "pdps-adapted") return Method::Pdps;
  throw UsageError("unknown method '" + std::string(s) + "' (expected dna-inverse or pdps)");
}

std::size_t default_threads() {
  if (const char* env = std::getenv("DNAINV_THREADS")) {
    std::size_t v = 0;
    const std::string_view s(env);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size() && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void SimulateOptions::validate() const {
  if (n < 6) throw UsageError("simulate: --n must be at least 6");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw UsageError("simulate: --sigma must be >= 0");
  if (!(dx > 0.0)) throw UsageError("simulate: --dx must be > 0");
  if (n - 1 < (breaks + 1) * kDefaultBreakSpacing)
    throw UsageError("simulate: --n " + std::to_string(n) + " is too short for --C " + std::to_string(breaks) +
                     " (needs n >= " + std::to_string((breaks + 1) * kDefaultBreakSpacing + 1) + ")");
  if (policy == CrossingPolicy::VShape && breaks < 1) throw UsageError("simulate: v-shape profiles need --C >= 1");
  try {
    PulseModel m(model);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("simulate: ") + e.what());
  }
}

std::vector<Read> cmd_simulate(const SimulateOptions& opt) {
  opt.validate();
  const PulseModel model(opt.model);
  SimulationSpec spec;
  spec.profile.n = opt.n;
  spec.profile.breaks = opt.breaks;
  spec.profile.policy = opt.policy;
  spec.sigma = opt.sigma;
  spec.noise = opt.noise;
  spec.dx = opt.dx;
  std::vector<Read> reads;
  reads.reserve(opt.count);
  for (std::size_t k = 0; k < opt.count; ++k)
    reads.push_back(simulate_read(model, spec, derive_seed(opt.seed, k), opt.id_prefix + std::to_string(k)));
  return reads;
}

SolveOutcome cmd_solve(const PulseModel& model, const std::vector<Read>& reads, const SolveOptions& opt) {
  opt.pdps.validate();
  PdpsParams pp{opt.solver, opt.pdps};
  const std::string solver_name = opt.method == Method::DnaInverse ? "dna-inverse" : "pdps-adapted";

  SolveOutcome out;
  out.records.resize(reads.size());
  parallel_for(reads.size(), opt.threads, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto rep = opt.method == Method::DnaInverse ? dna_inverse(model, reads[i], opt.solver)
                                                        : adapted_pdps(model, reads[i], pp);
      out.records[i] = make_record(reads[i], rep);
    } catch (const std::exception& e) {
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      out.records[i] = failed_record(reads[i], solver_name, e.what(), ms);
    }
  });
  out.failures = static_cast<std::size_t>(
      std::count_if(out.records.begin(), out.records.end(), [](const ReportRecord& r) { return !r.ok; }));
  return out;
}

std::string preprocess_summary(const PulseModel& model, const Read& read, const SolverParams& params) {
  nlohmann::ordered_json j;
  j["version"] = kRecordVersion;
  j["id"] = read.id;
  const auto bd = branch_data(model, read.z, params.branch);
  const auto zero = zero_set(read.z, params.zero_tol);
  const auto cs = candidate_set(bd, zero, params.s_A, params.m_A);
  auto windows = nlohmann::ordered_json::array();
  for (const auto& w : cs.windows) windows.push_back({{"begin", w.begin + 1}, {"end", w.end + 1}, {"center", w.center + 1}});
  j["windows"] = std::move(windows);
  j["zero_set"] = zero.size();
  j["candidates"] = cs.candidates.size();
  j["bound"] = cs.bound();
  return j.dump();
}

BenchResult cmd_bench(const PulseModel& model, const std::vector<Read>& reads, const std::vector<Method>& methods,
                      const SolveOptions& base) {
  if (methods.empty()) throw UsageError("bench: at least one method is required");
  std::vector<SolveOutcome> runs;
  for (Method m : methods) {
    SolveOptions o = base;
    o.method = m;
    runs.push_back(cmd_solve(model, reads, o));
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  BenchResult b;
  std::vector<std::size_t> wins(methods.size(), 0);
  for (std::size_t i = 0; i < reads.size(); ++i) {
    BenchReadRow row;
    row.id = reads[i].id;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto& r = runs[m].records[i];
      row.ms.push_back(r.ok ? r.wall_ms : nan);
      row.objective.push_back(r.ok ? r.objective_refined : nan);
      if (r.ok) best = std::min(best, r.objective_refined);
      if (!r.ok || r.d_star != runs[0].records[i].d_star || !runs[0].records[i].ok) row.d_agree = false;
    }
    for (std::size_t m = 0; m < methods.size(); ++m)
      if (row.objective[m] == best) ++wins[m];
    b.d_agree += row.d_agree;
    b.per_read.push_back(std::move(row));
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    BenchRow row;
    row.method = methods[m] == Method::DnaInverse ? "dna-inverse" : "pdps-adapted";
    row.reads = reads.size();
    row.failures = runs[m].failures;
    std::vector<double> ms;
    for (const auto& r : runs[m].records)
      if (r.ok) ms.push_back(r.wall_ms);
    double sum = 0.0;
    for (double x : ms) sum += x;
    row.mean_ms = ms.empty() ? nan : sum / static_cast<double>(ms.size());
    row.median_ms = median(ms);
    row.win_rate = reads.empty() ? nan : static_cast<double>(wins[m]) / static_cast<double>(reads.size());
    b.rows.push_back(std::move(row));
  }
  return b;
}

std::string format_bench(const BenchResult& b) {
  std::ostringstream os;
  os << "method\treads\tfailures\tmean_ms\tmedian_ms\tobjective_win_rate\n";
  for (const auto& r : b.rows)
    os << r.method << '\t' << r.reads << '\t' << r.failures << '\t' << fmt(r.mean_ms) << '\t' << fmt(r.median_ms)
       << '\t' << fmt(r.win_rate) << '\n';
  os << "\nid";
  for (const auto& r : b.rows) os << "\tms_" << r.method;
  for (const auto& r : b.rows) os << "\tobjective_" << r.method;
  os << "\td_agree\n";
  for (const auto& row : b.per_read) {
    os << row.id;
    for (double x : row.ms) os << '\t' << fmt(x);
    for (double x : row.objective) os << '\t' << fmt(x);
    os << '\t' << (row.d_agree ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string cmd_events(const std::vector<ReportRecord>& reports) {
  std::ostringstream os;
  os << kEventsHeader << '\n';
  for (const auto& r : reports)
    for (const auto& e : r.events)
      os << r.id << '\t' << e.kind << '\t' << e.index << '\t' << fmt(e.position) << '\t' << fmt(e.time) << '\t'
         << fmt(e.speed) << '\t' << e.direction << '\n';
  return os.str();
}

std::vector<std::pair<std::string, EventRecord>> parse_events_table(std::string_view table) {
  std::vector<std::pair<std::string, EventRecord>> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < table.size()) {
    auto eol = table.find('\n', pos);
    if (eol == std::string_view::npos) eol = table.size();
    const auto line = table.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kEventsHeader) throw FormatError(1, "unexpected events header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 7) throw FormatError(line_no, "expected 7 columns, got " + std::to_string(f.size()));
    EventRecord e;
    e.kind = std::string(f[1]);
    e.index = parse_number<std::size_t>(f[2], line_no, "index");
    e.position = parse_number<double>(f[3], line_no, "position");
    e.time = parse_number<double>(f[4], line_no, "time");
    e.speed = parse_number<double>(f[5], line_no, "speed");
    e.direction = parse_number<int>(f[6], line_no, "direction");
    out.emplace_back(std::string(f[0]), std::move(e));
  }
  if (line_no == 0) throw FormatError(0, "empty events table");
  return out;
}

}  // namespace dnainv
