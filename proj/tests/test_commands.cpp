#include "dnainv/commands.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sstream>

using namespace dnainv;

namespace {

std::string emit_all(const std::vector<Read>& reads) {
  std::stringstream ss;
  write_reads(ss, reads);
  return ss.str();
}

std::string emit_all(const std::vector<ReportRecord>& recs) {
  std::stringstream ss;
  std::vector<ReportRecord> stripped;
  for (const auto& r : recs) stripped.push_back(without_timing(r));
  write_reports(ss, stripped);
  return ss.str();
}

}  // namespace

TEST_CASE("simulate is deterministic per seed") {
  SimulateOptions so;
  so.count = 3;
  so.seed = 7;
  CHECK(emit_all(cmd_simulate(so)) == emit_all(cmd_simulate(so)));
  auto other = so;
  other.seed = 8;
  CHECK(emit_all(cmd_simulate(so)) != emit_all(cmd_simulate(other)));
}

TEST_CASE("simulate with C = 0 and sigma = 0") {
  const PulseModel m;
  SimulateOptions so;
  so.count = 5;
  so.breaks = 0;
  so.sigma = 0.0;
  for (const auto& r : cmd_simulate(so)) {
    CHECK(breakpoints(*r.tau_true, default_break_tol(*r.tau_true)).count() == 0);
    CHECK(r.z == forward(m, *r.tau_true));
  }
}

TEST_CASE("simulate rejects bad options") {
  SimulateOptions so;
  so.n = 30;
  so.breaks = 3;
  CHECK_THROWS_AS(cmd_simulate(so), UsageError);
  so = {};
  so.sigma = -1;
  CHECK_THROWS_AS(cmd_simulate(so), UsageError);
  so = {};
  so.model.residual = 2.0;
  CHECK_THROWS_AS(cmd_simulate(so), UsageError);
  so = {};
  so.policy = CrossingPolicy::VShape;
  so.breaks = 0;
  CHECK_THROWS_AS(cmd_simulate(so), UsageError);
}

TEST_CASE("method names") {
  CHECK(method_from_string("dna-inverse") == Method::DnaInverse);
  CHECK(method_from_string("pdps") == Method::Pdps);
  CHECK(method_from_string("pdps-adapted") == Method::Pdps);
  CHECK_THROWS_AS(method_from_string("newton"), UsageError);
}

TEST_CASE("thread count from the environment") {
  setenv("DNAINV_THREADS", "3", 1);
  CHECK(default_threads() == 3);
  setenv("DNAINV_THREADS", "zero", 1);
  CHECK(default_threads() >= 1);
  unsetenv("DNAINV_THREADS");
  CHECK(default_threads() >= 1);
}

TEST_CASE("solve output does not depend on the thread count") {
  const PulseModel m;
  SimulateOptions so;
  so.count = 8;
  so.seed = 31;
  const auto reads = cmd_simulate(so);
  SolveOptions one, four;
  four.threads = 4;
  CHECK(emit_all(cmd_solve(m, reads, one).records) == emit_all(cmd_solve(m, reads, four).records));
  one.method = four.method = Method::Pdps;
  one.pdps.gamma = four.pdps.gamma = matched_gamma(one.solver.lambda);
  std::vector<Read> two(reads.begin(), reads.begin() + 2);
  CHECK(emit_all(cmd_solve(m, two, one).records) == emit_all(cmd_solve(m, two, four).records));
}

TEST_CASE("per-read failures are recorded without stopping the batch") {
  const PulseModel m;
  SimulateOptions so;
  so.count = 3;
  auto reads = cmd_simulate(so);
  reads[1].z.resize(4);
  const auto out = cmd_solve(m, reads, {});
  CHECK(out.failures == 1);
  CHECK(out.records[0].ok);
  CHECK_FALSE(out.records[1].ok);
  CHECK(out.records[1].error.find("6 samples") != std::string::npos);
  CHECK(out.records[2].ok);
}

TEST_CASE("preprocess summary") {
  const PulseModel m;
  SimulateOptions so;
  so.count = 1;
  const auto r = cmd_simulate(so)[0];
  const auto line = preprocess_summary(m, r, {});
  CHECK(line.find("\"windows\"") != std::string::npos);
  CHECK(line.find("\"candidates\"") != std::string::npos);
}

TEST_CASE("bench tables") {
  const PulseModel m;
  SimulateOptions so;
  so.count = 3;
  so.seed = 12;
  const auto reads = cmd_simulate(so);
  SolveOptions base;
  base.pdps.gamma = matched_gamma(base.solver.lambda);
  const auto two = cmd_bench(m, reads, {Method::DnaInverse, Method::Pdps}, base);
  REQUIRE(two.rows.size() == 2);
  CHECK(two.rows[0].method == "dna-inverse");
  CHECK(two.rows[1].method == "pdps-adapted");
  CHECK(two.per_read.size() == 3);
  const auto text = format_bench(two);
  CHECK(text.rfind("method\treads\tfailures\tmean_ms\tmedian_ms\tobjective_win_rate\n", 0) == 0);
  CHECK(text.find("median_ms") != std::string::npos);

  const auto one = cmd_bench(m, reads, {Method::DnaInverse}, base);
  CHECK(one.rows.size() == 1);
  CHECK(one.rows[0].win_rate == 1.0);
  CHECK(one.d_agree == 3);
  CHECK_THROWS_AS(cmd_bench(m, reads, {}, base), UsageError);
}

TEST_CASE("events table") {
  CHECK(cmd_events({}) == "id\tkind\tindex\tposition_kb\ttime_min\tspeed_kb_per_min\tdirection\n");
  CHECK(parse_events_table(cmd_events({})).empty());

  ReportRecord r;
  r.id = "x";
  r.events.push_back({"origin", 40, 3.9, 1.25, 0.0, 0});
  const auto table = cmd_events({r});
  const auto rows = parse_events_table(table);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].first == "x");
  CHECK(rows[0].second == r.events[0]);

  const PulseModel m;
  SimulateOptions so;
  so.count = 4;
  so.breaks = 3;
  const auto recs = cmd_solve(m, cmd_simulate(so), {}).records;
  const auto parsed = parse_events_table(cmd_events(recs));
  std::size_t k = 0;
  for (const auto& rec : recs)
    for (const auto& e : rec.events) {
      REQUIRE(k < parsed.size());
      CHECK(parsed[k].first == rec.id);
      CHECK(parsed[k].second == e);
      ++k;
    }
  CHECK(k == parsed.size());
  CHECK_THROWS_AS(parse_events_table("bad header\n"), FormatError);
  CHECK_THROWS_AS(parse_events_table(cmd_events({}) + "x\torigin\n"), FormatError);
}
