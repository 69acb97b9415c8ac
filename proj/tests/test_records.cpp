#include "dnainv/commands.hpp"
#include "dnainv/records.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace dnainv;

TEST_CASE("run-length coding") {
  const std::vector<int> d{0, 0, 1, 1, 1, 0, 1};
  const auto runs = run_length_encode(d);
  CHECK(runs == std::vector<std::pair<int, std::size_t>>{{0, 2}, {1, 3}, {0, 1}, {1, 1}});
  CHECK(run_length_decode(runs) == d);
  CHECK(run_length_encode({}).empty());
}

TEST_CASE("read records round-trip bit for bit") {
  SimulateOptions so;
  so.count = 50;
  so.seed = 99;
  so.breaks = 3;
  const auto reads = cmd_simulate(so);
  std::stringstream ss;
  write_reads(ss, reads);
  const auto text = ss.str();
  const auto back = read_reads(ss);
  REQUIRE(back.size() == reads.size());
  for (std::size_t k = 0; k < reads.size(); ++k) {
    CHECK(back[k].id == reads[k].id);
    CHECK(back[k].dx == reads[k].dx);
    CHECK(back[k].z == reads[k].z);
    CHECK(back[k].tau_true == reads[k].tau_true);
    CHECK(back[k].d_true == reads[k].d_true);
  }
  std::stringstream again;
  write_reads(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("read parser errors carry line numbers") {
  std::stringstream ss;
  ss << R"({"version":1,"id":"a","dx":0.1,"z":[0.1,0.2]})" << "\n\n" << R"({"version":1,"id":"b","dx":0.1,"z":[0.1,-0.2]})" << "\n";
  try {
    read_reads(ss);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_read(R"({"version":2,"id":"a","dx":0.1,"z":[0.1]})"), FormatError);
  CHECK_THROWS_AS(parse_read(R"({"id":"a","dx":0.1,"z":[0.1]})"), FormatError);
  CHECK_THROWS_AS(parse_read(R"({"version":1,"id":"a","dx":0.1,"z":[0.1],"tau_true":[1,2]})"), FormatError);
  CHECK_THROWS_AS(parse_read(R"({"version":1,"id":"a","dx":0.1,"z":[0.1],"d_true":[2]})"), FormatError);
  CHECK_THROWS_AS(parse_read(R"({"version":1,"id":"a","dx":0,"z":[0.1]})"), FormatError);
  CHECK_THROWS_AS(parse_read(R"({"version":1,"id":"a","dx":0.1,"z":"x"})"), FormatError);
  CHECK_THROWS_AS(parse_read("not json"), FormatError);
  CHECK_THROWS_AS(parse_read("[1,2]"), FormatError);
}

TEST_CASE("report records round-trip, including failures and missing F") {
  const PulseModel m;
  SimulateOptions so;
  so.count = 6;
  so.seed = 5;
  auto reads = cmd_simulate(so);
  SolveOptions opt;
  auto out = cmd_solve(m, reads, opt);
  out.records.push_back(failed_record(reads[0], "dna-inverse", "boom", 1.5));
  out.records[0].per_candidate[0].F.reset();
  out.records[0].per_candidate[0].error = "solver failed";
  std::stringstream ss;
  write_reports(ss, out.records);
  const auto text = ss.str();
  const auto back = read_reports(ss);
  REQUIRE(back.size() == out.records.size());
  for (std::size_t k = 0; k < back.size(); ++k) CHECK(back[k] == out.records[k]);
  std::stringstream again;
  write_reports(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("report parser rejects unknown versions and inconsistent lengths") {
  const PulseModel m;
  SimulateOptions so;
  so.count = 1;
  const auto reads = cmd_simulate(so);
  const auto rec = cmd_solve(m, reads, {}).records[0];
  auto line = emit_report(rec);
  auto bad = line;
  bad.replace(bad.find("\"version\":1"), 11, "\"version\":7");
  CHECK_THROWS_WITH_AS(parse_report(bad, 4), doctest::Contains("line 4"), FormatError);
  auto cut = rec;
  cut.tau_star.pop_back();
  CHECK_THROWS_AS(parse_report(emit_report(cut)), FormatError);
  auto ev = rec;
  ev.events.push_back({"wobble", 1, 0.0, 1.0, 0.0, 0});
  CHECK_THROWS_AS(parse_report(emit_report(ev)), FormatError);
}

TEST_CASE("recovery fields are present with ground truth only") {
  const PulseModel m;
  SimulateOptions so;
  so.count = 2;
  so.sigma = 0.0;
  auto reads = cmd_simulate(so);
  reads[1].tau_true.reset();
  reads[1].d_true.reset();
  const auto out = cmd_solve(m, reads, {});
  REQUIRE(out.records[0].recovery);
  CHECK(out.records[0].recovery->rel_error <= 1e-3);
  CHECK(out.records[0].recovery->d_mismatch == 0);
  CHECK_FALSE(out.records[1].recovery);
}

TEST_CASE("without_timing clears only timing fields") {
  ReportRecord r;
  r.wall_ms = 3.0;
  r.objective = 2.0;
  r.per_candidate.push_back({1.0, 0.1, 4.0, ""});
  const auto t = without_timing(r);
  CHECK(t.wall_ms == 0.0);
  CHECK(t.per_candidate[0].ms == 0.0);
  CHECK(t.objective == 2.0);
  CHECK(t.per_candidate[0].F == 1.0);
}
