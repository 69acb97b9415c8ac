#include "dnainv/commands.hpp"
#include "dnainv/records.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace {

using namespace dnainv;

constexpr int kExitFailures = 1;
constexpr int kExitUsage = 2;

struct ModelFlags {
  PulseModel::Params p;

  void add(CLI::App* app) {
    app->add_option("--tau0", p.tau0, "Pulse peak time (min)")->capture_default_str();
    app->add_option("--psi-max", p.psi_max, "Peak label concentration")->capture_default_str();
    app->add_option("--residual", p.residual, "Asymptotic concentration after the chase")->capture_default_str();
    app->add_option("--rise-rate", p.rise_rate, "Uptake rate (1/min)")->capture_default_str();
    app->add_option("--decay-rate", p.decay_rate, "Chase decay rate (1/min)")->capture_default_str();
  }
  PulseModel model() const {
    try {
      return PulseModel(p);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

struct SolveFlags {
  SolveOptions opt;
  std::optional<double> gamma;

  void add(CLI::App* app) {
    opt.threads = default_threads();
    app->add_option("--s-A", opt.solver.s_A, "Oscillation window width (samples)")->capture_default_str();
    app->add_option("--m-A", opt.solver.m_A, "Transition offsets per window")->capture_default_str();
    app->add_option("--lambda", opt.solver.lambda, "Second-difference penalty")->capture_default_str();
    app->add_option("--gamma", gamma, "PDPS penalty (default: 2 x --lambda)");
    app->add_option("--sigma1", opt.pdps.sigma1, "PDPS primal step")->capture_default_str();
    app->add_option("--sigma2", opt.pdps.sigma2, "PDPS dual step")->capture_default_str();
    app->add_option("--pdps-max-iter", opt.pdps.max_iter, "PDPS iteration cap")->capture_default_str();
    app->add_option("--pdps-tol", opt.pdps.stop_tol, "PDPS iterate-change threshold")->capture_default_str();
    app->add_option("--threads", opt.threads, "Worker threads (default: DNAINV_THREADS or core count)")
        ->check(CLI::PositiveNumber);
  }
  SolveOptions resolve() const {
    SolveOptions o = opt;
    o.pdps.gamma = gamma.value_or(matched_gamma(o.solver.lambda));
    if (o.solver.s_A < 2) throw UsageError("--s-A must be at least 2");
    if (o.solver.m_A < 1) throw UsageError("--m-A must be at least 1");
    if (!(o.solver.lambda > 0.0)) throw UsageError("--lambda must be > 0");
    try {
      o.pdps.validate();
    } catch (const PdpsError& e) {
      throw UsageError(e.what());
    }
    return o;
  }
};

std::unique_ptr<std::istream> open_in(const std::string& path) {
  auto f = std::make_unique<std::ifstream>(path);
  if (!*f) throw UsageError("cannot open '" + path + "' for reading");
  return f;
}

// "-" is stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path == "-") return;
    file_.open(path);
    if (!file_) throw UsageError("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<Read> load_reads(const std::string& path) {
  auto in = open_in(path);
  return read_reads(*in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replication timing inversion from pulse-chase incorporation signals"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Write synthetic reads with ground truth");
  SimulateOptions so;
  ModelFlags sim_model;
  std::string sim_out = "-", noise = "binomial", policy = "free";
  sim->add_option("--n", so.n, "Samples per read")->capture_default_str();
  sim->add_option("--count", so.count, "Number of reads")->capture_default_str();
  sim->add_option("--C", so.breaks, "Interior breakpoints per profile")->capture_default_str();
  sim->add_option("--sigma", so.sigma, "Noise level")->capture_default_str();
  sim->add_option("--noise-kind", noise, "binomial or gaussian")
      ->check(CLI::IsMember({"binomial", "gaussian"}))
      ->capture_default_str();
  sim->add_option("--seed", so.seed, "Base seed")->capture_default_str();
  sim->add_option("--dx", so.dx, "kb per sample")->capture_default_str();
  sim->add_option("--policy", policy, "free, v-shape, below-peak or zero-runs")
      ->check(CLI::IsMember({"free", "v-shape", "below-peak", "zero-runs"}))
      ->capture_default_str();
  sim->add_option("--id-prefix", so.id_prefix, "Read id prefix")->capture_default_str();
  sim->add_option("--out,-o", sim_out, "Output ReadFile ('-' for stdout)")->capture_default_str();
  sim_model.add(sim);

  // solve
  auto* solve = app.add_subcommand("solve", "Invert every read of a ReadFile into a ReportFile");
  SolveFlags sf;
  ModelFlags solve_model;
  std::string solve_in, solve_out = "-", method = "dna-inverse", dump;
  solve->add_option("--in,-i", solve_in, "Input ReadFile")->required();
  solve->add_option("--out,-o", solve_out, "Output ReportFile ('-' for stdout)")->capture_default_str();
  solve->add_option("--method", method, "dna-inverse or pdps")->capture_default_str();
  solve->add_option("--dump-preprocess", dump, "Write window and candidate summaries to this file");
  sf.add(solve);
  solve_model.add(solve);

  // bench
  auto* bench = app.add_subcommand("bench", "Time several methods on the same reads");
  SolveFlags bf;
  ModelFlags bench_model;
  std::string bench_in, bench_out = "-";
  std::vector<std::string> methods{"dna-inverse", "pdps"};
  bench->add_option("--in,-i", bench_in, "Input ReadFile")->required();
  bench->add_option("--methods", methods, "Methods to compare")->delimiter(',')->capture_default_str();
  bench->add_option("--out,-o", bench_out, "Output table ('-' for stdout)")->capture_default_str();
  bf.add(bench);
  bench_model.add(bench);

  // events
  auto* events = app.add_subcommand("events", "Export detected events of a ReportFile as a table");
  std::string ev_in, ev_out = "-";
  events->add_option("--in,-i", ev_in, "Input ReportFile")->required();
  events->add_option("--out,-o", ev_out, "Output table ('-' for stdout)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) {
      so.noise = noise == "gaussian" ? NoiseKind::Gaussian : NoiseKind::BinomialThinning;
      static const std::map<std::string, CrossingPolicy> policies{{"free", CrossingPolicy::Free},
                                                                  {"v-shape", CrossingPolicy::VShape},
                                                                  {"below-peak", CrossingPolicy::BelowPeak},
                                                                  {"zero-runs", CrossingPolicy::ZeroRuns}};
      so.policy = policies.at(policy);
      so.model = sim_model.p;
      const auto reads = cmd_simulate(so);
      Output out(sim_out);
      write_reads(out.stream(), reads);
      return 0;
    }
    if (*solve) {
      const auto model = solve_model.model();
      auto opt = sf.resolve();
      opt.method = method_from_string(method);
      const auto reads = load_reads(solve_in);
      if (!dump.empty()) {
        Output d(dump);
        for (const auto& r : reads) {
          try {
            d.stream() << preprocess_summary(model, r, opt.solver) << '\n';
          } catch (const std::exception& e) {
            std::cerr << "dump-preprocess: read '" << r.id << "': " << e.what() << '\n';
          }
        }
      }
      const auto outcome = cmd_solve(model, reads, opt);
      Output out(solve_out);
      write_reports(out.stream(), outcome.records);
      for (const auto& r : outcome.records)
        if (!r.ok) std::cerr << "read '" << r.id << "' failed: " << r.error << '\n';
      return outcome.failures ? kExitFailures : 0;
    }
    if (*bench) {
      const auto model = bench_model.model();
      const auto opt = bf.resolve();
      std::vector<Method> ms;
      for (const auto& m : methods) ms.push_back(method_from_string(m));
      const auto reads = load_reads(bench_in);
      const auto result = cmd_bench(model, reads, ms, opt);
      Output out(bench_out);
      out.stream() << format_bench(result);
      for (const auto& row : result.rows)
        if (row.failures) return kExitFailures;
      return 0;
    }
    if (*events) {
      auto in = open_in(ev_in);
      const auto reports = read_reports(*in);
      Output out(ev_out);
      out.stream() << cmd_events(reports);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailures;
  }
  return 0;
}
