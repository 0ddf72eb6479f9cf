// rinst: command-line front end for restoration runs, benchmark suites,
// ablations and diagnostics.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rinst/bench.hpp"
#include "rinst/config.hpp"
#include "rinst/diagnostics.hpp"
#include "rinst/errors.hpp"
#include "rinst/svg.hpp"

namespace fs = std::filesystem;
using namespace rinst;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kNumerical = 2, kDiagnostic = 3 };

struct Common {
  std::string config;
  bool use_default = false;
  std::string out;
  std::size_t threads = 0;
  bool verbose = false;
};

BenchConfig load_bench(const Common& c) {
  BenchConfig cfg;
  if (!c.config.empty()) {
    cfg = bench_config_from(Config::load(c.config));
  } else if (c.use_default) {
    cfg = bench_config_from(Config::parse(default_bench_config_text(), "<default>"));
  } else {
    cfg = bench_config_from(Config{});
  }
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.threads) cfg.threads = c.threads;
  if (c.verbose) cfg.verbose = true;
  if (cfg.out_dir.empty()) throw InvalidArgument("no output directory (set bench.out or --out)");
  return cfg;
}

void print_aggregates(const BenchReport& report) {
  std::printf("%-28s %-8s %-22s %4s %10s %10s %10s\n", "dataset", "scenario", "method", "n",
              "mean_snr", "std_snr", "mean_rmse");
  for (const auto& a : report.aggregates) {
    std::printf("%-28s %-8s %-22s %4zu %10.3f %10.3f %10.5f\n", a.dataset.c_str(),
                a.scenario.c_str(), a.method.c_str(), a.n, a.mean_snr, a.std_snr, a.mean_rmse);
  }
}

int finish_suite(const BenchReport& report, const BenchConfig& cfg) {
  emit_outputs(report, cfg, cfg.out_dir);
  print_aggregates(report);
  std::size_t failed = 0;
  bool numerical = false;
  for (const auto& r : report.rows) {
    if (!r.ok) {
      ++failed;
      numerical = numerical || r.numerical_failure;
      std::cerr << "failed: " << r.key << ": " << r.error << "\n";
    }
  }
  std::cout << report.rows.size() << " runs, " << failed << " failed; outputs in "
            << cfg.out_dir << "\n";
  return failed > 0 && numerical ? kNumerical : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Untrained deep-prior restoration for time series"};
  app.require_subcommand(1);

  // Single runs: denoise | impute | cs
  struct RunArgs {
    std::string input;
    std::string scenario;
    std::string method;
    std::uint64_t seed = 0;
    std::string config;
    std::string out;
    std::vector<std::size_t> columns;
    std::string delimiter;
    bool header = false;
  };
  RunArgs run;
  std::string run_task;
  for (const char* task : {"denoise", "impute", "cs"}) {
    auto* sub = app.add_subcommand(task, std::string("Run one ") + task + " restoration");
    sub->add_option("--input", run.input, "CSV file, or synth:<kind>:<n>")->required();
    sub->add_option("--scenario", run.scenario, "Scenario id (d1 d2 d3 i1 i2 cs20 cs50)")
        ->required();
    sub->add_option("--method", run.method, "Method name")->required();
    sub->add_option("--seed", run.seed, "Corruption and solver seed");
    sub->add_option("--config", run.config, "Config file (solver.*, net.*, data.* keys)");
    sub->add_option("--out", run.out, "Output directory")->required();
    sub->add_option("--columns", run.columns, "Zero-based CSV columns")->delimiter(',');
    sub->add_option("--delimiter", run.delimiter, "CSV delimiter (one character or 'tab')");
    sub->add_flag("--header", run.header, "Skip the first CSV row");
    sub->callback([&run_task, task] { run_task = task; });
  }

  Common bench_args;
  auto* bench = app.add_subcommand("bench", "Run a scenario x method x seed grid");
  auto* bench_cfg = bench->add_option("--config", bench_args.config, "Bench config file");
  bench->add_flag("--default", bench_args.use_default, "Use the embedded default config")
      ->excludes(bench_cfg);
  bench->add_option("--out", bench_args.out, "Override bench.out");
  bench->add_option("--threads", bench_args.threads, "Worker threads (RINST_THREADS caps)");
  bench->add_flag("-v,--verbose", bench_args.verbose, "Log cells as they finish");

  Common ablate_args;
  auto* abl = app.add_subcommand("ablate", "Switch ablations and alpha/lambda sweeps");
  auto* abl_cfg = abl->add_option("--config", ablate_args.config, "Bench config file");
  abl->add_flag("--default", ablate_args.use_default, "Use the embedded default config")
      ->excludes(abl_cfg);
  abl->add_option("--out", ablate_args.out, "Override bench.out");
  abl->add_option("--threads", ablate_args.threads, "Worker threads (RINST_THREADS caps)");
  abl->add_flag("-v,--verbose", ablate_args.verbose, "Log cells as they finish");

  std::string diag_kind;
  std::string diag_out;
  std::string diag_config;
  std::vector<std::uint64_t> diag_seeds{0, 1, 2, 3, 4};
  std::optional<std::size_t> diag_iterations;
  std::size_t diag_length = 1024;
  std::string diag_scenario = "d3";
  std::string diag_dataset = "seasonal_trend";
  std::size_t diag_threads = 0;
  auto* diag = app.add_subcommand("diag", "Diagnostics: gradcheck | biascheck | permute");
  diag->add_option("kind", diag_kind, "gradcheck | biascheck | permute")
      ->required()
      ->check(CLI::IsMember({"gradcheck", "biascheck", "permute"}));
  diag->add_option("--out", diag_out, "Directory for traces and tables");
  diag->add_option("--config", diag_config, "Config file with solver.* / net.* keys");
  diag->add_option("--seeds", diag_seeds, "Seeds (permute)")->delimiter(',');
  diag->add_option("--iterations", diag_iterations, "Iterations (biascheck, permute)");
  diag->add_option("--length", diag_length, "Series length");
  diag->add_option("--scenario", diag_scenario, "Scenario id (permute)");
  diag->add_option("--dataset", diag_dataset, "Synthetic kind (permute)");
  diag->add_option("--threads", diag_threads, "Worker threads (RINST_THREADS caps)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (!run_task.empty()) {
      Config c = run.config.empty() ? Config{} : Config::load(run.config);
      BenchConfig cfg = bench_config_from(c);
      const ScenarioSpec spec = scenario_from_id(run.scenario);
      if (task_name(spec.task) != run_task) {
        std::cerr << "scenario '" << run.scenario << "' is a " << task_name(spec.task)
                  << " scenario, not " << run_task << "\n";
        return kUsage;
      }
      if (!method_applies(parse_method(run.method, cfg.solver).family, spec.task)) {
        std::cerr << "method '" << run.method << "' does not apply to " << run_task << "\n";
        return kUsage;
      }
      cfg.datasets = {run.input.rfind("synth:", 0) == 0 ? run.input : "csv:" + run.input};
      cfg.scenarios = {run.scenario};
      cfg.methods = {run.method};
      cfg.seeds = {run.seed};
      cfg.out_dir = run.out;
      if (!run.columns.empty()) cfg.data.csv.columns = run.columns;
      if (!run.delimiter.empty()) {
        cfg.data.csv.delimiter = run.delimiter == "tab" ? '\t' : run.delimiter[0];
      }
      if (run.header) cfg.data.csv.has_header = true;
      const BenchReport report = run_suite(cfg);
      return finish_suite(report, cfg);
    }

    if (bench->parsed()) {
      const BenchConfig cfg = load_bench(bench_args);
      return finish_suite(run_suite(cfg), cfg);
    }

    if (abl->parsed()) {
      BenchConfig cfg = load_bench(ablate_args);
      const BenchReport report = ablate(cfg);
      cfg.methods = ablation_methods(cfg);
      return finish_suite(report, cfg);
    }

    if (diag->parsed()) {
      const Config c = diag_config.empty() ? Config{} : Config::load(diag_config);
      if (!diag_out.empty()) fs::create_directories(diag_out);

      if (diag_kind == "gradcheck") {
        bool ok = true;
        for (const auto& r : gradcheck_suite()) {
          std::printf("%-48s %6zu entries  max rel err %.3e  %s\n", r.name.c_str(), r.checked,
                      r.max_rel_error, r.passed ? "PASS" : "FAIL");
          ok = ok && r.passed;
        }
        return ok ? kOk : kDiagnostic;
      }

      if (diag_kind == "biascheck") {
        BiasCheckConfig bc;
        bc.length = diag_length;
        if (diag_iterations) bc.iterations = *diag_iterations;
        bc.net = net_config_from(c);
        const auto r = biascheck(bc);
        std::printf("final loss: structured %.6e  noise %.6e  %s\n", r.structured_trace.back(),
                    r.noise_trace.back(), r.passed ? "PASS" : "FAIL");
        if (!diag_out.empty()) {
          std::string csv = "iteration,structured,noise\n";
          for (std::size_t i = 0; i < r.structured_trace.size(); ++i) {
            csv += std::to_string(i + 1) + "," + format_double(r.structured_trace[i]) + "," +
                   format_double(r.noise_trace[i]) + "\n";
          }
          write_text_file((fs::path(diag_out) / "biascheck.csv").string(), csv);
          ChartOptions opt;
          opt.title = "Fitting a structured signal vs noise";
          opt.x_label = "iteration";
          opt.y_label = "loss";
          opt.log_y = true;
          write_text_file((fs::path(diag_out) / "biascheck.svg").string(),
                          line_chart_svg({{"structured", r.structured_trace, "", false},
                                          {"noise", r.noise_trace, "", false}},
                                         opt));
        }
        return r.passed ? kOk : kDiagnostic;
      }

      PermuteConfig pc;
      pc.kind = parse_synth_kind(diag_dataset);
      pc.length = diag_length;
      pc.scenario = diag_scenario;
      pc.seeds = diag_seeds;
      pc.solver = solver_config_from(c);
      if (diag_iterations) pc.solver.iterations = *diag_iterations;
      pc.threads = diag_threads;
      const auto r = permute_check(pc);
      std::string csv = "seed,rmse_original,rmse_permuted\n";
      for (std::size_t i = 0; i < r.seeds.size(); ++i) {
        std::printf("seed %llu  rmse original %.5f  permuted %.5f\n",
                    static_cast<unsigned long long>(r.seeds[i]), r.rmse_original[i],
                    r.rmse_permuted[i]);
        csv += std::to_string(r.seeds[i]) + "," + format_double(r.rmse_original[i]) + "," +
               format_double(r.rmse_permuted[i]) + "\n";
      }
      std::printf("%s\n", r.passed ? "PASS" : "FAIL");
      if (!diag_out.empty()) write_text_file((fs::path(diag_out) / "permute.csv").string(), csv);
      return r.passed ? kOk : kDiagnostic;
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
