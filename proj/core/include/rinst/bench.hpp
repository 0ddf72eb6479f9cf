#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rinst/config.hpp"
#include "rinst/corruption.hpp"
#include "rinst/data_io.hpp"
#include "rinst/solver.hpp"

namespace rinst {

/// `synth:<kind>:<n>[:<channels>]` or `csv:<path>`.
struct DatasetSpec {
  std::string id;
  bool synthetic = true;
  SynthKind kind = SynthKind::SeasonalTrend;
  std::size_t length = 1024;
  std::size_t channels = 1;
  std::string path;
};

DatasetSpec parse_dataset(const std::string& id);

enum class MethodFamily {
  Noisy,
  Gaussian,
  Median,
  Wiener,
  Wavelet,
  Tv,
  Zero,
  Mean,
  MedianImp,
  Spline,
  Dip,
  Rinst,
};

/// A method name resolved against a base solver configuration. Solver
/// variants are written `rinst:<mod>[+<mod>...]` with mods `no-guide`,
/// `no-perturb`, `no-convex`, `ls`, `alpha=<a>`, `lambda=<l>`.
struct MethodSpec {
  std::string name;
  MethodFamily family = MethodFamily::Rinst;
  SolverConfig solver;  // meaningful for Dip and Rinst
};

MethodSpec parse_method(const std::string& name, const SolverConfig& base);
bool method_applies(MethodFamily family, Task task);
bool is_iterative(MethodFamily family);

/// Hyperparameters of the classical baselines.
struct BaselineParams {
  double gaussian_sigma = 2.0;
  std::size_t median_window = 7;
  std::size_t wiener_window = 9;
  std::size_t wavelet_levels = 4;
  double tv_lambda = 0.1;
  std::size_t imp_window = 15;
};

struct BaselineGrids {
  std::vector<double> gaussian_sigma{0.5, 1, 2, 3, 5, 8};
  std::vector<std::size_t> median_window{3, 5, 7, 11, 15, 21};
  std::vector<std::size_t> wiener_window{3, 5, 9, 15, 25};
  std::vector<std::size_t> wavelet_levels{2, 3, 4, 5};
  std::vector<double> tv_lambda{0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  std::vector<std::size_t> imp_window{5, 15, 31};
};

struct DataOptions {
  CsvOptions csv;
  std::size_t start = 0;
  std::size_t length = 0;  // 0 = to the end
  std::uint64_t synth_seed = 20240;
};

struct BenchConfig {
  std::vector<std::string> datasets{"synth:seasonal_trend:1024"};
  std::vector<std::string> scenarios{"d3"};
  std::vector<std::string> methods{"gaussian", "median", "wiener", "wavelet", "tv", "dip",
                                   "rinst"};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  SolverConfig solver;
  BaselineParams baseline;
  BaselineGrids grids;
  bool tune_baselines = true;
  DataOptions data;
  std::string out_dir;  // empty: nothing persisted
  std::size_t threads = 0;
  bool resume = true;
  bool plots = true;
  bool verbose = false;
  // ablate() only
  std::vector<double> ablate_alphas{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> ablate_lambdas{1e-4, 1e-3, 1e-2, 1e-1, 1.0};

  void validate() const;
};

/// Keys: bench.* data.* grid.* baseline.* ablate.* plus solver.* and net.*.
/// Unknown keys are rejected.
BenchConfig bench_config_from(const Config& cfg);
Config bench_config_to(const BenchConfig& cfg);
/// Embedded configuration that reruns the desk-scale comparison suite.
std::string default_bench_config_text();

struct BenchRow {
  std::string dataset;
  std::string scenario;
  std::string method;
  std::uint64_t seed = 0;
  double rmse = 0.0;
  double mae = 0.0;
  double snr_db = 0.0;
  double wall_time_s = 0.0;
  bool ok = true;
  bool numerical_failure = false;  // failed with NumericalError
  std::string error;
  std::string key;
  bool resumed = false;
};

struct Aggregate {
  std::string dataset;
  std::string scenario;
  std::string method;
  std::size_t n = 0;       // successful rows
  std::size_t failed = 0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  double mean_mae = 0.0;
  double std_mae = 0.0;
  double mean_snr = 0.0;
  double std_snr = 0.0;  // sample std (n - 1); 0 for a single row
  double mean_wall_time_s = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;  // cell order: dataset, scenario, method, seed
  std::vector<Aggregate> aggregates;
  /// Baseline parameters chosen per `dataset|scenario|method`.
  std::map<std::string, BaselineParams> tuned;
};

/// Clean series for a dataset, normalized to [0, 1].
Series load_dataset(const DatasetSpec& ds, const DataOptions& opt);

/// Run one method on one corrupted observation. `trace` receives the loss
/// trace of iterative methods.
TensorBuf run_method(const MethodSpec& method, const Corrupted& c, const BaselineParams& params,
                     std::uint64_t solver_seed, std::vector<double>* trace = nullptr);

/// Grid-search baseline parameters on a held-out synthetic signal of the
/// same shape, corrupted under `scenario` with a fixed seed.
BaselineParams tune_baseline(MethodFamily family, const DatasetSpec& ds,
                             const ScenarioSpec& scenario, const BenchConfig& cfg);

/// Seeds used for a cell: the corruption draw and the solver stream are
/// shared by every method on the same (dataset, scenario, seed).
std::uint64_t corruption_seed(const std::string& dataset, const std::string& scenario,
                              std::uint64_t seed);
std::uint64_t solver_seed(const std::string& dataset, const std::string& scenario,
                          std::uint64_t seed);

/// Executes every applicable (dataset, scenario, method, seed) cell. Failed
/// cells are reported as rows with ok = false. With an output directory,
/// manifests and per-run files are written as cells finish and completed
/// cells are reused on rerun.
BenchReport run_suite(const BenchConfig& cfg);

/// rinst with each switch disabled, the loss swapped, and the alpha and
/// lambda sweeps; other settings from `cfg`.
std::vector<std::string> ablation_methods(const BenchConfig& cfg);
BenchReport ablate(const BenchConfig& cfg);

std::vector<Aggregate> aggregate(const std::vector<BenchRow>& rows);

/// report.csv, aggregate.csv, failures.csv (when needed), config.txt and
/// the SVG figures under plots/.
void emit_outputs(const BenchReport& report, const BenchConfig& cfg, const std::string& dir);

std::string report_csv(const std::vector<BenchRow>& rows);
std::string aggregate_csv(const std::vector<Aggregate>& aggs);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);
/// File-system safe rendering of a cell key.
std::string sanitize(const std::string& s);

}  // namespace rinst
