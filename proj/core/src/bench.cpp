#include "rinst/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "rinst/baselines.hpp"
#include "rinst/errors.hpp"
#include "rinst/metrics.hpp"
#include "rinst/parallel.hpp"
#include "rinst/svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace rinst {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kTuneSeedOffset = 7919;

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, delim)) out.push_back(item);
  return out;
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw InvalidArgument(what + ": bad integer '" + s + "'");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw InvalidArgument(what + ": bad number '" + s + "'");
  return v;
}

double parse_stored(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

template <class Fn>
std::vector<double> per_channel(const TensorBuf& y, Fn&& fn) {
  std::vector<double> out;
  out.reserve(y.size());
  for (std::size_t c = 0; c < y.channels(); ++c) {
    const auto r = fn(y.row(c));
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

std::string delimiter_text(char d) { return d == '\t' ? "tab" : std::string(1, d); }

char parse_delimiter(const std::string& s) {
  if (s == "tab" || s == "\\t") return '\t';
  if (s == "comma") return ',';
  if (s == "semicolon") return ';';
  if (s.size() == 1) return s[0];
  throw InvalidArgument("data.delimiter: expected one character or tab, got '" + s + "'");
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += v[i];
    } else if constexpr (std::is_floating_point_v<T>) {
      out += format_double(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

json baseline_json(MethodFamily family, const BaselineParams& p) {
  switch (family) {
    case MethodFamily::Gaussian: return {{"gaussian_sigma", format_double(p.gaussian_sigma)}};
    case MethodFamily::Median: return {{"median_window", p.median_window}};
    case MethodFamily::Wiener: return {{"wiener_window", p.wiener_window}};
    case MethodFamily::Wavelet: return {{"wavelet_levels", p.wavelet_levels}};
    case MethodFamily::Tv: return {{"tv_lambda", format_double(p.tv_lambda)}};
    case MethodFamily::Mean:
    case MethodFamily::MedianImp: return {{"imp_window", p.imp_window}};
    default: return json::object();
  }
}

json operator_json(const ForwardOperator& op) {
  json j;
  j["tag"] = operator_tag(op);
  j["n"] = signal_length(op);
  j["m"] = measurement_length(op);
  if (const auto* m = std::get_if<MaskOp>(&op)) {
    j["missing_rate"] = format_double(m->missing_rate);
    if (m->seed) j["seed"] = *m->seed;
  } else if (const auto* d = std::get_if<DenseOp>(&op)) {
    if (d->seed) j["seed"] = *d->seed;
  }
  return j;
}

json scenario_json(const ScenarioSpec& s) {
  return {{"id", s.id},
          {"task", task_name(s.task)},
          {"gaussian_sigma", format_double(s.gaussian_sigma)},
          {"clip", s.clip},
          {"outlier_fraction", format_double(s.outlier_fraction)},
          {"missing_rate", format_double(s.missing_rate)},
          {"compression_ratio", format_double(s.compression_ratio)},
          {"seed", s.seed}};
}

void write_matrix_csv(const std::string& path, const TensorBuf& x) {
  std::string out;
  for (std::size_t t = 0; t < x.length(); ++t) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      if (c) out += ",";
      out += format_double(x(c, t));
    }
    out += "\n";
  }
  write_text_file(path, out);
}

TensorBuf read_matrix_csv(const std::string& path, std::size_t channels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::vector<double>> cols(channels);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != channels) throw IoError(path + ": unexpected column count");
    for (std::size_t c = 0; c < channels; ++c) cols[c].push_back(parse_stored(cells[c]));
  }
  TensorBuf out(channels, cols.front().size());
  for (std::size_t c = 0; c < channels; ++c) {
    std::copy(cols[c].begin(), cols[c].end(), out.row(c).begin());
  }
  return out;
}

std::vector<double> read_trace_csv(const std::string& path) {
  std::vector<double> out;
  std::ifstream in(path);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() == 2) out.push_back(parse_stored(cells[1]));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

void log_line(bool verbose, const std::string& msg) {
  if (!verbose) return;
  std::lock_guard lock(log_mutex());
  std::cerr << msg << "\n";
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
                      c == '_';
    if (!keep) c = '_';
  }
  return out;
}

DatasetSpec parse_dataset(const std::string& id) {
  DatasetSpec ds;
  ds.id = id;
  if (id.rfind("csv:", 0) == 0) {
    ds.synthetic = false;
    ds.path = id.substr(4);
    if (ds.path.empty()) throw InvalidArgument("dataset '" + id + "': empty path");
    return ds;
  }
  if (id.rfind("synth:", 0) == 0) {
    const auto parts = split(id, ':');
    if (parts.size() < 3 || parts.size() > 4) {
      throw InvalidArgument("dataset '" + id + "': expected synth:<kind>:<n>[:<channels>]");
    }
    ds.kind = parse_synth_kind(parts[1]);
    ds.length = parse_size(parts[2], "dataset '" + id + "'");
    if (parts.size() == 4) {
      ds.channels = parse_size(parts[3], "dataset '" + id + "'");
      if (ds.kind != SynthKind::Multichannel) {
        throw InvalidArgument("dataset '" + id + "': channel count only for multichannel");
      }
    } else if (ds.kind == SynthKind::Multichannel) {
      ds.channels = SynthParams{}.channels;
    }
    if (ds.length < 64) throw InvalidArgument("dataset '" + id + "': length must be >= 64");
    return ds;
  }
  // Bare paths are CSV files.
  ds.synthetic = false;
  ds.path = id;
  return ds;
}

MethodSpec parse_method(const std::string& name, const SolverConfig& base) {
  MethodSpec m;
  m.name = name;
  m.solver = base;
  static const std::map<std::string, MethodFamily> kPlain = {
      {"noisy", MethodFamily::Noisy},   {"gaussian", MethodFamily::Gaussian},
      {"median", MethodFamily::Median}, {"wiener", MethodFamily::Wiener},
      {"wavelet", MethodFamily::Wavelet}, {"tv", MethodFamily::Tv},
      {"zero", MethodFamily::Zero},     {"mean", MethodFamily::Mean},
      {"median-imp", MethodFamily::MedianImp}, {"spline", MethodFamily::Spline},
      {"dip", MethodFamily::Dip},       {"rinst", MethodFamily::Rinst},
  };
  if (const auto it = kPlain.find(name); it != kPlain.end()) {
    m.family = it->second;
    if (m.family == MethodFamily::Dip) m.solver = dip_preset(base);
    return m;
  }
  if (name.rfind("rinst:", 0) != 0) {
    throw InvalidArgument(
        "unknown method '" + name +
        "' (expected gaussian|median|wiener|wavelet|tv|zero|mean|median-imp|spline|dip|rinst)");
  }
  m.family = MethodFamily::Rinst;
  for (const auto& mod : split(name.substr(6), '+')) {
    if (mod == "no-guide") {
      m.solver.guided_input = false;
    } else if (mod == "no-perturb") {
      m.solver.perturbation = false;
    } else if (mod == "no-convex") {
      m.solver.convex_combo = false;
    } else if (mod == "ls") {
      m.solver.loss = LossKind::LeastSquares;
    } else if (mod.rfind("alpha=", 0) == 0) {
      m.solver.alpha = parse_real(mod.substr(6), "method '" + name + "'");
    } else if (mod.rfind("lambda=", 0) == 0) {
      m.solver.huber_lambda = parse_real(mod.substr(7), "method '" + name + "'");
    } else {
      throw InvalidArgument("method '" + name + "': unknown modifier '" + mod + "'");
    }
  }
  m.solver.validate();
  return m;
}

bool method_applies(MethodFamily family, Task task) {
  switch (family) {
    case MethodFamily::Dip:
    case MethodFamily::Rinst: return true;
    case MethodFamily::Noisy:
    case MethodFamily::Gaussian:
    case MethodFamily::Median:
    case MethodFamily::Wiener:
    case MethodFamily::Wavelet:
    case MethodFamily::Tv: return task == Task::Denoise;
    case MethodFamily::Zero:
    case MethodFamily::Mean:
    case MethodFamily::MedianImp:
    case MethodFamily::Spline: return task == Task::Impute;
  }
  return false;
}

bool is_iterative(MethodFamily family) {
  return family == MethodFamily::Dip || family == MethodFamily::Rinst;
}

void BenchConfig::validate() const {
  if (datasets.empty()) throw InvalidArgument("bench: no datasets");
  if (scenarios.empty()) throw InvalidArgument("bench: no scenarios");
  if (methods.empty()) throw InvalidArgument("bench: no methods");
  if (seeds.empty()) throw InvalidArgument("bench: no seeds");
  for (const auto& d : datasets) parse_dataset(d);
  for (const auto& s : scenarios) scenario_from_id(s).validate();
  for (const auto& m : methods) parse_method(m, solver);
  solver.validate();
}

BenchConfig bench_config_from(const Config& c) {
  BenchConfig b;
  b.datasets = c.get_list("bench.datasets", b.datasets);
  b.scenarios = c.get_list("bench.scenarios", b.scenarios);
  b.methods = c.get_list("bench.methods", b.methods);
  {
    std::vector<std::uint64_t> seeds;
    for (auto s : c.get_sizes("bench.seeds", {0, 1, 2, 3, 4})) seeds.push_back(s);
    b.seeds = seeds;
  }
  b.out_dir = c.get_string("bench.out", b.out_dir);
  b.threads = c.get_size("bench.threads", b.threads);
  b.resume = c.get_bool("bench.resume", b.resume);
  b.plots = c.get_bool("bench.plots", b.plots);
  b.verbose = c.get_bool("bench.verbose", b.verbose);
  b.tune_baselines = c.get_bool("bench.tune_baselines", b.tune_baselines);

  b.data.csv.columns = c.get_sizes("data.columns", b.data.csv.columns);
  b.data.csv.delimiter =
      parse_delimiter(c.get_string("data.delimiter", delimiter_text(b.data.csv.delimiter)));
  b.data.csv.has_header = c.get_bool("data.header", b.data.csv.has_header);
  b.data.start = c.get_size("data.start", b.data.start);
  b.data.length = c.get_size("data.length", b.data.length);
  b.data.synth_seed = c.get_u64("data.synth_seed", b.data.synth_seed);

  auto& p = b.baseline;
  p.gaussian_sigma = c.get_double("baseline.gaussian_sigma", p.gaussian_sigma);
  p.median_window = c.get_size("baseline.median_window", p.median_window);
  p.wiener_window = c.get_size("baseline.wiener_window", p.wiener_window);
  p.wavelet_levels = c.get_size("baseline.wavelet_levels", p.wavelet_levels);
  p.tv_lambda = c.get_double("baseline.tv_lambda", p.tv_lambda);
  p.imp_window = c.get_size("baseline.imp_window", p.imp_window);

  auto& g = b.grids;
  g.gaussian_sigma = c.get_doubles("grid.gaussian_sigma", g.gaussian_sigma);
  g.median_window = c.get_sizes("grid.median_window", g.median_window);
  g.wiener_window = c.get_sizes("grid.wiener_window", g.wiener_window);
  g.wavelet_levels = c.get_sizes("grid.wavelet_levels", g.wavelet_levels);
  g.tv_lambda = c.get_doubles("grid.tv_lambda", g.tv_lambda);
  g.imp_window = c.get_sizes("grid.imp_window", g.imp_window);

  b.ablate_alphas = c.get_doubles("ablate.alphas", b.ablate_alphas);
  b.ablate_lambdas = c.get_doubles("ablate.lambdas", b.ablate_lambdas);

  b.solver = solver_config_from(c);

  if (const auto unused = c.unused_keys(); !unused.empty()) {
    std::string msg = "unknown config key(s):";
    for (const auto& k : unused) msg += " " + k;
    throw InvalidArgument(msg);
  }
  b.validate();
  return b;
}

Config bench_config_to(const BenchConfig& b) {
  Config c;
  c.set("bench.datasets", join(b.datasets));
  c.set("bench.scenarios", join(b.scenarios));
  c.set("bench.methods", join(b.methods));
  c.set("bench.seeds", join(b.seeds));
  if (!b.out_dir.empty()) c.set("bench.out", b.out_dir);
  c.set("bench.threads", std::to_string(b.threads));
  c.set("bench.resume", b.resume ? "true" : "false");
  c.set("bench.plots", b.plots ? "true" : "false");
  c.set("bench.verbose", b.verbose ? "true" : "false");
  c.set("bench.tune_baselines", b.tune_baselines ? "true" : "false");
  c.set("data.columns", join(b.data.csv.columns));
  c.set("data.delimiter", delimiter_text(b.data.csv.delimiter));
  c.set("data.header", b.data.csv.has_header ? "true" : "false");
  c.set("data.start", std::to_string(b.data.start));
  c.set("data.length", std::to_string(b.data.length));
  c.set("data.synth_seed", std::to_string(b.data.synth_seed));
  c.set("baseline.gaussian_sigma", format_double(b.baseline.gaussian_sigma));
  c.set("baseline.median_window", std::to_string(b.baseline.median_window));
  c.set("baseline.wiener_window", std::to_string(b.baseline.wiener_window));
  c.set("baseline.wavelet_levels", std::to_string(b.baseline.wavelet_levels));
  c.set("baseline.tv_lambda", format_double(b.baseline.tv_lambda));
  c.set("baseline.imp_window", std::to_string(b.baseline.imp_window));
  c.set("grid.gaussian_sigma", join(b.grids.gaussian_sigma));
  c.set("grid.median_window", join(b.grids.median_window));
  c.set("grid.wiener_window", join(b.grids.wiener_window));
  c.set("grid.wavelet_levels", join(b.grids.wavelet_levels));
  c.set("grid.tv_lambda", join(b.grids.tv_lambda));
  c.set("grid.imp_window", join(b.grids.imp_window));
  c.set("ablate.alphas", join(b.ablate_alphas));
  c.set("ablate.lambdas", join(b.ablate_lambdas));
  write_config(b.solver, c);
  return c;
}

std::string default_bench_config_text() {
  return R"(# Desk-scale comparison suite.
bench.datasets = synth:seasonal_trend:1024, synth:sines:1024
bench.scenarios = d3, i1, cs50
bench.methods = gaussian, median, wiener, wavelet, tv, zero, mean, median-imp, spline, dip, rinst
bench.seeds = 0, 1, 2, 3, 4
bench.out = rinst-bench
bench.tune_baselines = true

solver.iterations = 3000
solver.lr = 0.01
solver.huber_lambda = 0.001
solver.alpha = 0.5
solver.perturb_sigma = 0.05
solver.guide_sigma = 5
)";
}

namespace {

std::pair<Series, std::optional<NormParams>> load_dataset_norm(const DatasetSpec& ds,
                                                               const DataOptions& opt) {
  if (ds.synthetic) {
    SynthParams sp;
    sp.channels = ds.channels;
    Series s = synth(ds.kind, ds.length, opt.synth_seed, sp);
    s.name = ds.id;
    return {std::move(s), std::nullopt};
  }
  Series raw = load_series_csv(ds.path, opt.csv);
  if (opt.start != 0 || opt.length != 0) {
    const std::size_t len =
        opt.length ? opt.length : raw.length() - std::min(opt.start, raw.length());
    raw = segment(raw, opt.start, len);
  }
  Normalized nz = minmax_normalize(raw);
  nz.series.name = ds.id;
  nz.series.validate();
  return {std::move(nz.series), std::move(nz.params)};
}

}  // namespace

Series load_dataset(const DatasetSpec& ds, const DataOptions& opt) {
  return load_dataset_norm(ds, opt).first;
}

TensorBuf run_method(const MethodSpec& method, const Corrupted& c, const BaselineParams& p,
                     std::uint64_t seed, std::vector<double>* trace) {
  const TensorBuf& y = c.y;
  const Task task = std::holds_alternative<IdentityOp>(c.op) ? Task::Denoise
                    : std::holds_alternative<MaskOp>(c.op)   ? Task::Impute
                                                              : Task::CompressedSensing;
  if (!method_applies(method.family, task)) {
    throw InvalidArgument("method '" + method.name + "' does not apply to task " +
                          task_name(task));
  }
  const std::size_t channels = y.channels();
  const std::size_t n = signal_length(c.op);
  auto mask = [&]() -> std::span<const double> { return std::get<MaskOp>(c.op).mask; };

  std::vector<double> flat;
  switch (method.family) {
    case MethodFamily::Noisy: return y;
    case MethodFamily::Gaussian:
      flat = per_channel(y, [&](auto r) { return gaussian_filter(r, p.gaussian_sigma); });
      break;
    case MethodFamily::Median:
      flat = per_channel(y, [&](auto r) { return median_filter(r, p.median_window); });
      break;
    case MethodFamily::Wiener:
      flat = per_channel(y, [&](auto r) { return wiener_filter(r, p.wiener_window); });
      break;
    case MethodFamily::Wavelet: {
      WaveletSpec ws;
      ws.levels = p.wavelet_levels;
      flat = per_channel(y, [&](auto r) { return wavelet_denoise(r, ws); });
      break;
    }
    case MethodFamily::Tv:
      flat = per_channel(y, [&](auto r) { return tv_denoise(r, p.tv_lambda); });
      break;
    case MethodFamily::Zero:
      flat = per_channel(y, [&](auto r) { return impute_zero(r, mask()); });
      break;
    case MethodFamily::Mean:
      flat = per_channel(y, [&](auto r) { return impute_mean(r, mask(), p.imp_window); });
      break;
    case MethodFamily::MedianImp:
      flat = per_channel(y, [&](auto r) { return impute_median(r, mask(), p.imp_window); });
      break;
    case MethodFamily::Spline:
      flat = per_channel(y, [&](auto r) { return impute_spline(r, mask()); });
      break;
    case MethodFamily::Dip:
    case MethodFamily::Rinst: {
      SolverConfig sc = method.solver;
      sc.seed = seed;
      SolveResult res = solve(y, c.op, sc);
      if (trace) *trace = std::move(res.loss_trace);
      return res.x_hat;
    }
  }
  return TensorBuf(channels, n, std::move(flat));
}

BaselineParams tune_baseline(MethodFamily family, const DatasetSpec& ds,
                             const ScenarioSpec& scenario, const BenchConfig& cfg) {
  BaselineParams best = cfg.baseline;
  if (!cfg.tune_baselines || is_iterative(family)) return best;
  SynthParams sp;
  sp.channels = ds.synthetic ? ds.channels : 1;
  const SynthKind kind = ds.synthetic ? ds.kind : SynthKind::SeasonalTrend;
  const std::size_t n = ds.synthetic ? ds.length : std::max<std::size_t>(cfg.data.length, 1024);
  const Series held = synth(kind, n, cfg.data.synth_seed + kTuneSeedOffset, sp);
  ScenarioSpec spec = scenario;
  spec.seed = fnv1a("tune|" + scenario.id);
  const Corrupted c = make_scenario(held.values, spec);
  const MethodSpec m{"tune", family, cfg.solver};

  std::vector<BaselineParams> candidates;
  auto add = [&](auto field, const auto& grid) {
    for (const auto& v : grid) {
      BaselineParams p = cfg.baseline;
      p.*field = v;
      candidates.push_back(p);
    }
  };
  switch (family) {
    case MethodFamily::Gaussian: add(&BaselineParams::gaussian_sigma, cfg.grids.gaussian_sigma); break;
    case MethodFamily::Median: add(&BaselineParams::median_window, cfg.grids.median_window); break;
    case MethodFamily::Wiener: add(&BaselineParams::wiener_window, cfg.grids.wiener_window); break;
    case MethodFamily::Wavelet: add(&BaselineParams::wavelet_levels, cfg.grids.wavelet_levels); break;
    case MethodFamily::Tv: add(&BaselineParams::tv_lambda, cfg.grids.tv_lambda); break;
    case MethodFamily::Mean:
    case MethodFamily::MedianImp: add(&BaselineParams::imp_window, cfg.grids.imp_window); break;
    default: return best;
  }
  double best_snr = -std::numeric_limits<double>::infinity();
  for (const auto& p : candidates) {
    try {
      const TensorBuf est = run_method(m, c, p, 0);
      const double s = snr_db(c.ground_truth.data(), est.data());
      if (s > best_snr) {
        best_snr = s;
        best = p;
      }
    } catch (const InvalidArgument&) {
      // Candidate not valid for this shape (e.g. too many wavelet levels).
    }
  }
  return best;
}

std::uint64_t corruption_seed(const std::string& dataset, const std::string& scenario,
                              std::uint64_t seed) {
  return fnv1a("corrupt|" + dataset + "|" + scenario + "|" + std::to_string(seed));
}

std::uint64_t solver_seed(const std::string& dataset, const std::string& scenario,
                          std::uint64_t seed) {
  return fnv1a("solver|" + dataset + "|" + scenario + "|" + std::to_string(seed));
}

namespace {

struct Cell {
  std::size_t dataset = 0;
  std::string scenario;
  std::string method;
  std::uint64_t seed = 0;
  std::string key;
};

struct SuiteContext {
  const BenchConfig& cfg;
  std::vector<DatasetSpec> datasets;
  std::vector<Series> clean;
  std::vector<std::optional<NormParams>> norms;
  std::map<std::string, BaselineParams> tuned;
};

std::string tuned_key(const std::string& dataset, const std::string& scenario,
                      const std::string& method) {
  return dataset + "|" + scenario + "|" + method;
}

json manifest_inputs(const SuiteContext& ctx, const Cell& cell, const ScenarioSpec& spec,
                     const Corrupted& c, const MethodSpec& m, const BaselineParams& p) {
  const DatasetSpec& ds = ctx.datasets[cell.dataset];
  json j;
  j["key"] = cell.key;
  j["dataset"] = {{"id", ds.id}, {"synthetic", ds.synthetic}};
  if (ds.synthetic) {
    j["dataset"]["kind"] = synth_kind_name(ds.kind);
    j["dataset"]["length"] = ds.length;
    j["dataset"]["channels"] = ds.channels;
    j["dataset"]["synth_seed"] = ctx.cfg.data.synth_seed;
  } else {
    j["dataset"]["path"] = ds.path;
    j["dataset"]["columns"] = ctx.cfg.data.csv.columns;
    j["dataset"]["delimiter"] = delimiter_text(ctx.cfg.data.csv.delimiter);
    j["dataset"]["header"] = ctx.cfg.data.csv.has_header;
    j["dataset"]["start"] = ctx.cfg.data.start;
    j["dataset"]["length"] = ctx.cfg.data.length;
    if (const auto& norm = ctx.norms[cell.dataset]) {
      std::vector<std::string> lo;
      std::vector<std::string> hi;
      for (double v : norm->min) lo.push_back(format_double(v));
      for (double v : norm->max) hi.push_back(format_double(v));
      j["dataset"]["norm_min"] = lo;
      j["dataset"]["norm_max"] = hi;
    }
  }
  j["scenario"] = scenario_json(spec);
  j["operator"] = operator_json(c.op);
  j["method"] = m.name;
  j["seed"] = cell.seed;
  if (is_iterative(m.family)) {
    Config sc;
    SolverConfig s = m.solver;
    s.seed = solver_seed(ds.id, cell.scenario, cell.seed);
    write_config(s, sc);
    json solver = json::object();
    for (const auto& k : sc.keys()) solver[k] = sc.get_string(k, "");
    j["solver"] = solver;
  } else {
    j["baseline"] = baseline_json(m.family, p);
  }
  return j;
}

BenchRow run_cell(const SuiteContext& ctx, const Cell& cell) {
  const BenchConfig& cfg = ctx.cfg;
  const DatasetSpec& ds = ctx.datasets[cell.dataset];
  BenchRow row;
  row.dataset = ds.id;
  row.scenario = cell.scenario;
  row.method = cell.method;
  row.seed = cell.seed;
  row.key = cell.key;

  std::string run_dir;
  std::string manifest_path;
  json manifest;
  try {
    const ScenarioSpec spec =
        scenario_from_id(cell.scenario, corruption_seed(ds.id, cell.scenario, cell.seed));
    const Corrupted c = make_scenario(ctx.clean[cell.dataset].values, spec);
    const MethodSpec m = parse_method(cell.method, cfg.solver);
    const auto tk = ctx.tuned.find(tuned_key(ds.id, cell.scenario, cell.method));
    const BaselineParams p = tk != ctx.tuned.end() ? tk->second : cfg.baseline;
    manifest = manifest_inputs(ctx, cell, spec, c, m, p);
    const std::string hash = std::to_string(fnv1a(manifest.dump()));
    manifest["hash"] = hash;

    if (!cfg.out_dir.empty()) {
      run_dir = (fs::path(cfg.out_dir) / "runs" / sanitize(cell.key)).string();
      manifest_path = (fs::path(cfg.out_dir) / "manifests" / (sanitize(cell.key) + ".json")).string();
      if (cfg.resume && fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        json prev = json::parse(in, nullptr, false);
        if (!prev.is_discarded() && prev.value("hash", "") == hash &&
            prev.contains("result") && prev["result"].value("status", "") == "ok") {
          const auto& r = prev["result"];
          row.rmse = parse_stored(r.at("rmse").get<std::string>());
          row.mae = parse_stored(r.at("mae").get<std::string>());
          row.snr_db = parse_stored(r.at("snr_db").get<std::string>());
          row.wall_time_s = parse_stored(r.at("wall_time_s").get<std::string>());
          row.resumed = true;
          log_line(cfg.verbose, "[resume] " + cell.key);
          return row;
        }
      }
      fs::create_directories(run_dir);
    }

    std::vector<double> trace;
    const auto t0 = std::chrono::steady_clock::now();
    const TensorBuf est =
        run_method(m, c, p, solver_seed(ds.id, cell.scenario, cell.seed), &trace);
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!est.all_finite()) throw NumericalError("estimate contains non-finite values");
    const ScoreRow s = score(c.ground_truth.data(), est.data());
    row.rmse = s.rmse;
    row.mae = s.mae;
    row.snr_db = s.snr_db;

    if (!run_dir.empty()) {
      write_matrix_csv((fs::path(run_dir) / "estimate.csv").string(), est);
      if (is_iterative(m.family)) {
        std::string t = "iteration,loss\n";
        for (std::size_t i = 0; i < trace.size(); ++i) {
          t += std::to_string(i + 1) + "," + format_double(trace[i]) + "\n";
        }
        write_text_file((fs::path(run_dir) / "trace.csv").string(), t);
      }
    }
  } catch (const NumericalError& e) {
    row.ok = false;
    row.numerical_failure = true;
    row.error = e.what();
    row.rmse = row.mae = row.snr_db = kNaN;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
    row.rmse = row.mae = row.snr_db = kNaN;
  }

  if (!manifest_path.empty() || (!cfg.out_dir.empty() && !manifest.is_null())) {
    if (manifest_path.empty()) {
      manifest_path = (fs::path(cfg.out_dir) / "manifests" / (sanitize(cell.key) + ".json")).string();
    }
    manifest["result"] = {{"status", row.ok ? "ok" : "failed"},
                          {"error", row.error},
                          {"rmse", format_double(row.rmse)},
                          {"mae", format_double(row.mae)},
                          {"snr_db", format_double(row.snr_db)},
                          {"wall_time_s", format_double(row.wall_time_s)}};
    try {
      write_text_file(manifest_path, manifest.dump(2) + "\n");
    } catch (const IoError& e) {
      if (row.ok) {
        row.ok = false;
        row.error = e.what();
      }
    }
  }
  log_line(cfg.verbose, std::string(row.ok ? "[done] " : "[failed] ") + cell.key +
                            (row.ok ? " snr=" + format_double(row.snr_db) : " " + row.error));
  return row;
}

}  // namespace

BenchReport run_suite(const BenchConfig& cfg) {
  cfg.validate();
  SuiteContext ctx{cfg, {}, {}, {}, {}};
  for (const auto& id : cfg.datasets) {
    ctx.datasets.push_back(parse_dataset(id));
    auto [series, norm] = load_dataset_norm(ctx.datasets.back(), cfg.data);
    ctx.clean.push_back(std::move(series));
    ctx.norms.push_back(std::move(norm));
  }
  if (!cfg.out_dir.empty()) {
    fs::create_directories(fs::path(cfg.out_dir) / "manifests");
    fs::create_directories(fs::path(cfg.out_dir) / "runs");
  }

  std::vector<Cell> cells;
  for (std::size_t d = 0; d < ctx.datasets.size(); ++d) {
    for (const auto& scn : cfg.scenarios) {
      const ScenarioSpec spec = scenario_from_id(scn);
      for (const auto& meth : cfg.methods) {
        const MethodSpec m = parse_method(meth, cfg.solver);
        if (!method_applies(m.family, spec.task)) {
          log_line(cfg.verbose, "[skip] " + meth + " does not apply to " + scn);
          continue;
        }
        const std::string tk = tuned_key(ctx.datasets[d].id, scn, meth);
        if (!is_iterative(m.family) && !ctx.tuned.count(tk)) {
          ctx.tuned[tk] = tune_baseline(m.family, ctx.datasets[d], spec, cfg);
        }
        for (auto seed : cfg.seeds) {
          Cell c{d, scn, meth, seed, ""};
          c.key = ctx.datasets[d].id + "|" + scn + "|" + meth + "|" + std::to_string(seed);
          cells.push_back(std::move(c));
        }
      }
    }
  }

  BenchReport report;
  report.rows.resize(cells.size());
  parallel_for(cells.size(), thread_budget(cfg.threads),
               [&](std::size_t i) { report.rows[i] = run_cell(ctx, cells[i]); });
  report.aggregates = aggregate(report.rows);
  report.tuned = std::move(ctx.tuned);
  return report;
}

std::vector<std::string> ablation_methods(const BenchConfig& cfg) {
  std::vector<std::string> methods{"rinst", "rinst:no-guide", "rinst:no-perturb",
                                   "rinst:no-convex", "rinst:ls"};
  for (double a : cfg.ablate_alphas) methods.push_back("rinst:alpha=" + format_double(a));
  for (double l : cfg.ablate_lambdas) methods.push_back("rinst:lambda=" + format_double(l));
  return methods;
}

BenchReport ablate(const BenchConfig& cfg) {
  BenchConfig c = cfg;
  c.methods = ablation_methods(cfg);
  return run_suite(c);
}

std::vector<Aggregate> aggregate(const std::vector<BenchRow>& rows) {
  std::vector<Aggregate> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const BenchRow*>> members;
  for (const auto& r : rows) {
    const std::string k = r.dataset + "|" + r.scenario + "|" + r.method;
    auto [it, inserted] = index.emplace(k, out.size());
    if (inserted) {
      Aggregate a;
      a.dataset = r.dataset;
      a.scenario = r.scenario;
      a.method = r.method;
      out.push_back(a);
      members.emplace_back();
    }
    members[it->second].push_back(&r);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::vector<double> rmse;
    std::vector<double> mae;
    std::vector<double> snr;
    std::vector<double> wall;
    for (const auto* r : members[i]) {
      if (!r->ok) {
        ++out[i].failed;
        continue;
      }
      rmse.push_back(r->rmse);
      mae.push_back(r->mae);
      snr.push_back(r->snr_db);
      wall.push_back(r->wall_time_s);
    }
    auto& a = out[i];
    a.n = snr.size();
    a.mean_rmse = mean_of(rmse);
    a.std_rmse = sample_std(rmse);
    a.mean_mae = mean_of(mae);
    a.std_mae = sample_std(mae);
    a.mean_snr = mean_of(snr);
    a.std_snr = sample_std(snr);
    a.mean_wall_time_s = mean_of(wall);
  }
  return out;
}

std::string report_csv(const std::vector<BenchRow>& rows) {
  std::string out = "dataset,scenario,method,seed,rmse,mae,snr_db,wall_time_s\n";
  for (const auto& r : rows) {
    out += r.dataset + "," + r.scenario + "," + r.method + "," + std::to_string(r.seed) + "," +
           format_double(r.rmse) + "," + format_double(r.mae) + "," + format_double(r.snr_db) +
           "," + format_double(r.wall_time_s) + "\n";
  }
  return out;
}

std::string aggregate_csv(const std::vector<Aggregate>& aggs) {
  std::string out =
      "dataset,scenario,method,n,failed,mean_rmse,std_rmse,mean_mae,std_mae,mean_snr,std_snr,"
      "mean_wall_time_s\n";
  for (const auto& a : aggs) {
    out += a.dataset + "," + a.scenario + "," + a.method + "," + std::to_string(a.n) + "," +
           std::to_string(a.failed) + "," + format_double(a.mean_rmse) + "," +
           format_double(a.std_rmse) + "," + format_double(a.mean_mae) + "," +
           format_double(a.std_mae) + "," + format_double(a.mean_snr) + "," +
           format_double(a.std_snr) + "," + format_double(a.mean_wall_time_s) + "\n";
  }
  return out;
}

namespace {

void emit_plots(const BenchReport& report, const BenchConfig& cfg, const fs::path& dir) {
  const fs::path plots = dir / "plots";
  fs::create_directories(plots);

  // Bar chart of mean SNR per scenario, one file per dataset.
  std::vector<std::string> datasets;
  for (const auto& a : report.aggregates) {
    if (std::find(datasets.begin(), datasets.end(), a.dataset) == datasets.end()) {
      datasets.push_back(a.dataset);
    }
  }
  for (const auto& d : datasets) {
    std::vector<std::string> methods;
    std::vector<BarGroup> groups;
    for (const auto& a : report.aggregates) {
      if (a.dataset != d) continue;
      if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) {
        methods.push_back(a.method);
      }
    }
    for (const auto& scn : cfg.scenarios) {
      BarGroup g{scn, std::vector<double>(methods.size(), kNaN)};
      bool any = false;
      for (const auto& a : report.aggregates) {
        if (a.dataset != d || a.scenario != scn) continue;
        const auto mi = std::find(methods.begin(), methods.end(), a.method) - methods.begin();
        g.values[static_cast<std::size_t>(mi)] = a.mean_snr;
        any = true;
      }
      if (any) groups.push_back(std::move(g));
    }
    ChartOptions opt;
    opt.title = "Mean SNR by scenario: " + d;
    opt.x_label = "scenario";
    opt.y_label = "SNR (dB)";
    write_text_file((plots / ("bar_" + sanitize(d) + ".svg")).string(),
                    bar_chart_svg(methods, groups, opt));
  }

  // Overlay and loss traces for the best run of each (dataset, scenario).
  std::map<std::string, const BenchRow*> best;
  std::vector<std::string> order;
  for (const auto& r : report.rows) {
    if (!r.ok || !std::isfinite(r.snr_db)) continue;
    const std::string k = r.dataset + "|" + r.scenario;
    auto it = best.find(k);
    if (it == best.end()) {
      best[k] = &r;
      order.push_back(k);
    } else if (r.snr_db > it->second->snr_db) {
      it->second = &r;
    }
  }
  for (const auto& k : order) {
    const BenchRow& r = *best[k];
    const DatasetSpec ds = parse_dataset(r.dataset);
    Series clean = load_dataset(ds, cfg.data);
    const ScenarioSpec spec =
        scenario_from_id(r.scenario, corruption_seed(r.dataset, r.scenario, r.seed));
    const Corrupted c = make_scenario(clean.values, spec);
    const fs::path run_dir = fs::path(cfg.out_dir) / "runs" / sanitize(r.key);
    const fs::path est_path = run_dir / "estimate.csv";
    if (!fs::exists(est_path)) continue;
    const TensorBuf est = read_matrix_csv(est_path.string(), clean.channels());

    std::vector<LineSeries> series;
    const auto truth = clean.values.row(0);
    series.push_back({"ground truth", {truth.begin(), truth.end()}, "#222222", false});
    if (std::holds_alternative<IdentityOp>(c.op)) {
      const auto y = c.y.row(0);
      series.push_back({"corrupted", {y.begin(), y.end()}, "#bbbbbb", false});
    } else if (const auto* m = std::get_if<MaskOp>(&c.op)) {
      std::vector<double> y(c.y.row(0).begin(), c.y.row(0).end());
      for (std::size_t t = 0; t < y.size(); ++t) {
        if (m->mask[t] == 0.0) y[t] = kNaN;
      }
      series.push_back({"observed", std::move(y), "#bbbbbb", false});
    }
    const auto e = est.row(0);
    series.push_back({r.method, {e.begin(), e.end()}, "#d62728", false});
    ChartOptions opt;
    opt.title = r.dataset + " / " + r.scenario + " / " + r.method + " seed " +
                std::to_string(r.seed) + " (" + format_double(std::round(r.snr_db * 100) / 100) +
                " dB)";
    opt.x_label = "t";
    opt.y_label = "value";
    write_text_file(
        (plots / ("overlay_" + sanitize(r.dataset) + "_" + sanitize(r.scenario) + ".svg")).string(),
        line_chart_svg(series, opt));

    std::vector<LineSeries> traces;
    for (const auto& other : report.rows) {
      if (other.dataset != r.dataset || other.scenario != r.scenario || other.seed != r.seed) {
        continue;
      }
      const fs::path tp = fs::path(cfg.out_dir) / "runs" / sanitize(other.key) / "trace.csv";
      if (!fs::exists(tp)) continue;
      traces.push_back({other.method, read_trace_csv(tp.string()), "", false});
    }
    if (!traces.empty()) {
      ChartOptions to;
      to.title = "Loss trace: " + r.dataset + " / " + r.scenario + " seed " + std::to_string(r.seed);
      to.x_label = "iteration";
      to.y_label = "loss";
      to.log_y = true;
      write_text_file(
          (plots / ("trace_" + sanitize(r.dataset) + "_" + sanitize(r.scenario) + ".svg")).string(),
          line_chart_svg(traces, to));
    }
  }
}

}  // namespace

void emit_outputs(const BenchReport& report, const BenchConfig& cfg, const std::string& dir) {
  const fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  write_text_file((out / "report.csv").string(), report_csv(report.rows));
  write_text_file((out / "aggregate.csv").string(), aggregate_csv(report.aggregates));
  write_text_file((out / "config.txt").string(), bench_config_to(cfg).dump());

  std::string failures = "dataset,scenario,method,seed,error\n";
  bool any_failed = false;
  for (const auto& r : report.rows) {
    if (r.ok) continue;
    any_failed = true;
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    failures += r.dataset + "," + r.scenario + "," + r.method + "," + std::to_string(r.seed) +
                "," + err + "\n";
  }
  if (any_failed) {
    write_text_file((out / "failures.csv").string(), failures);
  } else if (fs::exists(out / "failures.csv")) {
    fs::remove(out / "failures.csv");
  }

  if (!report.tuned.empty()) {
    std::string tuned = "dataset,scenario,method,params\n";
    for (const auto& [k, p] : report.tuned) {
      const auto parts = split(k, '|');
      const MethodSpec m = parse_method(parts[2], cfg.solver);
      std::string params = baseline_json(m.family, p).dump();
      std::replace(params.begin(), params.end(), ',', ';');
      tuned += parts[0] + "," + parts[1] + "," + parts[2] + "," + params + "\n";
    }
    write_text_file((out / "tuned_baselines.csv").string(), tuned);
  }
  if (cfg.plots && !cfg.out_dir.empty()) emit_plots(report, cfg, out);
}

}  // namespace rinst
