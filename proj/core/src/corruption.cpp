#include "rinst/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rinst/errors.hpp"

namespace rinst {

namespace {

// Independent sub-streams of a scenario seed.
enum Stream : std::uint64_t { kNoise = 1, kOutliers = 2, kMask = 3, kMatrix = 4 };

std::size_t rounded_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw InvalidArgument("scenario: bad boolean '" + v + "'");
}

}  // namespace

std::string task_name(Task task) {
  switch (task) {
    case Task::Denoise: return "denoise";
    case Task::Impute: return "impute";
    case Task::CompressedSensing: return "cs";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  if (name == "denoise") return Task::Denoise;
  if (name == "impute") return Task::Impute;
  if (name == "cs") return Task::CompressedSensing;
  throw InvalidArgument("unknown task '" + name + "'");
}

void ScenarioSpec::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(gaussian_sigma >= 0.0)) throw InvalidArgument("scenario: sigma must be >= 0");
  if (!unit(outlier_fraction) || !unit(missing_rate)) {
    throw InvalidArgument("scenario: fractions and rates must lie in [0, 1]");
  }
  if (task == Task::CompressedSensing &&
      !(compression_ratio > 0.0 && compression_ratio <= 1.0)) {
    throw InvalidArgument("scenario: compression ratio must lie in (0, 1]");
  }
}

const std::vector<std::string>& preset_scenario_ids() {
  static const std::vector<std::string> ids{"d1", "d2", "d3", "i1",
                                            "i2", "cs20", "cs50"};
  return ids;
}

ScenarioSpec scenario_from_id(const std::string& id, std::uint64_t seed) {
  ScenarioSpec s;
  s.id = id;
  s.seed = seed;
  if (id == "d1") {
    s.task = Task::Denoise;
    s.gaussian_sigma = 0.1;
    s.clip = true;
  } else if (id == "d2") {
    s.task = Task::Denoise;
    s.gaussian_sigma = 0.3;
    s.clip = true;
  } else if (id == "d3") {
    s.task = Task::Denoise;
    s.gaussian_sigma = 0.1;
    s.clip = false;
    s.outlier_fraction = 0.1;
  } else if (id == "i1" || id == "i2") {
    s.task = Task::Impute;
    s.gaussian_sigma = 0.0;
    s.clip = false;
    s.missing_rate = id == "i1" ? 0.2 : 0.5;
    s.outlier_fraction = 0.1;
  } else if (id == "cs20" || id == "cs50") {
    s.task = Task::CompressedSensing;
    s.gaussian_sigma = 0.0;
    s.clip = false;
    s.compression_ratio = id == "cs20" ? 0.2 : 0.5;
    s.outlier_fraction = 0.1;
  } else if (id.rfind("custom:", 0) == 0) {
    s.gaussian_sigma = 0.0;
    s.clip = false;
    std::istringstream in(id.substr(7));
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw InvalidArgument("scenario: expected key=value in '" + item + "'");
      }
      const std::string key = item.substr(0, eq);
      const std::string val = item.substr(eq + 1);
      try {
        if (key == "task") {
          s.task = parse_task(val);
        } else if (key == "sigma") {
          s.gaussian_sigma = std::stod(val);
        } else if (key == "clip") {
          s.clip = parse_bool(val);
        } else if (key == "outliers") {
          s.outlier_fraction = std::stod(val);
        } else if (key == "missing") {
          s.missing_rate = std::stod(val);
        } else if (key == "cr") {
          s.compression_ratio = std::stod(val);
        } else {
          throw InvalidArgument("scenario: unknown key '" + key + "'");
        }
      } catch (const std::logic_error& e) {
        if (dynamic_cast<const InvalidArgument*>(&e)) throw;
        throw InvalidArgument("scenario: bad value for '" + key + "': " + val);
      }
    }
  } else {
    throw InvalidArgument("unknown scenario id '" + id +
                          "' (expected d1 d2 d3 i1 i2 cs20 cs50 or custom:...)");
  }
  s.validate();
  return s;
}

std::vector<double> add_gaussian_noise(std::span<const double> x, double sigma,
                                       Rng& stream) {
  if (!(sigma >= 0.0)) throw InvalidArgument("add_gaussian_noise: sigma must be >= 0");
  std::vector<double> out(x.begin(), x.end());
  if (sigma == 0.0) return out;
  for (double& v : out) v += stream.normal(0.0, sigma);
  return out;
}

std::vector<double> clip_unit(std::span<const double> x) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(),
                 [](double v) { return std::clamp(v, 0.0, 1.0); });
  return out;
}

OutlierResult inject_outliers(std::span<const double> x, double fraction,
                              Rng& stream) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("inject_outliers: fraction must lie in [0, 1]");
  }
  OutlierResult r;
  r.values.assign(x.begin(), x.end());
  r.indices = stream.sample_without_replacement(x.size(), rounded_count(fraction, x.size()));
  for (std::size_t i : r.indices) r.values[i] = stream.uniform();
  return r;
}

Corrupted make_scenario(const TensorBuf& clean, const ScenarioSpec& spec) {
  spec.validate();
  const std::size_t channels = clean.channels();
  const std::size_t n = clean.length();
  const Rng root(spec.seed);
  Rng noise = root.split(kNoise);
  Rng outliers = root.split(kOutliers);

  Corrupted out;
  out.ground_truth = clean;

  switch (spec.task) {
    case Task::Denoise: {
      auto v = add_gaussian_noise(clean.data(), spec.gaussian_sigma, noise);
      if (spec.clip) v = clip_unit(v);
      auto o = inject_outliers(v, spec.outlier_fraction, outliers);
      out.y = TensorBuf(channels, n, std::move(o.values));
      out.outlier_indices = std::move(o.indices);
      out.op = IdentityOp{n};
      break;
    }
    case Task::Impute: {
      MaskOp mask = make_random_mask(n, spec.missing_rate, root.split(kMask).seed());
      auto v = add_gaussian_noise(clean.data(), spec.gaussian_sigma, noise);
      if (spec.clip) v = clip_unit(v);
      // Outliers only on observed positions; a corrupted missing sample would
      // never be seen.
      std::vector<std::size_t> observed;
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t t = 0; t < n; ++t) {
          if (mask.mask[t] != 0.0) observed.push_back(c * n + t);
        }
      }
      const auto picks = outliers.sample_without_replacement(
          observed.size(), rounded_count(spec.outlier_fraction, observed.size()));
      for (std::size_t p : picks) {
        v[observed[p]] = outliers.uniform();
        out.outlier_indices.push_back(observed[p]);
      }
      TensorBuf noisy(channels, n, std::move(v));
      out.op = mask;
      out.y = rinst::apply(out.op, noisy);
      out.mask = std::move(mask);
      break;
    }
    case Task::CompressedSensing: {
      const auto m = static_cast<std::size_t>(
          std::llround(spec.compression_ratio * static_cast<double>(n)));
      out.op = make_gaussian_matrix(std::max<std::size_t>(m, 1), n,
                                    root.split(kMatrix).seed());
      TensorBuf measured = rinst::apply(out.op, clean);
      auto v = add_gaussian_noise(measured.data(), spec.gaussian_sigma, noise);
      auto o = inject_outliers(v, spec.outlier_fraction, outliers);
      out.y = TensorBuf(channels, measured.length(), std::move(o.values));
      out.outlier_indices = std::move(o.indices);
      break;
    }
  }
  return out;
}

}  // namespace rinst
