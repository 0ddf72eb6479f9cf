#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rinst/forward_ops.hpp"
#include "rinst/rng.hpp"
#include "rinst/tensor.hpp"

namespace rinst {

enum class Task { Denoise, Impute, CompressedSensing };

std::string task_name(Task task);
Task parse_task(const std::string& name);

/// Parameters of one corruption scenario. The named presets mirror the
/// evaluation protocol; custom specs can be built field by field.
struct ScenarioSpec {
  std::string id = "d1";
  Task task = Task::Denoise;
  double gaussian_sigma = 0.1;
  bool clip = true;
  double outlier_fraction = 0.0;
  double missing_rate = 0.0;
  double compression_ratio = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Preset lookup for `d1 d2 d3 i1 i2 cs20 cs50`. Also accepts custom
/// specs of the form `custom:task=impute,missing=0.3,outliers=0.1,sigma=0,clip=0,cr=0.5`.
/// Throws InvalidArgument for unknown ids.
ScenarioSpec scenario_from_id(const std::string& id, std::uint64_t seed = 0);
const std::vector<std::string>& preset_scenario_ids();

/// Observation produced by a scenario, with everything needed to score and
/// replay it.
struct Corrupted {
  TensorBuf y;
  TensorBuf ground_truth;
  ForwardOperator op;
  std::vector<std::size_t> outlier_indices;  // flattened [c * len + t] positions
  std::optional<MaskOp> mask;
};

std::vector<double> add_gaussian_noise(std::span<const double> x, double sigma,
                                       Rng& stream);
std::vector<double> clip_unit(std::span<const double> x);
struct OutlierResult {
  std::vector<double> values;
  std::vector<std::size_t> indices;  // sorted
};
/// Replace exactly round(fraction * n) positions, sampled without
/// replacement, by U[0,1] draws.
OutlierResult inject_outliers(std::span<const double> x, double fraction,
                              Rng& stream);

/// Apply a scenario to a clean [C, n] series normalized to [0, 1].
Corrupted make_scenario(const TensorBuf& clean, const ScenarioSpec& spec);

}  // namespace rinst
