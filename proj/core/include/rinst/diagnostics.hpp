#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rinst/data_io.hpp"
#include "rinst/solver.hpp"
#include "rinst/tensor.hpp"

namespace rinst {

struct GradCheckResult {
  std::string name;
  std::size_t checked = 0;  // entries compared
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Scalar objective over a list of inputs. When `grads` is non-null it must
/// be filled with the analytic gradient, one vector per input.
using Objective = std::function<double(const std::vector<TensorBuf>& inputs,
                                       std::vector<std::vector<double>>* grads)>;

/// Central differences with step h against the analytic gradient. The
/// relative error of an entry is |a - n| / max(|a|, |n|, floor). When
/// `max_entries` > 0 a seeded random subset of that many entries per input is
/// compared.
GradCheckResult finite_difference_check(const std::string& name,
                                        const std::vector<TensorBuf>& inputs,
                                        const Objective& f, double h = 1e-5,
                                        double tol = 1e-4, std::size_t max_entries = 0,
                                        std::uint64_t seed = 0, double floor = 1e-3);

/// Every tape op, the small and default prior networks, and the full solver
/// objective.
std::vector<GradCheckResult> gradcheck_suite(double h = 1e-5, double tol = 1e-4);

struct BiasCheckConfig {
  std::size_t length = 1024;
  std::size_t iterations = 1000;
  double lr = 0.01;
  std::uint64_t seed = 0;
  NetConfig net;
};

struct BiasCheckResult {
  std::vector<double> structured_trace;  // sines target
  std::vector<double> noise_trace;       // i.i.d. U[0,1] target
  bool passed = false;                   // structured loss lower at the last iteration
};

/// Fit a structured signal and pure noise from the same random input.
BiasCheckResult biascheck(const BiasCheckConfig& cfg);

struct PermuteConfig {
  SynthKind kind = SynthKind::SeasonalTrend;
  std::size_t length = 1024;
  std::uint64_t synth_seed = 20240;
  std::string scenario = "d3";
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  SolverConfig solver;
  std::size_t threads = 0;
};

struct PermuteResult {
  std::vector<std::uint64_t> seeds;
  std::vector<double> rmse_original;
  std::vector<double> rmse_permuted;  // against the equally permuted truth
  bool passed = false;                // permuted worse for every seed
};

/// Solve the same corrupted series with and without a random permutation of
/// its time indices. Denoising and imputation scenarios only.
PermuteResult permute_check(const PermuteConfig& cfg);

}  // namespace rinst
