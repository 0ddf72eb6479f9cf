#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rinst/forward_ops.hpp"
#include "rinst/rng.hpp"
#include "rinst/prior_net.hpp"
#include "rinst/tensor.hpp"

namespace rinst {

enum class LossKind { Huber, LeastSquares };

std::string loss_name(LossKind kind);
LossKind parse_loss(const std::string& name);

struct SolverConfig {
  std::size_t iterations = 3000;
  double lr = 0.01;
  double huber_lambda = 0.001;
  double alpha = 0.5;           // EMA weight on the previous estimate
  double perturb_sigma = 0.05;  // input noise std per iteration
  double guide_sigma = 5.0;     // Gaussian smoothing width, in samples
  LossKind loss = LossKind::Huber;
  bool guided_input = true;
  bool perturbation = true;
  bool convex_combo = true;
  NetConfig net;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument describing the first violated constraint.
  void validate() const;
};

/// The plain deep-prior preset: least squares, fixed random input drawn once,
/// no perturbation, no output averaging. Everything else copied from `base`.
SolverConfig dip_preset(const SolverConfig& base);

struct SolveResult {
  TensorBuf x_hat;      // averaged estimate (raw_final when averaging is off)
  TensorBuf raw_final;  // last raw network output
  std::vector<double> loss_trace;
  double wall_time_s = 0.0;
  std::size_t iterations_run = 0;
};

/// Per-iteration hook: 1-based iteration, raw output x_t, running estimate,
/// loss evaluated at x_t.
using SolveObserver = std::function<void(std::size_t t, const TensorBuf& x_t,
                                         const TensorBuf& estimate, double loss)>;

/// Smoothed signal-space starting point built from the observation.
///   identity: gaussian_filter(y)
///   mask:     linear interpolation over missing runs, then gaussian_filter
///   dense:    adjoint(y) min-max rescaled to [0, 1], then gaussian_filter
/// Applied per channel. y is [C, m].
TensorBuf guided_input(const TensorBuf& y, const ForwardOperator& op,
                       double guide_sigma);

/// u + N(0, sigma^2) noise drawn from `rng`.
TensorBuf perturb(const TensorBuf& u, double sigma, Rng& rng);

/// Fit the untrained prior to y = A x. The network input/output channel
/// counts follow y; the network is initialized from `cfg.seed`.
/// Throws NumericalError naming the iteration on a non-finite loss.
SolveResult solve(const TensorBuf& y, const ForwardOperator& op,
                  const SolverConfig& cfg, const SolveObserver& observer = {});

/// solve() with dip_preset(cfg).
SolveResult solve_dip(const TensorBuf& y, const ForwardOperator& op,
                      const SolverConfig& cfg, const SolveObserver& observer = {});

}  // namespace rinst
