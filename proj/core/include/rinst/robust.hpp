#pragma once

#include <span>
#include <vector>

namespace rinst {

/// Huber threshold. Residuals with |v| <= lambda are penalized quadratically,
/// larger ones linearly.
struct HuberParams {
  double lambda = 0.001;
};

/// Summed Huber loss: 1/2 v^2 for |v| <= lambda, lambda|v| - lambda^2/2 else.
double huber_value(std::span<const double> v, double lambda);
double huber_value(double v, double lambda);

/// Elementwise derivative: v inside the threshold, lambda*sign(v) outside.
std::vector<double> huber_grad(std::span<const double> v, double lambda);
double huber_grad(double v, double lambda);

/// Proximal map of lambda*|.|: argmin_s 1/2 (v - s)^2 + lambda |s|.
double soft_threshold(double v, double lambda);
std::vector<double> soft_threshold(std::span<const double> v, double lambda);

/// Brute-force infimal convolution of lambda|.| with 1/2(.)^2 at t, taken
/// over a uniform grid covering [t - 3lambda - 3, t + 3lambda + 3]. A direct
/// check on the closed-form Huber value, not used in solving.
double moreau_envelope_oracle(double t, double lambda, double step = 1e-4);

double standard_normal_pdf(double x);
double standard_normal_cdf(double x);

/// Outcome of mapping a Huber threshold to the contamination fraction of the
/// least favorable contaminated Gaussian. `in_model` is false when the
/// implied epsilon reaches 0.5, outside the model's validity range.
struct EpsilonResult {
  double epsilon = 0.0;
  bool in_model = true;
};

/// Solve eps/(1-eps) = (2/lambda) phi(lambda) - 2 Phi(-lambda) for eps.
/// Throws InvalidArgument for lambda <= 0.
EpsilonResult epsilon_from_lambda(double lambda);

/// Inverse of epsilon_from_lambda by bracketed bisection (tolerance 1e-10 or
/// better). Requires eps in (0, 0.5).
double lambda_from_epsilon(double epsilon);

/// Least favorable density (1-eps) phi-normalization * exp(-huber(t)).
double lfd_density(double t, double lambda, double epsilon);

/// A calibrated (epsilon, lambda) pair.
struct ContaminatedGaussian {
  double epsilon = 0.05;
  double lambda = 0.0;

  static ContaminatedGaussian from_epsilon(double epsilon);
  static ContaminatedGaussian from_lambda(double lambda);
  double density(double t) const { return lfd_density(t, lambda, epsilon); }
};

}  // namespace rinst
