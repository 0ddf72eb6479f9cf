#include "rinst/robust.hpp"

#include <cmath>
#include <numbers>

#include "rinst/errors.hpp"

namespace rinst {

double huber_value(double v, double lambda) {
  const double a = std::abs(v);
  return a <= lambda ? 0.5 * v * v : lambda * a - 0.5 * lambda * lambda;
}

double huber_value(std::span<const double> v, double lambda) {
  double acc = 0.0;
  for (double x : v) acc += huber_value(x, lambda);
  return acc;
}

double huber_grad(double v, double lambda) {
  if (std::abs(v) <= lambda) return v;
  return v > 0.0 ? lambda : -lambda;
}

std::vector<double> huber_grad(std::span<const double> v, double lambda) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = huber_grad(v[i], lambda);
  return out;
}

double soft_threshold(double v, double lambda) {
  if (v >= lambda) return v - lambda;
  if (v <= -lambda) return v + lambda;
  return 0.0;
}

std::vector<double> soft_threshold(std::span<const double> v, double lambda) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], lambda);
  return out;
}

double moreau_envelope_oracle(double t, double lambda, double step) {
  const double lo = t - 3.0 * lambda - 3.0;
  const double hi = t + 3.0 * lambda + 3.0;
  const auto n = static_cast<long>(std::ceil((hi - lo) / step));
  // v = 0 is included explicitly: for |t| <= lambda the infimum sits on the
  // kink there, which a grid offset would otherwise miss by O(lambda*step).
  double best = 0.5 * t * t;
  for (long i = 0; i <= n; ++i) {
    const double v = lo + static_cast<double>(i) * step;
    const double f = lambda * std::abs(v) + 0.5 * (t - v) * (t - v);
    if (f < best) best = f;
  }
  return best;
}

double standard_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace {

// (2/lambda) phi(lambda) - 2 Phi(-lambda); strictly decreasing on (0, inf).
double odds_from_lambda(double lambda) {
  return 2.0 / lambda * standard_normal_pdf(lambda) -
         2.0 * standard_normal_cdf(-lambda);
}

}  // namespace

EpsilonResult epsilon_from_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("epsilon_from_lambda: lambda must be positive");
  }
  const double r = odds_from_lambda(lambda);
  const double eps = r / (1.0 + r);
  return {eps, eps < 0.5};
}

double lambda_from_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw InvalidArgument("lambda_from_epsilon: epsilon must lie in (0, 0.5)");
  }
  const double target = epsilon / (1.0 - epsilon);
  // odds(lo) > target > odds(hi)
  double lo = 1e-6;
  double hi = 1.0;
  while (odds_from_lambda(hi) > target) {
    hi *= 2.0;
    if (hi > 1e3) throw NumericalError("lambda_from_epsilon: bracket failed");
  }
  for (int it = 0; it < 300 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (odds_from_lambda(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double lfd_density(double t, double lambda, double epsilon) {
  return (1.0 - epsilon) / std::sqrt(2.0 * std::numbers::pi) *
         std::exp(-huber_value(t, lambda));
}

ContaminatedGaussian ContaminatedGaussian::from_epsilon(double epsilon) {
  return {epsilon, lambda_from_epsilon(epsilon)};
}

ContaminatedGaussian ContaminatedGaussian::from_lambda(double lambda) {
  const auto r = epsilon_from_lambda(lambda);
  if (!r.in_model) {
    throw InvalidArgument("ContaminatedGaussian: lambda implies epsilon >= 0.5");
  }
  return {r.epsilon, lambda};
}

}  // namespace rinst
