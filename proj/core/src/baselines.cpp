#include "rinst/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "rinst/autodiff.hpp"
#include "rinst/errors.hpp"

namespace rinst {

namespace {

void require_odd(std::size_t window, const char* who) {
  if (window == 0 || window % 2 == 0) {
    throw InvalidArgument(std::string(who) + ": window must be odd, got " +
                          std::to_string(window));
  }
}

// Sliding-window mean of x over a reflected window of half-width r.
std::vector<double> local_mean(std::span<const double> x, std::size_t r) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  const double inv = 1.0 / static_cast<double>(2 * r + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t d = -static_cast<std::ptrdiff_t>(r);
         d <= static_cast<std::ptrdiff_t>(r); ++d) {
      acc += x[reflect_index(static_cast<std::ptrdiff_t>(i) + d, n)];
    }
    out[i] = acc * inv;
  }
  return out;
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma, double truncate) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_kernel: sigma must be positive");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(truncate * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double z = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    z += v;
  }
  for (double& v : k) v /= z;
  return k;
}

std::vector<double> gaussian_filter(std::span<const double> x, double sigma,
                                    double truncate) {
  const auto kernel = gaussian_kernel(sigma, truncate);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t d = -radius; d <= radius; ++d) {
      acc += kernel[static_cast<std::size_t>(d + radius)] *
             x[reflect_index(static_cast<std::ptrdiff_t>(i) + d, n)];
    }
    out[i] = acc;
  }
  return out;
}

std::vector<double> median_filter(std::span<const double> x, std::size_t window) {
  require_odd(window, "median_filter");
  const std::size_t n = x.size();
  const auto r = static_cast<std::ptrdiff_t>(window / 2);
  std::vector<double> out(n);
  std::vector<double> buf(window);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t d = -r; d <= r; ++d) {
      const auto j = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) + d, 0,
                                                static_cast<std::ptrdiff_t>(n) - 1);
      buf[static_cast<std::size_t>(d + r)] = x[static_cast<std::size_t>(j)];
    }
    auto mid = buf.begin() + r;
    std::nth_element(buf.begin(), mid, buf.end());
    out[i] = *mid;
  }
  return out;
}

std::vector<double> wiener_filter(std::span<const double> x, std::size_t window,
                                  std::optional<double> noise_var) {
  require_odd(window, "wiener_filter");
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t r = window / 2;
  const auto mu = local_mean(x, r);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = x[i] * x[i];
  const auto mu2 = local_mean(sq, r);
  std::vector<double> var(n);
  for (std::size_t i = 0; i < n; ++i) var[i] = std::max(mu2[i] - mu[i] * mu[i], 0.0);
  double nu = 0.0;
  if (noise_var) {
    nu = *noise_var;
  } else {
    for (double v : var) nu += v;
    nu /= static_cast<double>(n);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double denom = std::max(var[i], nu);
    const double gain = denom > 0.0 ? std::max(var[i] - nu, 0.0) / denom : 0.0;
    out[i] = mu[i] + gain * (x[i] - mu[i]);
  }
  return out;
}

}  // namespace rinst
