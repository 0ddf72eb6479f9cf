#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rinst {

// ---------------------------------------------------------------------------
// Linear and rank filters

/// Sampled Gaussian kernel truncated at +-ceil(truncate*sigma), normalized to
/// unit sum.
std::vector<double> gaussian_kernel(double sigma, double truncate = 4.0);

/// Convolution with gaussian_kernel; reflection boundary.
std::vector<double> gaussian_filter(std::span<const double> x, double sigma,
                                    double truncate = 4.0);

/// Sliding median with replicated edges. `window` must be odd.
std::vector<double> median_filter(std::span<const double> x, std::size_t window);

/// Local adaptive Wiener filter:
///   out = mu + max(v - nu, 0) / max(v, nu) * (x - mu)
/// with local mean mu and variance v over the window (reflection boundary),
/// nu = noise_var or, if absent, the average local variance.
std::vector<double> wiener_filter(std::span<const double> x, std::size_t window,
                                  std::optional<double> noise_var = std::nullopt);

// ---------------------------------------------------------------------------
// Wavelets

/// sym4 decomposition low-pass filter (8 taps, 4 vanishing moments).
extern const std::array<double, 8> kSym4Lowpass;
/// Quadrature mirror high-pass: g[j] = (-1)^j h[7 - j].
std::array<double, 8> sym4_highpass();

enum class ThresholdRule { Universal, Fixed };

struct WaveletSpec {
  std::size_t levels = 4;
  ThresholdRule rule = ThresholdRule::Universal;
  double fixed_threshold = 0.0;  // used when rule == Fixed
};

struct WaveletPyramid {
  std::vector<double> approx;
  std::vector<std::vector<double>> details;  // details[0] is the finest band
};

/// Orthonormal periodic DWT. Length must be divisible by 2^levels and the
/// coarsest band must keep at least 8 samples.
WaveletPyramid dwt(std::span<const double> x, const WaveletSpec& spec);
std::vector<double> idwt(const WaveletPyramid& pyramid);

/// median(|finest details|) / 0.6745 * sqrt(2 ln n)
double universal_threshold(double sigma_hat, std::size_t n);

/// Soft-threshold all detail bands, keep the approximation. Arbitrary lengths
/// are handled by reflection padding to a multiple of 2^levels (levels are
/// reduced for short inputs).
std::vector<double> wavelet_denoise(std::span<const double> x,
                                    const WaveletSpec& spec = {});

// ---------------------------------------------------------------------------
// Total variation

/// Exact minimizer of 1/2||x - y||^2 + tv_lambda * sum |x_{i+1} - x_i|
/// (direct taut-string style algorithm, linear time in practice).
std::vector<double> tv_denoise(std::span<const double> y, double tv_lambda);

// ---------------------------------------------------------------------------
// Imputation. `mask` entries: 1 observed, 0 missing. Observed entries are
// always returned unchanged.

std::vector<double> impute_zero(std::span<const double> y, std::span<const double> mask);
std::vector<double> impute_mean(std::span<const double> y, std::span<const double> mask,
                                std::size_t window = 15);
std::vector<double> impute_median(std::span<const double> y,
                                  std::span<const double> mask,
                                  std::size_t window = 15);
/// Natural cubic spline through observed points; constant beyond the first
/// and last observed index. Needs at least two observed samples.
std::vector<double> impute_spline(std::span<const double> y,
                                  std::span<const double> mask);
/// Piecewise-linear interpolation across missing runs; edge runs hold the
/// nearest observed value.
std::vector<double> impute_linear(std::span<const double> y,
                                  std::span<const double> mask);

}  // namespace rinst
