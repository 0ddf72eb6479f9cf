#include <algorithm>
#include <cmath>

#include "rinst/autodiff.hpp"
#include "rinst/baselines.hpp"
#include "rinst/errors.hpp"
#include "rinst/robust.hpp"

namespace rinst {

const std::array<double, 8> kSym4Lowpass{
    -0.07576571478927333, -0.02963552764599851, 0.49761866763201545,
    0.8037387518059161,   0.29785779560527736,  -0.09921954357684722,
    -0.012603967262037833, 0.0322231006040427};

std::array<double, 8> sym4_highpass() {
  std::array<double, 8> g{};
  for (std::size_t j = 0; j < 8; ++j) {
    g[j] = (j % 2 == 0 ? 1.0 : -1.0) * kSym4Lowpass[7 - j];
  }
  return g;
}

namespace {

constexpr std::size_t kTaps = 8;

// One periodic analysis step: a[k] = sum_j h[j] x[(2k+j) mod n].
void analyze(std::span<const double> x, std::vector<double>& approx,
             std::vector<double>& detail) {
  const std::size_t n = x.size();
  const std::size_t half = n / 2;
  const auto g = sym4_highpass();
  approx.assign(half, 0.0);
  detail.assign(half, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t j = 0; j < kTaps; ++j) {
      const double v = x[(2 * k + j) % n];
      a += kSym4Lowpass[j] * v;
      d += g[j] * v;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

// Transpose of analyze.
std::vector<double> synthesize(std::span<const double> approx,
                               std::span<const double> detail) {
  const std::size_t half = approx.size();
  const std::size_t n = 2 * half;
  const auto g = sym4_highpass();
  std::vector<double> x(n, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    for (std::size_t j = 0; j < kTaps; ++j) {
      x[(2 * k + j) % n] += kSym4Lowpass[j] * approx[k] + g[j] * detail[k];
    }
  }
  return x;
}

void check_levels(std::size_t n, std::size_t levels) {
  if (levels == 0) throw InvalidArgument("dwt: levels must be >= 1");
  const std::size_t block = std::size_t{1} << levels;
  if (n % block != 0 || n / block < kTaps) {
    throw InvalidArgument("dwt: " + std::to_string(levels) +
                          " levels too many for length " + std::to_string(n) +
                          " (need a multiple of " + std::to_string(block) +
                          " with coarsest band >= " + std::to_string(kTaps) + ")");
  }
}

double median_abs(std::span<const double> v) {
  std::vector<double> a(v.size());
  std::transform(v.begin(), v.end(), a.begin(), [](double x) { return std::abs(x); });
  if (a.empty()) return 0.0;
  const std::size_t mid = a.size() / 2;
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
  double m = a[mid];
  if (a.size() % 2 == 0) {
    const double lo =
        *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lo);
  }
  return m;
}

}  // namespace

WaveletPyramid dwt(std::span<const double> x, const WaveletSpec& spec) {
  check_levels(x.size(), spec.levels);
  WaveletPyramid p;
  std::vector<double> current(x.begin(), x.end());
  for (std::size_t l = 0; l < spec.levels; ++l) {
    std::vector<double> a;
    std::vector<double> d;
    analyze(current, a, d);
    p.details.push_back(std::move(d));
    current = std::move(a);
  }
  p.approx = std::move(current);
  return p;
}

std::vector<double> idwt(const WaveletPyramid& pyramid) {
  std::vector<double> current = pyramid.approx;
  for (std::size_t l = pyramid.details.size(); l-- > 0;) {
    if (pyramid.details[l].size() != current.size()) {
      throw InvalidArgument("idwt: inconsistent band sizes");
    }
    current = synthesize(current, pyramid.details[l]);
  }
  return current;
}

double universal_threshold(double sigma_hat, std::size_t n) {
  return sigma_hat * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

std::vector<double> wavelet_denoise(std::span<const double> x,
                                    const WaveletSpec& spec) {
  const std::size_t n = x.size();
  if (n < 2 * kTaps) throw InvalidArgument("wavelet_denoise: series too short");
  std::size_t levels = std::max<std::size_t>(spec.levels, 1);
  // Shrink depth until the padded coarsest band is at least one filter long.
  auto padded_len = [n](std::size_t lv) {
    const std::size_t block = std::size_t{1} << lv;
    return (n + block - 1) / block * block;
  };
  while (levels > 1 && padded_len(levels) / (std::size_t{1} << levels) < kTaps) --levels;
  const std::size_t len = padded_len(levels);
  std::vector<double> ext(len);
  for (std::size_t i = 0; i < len; ++i) {
    ext[i] = x[reflect_index(static_cast<std::ptrdiff_t>(i), n)];
  }

  WaveletSpec local = spec;
  local.levels = levels;
  auto pyr = dwt(ext, local);
  double threshold = spec.fixed_threshold;
  if (spec.rule == ThresholdRule::Universal) {
    const double sigma_hat = median_abs(pyr.details.front()) / 0.6745;
    threshold = universal_threshold(sigma_hat, n);
  }
  for (auto& band : pyr.details) band = soft_threshold(band, threshold);
  auto rec = idwt(pyr);
  rec.resize(n);
  return rec;
}

}  // namespace rinst
