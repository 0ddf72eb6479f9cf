#include <algorithm>
#include <cmath>

#include "rinst/baselines.hpp"
#include "rinst/errors.hpp"

namespace rinst {

namespace {

std::vector<std::size_t> observed_indices(std::span<const double> y,
                                          std::span<const double> mask) {
  if (y.size() != mask.size()) {
    throw InvalidArgument("impute: series and mask lengths differ");
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0.0) idx.push_back(i);
  }
  if (idx.empty()) throw InvalidArgument("impute: no observed entries");
  return idx;
}

// Observed values inside a centered window, widened symmetrically until at
// least one observed sample falls in it.
std::vector<double> window_values(std::span<const double> y,
                                  std::span<const double> mask, std::size_t i,
                                  std::size_t window) {
  const auto n = static_cast<std::ptrdiff_t>(y.size());
  auto r = static_cast<std::ptrdiff_t>(window / 2);
  std::vector<double> vals;
  for (;;) {
    vals.clear();
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - r);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(i) + r);
    for (auto j = lo; j <= hi; ++j) {
      if (mask[static_cast<std::size_t>(j)] != 0.0) vals.push_back(y[static_cast<std::size_t>(j)]);
    }
    if (!vals.empty() || (lo == 0 && hi == n - 1)) return vals;
    ++r;
  }
}

void require_odd(std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw InvalidArgument("impute: window must be odd");
  }
}

}  // namespace

std::vector<double> impute_zero(std::span<const double> y, std::span<const double> mask) {
  observed_indices(y, mask);
  std::vector<double> out(y.begin(), y.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i] == 0.0) out[i] = 0.0;
  }
  return out;
}

std::vector<double> impute_mean(std::span<const double> y, std::span<const double> mask,
                                std::size_t window) {
  require_odd(window);
  observed_indices(y, mask);
  std::vector<double> out(y.begin(), y.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i] != 0.0) continue;
    const auto vals = window_values(y, mask, i, window);
    double acc = 0.0;
    for (double v : vals) acc += v;
    out[i] = acc / static_cast<double>(vals.size());
  }
  return out;
}

std::vector<double> impute_median(std::span<const double> y,
                                  std::span<const double> mask, std::size_t window) {
  require_odd(window);
  observed_indices(y, mask);
  std::vector<double> out(y.begin(), y.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i] != 0.0) continue;
    auto vals = window_values(y, mask, i, window);
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size() / 2;
    out[i] = vals.size() % 2 == 1 ? vals[m] : 0.5 * (vals[m - 1] + vals[m]);
  }
  return out;
}

std::vector<double> impute_spline(std::span<const double> y,
                                  std::span<const double> mask) {
  const auto idx = observed_indices(y, mask);
  if (idx.size() < 2) {
    throw InvalidArgument("impute_spline: need at least two observed entries");
  }
  const std::size_t m = idx.size();
  std::vector<double> xs(m);
  std::vector<double> ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    xs[i] = static_cast<double>(idx[i]);
    ys[i] = y[idx[i]];
  }
  // Natural spline second derivatives M: tridiagonal system on the interior
  // knots, M_0 = M_{m-1} = 0. Thomas algorithm.
  std::vector<double> second(m, 0.0);
  if (m > 2) {
    const std::size_t k = m - 2;
    std::vector<double> diag(k);
    std::vector<double> upper(k);
    std::vector<double> rhs(k);
    for (std::size_t i = 1; i + 1 < m; ++i) {
      const double h0 = xs[i] - xs[i - 1];
      const double h1 = xs[i + 1] - xs[i];
      diag[i - 1] = 2.0 * (h0 + h1);
      upper[i - 1] = h1;
      rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < k; ++i) {
      const double lower = xs[i + 1] - xs[i];  // h_{i} for row i
      const double w = lower / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    second[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) {
      second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
    }
  }

  std::vector<double> out(y.begin(), y.end());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i] != 0.0) continue;
    const auto t = static_cast<double>(i);
    if (t < xs.front()) {
      out[i] = ys.front();
      continue;
    }
    if (t > xs.back()) {
      out[i] = ys.back();
      continue;
    }
    while (seg + 1 < m && xs[seg + 1] < t) ++seg;
    const double h = xs[seg + 1] - xs[seg];
    const double a = (xs[seg + 1] - t) / h;
    const double b = (t - xs[seg]) / h;
    out[i] = a * ys[seg] + b * ys[seg + 1] +
             ((a * a * a - a) * second[seg] + (b * b * b - b) * second[seg + 1]) *
                 h * h / 6.0;
  }
  return out;
}

std::vector<double> impute_linear(std::span<const double> y,
                                  std::span<const double> mask) {
  const auto idx = observed_indices(y, mask);
  std::vector<double> out(y.begin(), y.end());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i] != 0.0) continue;
    if (i < idx.front()) {
      out[i] = y[idx.front()];
      continue;
    }
    if (i > idx.back()) {
      out[i] = y[idx.back()];
      continue;
    }
    while (seg + 1 < idx.size() && idx[seg + 1] < i) ++seg;
    const auto x0 = static_cast<double>(idx[seg]);
    const auto x1 = static_cast<double>(idx[seg + 1]);
    const double w = (static_cast<double>(i) - x0) / (x1 - x0);
    out[i] = (1.0 - w) * y[idx[seg]] + w * y[idx[seg + 1]];
  }
  return out;
}

}  // namespace rinst
