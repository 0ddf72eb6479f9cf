#include <cmath>

#include "rinst/baselines.hpp"
#include "rinst/errors.hpp"

namespace rinst {

// Condat's direct algorithm: walks the taut string, keeping the running
// bounds (vmin, vmax) of the current segment value and the partial sums
// (umin, umax) of the dual variable. Segments are emitted as soon as the
// bounds cross, otherwise the segment extends by one sample.
std::vector<double> tv_denoise(std::span<const double> y, double tv_lambda) {
  if (!(tv_lambda >= 0.0)) throw InvalidArgument("tv_denoise: tv_lambda must be >= 0");
  const auto width = static_cast<std::ptrdiff_t>(y.size());
  std::vector<double> out(y.begin(), y.end());
  if (width <= 1 || tv_lambda == 0.0) return out;

  const double lambda = tv_lambda;
  const double two_lambda = 2.0 * lambda;
  const double min_lambda = -lambda;
  std::ptrdiff_t k = 0;
  std::ptrdiff_t k0 = 0;
  std::ptrdiff_t kplus = 0;
  std::ptrdiff_t kminus = 0;
  double umin = lambda;
  double umax = min_lambda;
  double vmin = y[0] - lambda;
  double vmax = y[0] + lambda;

  auto at = [&](std::ptrdiff_t i) { return y[static_cast<std::size_t>(i)]; };
  auto emit = [&](std::ptrdiff_t upto, double v) {
    do {
      out[static_cast<std::size_t>(k0++)] = v;
    } while (k0 <= upto);
  };

  for (;;) {
    while (k == width - 1) {
      if (umin < 0.0) {
        emit(kminus, vmin);
        k = kminus = k0;
        vmin = at(k);
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {
        emit(kplus, vmax);
        k = kplus = k0;
        vmax = at(k);
        umax = min_lambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        emit(k, vmin);
        return out;
      }
    }
    umin += at(k + 1) - vmin;
    if (umin < min_lambda) {
      emit(kminus, vmin);
      k = kminus = kplus = k0;
      vmin = at(k);
      vmax = vmin + two_lambda;
      umin = lambda;
      umax = min_lambda;
      continue;
    }
    umax += at(k + 1) - vmax;
    if (umax > lambda) {
      emit(kplus, vmax);
      k = kminus = kplus = k0;
      vmax = at(k);
      vmin = vmax - two_lambda;
      umin = lambda;
      umax = min_lambda;
      continue;
    }
    ++k;
    if (umin >= lambda) {
      kminus = k;
      vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
      umin = lambda;
    }
    if (umax <= min_lambda) {
      kplus = k;
      vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
      umax = min_lambda;
    }
  }
}

}  // namespace rinst
