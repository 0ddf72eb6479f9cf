#pragma once

#include <cmath>
#include <vector>

#include "rinst/autodiff.hpp"
#include "rinst/rng.hpp"
#include "rinst/tensor.hpp"

namespace rinst::test {

inline TensorBuf random_tensor(std::size_t c, std::size_t l, Rng& rng, double lo = -1.0,
                               double hi = 1.0) {
  TensorBuf t(c, l);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace rinst::test
