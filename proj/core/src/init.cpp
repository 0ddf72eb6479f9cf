#include "rinst/init.hpp"

#include <cmath>

#include "rinst/rng.hpp"

namespace rinst {

double fan_in_std(std::size_t in_channels, std::size_t kernel_size) {
  return std::sqrt(2.0 / static_cast<double>(in_channels * kernel_size));
}

TensorBuf gaussian_init(std::size_t rows, std::size_t cols, std::uint64_t seed,
                        double stddev) {
  Rng rng(seed);
  TensorBuf out(rows, cols);
  for (double& v : out.data()) v = rng.normal(0.0, stddev);
  return out;
}

}  // namespace rinst
