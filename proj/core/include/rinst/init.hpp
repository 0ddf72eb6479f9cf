#pragma once

#include <cstddef>
#include <cstdint>

#include "rinst/tensor.hpp"

namespace rinst {

/// He-style fan-in scale for a conv kernel bank: sqrt(2 / (Cin * k)).
double fan_in_std(std::size_t in_channels, std::size_t kernel_size);

/// [rows x cols] buffer of i.i.d. N(0, stddev^2) draws, fixed by `seed`.
TensorBuf gaussian_init(std::size_t rows, std::size_t cols, std::uint64_t seed,
                        double stddev);

}  // namespace rinst
