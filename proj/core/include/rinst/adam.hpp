#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rinst/tensor.hpp"

namespace rinst {

struct AdamState {
  std::vector<std::vector<double>> m;  // first moments, one per parameter
  std::vector<std::vector<double>> v;  // second moments
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Zeroed moment buffers shaped like `params`.
AdamState make_adam_state(std::span<const TensorBuf> params, double beta1 = 0.9,
                          double beta2 = 0.999, double eps = 1e-8);

/// One bias-corrected Adam update. `grads[i]` must match `params[i]`.
void adam_step(std::span<TensorBuf> params,
               std::span<const std::vector<double>> grads, AdamState& state,
               double lr);

}  // namespace rinst
