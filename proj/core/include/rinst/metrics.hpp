#pragma once

#include <cstddef>
#include <span>

namespace rinst {

struct ScoreRow {
  double rmse = 0.0;
  double mae = 0.0;
  double snr_db = 0.0;  // +inf for an exact reconstruction
  std::size_t n = 0;
};

/// All functions compare flattened buffers of equal length and throw
/// InvalidArgument otherwise.
double rmse(std::span<const double> truth, std::span<const double> estimate);
double mae(std::span<const double> truth, std::span<const double> estimate);
/// 10 log10(sum x^2 / sum (x - xhat)^2). Rejects an all-zero reference.
double snr_db(std::span<const double> truth, std::span<const double> estimate);

ScoreRow score(std::span<const double> truth, std::span<const double> estimate);

}  // namespace rinst
