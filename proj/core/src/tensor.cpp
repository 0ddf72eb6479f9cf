#include "rinst/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rinst/errors.hpp"

namespace rinst {

TensorBuf::TensorBuf(std::size_t channels, std::size_t length, double fill)
    : channels_(channels), length_(length), data_(channels * length, fill) {}

TensorBuf::TensorBuf(std::size_t channels, std::size_t length,
                     std::vector<double> data)
    : channels_(channels), length_(length), data_(data.begin(), data.end()) {
  if (data_.size() != channels * length) {
    throw InvalidArgument("TensorBuf: data size " +
                          std::to_string(data_.size()) + " != " +
                          std::to_string(channels) + "x" +
                          std::to_string(length));
  }
}

TensorBuf TensorBuf::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t channels = rows.size();
  const std::size_t length = channels ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(channels * length);
  for (const auto& r : rows) {
    if (r.size() != length) {
      throw InvalidArgument("TensorBuf::from_rows: ragged rows");
    }
    data.insert(data.end(), r.begin(), r.end());
  }
  return TensorBuf(channels, length, std::move(data));
}

TensorBuf TensorBuf::from_series(std::span<const double> values) {
  return TensorBuf(1, values.size(),
                   std::vector<double>(values.begin(), values.end()));
}

void TensorBuf::ensure_grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
}

void TensorBuf::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

bool TensorBuf::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace rinst
