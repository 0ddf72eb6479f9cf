#include "rinst/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rinst/errors.hpp"

namespace rinst {

namespace {

void check(std::span<const double> a, std::span<const double> b, const char* who) {
  if (a.size() != b.size()) {
    throw InvalidArgument(std::string(who) + ": length mismatch (" +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw InvalidArgument(std::string(who) + ": empty input");
}

}  // namespace

double rmse(std::span<const double> truth, std::span<const double> estimate) {
  check(truth, estimate, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - estimate[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(truth.size()));
}

double mae(std::span<const double> truth, std::span<const double> estimate) {
  check(truth, estimate, "mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += std::abs(truth[i] - estimate[i]);
  return acc / static_cast<double>(truth.size());
}

double snr_db(std::span<const double> truth, std::span<const double> estimate) {
  check(truth, estimate, "snr_db");
  double signal = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    signal += truth[i] * truth[i];
    const double d = truth[i] - estimate[i];
    error += d * d;
  }
  if (signal == 0.0) throw InvalidArgument("snr_db: reference signal is all zeros");
  if (error == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / error);
}

ScoreRow score(std::span<const double> truth, std::span<const double> estimate) {
  return {rmse(truth, estimate), mae(truth, estimate), snr_db(truth, estimate),
          truth.size()};
}

}  // namespace rinst
