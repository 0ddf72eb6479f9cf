#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rinst/tensor.hpp"

namespace rinst {

struct SampleMeta {
  std::string source;  // file path or synth descriptor
  std::vector<std::size_t> columns;
  std::size_t segment_start = 0;
  std::size_t segment_length = 0;
};

/// A [channels x length] series. Invariants: finite values, length >= 8.
struct Series {
  TensorBuf values;
  std::string name;
  SampleMeta meta;

  std::size_t channels() const { return values.channels(); }
  std::size_t length() const { return values.length(); }
  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

struct NormParams {
  std::vector<double> min;  // per channel
  std::vector<double> max;
};

struct CsvOptions {
  std::vector<std::size_t> columns{0};  // zero-based column indices
  char delimiter = ',';
  bool has_header = false;
};

/// One sample per row. Throws IoError naming the offending line for missing
/// files, short rows or non-numeric cells.
Series load_series_csv(const std::string& path, const CsvOptions& options = {});

struct Normalized {
  Series series;
  NormParams params;
};

/// Per-channel (x - min) / (max - min). Rejects constant channels.
Normalized minmax_normalize(const Series& s);
Series denormalize(const Series& s, const NormParams& params);

/// Contiguous copy of [start, start + length).
Series segment(const Series& s, std::size_t start, std::size_t length);

enum class SynthKind { Sines, SeasonalTrend, Piecewise, Multichannel };

SynthKind parse_synth_kind(const std::string& name);
std::string synth_kind_name(SynthKind kind);

struct SynthParams {
  std::size_t channels = 19;  // multichannel only
};

/// Deterministic synthetic stand-ins, min-max normalized to [0, 1]:
///   sines          sum of three incommensurate sinusoids
///   seasonal_trend daily-style cycle + slow seasonal swing + linear trend
///   piecewise      steps and ramps
///   multichannel   channels mixing shared latent sinusoids (correlated)
Series synth(SynthKind kind, std::size_t n, std::uint64_t seed,
             const SynthParams& params = {});

}  // namespace rinst
