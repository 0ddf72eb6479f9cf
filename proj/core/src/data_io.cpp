#include "rinst/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rinst/errors.hpp"
#include "rinst/rng.hpp"

namespace rinst {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delim)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

void normalize_rows(TensorBuf& t) {
  for (std::size_t c = 0; c < t.channels(); ++c) {
    auto r = t.row(c);
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    const double mn = *lo;
    const double span = *hi - mn;
    for (double& v : r) v = span > 0.0 ? (v - mn) / span : 0.0;
  }
}

}  // namespace

void Series::validate() const {
  if (values.length() < 8) {
    throw InvalidArgument("Series '" + name + "': length " +
                          std::to_string(values.length()) + " below minimum 8");
  }
  if (values.channels() == 0) throw InvalidArgument("Series '" + name + "': no channels");
  if (!values.all_finite()) {
    throw InvalidArgument("Series '" + name + "': contains non-finite values");
  }
}

Series load_series_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  if (options.columns.empty()) throw IoError("load_series_csv: no columns selected");
  std::vector<std::vector<double>> cols(options.columns.size());
  std::string line;
  std::size_t lineno = 0;
  bool header_pending = options.has_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto cells = split(line, options.delimiter);
    for (std::size_t j = 0; j < options.columns.size(); ++j) {
      const std::size_t c = options.columns[j];
      if (c >= cells.size()) {
        throw IoError(path + ":" + std::to_string(lineno) + ": missing column " +
                      std::to_string(c));
      }
      double v = 0.0;
      if (!parse_double(cells[c], v)) {
        throw IoError(path + ":" + std::to_string(lineno) + ": non-numeric cell '" +
                      cells[c] + "' in column " + std::to_string(c));
      }
      cols[j].push_back(v);
    }
  }
  if (cols.front().empty()) throw IoError(path + ": no data rows");
  const std::size_t n = cols.front().size();
  std::vector<double> data;
  data.reserve(n * cols.size());
  for (const auto& c : cols) data.insert(data.end(), c.begin(), c.end());
  Series s;
  s.values = TensorBuf(cols.size(), n, std::move(data));
  s.name = path;
  s.meta.source = path;
  s.meta.columns = options.columns;
  s.meta.segment_start = 0;
  s.meta.segment_length = n;
  // Length is checked where the series enters a pipeline.
  if (!s.values.all_finite()) throw IoError(path + ": non-finite value");
  return s;
}

Normalized minmax_normalize(const Series& s) {
  Normalized out;
  out.series = s;
  for (std::size_t c = 0; c < s.channels(); ++c) {
    const auto r = s.values.row(c);
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    if (!(*hi > *lo)) {
      throw InvalidArgument("minmax_normalize: channel " + std::to_string(c) +
                            " is constant");
    }
    out.params.min.push_back(*lo);
    out.params.max.push_back(*hi);
    auto dst = out.series.values.row(c);
    const double span = *hi - *lo;
    for (std::size_t t = 0; t < r.size(); ++t) dst[t] = (r[t] - *lo) / span;
  }
  return out;
}

Series denormalize(const Series& s, const NormParams& params) {
  if (params.min.size() != s.channels() || params.max.size() != s.channels()) {
    throw InvalidArgument("denormalize: parameter/channel count mismatch");
  }
  Series out = s;
  for (std::size_t c = 0; c < s.channels(); ++c) {
    const double span = params.max[c] - params.min[c];
    for (double& v : out.values.row(c)) v = v * span + params.min[c];
  }
  return out;
}

Series segment(const Series& s, std::size_t start, std::size_t length) {
  if (length == 0 || start > s.length() || length > s.length() - start) {
    throw InvalidArgument("segment: [" + std::to_string(start) + ", " +
                          std::to_string(start + length) + ") outside series of length " +
                          std::to_string(s.length()));
  }
  Series out;
  out.name = s.name;
  out.meta = s.meta;
  out.meta.segment_start = s.meta.segment_start + start;
  out.meta.segment_length = length;
  out.values = TensorBuf(s.channels(), length);
  for (std::size_t c = 0; c < s.channels(); ++c) {
    const auto src = s.values.row(c).subspan(start, length);
    std::copy(src.begin(), src.end(), out.values.row(c).begin());
  }
  return out;
}

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "sines") return SynthKind::Sines;
  if (name == "seasonal_trend") return SynthKind::SeasonalTrend;
  if (name == "piecewise") return SynthKind::Piecewise;
  if (name == "multichannel") return SynthKind::Multichannel;
  throw InvalidArgument("unknown synthetic kind '" + name + "'");
}

std::string synth_kind_name(SynthKind kind) {
  switch (kind) {
    case SynthKind::Sines: return "sines";
    case SynthKind::SeasonalTrend: return "seasonal_trend";
    case SynthKind::Piecewise: return "piecewise";
    case SynthKind::Multichannel: return "multichannel";
  }
  return "?";
}

Series synth(SynthKind kind, std::size_t n, std::uint64_t seed,
             const SynthParams& params) {
  if (n < 64) throw InvalidArgument("synth: n must be >= 64");
  Rng rng(seed);
  const auto len = static_cast<double>(n);
  TensorBuf values;

  switch (kind) {
    case SynthKind::Sines: {
      // Cycles per series; ratios are irrational so no common period.
      const double base[3] = {3.0 * std::numbers::sqrt2, 5.0 * std::numbers::phi,
                              7.0 * std::numbers::e};
      const double amp[3] = {1.0, 0.6, 0.35};
      values = TensorBuf(1, n);
      for (int k = 0; k < 3; ++k) {
        const double f = base[k] * rng.uniform(0.9, 1.1);
        const double phase = rng.uniform(0.0, kTwoPi);
        for (std::size_t t = 0; t < n; ++t) {
          values(0, t) += amp[k] * std::sin(kTwoPi * f * static_cast<double>(t) / len + phase);
        }
      }
      break;
    }
    case SynthKind::SeasonalTrend: {
      const double daily = len / 16.0;
      const double slow = len / rng.uniform(1.8, 2.6);
      const double p1 = rng.uniform(0.0, kTwoPi);
      const double p2 = rng.uniform(0.0, kTwoPi);
      const double p3 = rng.uniform(0.0, kTwoPi);
      const double slope = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.8, 1.2);
      values = TensorBuf(1, n);
      for (std::size_t t = 0; t < n; ++t) {
        const auto tt = static_cast<double>(t);
        values(0, t) = std::sin(kTwoPi * tt / daily + p1) +
                       0.3 * std::sin(2.0 * kTwoPi * tt / daily + p2) +
                       0.6 * std::sin(kTwoPi * tt / slow + p3) + slope * tt / len;
      }
      break;
    }
    case SynthKind::Piecewise: {
      values = TensorBuf(1, n);
      const std::size_t segments = 6 + rng.index(5);
      auto cuts = rng.sample_without_replacement(n - 2, segments - 1);
      for (auto& c : cuts) c += 1;
      cuts.push_back(n);
      std::size_t start = 0;
      double level = rng.uniform();
      for (std::size_t s = 0; s < cuts.size(); ++s) {
        const std::size_t end = cuts[s];
        const bool ramp = rng.uniform() < 0.35;
        const double target = rng.uniform();
        for (std::size_t t = start; t < end; ++t) {
          const double w = ramp ? static_cast<double>(t - start) /
                                      static_cast<double>(std::max<std::size_t>(end - start, 1))
                                : 0.0;
          values(0, t) = (1.0 - w) * level + w * target;
        }
        level = ramp ? target : rng.uniform();
        start = end;
      }
      break;
    }
    case SynthKind::Multichannel: {
      const std::size_t channels = std::max<std::size_t>(params.channels, 1);
      constexpr int kLatent = 3;
      double freq[kLatent];
      double phase[kLatent];
      for (int k = 0; k < kLatent; ++k) {
        freq[k] = (2.0 + 3.5 * k) * rng.uniform(0.9, 1.1);
        phase[k] = rng.uniform(0.0, kTwoPi);
      }
      values = TensorBuf(channels, n);
      for (std::size_t c = 0; c < channels; ++c) {
        double w[kLatent];
        for (double& x : w) x = rng.uniform(0.3, 1.0);
        const double own_f = rng.uniform(15.0, 40.0);
        const double own_p = rng.uniform(0.0, kTwoPi);
        for (std::size_t t = 0; t < n; ++t) {
          const auto tt = static_cast<double>(t) / len;
          double v = 0.2 * std::sin(kTwoPi * own_f * tt + own_p);
          for (int k = 0; k < kLatent; ++k) v += w[k] * std::sin(kTwoPi * freq[k] * tt + phase[k]);
          values(c, t) = v;
        }
      }
      break;
    }
  }

  normalize_rows(values);
  Series s;
  s.values = std::move(values);
  s.name = synth_kind_name(kind);
  s.meta.source = "synth:" + s.name + ":" + std::to_string(n) + ":" + std::to_string(seed);
  s.meta.segment_length = n;
  s.validate();
  return s;
}

}  // namespace rinst
