#include "rinst/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Core>

#include "rinst/errors.hpp"
#include "rinst/robust.hpp"

namespace rinst {

namespace {

std::string shape_str(const TensorBuf& t) {
  return "[" + std::to_string(t.channels()) + "x" + std::to_string(t.length()) +
         "]";
}

std::size_t conv_pad(const ConvOptions& opt) { return (opt.kernel_size - 1) / 2; }

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

// All operands live in AlignedVector storage, which keeps Eigen's
// alignment-dependent kernel paths fixed across runs.
ConstMatMap cmap(const double* data, std::size_t rows, std::size_t cols) {
  return {data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
MatMap mmap(double* data, std::size_t rows, std::size_t cols) {
  return {data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Conv1d: return "conv1d";
    case OpKind::LeakyRelu: return "leaky_relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::UpsampleNearest: return "upsample_nearest";
    case OpKind::ConcatChannels: return "concat_channels";
    case OpKind::SliceLength: return "slice_length";
    case OpKind::PadReflectRight: return "pad_reflect_right";
    case OpKind::ChannelNorm: return "channel_norm";
    case OpKind::Linear: return "linear";
    case OpKind::HuberFit: return "huber_fit";
    case OpKind::SquaredFit: return "squared_fit";
    case OpKind::Sum: return "sum";
    case OpKind::HalfSquaredNorm: return "half_squared_norm";
  }
  return "?";
}

std::size_t conv_output_length(std::size_t length, const ConvOptions& opt) {
  const std::size_t padded = length + 2 * conv_pad(opt);
  return (padded - opt.kernel_size) / opt.stride + 1;
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

Tape::Var Tape::push(TapeNode node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Tape::Var Tape::leaf(TensorBuf value, bool requires_grad,
                     std::string_view label) {
  TapeNode n;
  n.kind = OpKind::Leaf;
  n.value = std::move(value);
  n.value.drop_grad();
  n.requires_grad = requires_grad;
  n.label = label;
  return push(std::move(n));
}

Tape::Var Tape::conv1d(Var x, Var weight, Var bias, const ConvOptions& opt) {
  const TensorBuf& xv = value(x);
  const TensorBuf& wv = value(weight);
  const TensorBuf& bv = value(bias);
  const std::size_t k = opt.kernel_size;
  if (k % 2 == 0) throw InvalidArgument("conv1d: kernel size must be odd");
  if (opt.stride != 1 && opt.stride != 2) {
    throw InvalidArgument("conv1d: stride must be 1 or 2");
  }
  const std::size_t cin = xv.channels();
  const std::size_t cout = wv.channels();
  if (wv.length() != cin * k) {
    throw InvalidArgument("conv1d: kernel bank " + shape_str(wv) +
                          " expects Cin*k = " + std::to_string(wv.length()) +
                          " but input has " + std::to_string(cin) +
                          " channels (k=" + std::to_string(k) + ")");
  }
  if (bv.size() != cout) {
    throw InvalidArgument("conv1d: bias size " + std::to_string(bv.size()) +
                          " != Cout " + std::to_string(cout));
  }
  const std::size_t len = xv.length();
  const std::size_t pad = conv_pad(opt);
  // Reflection needs at least pad+1 samples; beyond that any length works.
  if (len < pad + 1 || len == 0) {
    throw InvalidArgument("conv1d: input length " + std::to_string(len) +
                          " too short for kernel " + std::to_string(k));
  }
  const std::size_t out_len = conv_output_length(len, opt);
  const std::size_t s = opt.stride;

  // im2col: cols[ci*k + j][t] = xpad[ci][t*stride + j]. Saved for backward.
  const std::size_t rows = cin * k;
  AlignedVector cols(rows * out_len);
  for (std::size_t ci = 0; ci < cin; ++ci) {
    const auto src = xv.row(ci);
    for (std::size_t j = 0; j < k; ++j) {
      double* dst = cols.data() + (ci * k + j) * out_len;
      for (std::size_t t = 0; t < out_len; ++t) {
        const auto i = static_cast<std::ptrdiff_t>(t * s + j) -
                       static_cast<std::ptrdiff_t>(pad);
        if (opt.pad == PadMode::Reflect) {
          dst[t] = src[reflect_index(i, len)];
        } else {
          dst[t] = (i >= 0 && i < static_cast<std::ptrdiff_t>(len))
                       ? src[static_cast<std::size_t>(i)]
                       : 0.0;
        }
      }
    }
  }

  TensorBuf out(cout, out_len);
  mmap(out.data().data(), cout, out_len).noalias() =
      cmap(wv.data().data(), cout, rows) * cmap(cols.data(), rows, out_len);
  for (std::size_t co = 0; co < cout; ++co) {
    const double b = bv.data()[co];
    for (double& v : out.row(co)) v += b;
  }

  TapeNode n;
  n.kind = OpKind::Conv1d;
  n.inputs = {x.id, weight.id, bias.id};
  n.value = std::move(out);
  n.requires_grad = node(x).requires_grad || node(weight).requires_grad ||
                    node(bias).requires_grad;
  n.saved = std::move(cols);
  n.conv = opt;
  return push(std::move(n));
}

Tape::Var Tape::leaky_relu(Var x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw InvalidArgument("leaky_relu: slope must lie in (0, 1)");
  }
  const TensorBuf& xv = value(x);
  TensorBuf out(xv.channels(), xv.length());
  auto od = out.data();
  auto xd = xv.data();
  for (std::size_t i = 0; i < xd.size(); ++i) {
    od[i] = xd[i] > 0.0 ? xd[i] : slope * xd[i];
  }
  TapeNode n;
  n.kind = OpKind::LeakyRelu;
  n.inputs = {x.id};
  n.value = std::move(out);
  n.requires_grad = node(x).requires_grad;
  n.scalar = slope;
  return push(std::move(n));
}

Tape::Var Tape::sigmoid(Var x) {
  const TensorBuf& xv = value(x);
  TensorBuf out(xv.channels(), xv.length());
  auto od = out.data();
  auto xd = xv.data();
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const double v = xd[i];
    if (v >= 0.0) {
      od[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      od[i] = e / (1.0 + e);
    }
  }
  TapeNode n;
  n.kind = OpKind::Sigmoid;
  n.inputs = {x.id};
  n.value = std::move(out);
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n));
}

Tape::Var Tape::upsample_nearest(Var x) {
  const TensorBuf& xv = value(x);
  TensorBuf out(xv.channels(), 2 * xv.length());
  for (std::size_t c = 0; c < xv.channels(); ++c) {
    const auto src = xv.row(c);
    auto dst = out.row(c);
    for (std::size_t t = 0; t < src.size(); ++t) {
      dst[2 * t] = src[t];
      dst[2 * t + 1] = src[t];
    }
  }
  TapeNode n;
  n.kind = OpKind::UpsampleNearest;
  n.inputs = {x.id};
  n.value = std::move(out);
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n));
}

Tape::Var Tape::concat_channels(Var a, Var b) {
  const TensorBuf& av = value(a);
  const TensorBuf& bv = value(b);
  if (av.length() != bv.length()) {
    throw InvalidArgument("concat_channels: length mismatch " + shape_str(av) +
                          " vs " + shape_str(bv));
  }
  std::vector<double> data;
  data.reserve(av.size() + bv.size());
  data.insert(data.end(), av.data().begin(), av.data().end());
  data.insert(data.end(), bv.data().begin(), bv.data().end());
  TapeNode n;
  n.kind = OpKind::ConcatChannels;
  n.inputs = {a.id, b.id};
  n.value = TensorBuf(av.channels() + bv.channels(), av.length(), std::move(data));
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Tape::Var Tape::slice_length(Var x, std::size_t start, std::size_t length) {
  const TensorBuf& xv = value(x);
  if (start + length > xv.length()) {
    throw InvalidArgument("slice_length: range exceeds input length");
  }
  TensorBuf out(xv.channels(), length);
  for (std::size_t c = 0; c < xv.channels(); ++c) {
    const auto src = xv.row(c).subspan(start, length);
    std::copy(src.begin(), src.end(), out.row(c).begin());
  }
  TapeNode n;
  n.kind = OpKind::SliceLength;
  n.inputs = {x.id};
  n.value = std::move(out);
  n.requires_grad = node(x).requires_grad;
  n.offset = start;
  return push(std::move(n));
}

Tape::Var Tape::pad_reflect_right(Var x, std::size_t extra) {
  const TensorBuf& xv = value(x);
  const std::size_t len = xv.length();
  if (extra > 0 && extra + 1 > len) {
    throw InvalidArgument("pad_reflect_right: padding exceeds input length");
  }
  TensorBuf out(xv.channels(), len + extra);
  for (std::size_t c = 0; c < xv.channels(); ++c) {
    const auto src = xv.row(c);
    auto dst = out.row(c);
    std::copy(src.begin(), src.end(), dst.begin());
    for (std::size_t t = len; t < len + extra; ++t) dst[t] = src[2 * (len - 1) - t];
  }
  TapeNode n;
  n.kind = OpKind::PadReflectRight;
  n.inputs = {x.id};
  n.value = std::move(out);
  n.requires_grad = node(x).requires_grad;
  n.offset = extra;
  return push(std::move(n));
}

Tape::Var Tape::channel_norm(Var x, Var scale, Var shift, double eps) {
  const TensorBuf& xv = value(x);
  const TensorBuf& sc = value(scale);
  const TensorBuf& sh = value(shift);
  const std::size_t ch = xv.channels();
  const std::size_t len = xv.length();
  if (len < 2) throw InvalidArgument("channel_norm: length must be >= 2");
  if (!(eps > 0.0)) throw InvalidArgument("channel_norm: eps must be positive");
  if (sc.size() != ch || sh.size() != ch) {
    throw InvalidArgument("channel_norm: scale/shift size mismatch");
  }
  TensorBuf out(ch, len);
  AlignedVector xhat(ch * len);
  AlignedVector inv_std(ch);
  for (std::size_t c = 0; c < ch; ++c) {
    const auto r = xv.row(c);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(len);
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(len);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[c] = is;
    auto o = out.row(c);
    for (std::size_t t = 0; t < len; ++t) {
      const double h = (r[t] - mean) * is;
      xhat[c * len + t] = h;
      o[t] = h * sc.data()[c] + sh.data()[c];
    }
  }
  TapeNode n;
  n.kind = OpKind::ChannelNorm;
  n.inputs = {x.id, scale.id, shift.id};
  n.value = std::move(out);
  n.requires_grad = node(x).requires_grad || node(scale).requires_grad ||
                    node(shift).requires_grad;
  n.saved = std::move(xhat);
  n.saved_aux = std::move(inv_std);
  n.scalar = eps;
  return push(std::move(n));
}

Tape::Var Tape::linear(Var x, std::shared_ptr<const LinearMap> map) {
  const TensorBuf& xv = value(x);
  if (!map || xv.length() != map->in_length) {
    throw InvalidArgument("linear: input length does not match operator");
  }
  TensorBuf out(xv.channels(), map->out_length);
  for (std::size_t c = 0; c < xv.channels(); ++c) map->apply(xv.row(c), out.row(c));
  TapeNode n;
  n.kind = OpKind::Linear;
  n.inputs = {x.id};
  n.value = std::move(out);
  n.requires_grad = node(x).requires_grad;
  n.map = std::move(map);
  return push(std::move(n));
}

Tape::Var Tape::huber_fit(Var x, const TensorBuf& target, double lambda) {
  const TensorBuf& xv = value(x);
  if (!xv.same_shape(target)) {
    throw InvalidArgument("huber_fit: prediction " + shape_str(xv) +
                          " vs target " + shape_str(target));
  }
  AlignedVector residual(xv.size());
  for (std::size_t i = 0; i < residual.size(); ++i) {
    residual[i] = target.data()[i] - xv.data()[i];
  }
  TapeNode n;
  n.kind = OpKind::HuberFit;
  n.inputs = {x.id};
  n.value = TensorBuf(1, 1, huber_value(residual, lambda));
  n.requires_grad = node(x).requires_grad;
  n.saved = std::move(residual);
  n.scalar = lambda;
  return push(std::move(n));
}

Tape::Var Tape::squared_fit(Var x, const TensorBuf& target) {
  const TensorBuf& xv = value(x);
  if (!xv.same_shape(target)) {
    throw InvalidArgument("squared_fit: prediction " + shape_str(xv) +
                          " vs target " + shape_str(target));
  }
  AlignedVector residual(xv.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < residual.size(); ++i) {
    residual[i] = target.data()[i] - xv.data()[i];
    acc += residual[i] * residual[i];
  }
  TapeNode n;
  n.kind = OpKind::SquaredFit;
  n.inputs = {x.id};
  n.value = TensorBuf(1, 1, 0.5 * acc);
  n.requires_grad = node(x).requires_grad;
  n.saved = std::move(residual);
  return push(std::move(n));
}

Tape::Var Tape::sum(Var x) {
  double acc = 0.0;
  for (double v : value(x).data()) acc += v;
  TapeNode n;
  n.kind = OpKind::Sum;
  n.inputs = {x.id};
  n.value = TensorBuf(1, 1, acc);
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n));
}

Tape::Var Tape::half_squared_norm(Var x) {
  double acc = 0.0;
  for (double v : value(x).data()) acc += v * v;
  TapeNode n;
  n.kind = OpKind::HalfSquaredNorm;
  n.inputs = {x.id};
  n.value = TensorBuf(1, 1, 0.5 * acc);
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n));
}

std::optional<std::size_t> Tape::first_non_finite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].value.all_finite()) return i;
  }
  return std::nullopt;
}

std::string Tape::describe(std::size_t id) const {
  const TapeNode& n = nodes_.at(id);
  std::ostringstream os;
  os << "node " << id << " (" << op_name(n.kind);
  if (!n.label.empty()) os << " '" << n.label << "'";
  os << ", shape " << shape_str(n.value) << ")";
  return os.str();
}

void Tape::backward(Var loss) {
  TapeNode& root = at(loss);
  if (root.value.size() != 1) {
    throw InvalidArgument("backward: loss must be a scalar node, got " +
                          shape_str(root.value));
  }
  if (!root.value.all_finite()) {
    const auto bad = first_non_finite();
    throw NumericalError("backward: non-finite loss; first non-finite value at " +
                         describe(bad.value_or(loss.id)));
  }
  for (auto& n : nodes_) n.value.drop_grad();
  root.value.ensure_grad();
  root.value.grad()[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    TapeNode& n = nodes_[i];
    if (!n.requires_grad || !n.value.has_grad() || n.kind == OpKind::Leaf) continue;
    backward_node(n);
  }
}

void Tape::backward_node(TapeNode& n) {
  const auto g = n.value.grad();
  auto input_grad = [this](std::size_t id) -> std::span<double> {
    TapeNode& in = nodes_[id];
    if (!in.requires_grad) return {};
    in.value.ensure_grad();
    return in.value.grad();
  };

  switch (n.kind) {
    case OpKind::Leaf:
      break;

    case OpKind::Conv1d: {
      const TensorBuf& xv = nodes_[n.inputs[0]].value;
      const TensorBuf& wv = nodes_[n.inputs[1]].value;
      auto gx = input_grad(n.inputs[0]);
      auto gw = input_grad(n.inputs[1]);
      auto gb = input_grad(n.inputs[2]);
      const std::size_t k = n.conv.kernel_size;
      const std::size_t s = n.conv.stride;
      const std::size_t pad = conv_pad(n.conv);
      const std::size_t cin = xv.channels();
      const auto cout = static_cast<Eigen::Index>(wv.channels());
      const std::size_t len = xv.length();
      const std::size_t out_len = n.value.length();
      const auto rows = static_cast<Eigen::Index>(cin * k);
      const auto ol = static_cast<Eigen::Index>(out_len);
      const auto g_mat = cmap(g.data(), static_cast<std::size_t>(cout), out_len);
      if (!gb.empty()) {
        for (Eigen::Index co = 0; co < cout; ++co) {
          double acc = 0.0;
          for (Eigen::Index t = 0; t < ol; ++t) acc += g_mat(co, t);
          gb[static_cast<std::size_t>(co)] += acc;
        }
      }
      if (!gw.empty()) {
        mmap(gw.data(), static_cast<std::size_t>(cout), static_cast<std::size_t>(rows)).noalias() +=
            g_mat * cmap(n.saved.data(), static_cast<std::size_t>(rows), out_len).transpose();
      }
      if (!gx.empty()) {
        const RowMatrix gcols =
            cmap(wv.data().data(), static_cast<std::size_t>(cout), static_cast<std::size_t>(rows))
                .transpose() *
            g_mat;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          double* dst = gx.data() + ci * len;
          for (std::size_t j = 0; j < k; ++j) {
            const double* src = gcols.data() + (ci * k + j) * out_len;
            for (std::size_t t = 0; t < out_len; ++t) {
              const auto i = static_cast<std::ptrdiff_t>(t * s + j) -
                             static_cast<std::ptrdiff_t>(pad);
              if (n.conv.pad == PadMode::Reflect) {
                dst[reflect_index(i, len)] += src[t];
              } else if (i >= 0 && i < static_cast<std::ptrdiff_t>(len)) {
                dst[static_cast<std::size_t>(i)] += src[t];
              }
            }
          }
        }
      }
      break;
    }

    case OpKind::LeakyRelu: {
      auto gx = input_grad(n.inputs[0]);
      const auto xd = nodes_[n.inputs[0]].value.data();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        gx[i] += xd[i] > 0.0 ? g[i] : n.scalar * g[i];
      }
      break;
    }

    case OpKind::Sigmoid: {
      auto gx = input_grad(n.inputs[0]);
      const auto yd = n.value.data();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * yd[i] * (1.0 - yd[i]);
      break;
    }

    case OpKind::UpsampleNearest: {
      auto gx = input_grad(n.inputs[0]);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[2 * i] + g[2 * i + 1];
      break;
    }

    case OpKind::ConcatChannels: {
      auto ga = input_grad(n.inputs[0]);
      auto gb = input_grad(n.inputs[1]);
      const std::size_t na = nodes_[n.inputs[0]].value.size();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
      break;
    }

    case OpKind::SliceLength: {
      auto gx = input_grad(n.inputs[0]);
      if (gx.empty()) break;
      const std::size_t in_len = nodes_[n.inputs[0]].value.length();
      const std::size_t len = n.value.length();
      for (std::size_t c = 0; c < n.value.channels(); ++c) {
        for (std::size_t t = 0; t < len; ++t) {
          gx[c * in_len + n.offset + t] += g[c * len + t];
        }
      }
      break;
    }

    case OpKind::PadReflectRight: {
      auto gx = input_grad(n.inputs[0]);
      if (gx.empty()) break;
      const std::size_t in_len = nodes_[n.inputs[0]].value.length();
      const std::size_t len = n.value.length();
      for (std::size_t c = 0; c < n.value.channels(); ++c) {
        for (std::size_t t = 0; t < len; ++t) {
          const std::size_t src = t < in_len ? t : 2 * (in_len - 1) - t;
          gx[c * in_len + src] += g[c * len + t];
        }
      }
      break;
    }

    case OpKind::ChannelNorm: {
      const TensorBuf& sc = nodes_[n.inputs[1]].value;
      auto gx = input_grad(n.inputs[0]);
      auto gscale = input_grad(n.inputs[1]);
      auto gshift = input_grad(n.inputs[2]);
      const std::size_t ch = n.value.channels();
      const std::size_t len = n.value.length();
      const double inv_n = 1.0 / static_cast<double>(len);
      for (std::size_t c = 0; c < ch; ++c) {
        const double* gr = g.data() + c * len;
        const double* h = n.saved.data() + c * len;
        double sum_g = 0.0;
        double sum_gh = 0.0;
        for (std::size_t t = 0; t < len; ++t) {
          sum_g += gr[t];
          sum_gh += gr[t] * h[t];
        }
        if (!gscale.empty()) gscale[c] += sum_gh;
        if (!gshift.empty()) gshift[c] += sum_g;
        if (!gx.empty()) {
          const double gamma = sc.data()[c];
          const double is = n.saved_aux[c];
          const double mean_g = sum_g * inv_n;
          const double mean_gh = sum_gh * inv_n;
          double* dst = gx.data() + c * len;
          for (std::size_t t = 0; t < len; ++t) {
            dst[t] += gamma * is * (gr[t] - mean_g - h[t] * mean_gh);
          }
        }
      }
      break;
    }

    case OpKind::Linear: {
      auto gx = input_grad(n.inputs[0]);
      if (gx.empty()) break;
      const std::size_t in_len = n.map->in_length;
      std::vector<double> tmp(in_len);
      for (std::size_t c = 0; c < n.value.channels(); ++c) {
        n.map->adjoint(n.value.grad().subspan(c * n.map->out_length, n.map->out_length),
                       tmp);
        for (std::size_t t = 0; t < in_len; ++t) gx[c * in_len + t] += tmp[t];
      }
      break;
    }

    case OpKind::HuberFit: {
      auto gx = input_grad(n.inputs[0]);
      const double lam = n.scalar;
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const double r = n.saved[i];
        const double dr = std::abs(r) <= lam ? r : (r > 0.0 ? lam : -lam);
        gx[i] -= g[0] * dr;
      }
      break;
    }

    case OpKind::SquaredFit: {
      auto gx = input_grad(n.inputs[0]);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] -= g[0] * n.saved[i];
      break;
    }

    case OpKind::Sum: {
      auto gx = input_grad(n.inputs[0]);
      for (double& v : gx) v += g[0];
      break;
    }

    case OpKind::HalfSquaredNorm: {
      auto gx = input_grad(n.inputs[0]);
      const auto xd = nodes_[n.inputs[0]].value.data();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * xd[i];
      break;
    }
  }
}

}  // namespace rinst
