#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rinst/tensor.hpp"

namespace rinst {

enum class PadMode { Reflect, Zero };

struct ConvOptions {
  std::size_t kernel_size = 3;  // odd
  std::size_t stride = 1;       // 1 or 2
  PadMode pad = PadMode::Reflect;
};

/// Output length of a "same"-padded conv: floor((L + 2*pad - k)/stride) + 1.
std::size_t conv_output_length(std::size_t length, const ConvOptions& opt);

/// Reflect an index into [0, n) without repeating the edge sample
/// (d c b | a b c d | c b a). Works for any offset, folding repeatedly.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

/// A channelwise linear map with its adjoint, used to fold a forward operator
/// into the tape.
struct LinearMap {
  std::size_t in_length = 0;
  std::size_t out_length = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
  std::function<void(std::span<const double>, std::span<double>)> adjoint;
};

enum class OpKind {
  Leaf,
  Conv1d,
  LeakyRelu,
  Sigmoid,
  UpsampleNearest,
  ConcatChannels,
  SliceLength,
  PadReflectRight,
  ChannelNorm,
  Linear,
  HuberFit,
  SquaredFit,
  Sum,
  HalfSquaredNorm,
};

std::string_view op_name(OpKind kind);

/// One recorded operation. `value` carries the forward result and, once
/// backward has reached the node, its gradient slot.
struct TapeNode {
  OpKind kind = OpKind::Leaf;
  std::vector<std::size_t> inputs;
  TensorBuf value;
  bool requires_grad = false;
  std::string_view label;  // non-owning; must outlive the tape

  // Saved forward intermediates for the backward rule.
  AlignedVector saved;
  AlignedVector saved_aux;
  ConvOptions conv;
  double scalar = 0.0;
  std::size_t offset = 0;
  std::shared_ptr<const LinearMap> map;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// which is a valid topological order; backward walks it in reverse.
class Tape {
 public:
  struct Var {
    std::size_t id = 0;
  };

  Var leaf(TensorBuf value, bool requires_grad = false,
           std::string_view label = {});

  /// x: [Cin, L]; weight: [Cout, Cin*k]; bias: [1, Cout].
  Var conv1d(Var x, Var weight, Var bias, const ConvOptions& opt);
  Var leaky_relu(Var x, double slope);
  Var sigmoid(Var x);
  Var upsample_nearest(Var x);  // factor 2
  Var concat_channels(Var a, Var b);
  Var slice_length(Var x, std::size_t start, std::size_t length);
  Var pad_reflect_right(Var x, std::size_t extra);
  /// Per-channel normalization over the length axis; scale/shift are [1, C].
  Var channel_norm(Var x, Var scale, Var shift, double eps);
  Var linear(Var x, std::shared_ptr<const LinearMap> map);

  /// sum_i huber(target_i - x_i; lambda)
  Var huber_fit(Var x, const TensorBuf& target, double lambda);
  /// 1/2 sum_i (target_i - x_i)^2
  Var squared_fit(Var x, const TensorBuf& target);
  Var sum(Var x);
  Var half_squared_norm(Var x);

  /// Reverse sweep from a scalar node. Throws NumericalError naming the first
  /// non-finite node if the loss is not finite.
  void backward(Var loss);

  const TensorBuf& value(Var v) const { return nodes_.at(v.id).value; }
  /// Empty span when the node received no gradient.
  std::span<const double> grad(Var v) const { return nodes_.at(v.id).value.grad(); }
  const TapeNode& node(Var v) const { return nodes_.at(v.id); }
  void set_label(Var v, std::string_view label) { nodes_.at(v.id).label = label; }
  std::size_t size() const { return nodes_.size(); }

  /// Index of the first node holding a non-finite value, if any.
  std::optional<std::size_t> first_non_finite() const;
  std::string describe(std::size_t id) const;

 private:
  Var push(TapeNode node);
  TapeNode& at(Var v) { return nodes_.at(v.id); }
  void backward_node(TapeNode& node);

  std::vector<TapeNode> nodes_;
};

}  // namespace rinst
