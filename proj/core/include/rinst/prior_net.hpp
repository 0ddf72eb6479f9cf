#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rinst/autodiff.hpp"
#include "rinst/tensor.hpp"

namespace rinst {

/// Hyperparameters of the untrained encoder/decoder prior. Defaults are the
/// reference architecture: two 64-channel stride-2 encoders, two 4-channel
/// 1x1 skips, two 64-channel decoders with nearest upsampling.
struct NetConfig {
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 2;
  std::size_t skip_layers = 2;
  std::vector<std::size_t> enc_channels{64, 64};
  std::vector<std::size_t> dec_channels{64, 64};
  std::vector<std::size_t> skip_channels{4, 4};
  std::size_t enc_kernel = 3;
  std::size_t dec_kernel = 3;
  std::size_t skip_kernel = 1;
  double activation_slope = 0.01;
  std::string upsample_mode = "nearest";
  std::string downsample_mode = "stride";
  PadMode pad_mode = PadMode::Reflect;
  bool norm_enabled = true;
  bool sigmoid_output = true;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument describing the first violated constraint.
  void validate() const;
  /// Minimum series length accepted by net_forward.
  static constexpr std::size_t kMinLength = 8;
};

/// Untrained hierarchical 1D CNN with skip connections.
///
/// Wiring for depth D (= enc_layers = dec_layers = skip_layers):
///   e_i = act(norm(conv_stride2(e_{i-1})))         e_0 = z
///   s_i = act(norm(conv_1x1(e_i)))
///   d_D = act(norm(conv(s_D)))
///   d_i = act(norm(conv(concat(up2(d_{i+1}), s_i))))  i < D
///   out = conv_1x1(up2(d_1)), optionally followed by a sigmoid.
/// Inputs are right-padded by reflection to a multiple of 2^D and the output
/// is cropped back, so any length >= 8 is accepted.
class PriorNet {
 public:
  struct Layer {
    std::string name;
    std::string conv_label;
    std::string norm_label;
    std::string act_label;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    ConvOptions conv;
    bool norm = false;
    bool activation = false;
    std::size_t weight = 0;  // indices into parameters()
    std::size_t bias = 0;
    std::size_t scale = 0;
    std::size_t shift = 0;
  };

  struct Binding {
    std::vector<Tape::Var> params;  // aligned with parameters()
    Tape::Var output;
  };

  explicit PriorNet(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<TensorBuf>& parameters() { return params_; }
  const std::vector<TensorBuf>& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  std::size_t param_count() const;

  /// Record a forward pass on `tape`. z: [in_channels, L], L >= 8.
  Binding forward(Tape& tape, const TensorBuf& z) const;
  /// Convenience forward without gradient bookkeeping.
  TensorBuf forward(const TensorBuf& z) const;

 private:
  Tape::Var apply_layer(Tape& tape, const Layer& layer, Tape::Var x,
                        const std::vector<Tape::Var>& p) const;
  std::size_t add_param(std::string name, TensorBuf value);

  NetConfig cfg_;
  std::vector<Layer> layers_;
  std::vector<TensorBuf> params_;
  std::vector<std::string> names_;
};

/// Build the network; equivalent to PriorNet(cfg).
PriorNet build_net(const NetConfig& cfg);

/// Fit `target` ([out_channels, L], values in [0,1]) from a fixed random input
/// with least squares and Adam; returns the per-iteration loss.
std::vector<double> fit_capacity_probe(const NetConfig& cfg,
                                       const TensorBuf& target,
                                       std::size_t iters, double lr = 0.01);

}  // namespace rinst
