#include "rinst/prior_net.hpp"

#include <algorithm>

#include "rinst/adam.hpp"
#include "rinst/errors.hpp"
#include "rinst/init.hpp"
#include "rinst/rng.hpp"

namespace rinst {

namespace {

constexpr double kNormEps = 1e-5;

}  // namespace

void NetConfig::validate() const {
  if (enc_layers == 0) throw InvalidArgument("NetConfig: enc_layers must be >= 1");
  if (enc_layers != dec_layers || enc_layers != skip_layers) {
    throw InvalidArgument(
        "NetConfig: enc_layers, dec_layers and skip_layers must agree");
  }
  if (enc_channels.size() != enc_layers || dec_channels.size() != dec_layers ||
      skip_channels.size() != skip_layers) {
    throw InvalidArgument("NetConfig: channel lists must match layer counts");
  }
  auto positive = [](const std::vector<std::size_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::size_t c) { return c > 0; });
  };
  if (!positive(enc_channels) || !positive(dec_channels) ||
      !positive(skip_channels) || in_channels == 0 || out_channels == 0) {
    throw InvalidArgument("NetConfig: channel counts must be positive");
  }
  for (std::size_t k : {enc_kernel, dec_kernel, skip_kernel}) {
    if (k % 2 == 0) throw InvalidArgument("NetConfig: kernel sizes must be odd");
  }
  if (!(activation_slope > 0.0 && activation_slope < 1.0)) {
    throw InvalidArgument("NetConfig: activation_slope must lie in (0, 1)");
  }
  if (upsample_mode != "nearest") {
    throw InvalidArgument("NetConfig: only upsample_mode=nearest is supported");
  }
  if (downsample_mode != "stride") {
    throw InvalidArgument("NetConfig: only downsample_mode=stride is supported");
  }
}

std::size_t PriorNet::add_param(std::string name, TensorBuf value) {
  params_.push_back(std::move(value));
  names_.push_back(std::move(name));
  return params_.size() - 1;
}

PriorNet::PriorNet(NetConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::size_t depth = cfg_.enc_layers;
  const Rng root(cfg_.seed);
  std::uint64_t stream = 0;

  auto make_layer = [&](std::string name, std::size_t cin, std::size_t cout,
                        std::size_t k, std::size_t stride, bool hidden) {
    Layer l;
    l.name = std::move(name);
    l.conv_label = l.name + ".conv";
    l.norm_label = l.name + ".norm";
    l.act_label = l.name + ".act";
    l.in_channels = cin;
    l.out_channels = cout;
    l.conv = ConvOptions{k, stride, cfg_.pad_mode};
    l.norm = hidden && cfg_.norm_enabled;
    l.activation = hidden;
    const std::uint64_t seed = root.split(stream++).seed();
    l.weight = add_param(l.name + ".weight",
                         gaussian_init(cout, cin * k, seed, fan_in_std(cin, k)));
    l.bias = add_param(l.name + ".bias", TensorBuf(1, cout, 0.0));
    if (l.norm) {
      l.scale = add_param(l.name + ".scale", TensorBuf(1, cout, 1.0));
      l.shift = add_param(l.name + ".shift", TensorBuf(1, cout, 0.0));
    }
    layers_.push_back(std::move(l));
  };

  // Order: encoders, skips, decoders (deepest first), output.
  std::size_t prev = cfg_.in_channels;
  for (std::size_t i = 0; i < depth; ++i) {
    make_layer("enc" + std::to_string(i + 1), prev, cfg_.enc_channels[i],
               cfg_.enc_kernel, 2, true);
    prev = cfg_.enc_channels[i];
  }
  for (std::size_t i = 0; i < depth; ++i) {
    make_layer("skip" + std::to_string(i + 1), cfg_.enc_channels[i],
               cfg_.skip_channels[i], cfg_.skip_kernel, 1, true);
  }
  make_layer("dec" + std::to_string(depth), cfg_.skip_channels[depth - 1],
             cfg_.dec_channels[depth - 1], cfg_.dec_kernel, 1, true);
  for (std::size_t i = depth - 1; i-- > 0;) {
    make_layer("dec" + std::to_string(i + 1),
               cfg_.dec_channels[i + 1] + cfg_.skip_channels[i],
               cfg_.dec_channels[i], cfg_.dec_kernel, 1, true);
  }
  make_layer("out", cfg_.dec_channels[0], cfg_.out_channels, 1, 1, false);
}

std::size_t PriorNet::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

Tape::Var PriorNet::apply_layer(Tape& tape, const Layer& layer, Tape::Var x,
                                const std::vector<Tape::Var>& p) const {
  auto y = tape.conv1d(x, p[layer.weight], p[layer.bias], layer.conv);
  tape.set_label(y, layer.conv_label);
  if (layer.norm) {
    y = tape.channel_norm(y, p[layer.scale], p[layer.shift], kNormEps);
    tape.set_label(y, layer.norm_label);
  }
  if (layer.activation) {
    y = tape.leaky_relu(y, cfg_.activation_slope);
    tape.set_label(y, layer.act_label);
  }
  return y;
}

PriorNet::Binding PriorNet::forward(Tape& tape, const TensorBuf& z) const {
  if (z.channels() != cfg_.in_channels) {
    throw InvalidArgument("net_forward: input has " + std::to_string(z.channels()) +
                          " channels, network expects " +
                          std::to_string(cfg_.in_channels));
  }
  const std::size_t len = z.length();
  if (len < NetConfig::kMinLength) {
    throw InvalidArgument("net_forward: series length " + std::to_string(len) +
                          " below minimum " + std::to_string(NetConfig::kMinLength));
  }
  const std::size_t depth = cfg_.enc_layers;
  const std::size_t multiple = std::size_t{1} << depth;
  const std::size_t padded = (len + multiple - 1) / multiple * multiple;

  Binding b;
  b.params.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    b.params.push_back(tape.leaf(params_[i], true, names_[i]));
  }

  auto x = tape.leaf(z, false, "input");
  if (padded != len) x = tape.pad_reflect_right(x, padded - len);

  // layers_ order: enc[0..D), skip[0..D), dec_D, dec_{D-1}..dec_1, out
  std::vector<Tape::Var> enc(depth);
  std::vector<Tape::Var> skip(depth);
  auto h = x;
  for (std::size_t i = 0; i < depth; ++i) {
    h = apply_layer(tape, layers_[i], h, b.params);
    enc[i] = h;
  }
  for (std::size_t i = 0; i < depth; ++i) {
    skip[i] = apply_layer(tape, layers_[depth + i], enc[i], b.params);
  }
  std::size_t li = 2 * depth;
  auto d = apply_layer(tape, layers_[li++], skip[depth - 1], b.params);
  for (std::size_t i = depth - 1; i-- > 0;) {
    auto up = tape.upsample_nearest(d);
    auto cat = tape.concat_channels(up, skip[i]);
    d = apply_layer(tape, layers_[li++], cat, b.params);
  }
  auto out = apply_layer(tape, layers_[li], tape.upsample_nearest(d), b.params);
  if (cfg_.sigmoid_output) {
    out = tape.sigmoid(out);
    tape.set_label(out, "out.sigmoid");
  }
  if (padded != len) out = tape.slice_length(out, 0, len);

  if (!tape.value(out).all_finite()) {
    const auto bad = tape.first_non_finite();
    throw NumericalError("net_forward: non-finite activation at " +
                         tape.describe(bad.value_or(out.id)));
  }
  b.output = out;
  return b;
}

TensorBuf PriorNet::forward(const TensorBuf& z) const {
  Tape tape;
  const auto b = forward(tape, z);
  return tape.value(b.output);
}

PriorNet build_net(const NetConfig& cfg) { return PriorNet(cfg); }

std::vector<double> fit_capacity_probe(const NetConfig& cfg,
                                       const TensorBuf& target,
                                       std::size_t iters, double lr) {
  PriorNet net(cfg);
  if (target.channels() != cfg.out_channels) {
    throw InvalidArgument("fit_capacity_probe: target channel count mismatch");
  }
  Rng rng = Rng(cfg.seed).split(0x70726f6265ULL);
  TensorBuf z(cfg.in_channels, target.length());
  for (double& v : z.data()) v = rng.uniform();

  AdamState state = make_adam_state(net.parameters());
  std::vector<double> trace;
  trace.reserve(iters);
  std::vector<std::vector<double>> grads(net.parameters().size());
  for (std::size_t it = 0; it < iters; ++it) {
    Tape tape;
    const auto b = net.forward(tape, z);
    const auto loss = tape.squared_fit(b.output, target);
    tape.backward(loss);
    trace.push_back(tape.value(loss).data()[0]);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      const auto g = tape.grad(b.params[i]);
      grads[i].assign(g.begin(), g.end());
      if (grads[i].empty()) grads[i].assign(net.parameters()[i].size(), 0.0);
    }
    adam_step(net.parameters(), grads, state, lr);
  }
  return trace;
}

}  // namespace rinst
