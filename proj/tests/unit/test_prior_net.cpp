#include <doctest.h>

#include <algorithm>

#include "rinst/data_io.hpp"
#include "rinst/diagnostics.hpp"
#include "rinst/errors.hpp"
#include "rinst/prior_net.hpp"
#include "support.hpp"

using namespace rinst;
using rinst::test::random_tensor;

namespace {

std::size_t conv_params(std::size_t cin, std::size_t cout, std::size_t k) {
  return cout * cin * k + cout;
}

}  // namespace

TEST_CASE("default parameter count by hand") {
  // Seven convs: enc1, enc2, skip1, skip2, dec2, dec1, out.
  const std::size_t convs = conv_params(1, 64, 3) + conv_params(64, 64, 3) +
                            conv_params(64, 4, 1) + conv_params(64, 4, 1) +
                            conv_params(4, 64, 3) + conv_params(68, 64, 3) +
                            conv_params(64, 1, 1);
  CHECK(convs == 27145);
  // scale and shift for each normalized layer (all but the output conv)
  const std::size_t norms = 2 * (64 + 64 + 4 + 4 + 64 + 64);
  const PriorNet net(NetConfig{});
  CHECK(net.param_count() == convs + norms);
  CHECK(net.layers().size() == 7);
}

TEST_CASE("norm switch removes scale and shift") {
  NetConfig cfg;
  cfg.norm_enabled = false;
  CHECK(PriorNet(cfg).param_count() == 27145);
}

TEST_CASE("config validation") {
  NetConfig bad;
  bad.enc_kernel = 4;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = NetConfig{};
  bad.enc_channels = {64};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = NetConfig{};
  bad.skip_channels = {4, 0};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = NetConfig{};
  bad.upsample_mode = "linear";
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("same seed gives identical parameters and outputs") {
  NetConfig cfg;
  cfg.seed = 17;
  const PriorNet a(cfg);
  const PriorNet b(cfg);
  REQUIRE(a.parameters().size() == b.parameters().size());
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i] == b.parameters()[i]);
  }
  Rng rng(1);
  const TensorBuf z = random_tensor(1, 64, rng, 0, 1);
  CHECK(a.forward(z) == b.forward(z));
  cfg.seed = 18;
  CHECK_FALSE(PriorNet(cfg).forward(z) == a.forward(z));
}

TEST_CASE("multichannel in and out") {
  NetConfig cfg;
  cfg.in_channels = 19;
  cfg.out_channels = 19;
  const PriorNet net(cfg);
  Rng rng(2);
  const auto y = net.forward(random_tensor(19, 40, rng, 0, 1));
  CHECK(y.channels() == 19);
  CHECK(y.length() == 40);
}

TEST_CASE("length is preserved and sigmoid bounds the output") {
  const PriorNet net(NetConfig{});
  Rng rng(3);
  for (std::size_t len : {8u, 9u, 10u, 11u, 13u, 64u, 1000u, 1023u}) {
    const auto y = net.forward(random_tensor(1, len, rng, 0, 1));
    CHECK(y.length() == len);
    const auto [lo, hi] = std::minmax_element(y.data().begin(), y.data().end());
    CHECK(*lo > 0.0);
    CHECK(*hi < 1.0);
  }
  CHECK_THROWS_AS(net.forward(TensorBuf(1, 7)), InvalidArgument);
  CHECK_THROWS_AS(net.forward(TensorBuf(2, 16)), InvalidArgument);
}

TEST_CASE("every parameter receives gradient") {
  const PriorNet net(NetConfig{});
  Rng rng(4);
  const TensorBuf z = random_tensor(1, 64, rng, 0, 1);
  const TensorBuf target = random_tensor(1, 64, rng, 0, 1);
  Tape tape;
  const auto b = net.forward(tape, z);
  tape.backward(tape.squared_fit(b.output, target));
  for (std::size_t i = 0; i < b.params.size(); ++i) {
    const auto g = tape.grad(b.params[i]);
    REQUIRE_MESSAGE(!g.empty(), net.parameter_names()[i]);
    const bool nonzero = std::any_of(g.begin(), g.end(), [](double v) { return v != 0.0; });
    CHECK_MESSAGE(nonzero, net.parameter_names()[i]);
  }
}

TEST_CASE("full network gradients against finite differences") {
  for (const auto& r : gradcheck_suite()) {
    CAPTURE(r.name);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("capacity probe") {
  NetConfig cfg;
  const Series s = synth(SynthKind::Sines, 256, 1);
  CHECK(fit_capacity_probe(cfg, s.values, 0).empty());

  const auto trace = fit_capacity_probe(cfg, s.values, 500);
  REQUIRE(trace.size() == 500);
  // Means over 50-iteration blocks. Adam at this step size has transient
  // spikes, so each block is compared with a 2% allowance.
  std::vector<double> blocks;
  for (std::size_t i = 0; i + 50 <= trace.size(); i += 50) {
    double m = 0.0;
    for (std::size_t j = i; j < i + 50; ++j) m += trace[j];
    blocks.push_back(m / 50.0);
  }
  for (std::size_t i = 1; i < blocks.size(); ++i) CHECK(blocks[i] <= 1.02 * blocks[i - 1]);
  CHECK(blocks.back() < 0.1 * blocks.front());
}

TEST_CASE("structured targets are fitted faster than noise") {
  BiasCheckConfig cfg;
  const auto r = biascheck(cfg);
  REQUIRE(r.structured_trace.size() == 1000);
  CHECK(r.structured_trace[999] < r.noise_trace[999]);
  CHECK(r.passed);
}
