#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rinst/baselines.hpp"
#include "rinst/corruption.hpp"
#include "rinst/data_io.hpp"
#include "rinst/errors.hpp"
#include "rinst/robust.hpp"
#include "rinst/solver.hpp"
#include "support.hpp"

using namespace rinst;
using rinst::test::max_abs_diff;

namespace {

SolverConfig quick(std::size_t iters = 15) {
  SolverConfig c;
  c.iterations = iters;
  c.seed = 5;
  return c;
}

TensorBuf noisy_signal(std::size_t n, std::uint64_t seed) {
  const auto clean = synth(SynthKind::Sines, std::max<std::size_t>(n, 64), seed).values;
  TensorBuf x(1, n);
  for (std::size_t i = 0; i < n; ++i) x(0, i) = clean(0, i);
  return make_scenario(x, scenario_from_id("d1", seed)).y;
}

}  // namespace

TEST_SUITE("guided input") {
  TEST_CASE("identity keeps constants") {
    const TensorBuf y(1, 32, 0.42);
    const auto u = guided_input(y, IdentityOp{32}, 5.0);
    for (double v : u.data()) CHECK(v == doctest::Approx(0.42).epsilon(1e-14));
  }
  TEST_CASE("identity is the gaussian filter") {
    const auto y = noisy_signal(64, 1);
    const auto u = guided_input(y, IdentityOp{64}, 3.0);
    CHECK(max_abs_diff(u.data(), gaussian_filter(y.data(), 3.0)) < 1e-15);
  }
  TEST_CASE("mask interpolates before filtering") {
    MaskOp m;
    m.mask = {1, 0, 1};
    const auto y = TensorBuf::from_rows({{0, 0, 1}});
    const auto u = guided_input(y, m, 1.0);
    const auto expect = gaussian_filter(std::vector<double>{0, 0.5, 1}, 1.0);
    CHECK(max_abs_diff(u.data(), expect) < 1e-15);
    m.mask = {0, 0, 0};
    CHECK_THROWS_AS(guided_input(y, m, 1.0), InvalidArgument);
  }
  TEST_CASE("dense backprojection lands in the unit interval") {
    const auto op = make_gaussian_matrix(32, 64, 3);
    Rng rng(4);
    const auto y = rinst::test::random_tensor(1, 32, rng);
    const auto u = guided_input(y, op, 2.0);
    CHECK(u.length() == 64);
    const auto [lo, hi] = std::minmax_element(u.data().begin(), u.data().end());
    CHECK(*lo >= 0.0);
    CHECK(*hi <= 1.0);
  }
  TEST_CASE("length mismatch rejected") {
    CHECK_THROWS_AS(guided_input(TensorBuf(1, 10), IdentityOp{12}, 1.0), InvalidArgument);
  }
}

TEST_SUITE("perturbation") {
  TEST_CASE("zero sigma and fresh draws") {
    Rng rng(1);
    const TensorBuf u(1, 100, 0.3);
    CHECK(perturb(u, 0.0, rng) == u);
    const auto a = perturb(u, 0.05, rng);
    const auto b = perturb(u, 0.05, rng);
    CHECK_FALSE(a == b);
    CHECK_THROWS_AS(perturb(u, -0.1, rng), InvalidArgument);
  }
  TEST_CASE("empirical variance") {
    Rng rng(2);
    const TensorBuf u(1, 1000000, 0.5);
    const auto z = perturb(u, 0.05, rng);
    double ss = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) ss += (z.data()[i] - 0.5) * (z.data()[i] - 0.5);
    CHECK(std::abs(ss / u.size() / (0.05 * 0.05) - 1.0) < 0.02);
  }
}

TEST_SUITE("solve") {
  TEST_CASE("configuration validation") {
    SolverConfig c;
    c.alpha = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = SolverConfig{};
    c.iterations = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = SolverConfig{};
    c.guide_sigma = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = SolverConfig{};
    c.perturb_sigma = -1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    CHECK(parse_loss("ls") == LossKind::LeastSquares);
    CHECK(parse_loss(loss_name(LossKind::Huber)) == LossKind::Huber);
    CHECK_THROWS_AS(parse_loss("l1"), InvalidArgument);
  }
  TEST_CASE("shape mismatch rejected before the loop") {
    CHECK_THROWS_AS(solve(TensorBuf(1, 64), IdentityOp{32}, quick()), InvalidArgument);
  }
  TEST_CASE("result shape, range and trace") {
    const auto y = noisy_signal(64, 2);
    const auto r = solve(y, IdentityOp{64}, quick(20));
    CHECK(r.x_hat.length() == 64);
    CHECK(r.loss_trace.size() == 20);
    CHECK(r.iterations_run == 20);
    CHECK(r.wall_time_s >= 0.0);
    for (double v : r.x_hat.data()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
  TEST_CASE("running average replays exactly from the raw iterates") {
    const auto y = noisy_signal(64, 3);
    for (double alpha : {0.5, 0.8}) {
      auto cfg = quick(12);
      cfg.alpha = alpha;
      TensorBuf ema;
      std::vector<double> losses;
      bool exact = true;
      bool loss_on_raw = true;
      const auto r = solve(y, IdentityOp{64}, cfg,
                           [&](std::size_t t, const TensorBuf& x, const TensorBuf& est, double loss) {
                             if (t == 1) {
                               ema = x;
                             } else {
                               for (std::size_t i = 0; i < x.size(); ++i) {
                                 ema.data()[i] = alpha * ema.data()[i] + (1.0 - alpha) * x.data()[i];
                               }
                             }
                             exact = exact && ema == est;
                             std::vector<double> res(x.size());
                             for (std::size_t i = 0; i < x.size(); ++i) res[i] = y.data()[i] - x.data()[i];
                             loss_on_raw = loss_on_raw &&
                                           std::abs(loss - huber_value(res, cfg.huber_lambda)) <=
                                               1e-12 * std::max(1.0, loss);
                             losses.push_back(loss);
                           });
      CHECK(exact);
      CHECK(loss_on_raw);
      CHECK(r.x_hat == ema);
      CHECK(r.loss_trace == losses);
    }
  }
  TEST_CASE("alpha one keeps the first iterate") {
    const auto y = noisy_signal(64, 4);
    auto cfg = quick(10);
    cfg.alpha = 1.0;
    TensorBuf first;
    const auto r = solve(y, IdentityOp{64}, cfg, [&](std::size_t t, const TensorBuf& x, const TensorBuf&, double) {
      if (t == 1) first = x;
    });
    CHECK(r.x_hat == first);
    CHECK_FALSE(r.raw_final == first);
  }
  TEST_CASE("averaging off returns the last raw output") {
    const auto y = noisy_signal(64, 5);
    auto cfg = quick(10);
    cfg.convex_combo = false;
    const auto r = solve(y, IdentityOp{64}, cfg);
    CHECK(r.x_hat == r.raw_final);
  }
  TEST_CASE("deterministic for a fixed seed") {
    const auto y = noisy_signal(64, 6);
    const auto a = solve(y, IdentityOp{64}, quick());
    const auto b = solve(y, IdentityOp{64}, quick());
    CHECK(a.x_hat == b.x_hat);
    CHECK(a.loss_trace == b.loss_trace);
    auto other = quick();
    other.seed = 6;
    CHECK_FALSE(solve(y, IdentityOp{64}, other).x_hat == a.x_hat);
  }
  TEST_CASE("mask, dense and multichannel observations") {
    const auto clean = synth(SynthKind::Sines, 64, 7).values;
    const auto imp = make_scenario(clean, scenario_from_id("i1", 1));
    CHECK(solve(imp.y, imp.op, quick(5)).x_hat.length() == 64);
    const auto cs = make_scenario(clean, scenario_from_id("cs50", 1));
    CHECK(solve(cs.y, cs.op, quick(5)).x_hat.length() == 64);
    const auto mc = synth(SynthKind::Multichannel, 64, 1, SynthParams{3}).values;
    const auto r = solve(mc, IdentityOp{64}, quick(5));
    CHECK(r.x_hat.channels() == 3);
  }
  TEST_CASE("non-finite loss aborts with the iteration") {
    const auto y = noisy_signal(64, 8);
    auto cfg = quick(20);
    cfg.lr = 1e300;
    CHECK_THROWS_AS(solve(y, IdentityOp{64}, cfg), NumericalError);
  }
}

TEST_SUITE("deep prior preset") {
  TEST_CASE("flags") {
    SolverConfig base;
    base.iterations = 77;
    base.seed = 3;
    const auto d = dip_preset(base);
    CHECK(d.loss == LossKind::LeastSquares);
    CHECK_FALSE(d.guided_input);
    CHECK_FALSE(d.perturbation);
    CHECK_FALSE(d.convex_combo);
    CHECK(d.iterations == 77);
    CHECK(d.seed == 3);
  }
  TEST_CASE("deterministic and matches the preset through solve") {
    const auto y = noisy_signal(64, 9);
    const auto a = solve_dip(y, IdentityOp{64}, quick());
    CHECK(a.x_hat == solve_dip(y, IdentityOp{64}, quick()).x_hat);
    CHECK(a.x_hat == solve(y, IdentityOp{64}, dip_preset(quick())).x_hat);
    CHECK(a.x_hat == a.raw_final);
  }
  TEST_CASE("fits a clean three-sinusoid signal") {
    const auto clean = synth(SynthKind::Sines, 1024, 1).values;
    SolverConfig cfg;
    cfg.seed = 1;
    const auto r = solve_dip(clean, IdentityOp{1024}, cfg);
    // The trace holds 1/2 sum of squares; the bound is per sample.
    CHECK(r.loss_trace.back() / 1024.0 < 1e-3);
    CHECK(r.loss_trace.back() < 1e-3 * r.loss_trace.front());
  }
}
