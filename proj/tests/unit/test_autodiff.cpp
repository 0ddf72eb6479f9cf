#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rinst/adam.hpp"
#include "rinst/autodiff.hpp"
#include "rinst/errors.hpp"
#include "rinst/init.hpp"
#include "rinst/rng.hpp"
#include "support.hpp"

using namespace rinst;
using rinst::test::random_tensor;

namespace {

TensorBuf conv_value(const TensorBuf& x, const TensorBuf& w, const TensorBuf& b,
                     ConvOptions opt) {
  Tape t;
  const auto out = t.conv1d(t.leaf(x), t.leaf(w), t.leaf(b), opt);
  return t.value(out);
}

// Hand-rolled reference conv used as an independent oracle.
TensorBuf naive_conv(const TensorBuf& x, const std::vector<std::vector<std::vector<double>>>& w,
                     const std::vector<double>& b, std::size_t stride, bool reflect) {
  const std::size_t k = w[0][0].size();
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t n = x.length();
  const std::size_t lout = (n + 2 * pad - k) / stride + 1;
  TensorBuf out(w.size(), lout);
  for (std::size_t co = 0; co < w.size(); ++co) {
    for (std::size_t t = 0; t < lout; ++t) {
      double acc = b[co];
      for (std::size_t ci = 0; ci < x.channels(); ++ci) {
        for (std::size_t j = 0; j < k; ++j) {
          std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(t * stride + j) - pad;
          double v = 0.0;
          if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n)) {
            if (!reflect) continue;
            idx = idx < 0 ? -idx : 2 * static_cast<std::ptrdiff_t>(n) - 2 - idx;
          }
          v = x(ci, static_cast<std::size_t>(idx));
          acc += w[co][ci][j] * v;
        }
      }
      out(co, t) = acc;
    }
  }
  return out;
}

// Vector-Jacobian product of a single-input op: returns J^T y.
template <class Op>
std::vector<double> vjp(const TensorBuf& x, const TensorBuf& y, Op op) {
  Tape t0;
  const TensorBuf out = t0.value(op(t0, t0.leaf(x)));
  TensorBuf target = out;
  for (std::size_t i = 0; i < target.size(); ++i) target.data()[i] += y.data()[i];
  Tape t;
  const auto xv = t.leaf(x, true);
  const auto loss = t.squared_fit(op(t, xv), target);
  t.backward(loss);
  std::vector<double> g(t.grad(xv).begin(), t.grad(xv).end());
  for (double& v : g) v = -v;
  return g;
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("shape and storage") {
    TensorBuf t(2, 3, 1.5);
    CHECK(t.size() == 6);
    CHECK(t(1, 2) == 1.5);
    t(1, 0) = 4.0;
    CHECK(t.row(1)[0] == 4.0);
    CHECK_FALSE(t.has_grad());
    t.ensure_grad();
    CHECK(t.grad().size() == t.size());
    CHECK_THROWS_AS(TensorBuf(2, 3, std::vector<double>(5)), InvalidArgument);
  }
  TEST_CASE("from_rows rejects ragged input") {
    const auto t = TensorBuf::from_rows({{1, 2}, {3, 4}});
    CHECK(t.channels() == 2);
    CHECK(t(1, 1) == 4);
    CHECK_THROWS_AS(TensorBuf::from_rows({{1, 2}, {3}}), InvalidArgument);
  }
}

TEST_SUITE("rng") {
  TEST_CASE("split streams are reproducible and distinct") {
    Rng a(7);
    Rng b(7);
    CHECK(a.normal() == b.normal());
    Rng c1 = Rng(7).split(1);
    Rng c2 = Rng(7).split(2);
    CHECK(c1.uniform() != c2.uniform());
    CHECK(Rng(7).split(3).seed() == Rng(7).split(3).seed());
  }
  TEST_CASE("sampling without replacement") {
    Rng r(1);
    const auto idx = r.sample_without_replacement(100, 30);
    CHECK(idx.size() == 30);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    CHECK(r.sample_without_replacement(5, 5).size() == 5);
  }
}

TEST_SUITE("conv1d") {
  TEST_CASE("identity kernel") {
    const auto y = conv_value(TensorBuf::from_rows({{1, 2, 3, 4}}), TensorBuf::from_rows({{1}}),
                              TensorBuf::from_rows({{0}}), {1, 1, PadMode::Reflect});
    CHECK(y.values() == std::vector<double>{1, 2, 3, 4});
  }
  TEST_CASE("centered delta kernel with reflection") {
    const auto y = conv_value(TensorBuf::from_rows({{1, 2, 3}}), TensorBuf::from_rows({{0, 1, 0}}),
                              TensorBuf::from_rows({{0}}), {3, 1, PadMode::Reflect});
    CHECK(y.values() == std::vector<double>{1, 2, 3});
  }
  TEST_CASE("stride 2 box kernel over reflected edges") {
    // padded [2,1,2,3,4,3] -> windows starting at 0 and 2
    const auto y = conv_value(TensorBuf::from_rows({{1, 2, 3, 4}}), TensorBuf::from_rows({{1, 1, 1}}),
                              TensorBuf::from_rows({{0}}), {3, 2, PadMode::Reflect});
    CHECK(y.values() == std::vector<double>{5, 9});
  }
  TEST_CASE("reflect index folds without repeating the edge") {
    CHECK(reflect_index(-1, 4) == 1);
    CHECK(reflect_index(-2, 4) == 2);
    CHECK(reflect_index(4, 4) == 2);
    CHECK(reflect_index(5, 4) == 1);
    CHECK(reflect_index(0, 1) == 0);
  }
  TEST_CASE("matches a naive reference for random shapes") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t cin = 1 + rng.index(3);
      const std::size_t cout = 1 + rng.index(3);
      const std::size_t k = 1 + 2 * rng.index(3);
      const std::size_t stride = 1 + rng.index(2);
      const bool reflect = rng.uniform() < 0.5;
      const std::size_t len = k + rng.index(12) + 1;
      const TensorBuf x = random_tensor(cin, len, rng);
      std::vector<std::vector<std::vector<double>>> w(
          cout, std::vector<std::vector<double>>(cin, std::vector<double>(k)));
      TensorBuf wflat(cout, cin * k);
      for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t j = 0; j < k; ++j) {
            w[co][ci][j] = rng.uniform(-1, 1);
            wflat(co, ci * k + j) = w[co][ci][j];
          }
      std::vector<double> b(cout);
      for (double& v : b) v = rng.uniform(-1, 1);
      const auto got = conv_value(x, wflat, TensorBuf(1, cout, b),
                                  {k, stride, reflect ? PadMode::Reflect : PadMode::Zero});
      const auto want = naive_conv(x, w, b, stride, reflect);
      REQUIRE(got.same_shape(want));
      CHECK(rinst::test::max_abs_diff(got.data(), want.data()) < 1e-12);
    }
  }
  TEST_CASE("stride 1 preserves length, stride 2 halves with ceiling") {
    for (std::size_t len = 3; len < 40; ++len) {
      CHECK(conv_output_length(len, {3, 1, PadMode::Reflect}) == len);
      CHECK(conv_output_length(len, {3, 2, PadMode::Reflect}) == (len + 1) / 2);
    }
  }
  TEST_CASE("channel mismatch is rejected") {
    Tape t;
    const auto x = t.leaf(TensorBuf(2, 8));
    const auto w = t.leaf(TensorBuf(1, 3));  // expects Cin*k = 6
    const auto b = t.leaf(TensorBuf(1, 1));
    CHECK_THROWS_AS(t.conv1d(x, w, b, {3, 1, PadMode::Reflect}), InvalidArgument);
  }
  TEST_CASE("adjoint consistency with fixed weights") {
    Rng rng(5);
    const TensorBuf w = random_tensor(3, 2 * 3, rng);
    const TensorBuf b(1, 3, 0.0);
    for (std::size_t stride : {1u, 2u}) {
      for (PadMode pad : {PadMode::Reflect, PadMode::Zero}) {
        const ConvOptions opt{3, stride, pad};
        const TensorBuf x = random_tensor(2, 11, rng);
        const TensorBuf y = random_tensor(3, conv_output_length(11, opt), rng);
        const auto cx = conv_value(x, w, b, opt);
        const auto aty = vjp(x, y, [&](Tape& t, Tape::Var v) {
          return t.conv1d(v, t.leaf(w), t.leaf(b), opt);
        });
        CHECK(std::abs(dot(cx.data(), y.data()) - dot(x.data(), aty)) < 1e-10);
      }
    }
  }
}

TEST_SUITE("elementwise and shape ops") {
  TEST_CASE("leaky relu") {
    Tape t;
    const auto y = t.leaky_relu(t.leaf(TensorBuf::from_rows({{2.0, -1.0, 0.0}})), 0.01);
    CHECK(t.value(y)(0, 0) == 2.0);
    CHECK(t.value(y)(0, 1) == doctest::Approx(-0.01));
    CHECK(t.value(y)(0, 2) == 0.0);
  }
  TEST_CASE("sigmoid value, saturation and slope") {
    Tape t;
    const auto x = t.leaf(TensorBuf::from_rows({{0.0, 50.0}}), true);
    const auto y = t.sigmoid(x);
    CHECK(t.value(y)(0, 0) == 0.5);
    CHECK(std::abs(t.value(y)(0, 1) - 1.0) < 1e-12);
    t.backward(t.sum(y));
    CHECK(t.grad(x)[0] == doctest::Approx(0.25));
  }
  TEST_CASE("upsample duplicates and its backward sums pairs") {
    Tape t;
    const auto x = t.leaf(TensorBuf::from_rows({{1, 2}}), true);
    const auto up = t.upsample_nearest(x);
    CHECK(t.value(up).values() == std::vector<double>{1, 1, 2, 2});
    // loss = <up, [1,2,3,4]> expressed through squared_fit against up + g.
    const auto g = vjp(TensorBuf::from_rows({{1, 2}}), TensorBuf::from_rows({{1, 2, 3, 4}}),
                       [](Tape& tp, Tape::Var v) { return tp.upsample_nearest(v); });
    CHECK(g == std::vector<double>{3, 7});
    const auto c = t.upsample_nearest(t.leaf(TensorBuf(1, 3, 0.7)));
    CHECK(t.value(c) == TensorBuf(1, 6, 0.7));
  }
  TEST_CASE("concat and slice are an inverse pair") {
    Tape t;
    const auto a = t.leaf(TensorBuf::from_rows({{1, 2}}));
    const auto b = t.leaf(TensorBuf::from_rows({{3, 4}}));
    const auto ab = t.concat_channels(a, b);
    CHECK(t.value(ab) == TensorBuf::from_rows({{1, 2}, {3, 4}}));
    Rng rng(3);
    const auto big = t.concat_channels(t.leaf(TensorBuf(64, 8)), t.leaf(TensorBuf(4, 8)));
    CHECK(t.value(big).channels() == 68);
    CHECK_THROWS_AS(t.concat_channels(a, t.leaf(TensorBuf(1, 3))), InvalidArgument);
    const auto s = t.slice_length(t.leaf(TensorBuf::from_rows({{1, 2, 3, 4, 5}})), 1, 3);
    CHECK(t.value(s).values() == std::vector<double>{2, 3, 4});
  }
  TEST_CASE("concat and upsample adjoints") {
    Rng rng(9);
    const TensorBuf x = random_tensor(2, 7, rng);
    const TensorBuf other = random_tensor(3, 7, rng);
    const TensorBuf y = random_tensor(5, 7, rng);
    Tape t;
    const auto cat = t.value(t.concat_channels(t.leaf(x), t.leaf(other)));
    const auto g = vjp(x, y, [&](Tape& tp, Tape::Var v) {
      return tp.concat_channels(v, tp.leaf(other));
    });
    // <cat(x, o), y> = <x, y_top> + <o, y_bottom>; the x part is what J^T y sees.
    double rhs = dot(x.data(), g);
    double lhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) lhs += cat.data()[i] * y.data()[i];
    CHECK(std::abs(lhs - rhs) < 1e-12);

    const TensorBuf yu = random_tensor(2, 14, rng);
    const auto up = [&] {
      Tape tp;
      return tp.value(tp.upsample_nearest(tp.leaf(x)));
    }();
    const auto gu = vjp(x, yu, [](Tape& tp, Tape::Var v) { return tp.upsample_nearest(v); });
    CHECK(std::abs(dot(up.data(), yu.data()) - dot(x.data(), gu)) < 1e-10);

    const TensorBuf ys = random_tensor(2, 4, rng);
    const auto sl = [&] {
      Tape tp;
      return tp.value(tp.slice_length(tp.leaf(x), 2, 4));
    }();
    const auto gs = vjp(x, ys, [](Tape& tp, Tape::Var v) { return tp.slice_length(v, 2, 4); });
    CHECK(std::abs(dot(sl.data(), ys.data()) - dot(x.data(), gs)) < 1e-10);
  }
  TEST_CASE("pad_reflect_right") {
    Tape t;
    const auto p = t.pad_reflect_right(t.leaf(TensorBuf::from_rows({{1, 2, 3, 4}})), 2);
    CHECK(t.value(p).values() == std::vector<double>{1, 2, 3, 4, 3, 2});
  }
}

TEST_SUITE("channel_norm") {
  TEST_CASE("constant channel maps to zero") {
    Tape t;
    const auto y = t.channel_norm(t.leaf(TensorBuf(1, 5, 3.0)), t.leaf(TensorBuf(1, 1, 1.0)),
                                  t.leaf(TensorBuf(1, 1, 0.0)), 1e-5);
    for (double v : t.value(y).data()) CHECK(v == 0.0);
  }
  TEST_CASE("standardized input is unchanged for tiny eps") {
    Tape t;
    const auto y = t.channel_norm(t.leaf(TensorBuf::from_rows({{-1, 1}})),
                                  t.leaf(TensorBuf(1, 1, 1.0)), t.leaf(TensorBuf(1, 1, 0.0)),
                                  1e-14);
    CHECK(t.value(y)(0, 0) == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(t.value(y)(0, 1) == doctest::Approx(1.0).epsilon(1e-10));
  }
  TEST_CASE("zero scale gives the shift") {
    Tape t;
    const auto y = t.channel_norm(t.leaf(TensorBuf::from_rows({{1, 5, -2}})),
                                  t.leaf(TensorBuf(1, 1, 0.0)), t.leaf(TensorBuf(1, 1, 0.4)),
                                  1e-5);
    for (double v : t.value(y).data()) CHECK(v == doctest::Approx(0.4));
  }
}

TEST_SUITE("backward") {
  TEST_CASE("sum gives ones, half squared norm gives x") {
    Tape t;
    const TensorBuf xv = TensorBuf::from_rows({{1, -2, 3}});
    const auto x = t.leaf(xv, true);
    t.backward(t.sum(x));
    for (double g : t.grad(x)) CHECK(g == 1.0);
    Tape t2;
    const auto x2 = t2.leaf(xv, true);
    t2.backward(t2.half_squared_norm(x2));
    CHECK(rinst::test::to_vec(t2.grad(x2)) == xv.values());
  }
  TEST_CASE("non-finite loss names the first bad node") {
    Tape t2;
    const auto x2 = t2.leaf(TensorBuf::from_rows({{1.0, INFINITY}}), true, "bad-input");
    const auto l2 = t2.sum(x2);
    try {
      t2.backward(l2);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("bad-input") != std::string::npos);
    }
  }
  TEST_CASE("gradients accumulate across shared uses") {
    Tape t;
    const auto x = t.leaf(TensorBuf::from_rows({{2.0}}), true);
    const auto two = t.concat_channels(x, x);
    t.backward(t.sum(two));
    CHECK(t.grad(x)[0] == 2.0);
  }
  TEST_CASE("evaluation is deterministic") {
    Rng rng(2);
    const TensorBuf x = random_tensor(2, 16, rng);
    const TensorBuf w = random_tensor(3, 6, rng);
    const TensorBuf b = random_tensor(1, 3, rng);
    const auto a = conv_value(x, w, b, {3, 2, PadMode::Reflect});
    const auto c = conv_value(x, w, b, {3, 2, PadMode::Reflect});
    CHECK(a == c);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("first step moves by lr against the gradient sign") {
    std::vector<TensorBuf> p{TensorBuf(1, 1, 0.0)};
    AdamState s = make_adam_state(p);
    const std::vector<std::vector<double>> g{{1.0}};
    adam_step(p, g, s, 0.01);
    CHECK(s.t == 1);
    CHECK(p[0](0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    adam_step(p, g, s, 0.01);
    CHECK(std::abs(p[0](0, 0) + 0.02) < 1e-6);
  }
  TEST_CASE("zero gradient keeps parameters") {
    std::vector<TensorBuf> p{TensorBuf(1, 3, 0.5)};
    AdamState s = make_adam_state(p);
    adam_step(p, std::vector<std::vector<double>>{{0, 0, 0}}, s, 0.01);
    CHECK(p[0] == TensorBuf(1, 3, 0.5));
  }
  TEST_CASE("moment buffers match shapes and stay non-negative") {
    std::vector<TensorBuf> p{TensorBuf(2, 3), TensorBuf(1, 4)};
    AdamState s = make_adam_state(p);
    CHECK(s.m[0].size() == 6);
    CHECK(s.v[1].size() == 4);
    Rng rng(1);
    for (int k = 0; k < 5; ++k) {
      std::vector<std::vector<double>> g{std::vector<double>(6), std::vector<double>(4)};
      for (auto& gi : g)
        for (double& v : gi) v = rng.normal();
      adam_step(p, g, s, 0.01);
    }
    for (const auto& v : s.v)
      for (double e : v) CHECK(e >= 0.0);
  }
  TEST_CASE("shape mismatch is rejected") {
    std::vector<TensorBuf> p{TensorBuf(1, 2)};
    AdamState s = make_adam_state(p);
    CHECK_THROWS_AS(adam_step(p, std::vector<std::vector<double>>{{1.0}}, s, 0.01),
                    InvalidArgument);
  }
}

TEST_SUITE("init") {
  TEST_CASE("deterministic per seed") {
    CHECK(gaussian_init(4, 6, 9, 0.5) == gaussian_init(4, 6, 9, 0.5));
    CHECK_FALSE(gaussian_init(4, 6, 9, 0.5) == gaussian_init(4, 6, 10, 0.5));
  }
  TEST_CASE("empirical moments match the fan-in rule") {
    const double sd = fan_in_std(64, 3);
    CHECK(sd == doctest::Approx(std::sqrt(2.0 / 192.0)));
    const auto w = gaussian_init(1, 100000, 4, sd);
    const double n = static_cast<double>(w.size());
    const double mean = std::accumulate(w.data().begin(), w.data().end(), 0.0) / n;
    double var = 0.0;
    for (double v : w.data()) var += (v - mean) * (v - mean);
    const double sample_sd = std::sqrt(var / (n - 1));
    CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(n));
    CHECK(std::abs(sample_sd / sd - 1.0) < 0.02);
  }
}
