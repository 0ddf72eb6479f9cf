#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rinst/corruption.hpp"
#include "rinst/data_io.hpp"
#include "rinst/errors.hpp"

using namespace rinst;

namespace {

TensorBuf clean_signal(std::size_t n) { return synth(SynthKind::Sines, n, 3).values; }

}  // namespace

TEST_CASE("gaussian noise statistics") {
  const std::size_t n = 1000000;
  const std::vector<double> x(n, 0.5);
  Rng rng(1);
  const auto y = add_gaussian_noise(x, 0.1, rng);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += y[i] - x[i];
  mean /= n;
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (y[i] - x[i] - mean) * (y[i] - x[i] - mean);
  const double sd = std::sqrt(var / (n - 1));
  CHECK(sd >= 0.098);
  CHECK(sd <= 0.102);
  CHECK(std::abs(mean) < 4.0 * 0.1 / std::sqrt(double(n)));

  Rng rng0(2);
  CHECK(add_gaussian_noise(x, 0.0, rng0) == x);
  CHECK_THROWS_AS(add_gaussian_noise(x, -1.0, rng0), InvalidArgument);
}

TEST_CASE("clip to the unit interval") {
  CHECK(clip_unit(std::vector<double>{1.2, -0.3, 0.5}) == std::vector<double>{1.0, 0.0, 0.5});
}

TEST_CASE("outlier replacement") {
  const std::vector<double> x(1000, 5.0);
  Rng r0(3);
  const auto none = inject_outliers(x, 0.0, r0);
  CHECK(none.values == x);
  CHECK(none.indices.empty());

  Rng r1(4);
  const auto all = inject_outliers(x, 1.0, r1);
  CHECK(all.indices.size() == 1000);
  CHECK(std::all_of(all.values.begin(), all.values.end(), [](double v) { return v >= 0 && v <= 1; }));

  Rng r2(5);
  const auto tenth = inject_outliers(x, 0.1, r2);
  CHECK(tenth.indices.size() == 100);
  CHECK(std::is_sorted(tenth.indices.begin(), tenth.indices.end()));
  CHECK(std::set<std::size_t>(tenth.indices.begin(), tenth.indices.end()).size() == 100);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < x.size(); ++i) changed += tenth.values[i] != x[i];
  CHECK(changed == 100);
  for (std::size_t i : tenth.indices) CHECK(tenth.values[i] <= 1.0);

  Rng r3(6);
  CHECK_THROWS_AS(inject_outliers(x, 1.5, r3), InvalidArgument);
}

TEST_CASE("scenario presets") {
  const auto d1 = scenario_from_id("d1");
  CHECK(d1.task == Task::Denoise);
  CHECK(d1.gaussian_sigma == 0.1);
  CHECK(d1.clip);
  const auto d2 = scenario_from_id("d2");
  CHECK(d2.gaussian_sigma == 0.3);
  const auto d3 = scenario_from_id("d3");
  CHECK_FALSE(d3.clip);
  CHECK(d3.outlier_fraction == 0.1);
  CHECK(scenario_from_id("i1").missing_rate == 0.2);
  CHECK(scenario_from_id("i2").missing_rate == 0.5);
  CHECK(scenario_from_id("cs20").compression_ratio == 0.2);
  CHECK(scenario_from_id("cs50").task == Task::CompressedSensing);
  CHECK(preset_scenario_ids().size() == 7);
  CHECK_THROWS_AS(scenario_from_id("d9"), InvalidArgument);
}

TEST_CASE("denoise scenarios") {
  const auto clean = clean_signal(1000);
  for (const char* id : {"d1", "d2"}) {
    const auto c = make_scenario(clean, scenario_from_id(id, 7));
    const auto [lo, hi] = std::minmax_element(c.y.data().begin(), c.y.data().end());
    CHECK(*lo >= 0.0);
    CHECK(*hi <= 1.0);
    CHECK(c.ground_truth == clean);
    CHECK(c.outlier_indices.empty());
  }
  const auto d3 = make_scenario(clean, scenario_from_id("d3", 7));
  CHECK(d3.outlier_indices.size() == 100);
  const auto [lo, hi] = std::minmax_element(d3.y.data().begin(), d3.y.data().end());
  CHECK((*lo < 0.0 || *hi > 1.0));
}

TEST_CASE("imputation scenarios") {
  const auto clean = clean_signal(1000);
  const auto i2 = make_scenario(clean, scenario_from_id("i2", 1));
  REQUIRE(i2.mask.has_value());
  const auto& m = i2.mask->mask;
  CHECK(std::count(m.begin(), m.end(), 0.0) == 500);
  CHECK(i2.outlier_indices.size() == 50);
  for (std::size_t i : i2.outlier_indices) CHECK(m[i] == 1.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0.0) CHECK(i2.y.data()[i] == 0.0);
  }
  std::set<std::size_t> out(i2.outlier_indices.begin(), i2.outlier_indices.end());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 1.0 && !out.count(i)) CHECK(i2.y.data()[i] == clean.data()[i]);
  }
  const auto i1 = make_scenario(clean, scenario_from_id("i1", 1));
  CHECK(std::count(i1.mask->mask.begin(), i1.mask->mask.end(), 0.0) == 200);
  CHECK(i1.outlier_indices.size() == 80);
}

TEST_CASE("compressed sensing scenario") {
  const auto clean = clean_signal(1000);
  const auto c = make_scenario(clean, scenario_from_id("cs50", 2));
  CHECK(c.y.length() == 500);
  CHECK(c.outlier_indices.size() == 50);
  CHECK(std::holds_alternative<DenseOp>(c.op));
  const auto ideal = rinst::apply(c.op, clean);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < 500; ++i) differ += ideal.data()[i] != c.y.data()[i];
  CHECK(differ == 50);
}

TEST_CASE("reproducible from the seed") {
  const auto clean = clean_signal(256);
  for (const auto& id : preset_scenario_ids()) {
    CAPTURE(id);
    const auto a = make_scenario(clean, scenario_from_id(id, 11));
    const auto b = make_scenario(clean, scenario_from_id(id, 11));
    const auto c = make_scenario(clean, scenario_from_id(id, 12));
    CHECK(a.y == b.y);
    CHECK(a.outlier_indices == b.outlier_indices);
    CHECK_FALSE(a.y == c.y);
  }
}

TEST_CASE("multichannel outliers are counted over all entries") {
  const auto clean = synth(SynthKind::Multichannel, 100, 1, SynthParams{4}).values;
  const auto c = make_scenario(clean, scenario_from_id("d3", 1));
  CHECK(c.y.channels() == 4);
  CHECK(c.outlier_indices.size() == 40);
  CHECK(c.outlier_indices.back() < 400);
}
