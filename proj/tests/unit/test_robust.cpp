#include <doctest.h>

#include <cmath>

#include "rinst/errors.hpp"
#include "rinst/robust.hpp"
#include "rinst/rng.hpp"
#include "../common/oracles.hpp"

#ifdef RINST_HAVE_BOOST_QUADRATURE
#include <boost/math/quadrature/gauss_kronrod.hpp>
#endif

using namespace rinst;

namespace {

using oracle::epsilon_of_lambda;
using oracle::prox_bruteforce;

}  // namespace

TEST_SUITE("huber") {
  TEST_CASE("branch values") {
    CHECK(huber_value(0.5, 1.0) == doctest::Approx(0.125));
    CHECK(huber_value(2.0, 1.0) == doctest::Approx(1.5));
    CHECK(huber_value(-3.0, 1.0) == doctest::Approx(2.5));
    const std::vector<double> v{0.5, 2.0, -3.0};
    CHECK(huber_value(v, 1.0) == doctest::Approx(4.125));
  }
  TEST_CASE("gradient values and finite differences") {
    CHECK(huber_grad(0.5, 1.0) == 0.5);
    CHECK(huber_grad(3.0, 1.0) == 1.0);
    CHECK(huber_grad(-3.0, 1.0) == -1.0);
    const double h = 1e-6;
    for (double v : {-2.0, -0.3, 0.9, 4.0}) {
      const double fd = (huber_value(v + h, 1.0) - huber_value(v - h, 1.0)) / (2 * h);
      CHECK(std::abs(fd - huber_grad(v, 1.0)) / std::abs(fd) < 1e-6);
    }
  }
  TEST_CASE("bounded by the quadratic, equal inside the threshold") {
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
      const double v = rng.uniform(-5, 5);
      const double lam = rng.uniform(0.01, 3);
      CHECK(huber_value(v, lam) <= 0.5 * v * v + 1e-15);
      if (std::abs(v) <= lam) CHECK(huber_value(v, lam) == 0.5 * v * v);
      if (std::abs(v) > lam) CHECK(huber_value(v, lam) < 0.5 * v * v);
    }
  }
  TEST_CASE("gradient is 1-Lipschitz and bounded on the linear branch") {
    Rng rng(4);
    for (int i = 0; i < 2000; ++i) {
      const double a = rng.uniform(-5, 5);
      const double b = rng.uniform(-5, 5);
      const double lam = rng.uniform(0.01, 3);
      CHECK(std::abs(huber_grad(a, lam) - huber_grad(b, lam)) <= std::abs(a - b) + 1e-15);
      if (std::abs(a) > lam) CHECK(std::abs(huber_grad(a, lam)) <= lam);
    }
  }
  TEST_CASE("continuity at the threshold") {
    const double lam = 0.7;
    CHECK(huber_grad(lam, lam) == doctest::Approx(huber_grad(lam + 1e-12, lam)));
    CHECK(huber_value(lam, lam) == doctest::Approx(huber_value(lam + 1e-12, lam)));
  }
}

TEST_SUITE("proximal map") {
  TEST_CASE("soft threshold branches") {
    CHECK(soft_threshold(2.0, 0.5) == 1.5);
    CHECK(soft_threshold(0.3, 0.5) == 0.0);
    CHECK(soft_threshold(-2.0, 0.5) == -1.5);
    CHECK(std::abs(prox_bruteforce(-2.0, 0.5) - (-1.5)) < 1e-3);
  }
  TEST_CASE("closed form equals brute-force minimization") {
    Rng rng(5);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double v = rng.uniform(-3, 3);
      const double lam = rng.uniform(0, 2);
      worst = std::max(worst, std::abs(soft_threshold(v, lam) - prox_bruteforce(v, lam, 1e-3)));
    }
    CHECK(worst < 1e-3);
  }
  TEST_CASE("separable split reproduces the huber value") {
    // min_s 1/2 ||v - s||^2 + lam ||s||_1, solved coordinatewise, equals sum huber(v).
    Rng rng(6);
    std::vector<double> v(200);
    for (double& x : v) x = rng.uniform(-4, 4);
    const double lam = 0.8;
    const auto s = soft_threshold(v, lam);
    double value = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      value += 0.5 * (v[i] - s[i]) * (v[i] - s[i]) + lam * std::abs(s[i]);
    }
    CHECK(std::abs(value - huber_value(v, lam)) < 1e-12);
  }
}

TEST_SUITE("moreau envelope") {
  TEST_CASE("point values") {
    CHECK(moreau_envelope_oracle(0.0, 0.3) == 0.0);
    CHECK(moreau_envelope_oracle(0.5, 1.0) == doctest::Approx(0.125).epsilon(1e-6));
    CHECK(moreau_envelope_oracle(4.0, 1.0) == doctest::Approx(3.5).epsilon(1e-6));
  }
  TEST_CASE("identity with the huber loss over a grid") {
    double worst = 0.0;
    for (double lam : {0.1, 1.0, 2.0}) {
      for (int i = -500; i <= 500; ++i) {
        const double t = i * 0.01;
        worst = std::max(worst, std::abs(huber_value(t, lam) - oracle::moreau_grid(t, lam)));
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_SUITE("contamination calibration") {
  TEST_CASE("normal helpers") {
    CHECK(standard_normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
    CHECK(standard_normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(standard_normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-12));
  }
  TEST_CASE("epsilon at the classic threshold") {
    const auto r = epsilon_from_lambda(1.345);
    CHECK(r.in_model);
    CHECK(std::abs(r.epsilon - epsilon_of_lambda(1.345)) < 1e-12);
    CHECK(std::abs(r.epsilon - 0.0580) < 1e-3);
  }
  TEST_CASE("large lambda gives vanishing epsilon") {
    CHECK(epsilon_from_lambda(8.0).epsilon < 1e-12);
  }
  TEST_CASE("tiny lambda is flagged out of model") {
    const auto r = epsilon_from_lambda(0.001);
    CHECK_FALSE(r.in_model);
    CHECK(r.epsilon >= 0.5);
  }
  TEST_CASE("invalid arguments") {
    CHECK_THROWS_AS(epsilon_from_lambda(0.0), InvalidArgument);
    CHECK_THROWS_AS(epsilon_from_lambda(-1.0), InvalidArgument);
    CHECK_THROWS_AS(lambda_from_epsilon(0.0), InvalidArgument);
    CHECK_THROWS_AS(lambda_from_epsilon(0.5), InvalidArgument);
  }
  TEST_CASE("inverse and round trip") {
    CHECK(std::abs(lambda_from_epsilon(0.0580) - 1.345) < 1e-3);
    for (double eps : {0.01, 0.05, 0.2}) {
      const double lam = lambda_from_epsilon(eps);
      CHECK(std::abs(epsilon_of_lambda(lam) - eps) < 1e-9);
      CHECK(std::abs(lambda_from_epsilon(epsilon_from_lambda(lam).epsilon) - lam) < 1e-8);
    }
    CHECK(lambda_from_epsilon(0.01) > lambda_from_epsilon(0.05));
    CHECK(lambda_from_epsilon(0.05) > lambda_from_epsilon(0.2));
    CHECK(lambda_from_epsilon(1e-6) > 4.0);
  }
  TEST_CASE("density shape") {
    const auto cg = ContaminatedGaussian::from_epsilon(0.05);
    CHECK(cg.density(0.0) == doctest::Approx((1 - 0.05) / std::sqrt(2 * M_PI)));
    for (double t : {0.5, 2.0, 5.0}) CHECK(cg.density(t) == cg.density(-t));
  }
  TEST_CASE("calibrated density integrates to one") {
    for (double eps : {0.01, 0.05, 0.2}) {
      const auto cg = ContaminatedGaussian::from_epsilon(eps);
      CHECK(std::abs(oracle::density_integral(cg.lambda, eps) - 1.0) < 1e-6);
#ifdef RINST_HAVE_BOOST_QUADRATURE
      using boost::math::quadrature::gauss_kronrod;
      auto f = [&](double t) { return cg.density(t); };
      const double total = gauss_kronrod<double, 61>::integrate(f, -30.0, -cg.lambda, 15, 1e-14) +
                           gauss_kronrod<double, 61>::integrate(f, -cg.lambda, cg.lambda, 15, 1e-14) +
                           gauss_kronrod<double, 61>::integrate(f, cg.lambda, 30.0, 15, 1e-14);
      CHECK(std::abs(total - 1.0) < 1e-6);
#endif
    }
    const auto from_lam = ContaminatedGaussian::from_lambda(1.345);
    CHECK(std::abs(oracle::density_integral(1.345, from_lam.epsilon) - 1.0) < 1e-6);
  }
}
