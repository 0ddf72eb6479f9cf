#include <doctest.h>

#include "rinst/config.hpp"
#include "rinst/errors.hpp"

using namespace rinst;

TEST_CASE("parse values, lists and comments") {
  const auto c = Config::parse(
      "# comment\n"
      "a.x = 3\n"
      "a.y = 0.25   # trailing\n"
      "a.list = 1, 2 ,3\n"
      "a.flag = true\n"
      "a.name = hello world\n");
  CHECK(c.get_size("a.x", 0) == 3);
  CHECK(c.get_double("a.y", 0) == 0.25);
  CHECK(c.get_sizes("a.list", {}) == std::vector<std::size_t>{1, 2, 3});
  CHECK(c.get_bool("a.flag", false));
  CHECK(c.get_string("a.name", "") == "hello world");
  CHECK(c.get_double("missing", 1.5) == 1.5);
}

TEST_CASE("errors report the line") {
  try {
    Config::parse("a = 1\na = 2\n", "f.cfg");
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("f.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse("novalue\n"), InvalidArgument);
  CHECK_THROWS_AS(Config::parse("a = x\n").get_double("a", 0), InvalidArgument);
  CHECK_THROWS_AS(Config::parse("a = -1\n").get_size("a", 0), InvalidArgument);
  CHECK_THROWS_AS(Config::parse("a = maybe\n").get_bool("a", false), InvalidArgument);
}

TEST_CASE("unused keys are reported") {
  const auto c = Config::parse("a = 1\nb = 2\n");
  c.get_size("a", 0);
  CHECK(c.unused_keys() == std::vector<std::string>{"b"});
}

TEST_CASE("doubles format to the shortest round-tripping text") {
  for (double v : {0.1, 1e-3, 3.0, 1.0 / 3.0, 6.02e23, -2.5e-7}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.001) == "0.001");
}

TEST_CASE("solver and net configuration round trip") {
  SolverConfig s;
  s.iterations = 1234;
  s.lr = 0.003;
  s.huber_lambda = 0.02;
  s.alpha = 0.7;
  s.perturb_sigma = 0.01;
  s.guide_sigma = 3.5;
  s.loss = LossKind::LeastSquares;
  s.guided_input = false;
  s.perturbation = false;
  s.convex_combo = false;
  s.seed = 99;
  s.net.enc_layers = s.net.dec_layers = s.net.skip_layers = 3;
  s.net.enc_channels = {8, 16, 32};
  s.net.dec_channels = {8, 16, 32};
  s.net.skip_channels = {2, 2, 2};
  s.net.pad_mode = PadMode::Zero;
  s.net.norm_enabled = false;
  s.net.activation_slope = 0.2;

  Config out;
  write_config(s, out);
  const auto text = out.dump();
  const auto back = solver_config_from(Config::parse(text));
  Config again;
  write_config(back, again);
  CHECK(again == out);
  CHECK(back.iterations == 1234);
  CHECK(back.lr == 0.003);
  CHECK(back.loss == LossKind::LeastSquares);
  CHECK_FALSE(back.convex_combo);
  CHECK(back.net.enc_channels == std::vector<std::size_t>{8, 16, 32});
  CHECK(back.net.pad_mode == PadMode::Zero);
  CHECK(back.net.activation_slope == 0.2);
}

TEST_CASE("invalid solver values are rejected") {
  CHECK_THROWS_AS(solver_config_from(Config::parse("solver.alpha = 1.5\n")), InvalidArgument);
  CHECK_THROWS_AS(solver_config_from(Config::parse("solver.iterations = 0\n")), InvalidArgument);
  CHECK_THROWS_AS(solver_config_from(Config::parse("solver.loss = l1\n")), InvalidArgument);
  CHECK_THROWS_AS(net_config_from(Config::parse("net.enc_kernel = 2\n")), InvalidArgument);
}
