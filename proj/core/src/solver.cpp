#include "rinst/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <variant>

#include "rinst/adam.hpp"
#include "rinst/baselines.hpp"
#include "rinst/errors.hpp"
#include "rinst/rng.hpp"

namespace rinst {

namespace {

// Independent streams carved from SolverConfig::seed.
constexpr std::uint64_t kNetStream = 1;
constexpr std::uint64_t kInputStream = 2;
constexpr std::uint64_t kPerturbStream = 3;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<double> rescale_unit(std::vector<double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double mn = *lo;
  const double span = *hi - mn;
  for (double& x : v) x = span > 0.0 ? (x - mn) / span : 0.5;
  return v;
}

}  // namespace

std::string loss_name(LossKind kind) {
  return kind == LossKind::Huber ? "huber" : "least_squares";
}

LossKind parse_loss(const std::string& name) {
  if (name == "huber") return LossKind::Huber;
  if (name == "least_squares" || name == "ls") return LossKind::LeastSquares;
  throw InvalidArgument("unknown loss '" + name + "' (expected huber|least_squares)");
}

void SolverConfig::validate() const {
  if (iterations < 1) throw InvalidArgument("SolverConfig: iterations must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw InvalidArgument("SolverConfig: lr must be positive");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidArgument("SolverConfig: alpha must lie in [0, 1]");
  }
  if (!(perturb_sigma >= 0.0)) {
    throw InvalidArgument("SolverConfig: perturb_sigma must be >= 0");
  }
  if (!(guide_sigma > 0.0)) throw InvalidArgument("SolverConfig: guide_sigma must be > 0");
  if (loss == LossKind::Huber && !(huber_lambda > 0.0)) {
    throw InvalidArgument("SolverConfig: huber_lambda must be > 0");
  }
  net.validate();
}

SolverConfig dip_preset(const SolverConfig& base) {
  SolverConfig cfg = base;
  cfg.loss = LossKind::LeastSquares;
  cfg.guided_input = false;
  cfg.perturbation = false;
  cfg.convex_combo = false;
  return cfg;
}

TensorBuf guided_input(const TensorBuf& y, const ForwardOperator& op,
                       double guide_sigma) {
  if (!(guide_sigma > 0.0)) throw InvalidArgument("guided_input: guide_sigma must be > 0");
  validate(op);
  if (y.length() != measurement_length(op)) {
    throw InvalidArgument("guided_input: observation length " + std::to_string(y.length()) +
                          " does not match operator (" +
                          std::to_string(measurement_length(op)) + ")");
  }
  const std::size_t n = signal_length(op);
  TensorBuf u(y.channels(), n);
  for (std::size_t c = 0; c < y.channels(); ++c) {
    const auto yc = y.row(c);
    const std::vector<double> base = std::visit(
        Overloaded{
            [&](const IdentityOp&) { return std::vector<double>(yc.begin(), yc.end()); },
            [&](const MaskOp& m) {
              if (std::none_of(m.mask.begin(), m.mask.end(), [](double v) { return v != 0.0; })) {
                throw InvalidArgument("guided_input: mask has no observed entries");
              }
              return impute_linear(yc, m.mask);
            },
            [&](const DenseOp&) { return rescale_unit(adjoint(op, yc)); },
        },
        op);
    const auto smooth = gaussian_filter(base, guide_sigma);
    std::copy(smooth.begin(), smooth.end(), u.row(c).begin());
  }
  return u;
}

TensorBuf perturb(const TensorBuf& u, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("perturb: sigma must be >= 0");
  TensorBuf z = u;
  if (sigma == 0.0) return z;
  for (double& v : z.data()) v += sigma * rng.normal();
  return z;
}

SolveResult solve(const TensorBuf& y, const ForwardOperator& op, const SolverConfig& cfg,
                  const SolveObserver& observer) {
  cfg.validate();
  validate(op);
  if (y.length() != measurement_length(op)) {
    throw InvalidArgument("solve: observation length " + std::to_string(y.length()) +
                          " does not match operator measurement length " +
                          std::to_string(measurement_length(op)));
  }
  if (y.channels() == 0) throw InvalidArgument("solve: observation has no channels");
  if (!y.all_finite()) throw InvalidArgument("solve: observation contains non-finite values");
  const std::size_t n = signal_length(op);

  const auto start = std::chrono::steady_clock::now();
  const Rng root(cfg.seed);

  NetConfig net_cfg = cfg.net;
  net_cfg.in_channels = y.channels();
  net_cfg.out_channels = y.channels();
  net_cfg.seed = root.split(kNetStream).seed();
  PriorNet net(net_cfg);

  TensorBuf u;
  if (cfg.guided_input) {
    u = guided_input(y, op, cfg.guide_sigma);
  } else {
    Rng input_rng = root.split(kInputStream);
    u = TensorBuf(y.channels(), n);
    for (double& v : u.data()) v = input_rng.uniform();
  }
  Rng perturb_rng = root.split(kPerturbStream);
  const double sigma = cfg.perturbation ? cfg.perturb_sigma : 0.0;
  const auto map = as_linear_map(op);

  AdamState state = make_adam_state(net.parameters());
  std::vector<std::vector<double>> grads(net.parameters().size());

  SolveResult result;
  result.loss_trace.reserve(cfg.iterations);
  TensorBuf ema;
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    const TensorBuf z = perturb(u, sigma, perturb_rng);
    Tape tape;
    const auto b = net.forward(tape, z);
    const auto measured = tape.linear(b.output, map);
    const auto loss = cfg.loss == LossKind::Huber
                          ? tape.huber_fit(measured, y, cfg.huber_lambda)
                          : tape.squared_fit(measured, y);
    const double loss_value = tape.value(loss).data()[0];
    if (!std::isfinite(loss_value)) {
      throw NumericalError("solve: non-finite loss at iteration " + std::to_string(t));
    }
    tape.backward(loss);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      const auto g = tape.grad(b.params[i]);
      if (g.empty()) {
        grads[i].assign(net.parameters()[i].size(), 0.0);
      } else {
        grads[i].assign(g.begin(), g.end());
      }
    }

    const TensorBuf& x_t = tape.value(b.output);
    if (t == 1) {
      ema = x_t;
    } else {
      auto e = ema.data();
      const auto x = x_t.data();
      for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = cfg.alpha * e[i] + (1.0 - cfg.alpha) * x[i];
      }
    }
    result.loss_trace.push_back(loss_value);
    if (observer) observer(t, x_t, cfg.convex_combo ? ema : x_t, loss_value);
    if (t == cfg.iterations) result.raw_final = x_t;

    adam_step(net.parameters(), grads, state, cfg.lr);
  }

  result.x_hat = cfg.convex_combo ? ema : result.raw_final;
  result.iterations_run = cfg.iterations;
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SolveResult solve_dip(const TensorBuf& y, const ForwardOperator& op, const SolverConfig& cfg,
                      const SolveObserver& observer) {
  return solve(y, op, dip_preset(cfg), observer);
}

}  // namespace rinst
