#include "rinst/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rinst/bench.hpp"
#include "rinst/corruption.hpp"
#include "rinst/errors.hpp"
#include "rinst/forward_ops.hpp"
#include "rinst/metrics.hpp"
#include "rinst/parallel.hpp"
#include "rinst/prior_net.hpp"
#include "rinst/rng.hpp"

namespace rinst {

namespace {

TensorBuf random_tensor(std::size_t c, std::size_t l, Rng& rng, double lo = -1.0,
                        double hi = 1.0) {
  TensorBuf t(c, l);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so kinks stay out of the difference stencil.
TensorBuf away_from_zero(std::size_t c, std::size_t l, Rng& rng) {
  TensorBuf t(c, l);
  for (double& v : t.data()) {
    const double mag = rng.uniform(0.1, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

using Builder =
    std::function<Tape::Var(Tape& tape, const std::vector<Tape::Var>& inputs)>;

// Objective from a tape builder; every input is a differentiable leaf.
Objective from_builder(Builder build) {
  return [build = std::move(build)](const std::vector<TensorBuf>& inputs,
                                    std::vector<std::vector<double>>* grads) {
    Tape tape;
    std::vector<Tape::Var> vars;
    vars.reserve(inputs.size());
    for (const auto& in : inputs) vars.push_back(tape.leaf(in, true));
    const auto loss = build(tape, vars);
    const double value = tape.value(loss).data()[0];
    if (grads) {
      tape.backward(loss);
      grads->assign(inputs.size(), {});
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto g = tape.grad(vars[i]);
        (*grads)[i] = g.empty() ? std::vector<double>(inputs[i].size(), 0.0)
                                : std::vector<double>(g.begin(), g.end());
      }
    }
    return value;
  };
}

// Scalarize a tensor-valued op with a fixed random target.
Builder fit_to_target(std::function<Tape::Var(Tape&, const std::vector<Tape::Var>&)> op,
                      TensorBuf target) {
  return [op = std::move(op), target = std::move(target)](
             Tape& tape, const std::vector<Tape::Var>& in) {
    return tape.squared_fit(op(tape, in), target);
  };
}

Objective net_objective(const NetConfig& cfg, TensorBuf z, TensorBuf target,
                        std::shared_ptr<const LinearMap> map = nullptr,
                        double huber_lambda = 0.0) {
  return [cfg, z = std::move(z), target = std::move(target), map, huber_lambda](
             const std::vector<TensorBuf>& params, std::vector<std::vector<double>>* grads) {
    PriorNet net(cfg);
    net.parameters() = params;
    Tape tape;
    const auto b = net.forward(tape, z);
    auto out = b.output;
    if (map) out = tape.linear(out, map);
    const auto loss = huber_lambda > 0.0 ? tape.huber_fit(out, target, huber_lambda)
                                         : tape.squared_fit(out, target);
    const double value = tape.value(loss).data()[0];
    if (grads) {
      tape.backward(loss);
      grads->assign(params.size(), {});
      for (std::size_t i = 0; i < params.size(); ++i) {
        const auto g = tape.grad(b.params[i]);
        (*grads)[i] = g.empty() ? std::vector<double>(params[i].size(), 0.0)
                                : std::vector<double>(g.begin(), g.end());
      }
    }
    return value;
  };
}

}  // namespace

GradCheckResult finite_difference_check(const std::string& name,
                                        const std::vector<TensorBuf>& inputs,
                                        const Objective& f, double h, double tol,
                                        std::size_t max_entries, std::uint64_t seed,
                                        double floor) {
  GradCheckResult r;
  r.name = name;
  std::vector<std::vector<double>> analytic;
  f(inputs, &analytic);
  std::vector<TensorBuf> work = inputs;
  Rng rng(seed);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::size_t size = inputs[i].size();
    std::vector<std::size_t> entries(size);
    std::iota(entries.begin(), entries.end(), 0);
    if (max_entries > 0 && max_entries < size) {
      entries = rng.sample_without_replacement(size, max_entries);
    }
    for (std::size_t e : entries) {
      const double orig = work[i].data()[e];
      work[i].data()[e] = orig + h;
      const double fp = f(work, nullptr);
      work[i].data()[e] = orig - h;
      const double fm = f(work, nullptr);
      work[i].data()[e] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[i][e];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      r.max_rel_error = std::max(r.max_rel_error, std::isfinite(rel) ? rel : 1e300);
      ++r.checked;
    }
  }
  r.passed = r.max_rel_error < tol;
  return r;
}

std::vector<GradCheckResult> gradcheck_suite(double h, double tol) {
  std::vector<GradCheckResult> out;
  Rng rng(12345);
  auto check = [&](const std::string& name, std::vector<TensorBuf> inputs, Builder b,
                   std::size_t max_entries = 0) {
    out.push_back(finite_difference_check(name, inputs, from_builder(std::move(b)), h, tol,
                                          max_entries, rng.split(out.size()).seed()));
  };

  struct ConvCase {
    const char* name;
    ConvOptions opt;
    std::size_t cin, cout, len;
  };
  const ConvCase conv_cases[] = {
      {"conv1d k3 s1 reflect", {3, 1, PadMode::Reflect}, 3, 4, 11},
      {"conv1d k3 s2 reflect", {3, 2, PadMode::Reflect}, 3, 4, 12},
      {"conv1d k3 s2 reflect odd length", {3, 2, PadMode::Reflect}, 2, 3, 9},
      {"conv1d k1 s1", {1, 1, PadMode::Reflect}, 4, 2, 8},
      {"conv1d k5 s1 zero", {5, 1, PadMode::Zero}, 2, 3, 10},
      {"conv1d k5 s2 zero", {5, 2, PadMode::Zero}, 2, 3, 10},
  };
  for (const auto& cc : conv_cases) {
    const std::size_t lout = conv_output_length(cc.len, cc.opt);
    TensorBuf target = random_tensor(cc.cout, lout, rng);
    const ConvOptions opt = cc.opt;
    check(cc.name,
          {random_tensor(cc.cin, cc.len, rng), random_tensor(cc.cout, cc.cin * opt.kernel_size, rng),
           random_tensor(1, cc.cout, rng)},
          fit_to_target([opt](Tape& t, const auto& in) { return t.conv1d(in[0], in[1], in[2], opt); },
                        target));
  }

  check("leaky_relu", {away_from_zero(3, 9, rng)},
        fit_to_target([](Tape& t, const auto& in) { return t.leaky_relu(in[0], 0.01); },
                      random_tensor(3, 9, rng)));
  check("sigmoid", {random_tensor(3, 9, rng, -3, 3)},
        fit_to_target([](Tape& t, const auto& in) { return t.sigmoid(in[0]); },
                      random_tensor(3, 9, rng)));
  check("upsample_nearest", {random_tensor(2, 7, rng)},
        fit_to_target([](Tape& t, const auto& in) { return t.upsample_nearest(in[0]); },
                      random_tensor(2, 14, rng)));
  check("concat_channels", {random_tensor(2, 6, rng), random_tensor(3, 6, rng)},
        fit_to_target([](Tape& t, const auto& in) { return t.concat_channels(in[0], in[1]); },
                      random_tensor(5, 6, rng)));
  check("slice_length", {random_tensor(2, 10, rng)},
        fit_to_target([](Tape& t, const auto& in) { return t.slice_length(in[0], 3, 5); },
                      random_tensor(2, 5, rng)));
  check("pad_reflect_right", {random_tensor(2, 7, rng)},
        fit_to_target([](Tape& t, const auto& in) { return t.pad_reflect_right(in[0], 4); },
                      random_tensor(2, 11, rng)));
  check("channel_norm", {random_tensor(3, 10, rng), random_tensor(1, 3, rng), random_tensor(1, 3, rng)},
        fit_to_target(
            [](Tape& t, const auto& in) { return t.channel_norm(in[0], in[1], in[2], 1e-5); },
            random_tensor(3, 10, rng)));
  {
    const auto dense = as_linear_map(make_gaussian_matrix(5, 9, 77));
    check("linear dense", {random_tensor(2, 9, rng)},
          fit_to_target([dense](Tape& t, const auto& in) { return t.linear(in[0], dense); },
                        random_tensor(2, 5, rng)));
    const auto mask = as_linear_map(make_random_mask(9, 0.3, 78));
    check("linear mask", {random_tensor(2, 9, rng)},
          fit_to_target([mask](Tape& t, const auto& in) { return t.linear(in[0], mask); },
                        random_tensor(2, 9, rng)));
  }
  {
    // Residuals kept away from the +-lambda junction.
    const double lam = 0.3;
    TensorBuf x = random_tensor(2, 8, rng);
    TensorBuf target = x;
    for (double& v : target.data()) {
      const double r = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.2) : rng.uniform(0.45, 1.5);
      v += rng.uniform() < 0.5 ? -r : r;
    }
    check("huber_fit", {x},
          [target, lam](Tape& t, const auto& in) { return t.huber_fit(in[0], target, lam); });
  }
  {
    TensorBuf target = random_tensor(2, 8, rng);
    check("squared_fit", {random_tensor(2, 8, rng)},
          [target](Tape& t, const auto& in) { return t.squared_fit(in[0], target); });
  }
  check("sum", {random_tensor(2, 8, rng)},
        [](Tape& t, const auto& in) { return t.sum(in[0]); });
  check("half_squared_norm", {random_tensor(2, 8, rng)},
        [](Tape& t, const auto& in) { return t.half_squared_norm(in[0]); });

  {
    NetConfig small;
    small.enc_channels = {4, 5};
    small.dec_channels = {4, 5};
    small.skip_channels = {2, 2};
    small.seed = 3;
    const std::size_t len = 13;  // exercises right padding and the final crop
    TensorBuf z = random_tensor(1, len, rng, 0.0, 1.0);
    TensorBuf target = random_tensor(1, len, rng, 0.0, 1.0);
    const PriorNet net(small);
    out.push_back(finite_difference_check("prior net (reduced width, all parameters)",
                                          net.parameters(),
                                          net_objective(small, z, target), h, tol, 0, 1));
  }
  {
    NetConfig small;
    small.enc_layers = small.dec_layers = small.skip_layers = 3;
    small.enc_channels = {3, 3, 3};
    small.dec_channels = {3, 3, 3};
    small.skip_channels = {2, 2, 2};
    small.seed = 4;
    TensorBuf z = random_tensor(1, 16, rng, 0.0, 1.0);
    TensorBuf target = random_tensor(1, 16, rng, 0.0, 1.0);
    const PriorNet net(small);
    out.push_back(finite_difference_check("prior net (depth 3, all parameters)",
                                          net.parameters(),
                                          net_objective(small, z, target), h, tol, 0, 2));
  }
  {
    NetConfig full;
    full.seed = 5;
    TensorBuf z = random_tensor(1, 16, rng, 0.0, 1.0);
    TensorBuf target = random_tensor(1, 16, rng, 0.0, 1.0);
    const PriorNet net(full);
    out.push_back(finite_difference_check("prior net (default, 40 entries per tensor)",
                                          net.parameters(), net_objective(full, z, target), h,
                                          tol, 40, 3));
  }
  {
    NetConfig small;
    small.enc_channels = {4, 4};
    small.dec_channels = {4, 4};
    small.skip_channels = {2, 2};
    small.seed = 6;
    const auto dense = make_gaussian_matrix(8, 16, 79);
    TensorBuf z = random_tensor(1, 16, rng, 0.0, 1.0);
    TensorBuf y(1, 8);
    for (double& v : y.data()) v = rng.uniform(-3.0, 3.0);
    const PriorNet net(small);
    out.push_back(finite_difference_check(
        "solver objective (huber of dense residual)", net.parameters(),
        net_objective(small, z, y, as_linear_map(dense), 0.5), h, tol, 0, 4));
  }
  return out;
}

BiasCheckResult biascheck(const BiasCheckConfig& cfg) {
  const Series s = synth(SynthKind::Sines, cfg.length, cfg.seed);
  Rng rng = Rng(cfg.seed).split(0xb1a5);
  TensorBuf noise(1, cfg.length);
  for (double& v : noise.data()) v = rng.uniform();
  NetConfig net = cfg.net;
  net.seed = cfg.seed;
  BiasCheckResult r;
  r.structured_trace = fit_capacity_probe(net, s.values, cfg.iterations, cfg.lr);
  r.noise_trace = fit_capacity_probe(net, noise, cfg.iterations, cfg.lr);
  r.passed = !r.structured_trace.empty() &&
             r.structured_trace.back() < r.noise_trace.back();
  return r;
}

PermuteResult permute_check(const PermuteConfig& cfg) {
  const ScenarioSpec probe = scenario_from_id(cfg.scenario);
  if (probe.task == Task::CompressedSensing) {
    throw InvalidArgument("permute: only denoising and imputation scenarios are supported");
  }
  const Series clean = synth(cfg.kind, cfg.length, cfg.synth_seed);
  PermuteResult r;
  r.seeds = cfg.seeds;
  r.rmse_original.assign(cfg.seeds.size(), 0.0);
  r.rmse_permuted.assign(cfg.seeds.size(), 0.0);

  const std::string tag = "permute:" + synth_kind_name(cfg.kind);
  // Two independent solves per seed, flattened so both spread over workers.
  parallel_for(2 * cfg.seeds.size(), thread_budget(cfg.threads), [&](std::size_t job) {
    const std::size_t i = job / 2;
    const bool permuted = job % 2 == 1;
    const std::uint64_t seed = cfg.seeds[i];
    const ScenarioSpec spec =
        scenario_from_id(cfg.scenario, corruption_seed(tag, cfg.scenario, seed));
    const Corrupted c = make_scenario(clean.values, spec);
    SolverConfig sc = cfg.solver;
    sc.seed = solver_seed(tag, cfg.scenario, seed);

    if (!permuted) {
      const SolveResult res = solve(c.y, c.op, sc);
      r.rmse_original[i] = rmse(c.ground_truth.data(), res.x_hat.data());
      return;
    }
    const std::size_t n = clean.length();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng prng = Rng(seed).split(0x9e37);
    std::shuffle(perm.begin(), perm.end(), prng.engine());

    auto permute_rows = [&](const TensorBuf& t) {
      TensorBuf o(t.channels(), t.length());
      for (std::size_t ch = 0; ch < t.channels(); ++ch) {
        for (std::size_t k = 0; k < n; ++k) o(ch, k) = t(ch, perm[k]);
      }
      return o;
    };
    const TensorBuf y = permute_rows(c.y);
    const TensorBuf truth = permute_rows(c.ground_truth);
    ForwardOperator op = c.op;
    if (auto* m = std::get_if<MaskOp>(&op)) {
      std::vector<double> pm(n);
      for (std::size_t k = 0; k < n; ++k) pm[k] = m->mask[perm[k]];
      m->mask = std::move(pm);
    }
    const SolveResult res = solve(y, op, sc);
    r.rmse_permuted[i] = rmse(truth.data(), res.x_hat.data());
  });

  r.passed = !r.seeds.empty();
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    if (!(r.rmse_permuted[i] > r.rmse_original[i])) r.passed = false;
  }
  return r;
}

}  // namespace rinst
