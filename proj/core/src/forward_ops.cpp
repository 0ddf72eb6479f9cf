#include "rinst/forward_ops.hpp"

#include <cmath>

#include "rinst/errors.hpp"
#include "rinst/rng.hpp"

namespace rinst {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InvalidArgument(std::string(what) + ": length " + std::to_string(got) +
                          " does not match operator dimension " +
                          std::to_string(want));
  }
}

void apply_into(const ForwardOperator& op, std::span<const double> x,
                std::span<double> out) {
  std::visit(Overloaded{
                 [&](const IdentityOp&) { std::copy(x.begin(), x.end(), out.begin()); },
                 [&](const MaskOp& m) {
                   for (std::size_t i = 0; i < x.size(); ++i) out[i] = m.mask[i] * x[i];
                 },
                 [&](const DenseOp& d) {
                   for (std::size_t r = 0; r < d.m; ++r) {
                     const double* row = d.matrix.data() + r * d.n;
                     double acc = 0.0;
                     for (std::size_t c = 0; c < d.n; ++c) acc += row[c] * x[c];
                     out[r] = acc;
                   }
                 },
             },
             op);
}

void adjoint_into(const ForwardOperator& op, std::span<const double> y,
                  std::span<double> out) {
  std::visit(Overloaded{
                 [&](const IdentityOp&) { std::copy(y.begin(), y.end(), out.begin()); },
                 [&](const MaskOp& m) {
                   for (std::size_t i = 0; i < y.size(); ++i) out[i] = m.mask[i] * y[i];
                 },
                 [&](const DenseOp& d) {
                   std::fill(out.begin(), out.end(), 0.0);
                   for (std::size_t r = 0; r < d.m; ++r) {
                     const double* row = d.matrix.data() + r * d.n;
                     const double yr = y[r];
                     for (std::size_t c = 0; c < d.n; ++c) out[c] += row[c] * yr;
                   }
                 },
             },
             op);
}

}  // namespace

std::string operator_tag(const ForwardOperator& op) {
  return std::visit(Overloaded{
                        [](const IdentityOp&) { return std::string("identity"); },
                        [](const MaskOp&) { return std::string("mask"); },
                        [](const DenseOp&) { return std::string("dense"); },
                    },
                    op);
}

std::size_t signal_length(const ForwardOperator& op) {
  return std::visit(Overloaded{
                        [](const IdentityOp& o) { return o.n; },
                        [](const MaskOp& o) { return o.mask.size(); },
                        [](const DenseOp& o) { return o.n; },
                    },
                    op);
}

std::size_t measurement_length(const ForwardOperator& op) {
  return std::visit(Overloaded{
                        [](const IdentityOp& o) { return o.n; },
                        [](const MaskOp& o) { return o.mask.size(); },
                        [](const DenseOp& o) { return o.m; },
                    },
                    op);
}

void validate(const ForwardOperator& op) {
  std::visit(Overloaded{
                 [](const IdentityOp&) {},
                 [](const MaskOp& o) {
                   for (double v : o.mask) {
                     if (v != 0.0 && v != 1.0) {
                       throw InvalidArgument("MaskOp: entries must be 0 or 1");
                     }
                   }
                 },
                 [](const DenseOp& o) {
                   if (o.m == 0 || o.m > o.n) {
                     throw InvalidArgument("DenseOp: require 1 <= m <= n");
                   }
                   if (o.matrix.size() != o.m * o.n) {
                     throw InvalidArgument("DenseOp: matrix size mismatch");
                   }
                   for (double v : o.matrix) {
                     if (!std::isfinite(v)) throw InvalidArgument("DenseOp: non-finite entry");
                   }
                 },
             },
             op);
}

std::vector<double> apply(const ForwardOperator& op, std::span<const double> x) {
  check_length(x.size(), signal_length(op), "apply");
  std::vector<double> out(measurement_length(op));
  apply_into(op, x, out);
  return out;
}

TensorBuf apply(const ForwardOperator& op, const TensorBuf& x) {
  check_length(x.length(), signal_length(op), "apply");
  TensorBuf out(x.channels(), measurement_length(op));
  for (std::size_t c = 0; c < x.channels(); ++c) apply_into(op, x.row(c), out.row(c));
  return out;
}

std::vector<double> adjoint(const ForwardOperator& op, std::span<const double> y) {
  check_length(y.size(), measurement_length(op), "adjoint");
  std::vector<double> out(signal_length(op));
  adjoint_into(op, y, out);
  return out;
}

TensorBuf adjoint(const ForwardOperator& op, const TensorBuf& y) {
  check_length(y.length(), measurement_length(op), "adjoint");
  TensorBuf out(y.channels(), signal_length(op));
  for (std::size_t c = 0; c < y.channels(); ++c) adjoint_into(op, y.row(c), out.row(c));
  return out;
}

MaskOp make_random_mask(std::size_t n, double missing_rate, std::uint64_t seed) {
  if (!(missing_rate >= 0.0 && missing_rate <= 1.0)) {
    throw InvalidArgument("make_random_mask: missing_rate must lie in [0, 1]");
  }
  MaskOp op;
  op.mask.assign(n, 1.0);
  op.seed = seed;
  op.missing_rate = missing_rate;
  const auto missing = static_cast<std::size_t>(
      std::llround(missing_rate * static_cast<double>(n)));
  Rng rng(seed);
  for (std::size_t i : rng.sample_without_replacement(n, missing)) op.mask[i] = 0.0;
  return op;
}

DenseOp make_gaussian_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m == 0 || m > n) {
    throw InvalidArgument("make_gaussian_matrix: require 1 <= m <= n (m=" +
                          std::to_string(m) + ", n=" + std::to_string(n) + ")");
  }
  DenseOp op;
  op.m = m;
  op.n = n;
  op.seed = seed;
  op.matrix.resize(m * n);
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(m));
  for (double& v : op.matrix) v = rng.normal(0.0, stddev);
  return op;
}

double compression_ratio(const ForwardOperator& op) {
  const auto* d = std::get_if<DenseOp>(&op);
  if (d == nullptr) {
    throw InvalidArgument("compression_ratio: operator is " + operator_tag(op) +
                          ", not dense");
  }
  return static_cast<double>(d->m) / static_cast<double>(d->n);
}

std::shared_ptr<const LinearMap> as_linear_map(const ForwardOperator& op) {
  auto shared = std::make_shared<const ForwardOperator>(op);
  auto map = std::make_shared<LinearMap>();
  map->in_length = signal_length(op);
  map->out_length = measurement_length(op);
  map->apply = [shared](std::span<const double> x, std::span<double> out) {
    apply_into(*shared, x, out);
  };
  map->adjoint = [shared](std::span<const double> y, std::span<double> out) {
    adjoint_into(*shared, y, out);
  };
  return map;
}

}  // namespace rinst
