#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rinst/autodiff.hpp"
#include "rinst/tensor.hpp"

namespace rinst {

/// A = I (denoising).
struct IdentityOp {
  std::size_t n = 0;
};

/// A = diag(mask) (imputation). Missing samples stay in place as zeros.
struct MaskOp {
  std::vector<double> mask;  // entries in {0, 1}
  // Provenance for manifests; absent for hand-built masks.
  std::optional<std::uint64_t> seed;
  double missing_rate = 0.0;
};

/// A = dense m x n matrix, row-major (compressed sensing).
struct DenseOp {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> matrix;
  std::optional<std::uint64_t> seed;
};

using ForwardOperator = std::variant<IdentityOp, MaskOp, DenseOp>;

std::string operator_tag(const ForwardOperator& op);
std::size_t signal_length(const ForwardOperator& op);
std::size_t measurement_length(const ForwardOperator& op);

/// Validates mask entries and dense dimensions; throws InvalidArgument.
void validate(const ForwardOperator& op);

std::vector<double> apply(const ForwardOperator& op, std::span<const double> x);
/// Channelwise application to [C, n].
TensorBuf apply(const ForwardOperator& op, const TensorBuf& x);
std::vector<double> adjoint(const ForwardOperator& op, std::span<const double> y);
TensorBuf adjoint(const ForwardOperator& op, const TensorBuf& y);

MaskOp make_random_mask(std::size_t n, double missing_rate, std::uint64_t seed);
/// i.i.d. N(0, 1/m) entries so that E||Ax||^2 = ||x||^2.
DenseOp make_gaussian_matrix(std::size_t m, std::size_t n, std::uint64_t seed);
/// m / n. Throws InvalidArgument for non-dense operators.
double compression_ratio(const ForwardOperator& op);

/// Tape adapter so the operator can sit inside a differentiated loss.
std::shared_ptr<const LinearMap> as_linear_map(const ForwardOperator& op);

}  // namespace rinst
