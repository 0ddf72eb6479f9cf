#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <vector>

namespace rinst {

/// Cache-line aligned allocation. Vectorized kernels choose their peeling
/// from the buffer address, so a fixed alignment keeps floating-point
/// summation order, and therefore results, identical from run to run.
template <class T, std::size_t Align = 64>
struct AlignedAllocator {
  using value_type = T;
  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{Align}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{Align}); }
  template <class U>
  bool operator==(const AlignedAllocator<U, Align>&) const noexcept {
    return true;
  }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

/// Dense [channels x length] buffer of doubles, row-major by channel, with an
/// optional gradient slot of identical shape.
class TensorBuf {
 public:
  TensorBuf() = default;
  TensorBuf(std::size_t channels, std::size_t length, double fill = 0.0);
  TensorBuf(std::size_t channels, std::size_t length, std::vector<double> data);

  /// Build from nested rows; all rows must have equal length.
  static TensorBuf from_rows(
      std::initializer_list<std::initializer_list<double>> rows);
  /// Single-channel buffer.
  static TensorBuf from_series(std::span<const double> values);

  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t c, std::size_t t) {
    return data_[c * length_ + t];
  }
  double operator()(std::size_t c, std::size_t t) const {
    return data_[c * length_ + t];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t c) {
    return {data_.data() + c * length_, length_};
  }
  std::span<const double> row(std::size_t c) const {
    return {data_.data() + c * length_, length_};
  }
  /// Copy of the values as a plain vector.
  std::vector<double> values() const { return {data_.begin(), data_.end()}; }

  bool has_grad() const { return !grad_.empty(); }
  /// Allocate (zeroed) the gradient slot if absent.
  void ensure_grad();
  void zero_grad();
  void drop_grad() { grad_.clear(); }
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }

  bool same_shape(const TensorBuf& other) const {
    return channels_ == other.channels_ && length_ == other.length_;
  }
  bool all_finite() const;

  /// Bitwise equality of values (gradients ignored).
  friend bool operator==(const TensorBuf& a, const TensorBuf& b) {
    return a.channels_ == b.channels_ && a.length_ == b.length_ &&
           a.data_ == b.data_;
  }

 private:
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  AlignedVector data_;
  AlignedVector grad_;
};

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace rinst
