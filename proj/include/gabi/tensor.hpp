#ifndef GABI_TENSOR_HPP
#define GABI_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gabi/errors.hpp"

namespace gabi {

/// Dense row-major tensor of 64-bit floats. Rank 1 and 2 are the common
/// cases; shape is validated at construction.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape)
      : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

  Tensor(std::vector<int64_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != checked_numel(shape_))
      throw ShapeError("Tensor: data length does not match shape");
  }

  static Tensor zeros(std::vector<int64_t> shape) {
    return Tensor(std::move(shape));
  }
  static Tensor full(std::vector<int64_t> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool is_scalar() const { return numel() == 1; }

  int64_t rows() const { return rank() >= 1 ? dim(0) : 0; }
  int64_t cols() const { return rank() == 2 ? dim(1) : (rank() == 1 ? 1 : 0); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }
  double& operator()(int64_t i, int64_t j) {
    return data_[static_cast<size_t>(i * dim(1) + j)];
  }
  double operator()(int64_t i, int64_t j) const {
    return data_[static_cast<size_t>(i * dim(1) + j)];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    // NaN and Inf both poison a running |x| sum, so one accumulator pass
    // suffices for the whole buffer.
    double acc = 0.0;
    for (double x : data_) acc += std::fabs(x);
    return std::isfinite(acc);
  }

  bool operator==(const Tensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

  static std::string shape_str(const std::vector<int64_t>& s) {
    std::string r = "[";
    for (size_t i = 0; i < s.size(); ++i) {
      if (i) r += ",";
      r += std::to_string(s[i]);
    }
    return r + "]";
  }

 private:
  static int64_t checked_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d <= 0) throw ShapeError("Tensor: non-positive dimension");
      n *= d;
    }
    return n;
  }

  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

}  // namespace gabi

#endif  // GABI_TENSOR_HPP
