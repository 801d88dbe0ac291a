#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "progsr/core/errors.hpp"

namespace progsr {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Dense row-major volume. Rank is whatever the caller needs; the model code
// works on N x C x T x H x W, clips on C x T x H x W.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_)) {
      throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor reshaped(Shape shape) const {
    if (shape_numel(shape) != static_cast<std::int64_t>(data_.size())) {
      throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(),
                   [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static std::size_t checked_size(const Shape& shape) {
    for (auto d : shape) {
      if (d < 0) throw ShapeError("negative dimension in " + shape_str(shape));
    }
    return static_cast<std::size_t>(shape_numel(shape));
  }

  Shape shape_;
  std::vector<T> data_;
};

// Indexing helper for the N x C x T x H x W layout used throughout the model code.
struct Dims5 {
  std::int64_t n, c, t, h, w;

  static Dims5 of(const Shape& s) {
    if (s.size() != 5) throw ShapeError("expected a rank-5 tensor, got " + shape_str(s));
    return {s[0], s[1], s[2], s[3], s[4]};
  }

  std::int64_t spatial() const { return h * w; }
  std::int64_t volume() const { return t * h * w; }
  std::int64_t index(std::int64_t in, std::int64_t ic, std::int64_t it, std::int64_t ih,
                     std::int64_t iw) const {
    return (((in * c + ic) * t + it) * h + ih) * w + iw;
  }
  Shape shape() const { return {n, c, t, h, w}; }
};

}  // namespace progsr
