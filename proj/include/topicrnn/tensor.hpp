#ifndef TOPICRNN_TENSOR_HPP
#define TOPICRNN_TENSOR_HPP

#include <cstddef>
#include <vector>

namespace topicrnn {

// Dense row-major tensor of 64-bit floats. Rank 0 is a scalar.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape);
  Tensor(std::vector<size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor from_vector(std::vector<double> v);
  static Tensor zeros(std::vector<size_t> shape);

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  size_t rows() const;
  size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double& at(size_t r, size_t c);
  double at(size_t r, size_t c) const;

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  std::vector<size_t> shape_;
  std::vector<double> data_;
};

}  // namespace topicrnn

#endif  // TOPICRNN_TENSOR_HPP
