#include "topicrnn/tensor.hpp"

#include <cmath>

#include "topicrnn/errors.hpp"

namespace topicrnn {

namespace {
size_t shape_product(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw ConfigError("tensor data length does not match shape");
  }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::from_vector(std::vector<double> v) {
  size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::zeros(std::vector<size_t> shape) {
  return Tensor(std::move(shape));
}

size_t Tensor::rows() const {
  if (rank() != 2) throw ConfigError("rows() requires a rank-2 tensor");
  return shape_[0];
}

size_t Tensor::cols() const {
  if (rank() != 2) throw ConfigError("cols() requires a rank-2 tensor");
  return shape_[1];
}

double& Tensor::at(size_t r, size_t c) { return data_[r * shape_[1] + c]; }

double Tensor::at(size_t r, size_t c) const { return data_[r * shape_[1] + c]; }

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace topicrnn
