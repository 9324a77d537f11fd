#include "gsheaf/autodiff/tensor.hpp"

#include <algorithm>

#include "gsheaf/error.hpp"

namespace gsheaf::ad {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s < 0) throw ShapeError("negative tensor extent");
    n *= static_cast<std::size_t>(s);
  }
  return n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  if (rank() > kMaxRank) throw ShapeError("tensor rank above 4");
  values_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (rank() > kMaxRank) throw ShapeError("tensor rank above 4");
  if (values_.size() != shape_size(shape_)) {
    throw ShapeError("tensor " + shape_string(shape_) + " given " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::from_matrix(const Eigen::MatrixXd& m) {
  Tensor t({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
  t.as_matrix(static_cast<int>(m.rows()), static_cast<int>(m.cols())) = m;
  return t;
}

Tensor Tensor::from_vector(const Eigen::VectorXd& v) {
  return Tensor({static_cast<int>(v.size())}, std::vector<double>(v.data(), v.data() + v.size()));
}

double Tensor::item() const {
  if (values_.size() != 1) throw ShapeError("item() on a tensor of size " + std::to_string(size()));
  return values_[0];
}

MatrixMap Tensor::as_matrix(int rows, int cols) {
  if (static_cast<std::size_t>(rows) * cols != size()) throw ShapeError("as_matrix: size mismatch");
  return MatrixMap(values_.data(), rows, cols);
}

ConstMatrixMap Tensor::as_matrix(int rows, int cols) const {
  if (static_cast<std::size_t>(rows) * cols != size()) throw ShapeError("as_matrix: size mismatch");
  return ConstMatrixMap(values_.data(), rows, cols);
}

Eigen::MatrixXd Tensor::to_matrix() const {
  if (rank() != 2) throw ShapeError("to_matrix on tensor " + shape_string(shape_));
  return as_matrix(shape_[0], shape_[1]);
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  if (shape_size(shape) != size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

void Tensor::fill(double x) { std::fill(values_.begin(), values_.end(), x); }

}  // namespace gsheaf::ad
