#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace gsheaf::ad {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Dense row-major array with up to four axes.
class Tensor {
 public:
  static constexpr int kMaxRank = 4;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor scalar(double x) { return Tensor({}, std::vector<double>{x}); }
  static Tensor from_matrix(const Eigen::MatrixXd& m);
  static Tensor from_vector(const Eigen::VectorXd& v);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double item() const;

  /// Reinterprets the storage as a rows x cols row-major matrix.
  MatrixMap as_matrix(int rows, int cols);
  ConstMatrixMap as_matrix(int rows, int cols) const;
  /// Rank-2 copy into a column-major Eigen matrix.
  Eigen::MatrixXd to_matrix() const;

  Tensor reshaped(std::vector<int> shape) const;
  void fill(double x);

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

std::size_t shape_size(const std::vector<int>& shape);
std::string shape_string(const std::vector<int>& shape);

}  // namespace gsheaf::ad
