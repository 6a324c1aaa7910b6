#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace ironbench {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  std::size_t size() const noexcept { return data.size(); }
  std::size_t rows() const noexcept { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const noexcept { return shape.size() < 2 ? 1 : size() / rows(); }

  // 1-D tensors map as a single row.
  Eigen::Map<RowMatrix> matrix() {
    return shape.size() < 2 ? Eigen::Map<RowMatrix>(data.data(), 1, static_cast<Eigen::Index>(size()))
                            : Eigen::Map<RowMatrix>(data.data(), static_cast<Eigen::Index>(rows()),
                                                    static_cast<Eigen::Index>(cols()));
  }
  Eigen::Map<const RowMatrix> matrix() const {
    return shape.size() < 2 ? Eigen::Map<const RowMatrix>(data.data(), 1, static_cast<Eigen::Index>(size()))
                            : Eigen::Map<const RowMatrix>(data.data(), static_cast<Eigen::Index>(rows()),
                                                          static_cast<Eigen::Index>(cols()));
  }
  Eigen::Map<Eigen::RowVectorXd> row_vector() {
    return Eigen::Map<Eigen::RowVectorXd>(data.data(), static_cast<Eigen::Index>(size()));
  }
  Eigen::Map<const Eigen::RowVectorXd> row_vector() const {
    return Eigen::Map<const Eigen::RowVectorXd>(data.data(), static_cast<Eigen::Index>(size()));
  }
};

// Ordered collection of named arrays. Iteration order is insertion order,
// which fixes the reduction and serialization order.
class ParamSet {
 public:
  Tensor& add(const std::string& name, std::vector<std::size_t> shape);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const noexcept { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& tensor(std::size_t i) { return tensors_[i]; }
  const Tensor& tensor(std::size_t i) const { return tensors_[i]; }

  std::size_t parameter_count() const noexcept;
  bool same_layout(const ParamSet& other) const noexcept;
  ParamSet zeros_like() const;
  void set_zero();
  void scale(double factor);
  void add(const ParamSet& other);
  bool all_finite() const noexcept;
  bool bitwise_equal(const ParamSet& other) const noexcept;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace ironbench
