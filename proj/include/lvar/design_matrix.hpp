#pragma once

#include <Eigen/Dense>

#include <span>

namespace lvar {

using Index = Eigen::Index;

/// Column-access interface used by the coordinate-descent solvers. Only the
/// operations the solvers need are exposed so structured designs (e.g. a
/// block-diagonal stack of one regressor matrix) never get materialized.
class DesignMatrix {
 public:
  virtual ~DesignMatrix() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  // a_j' v
  virtual double col_dot(Index j, const Eigen::VectorXd& v) const = 0;
  // v += scale * a_j
  virtual void col_axpy(Index j, double scale, Eigen::VectorXd& v) const = 0;
  virtual double col_squared_norm(Index j) const = 0;
  // A beta
  virtual Eigen::VectorXd multiply(const Eigen::VectorXd& beta) const = 0;
  // A' v
  virtual Eigen::VectorXd transpose_multiply(const Eigen::VectorXd& v) const;
  // A_S' A_S for the listed columns
  virtual Eigen::MatrixXd gram(std::span<const Index> columns) const;
};

class DenseDesign final : public DesignMatrix {
 public:
  explicit DenseDesign(Eigen::MatrixXd a);

  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  double col_dot(Index j, const Eigen::VectorXd& v) const override { return a_.col(j).dot(v); }
  void col_axpy(Index j, double scale, Eigen::VectorXd& v) const override {
    v.noalias() += scale * a_.col(j);
  }
  double col_squared_norm(Index j) const override { return sq_norms_(j); }
  Eigen::VectorXd multiply(const Eigen::VectorXd& beta) const override { return a_ * beta; }
  Eigen::VectorXd transpose_multiply(const Eigen::VectorXd& v) const override {
    return a_.transpose() * v;
  }
  Eigen::MatrixXd gram(std::span<const Index> columns) const override;

  const Eigen::MatrixXd& matrix() const { return a_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd sq_norms_;
};

/// I_k (x) X: k copies of an n x m matrix X on the diagonal. Column
/// `block * m + c` is column c of X placed in rows [block * n, (block + 1) * n).
/// This is the vectorized design of a k-response regression sharing X.
class BlockDiagonalDesign final : public DesignMatrix {
 public:
  BlockDiagonalDesign(Eigen::MatrixXd x, Index blocks);

  Index rows() const override { return x_.rows() * blocks_; }
  Index cols() const override { return x_.cols() * blocks_; }
  double col_dot(Index j, const Eigen::VectorXd& v) const override;
  void col_axpy(Index j, double scale, Eigen::VectorXd& v) const override;
  double col_squared_norm(Index j) const override { return sq_norms_(j % x_.cols()); }
  Eigen::VectorXd multiply(const Eigen::VectorXd& beta) const override;
  Eigen::VectorXd transpose_multiply(const Eigen::VectorXd& v) const override;
  Eigen::MatrixXd gram(std::span<const Index> columns) const override;

  Index blocks() const { return blocks_; }
  const Eigen::MatrixXd& block_matrix() const { return x_; }

 private:
  Eigen::MatrixXd x_;
  Index blocks_;
  Eigen::VectorXd sq_norms_;
};

}  // namespace lvar
