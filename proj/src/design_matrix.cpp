#include "lvar/design_matrix.hpp"

#include "lvar/errors.hpp"

namespace lvar {

Eigen::VectorXd DesignMatrix::transpose_multiply(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(cols());
  for (Index j = 0; j < cols(); ++j) out(j) = col_dot(j, v);
  return out;
}

Eigen::MatrixXd DesignMatrix::gram(std::span<const Index> columns) const {
  const auto k = static_cast<Index>(columns.size());
  Eigen::MatrixXd g(k, k);
  Eigen::VectorXd col(rows());
  for (Index a = 0; a < k; ++a) {
    col.setZero();
    col_axpy(columns[static_cast<std::size_t>(a)], 1.0, col);
    for (Index b = a; b < k; ++b) {
      g(a, b) = col_dot(columns[static_cast<std::size_t>(b)], col);
      g(b, a) = g(a, b);
    }
  }
  return g;
}

DenseDesign::DenseDesign(Eigen::MatrixXd a) : a_(std::move(a)) {
  if (!a_.allFinite()) throw DataError("design matrix has non-finite entries");
  sq_norms_ = a_.colwise().squaredNorm().transpose();
}

Eigen::MatrixXd DenseDesign::gram(std::span<const Index> columns) const {
  const auto k = static_cast<Index>(columns.size());
  Eigen::MatrixXd sub(a_.rows(), k);
  for (Index a = 0; a < k; ++a) sub.col(a) = a_.col(columns[static_cast<std::size_t>(a)]);
  return sub.transpose() * sub;
}

BlockDiagonalDesign::BlockDiagonalDesign(Eigen::MatrixXd x, Index blocks)
    : x_(std::move(x)), blocks_(blocks) {
  if (blocks_ < 1) throw DataError("block-diagonal design needs at least one block");
  if (!x_.allFinite()) throw DataError("design matrix has non-finite entries");
  sq_norms_ = x_.colwise().squaredNorm().transpose();
}

double BlockDiagonalDesign::col_dot(Index j, const Eigen::VectorXd& v) const {
  const Index n = x_.rows();
  const Index block = j / x_.cols();
  return x_.col(j % x_.cols()).dot(v.segment(block * n, n));
}

void BlockDiagonalDesign::col_axpy(Index j, double scale, Eigen::VectorXd& v) const {
  const Index n = x_.rows();
  const Index block = j / x_.cols();
  v.segment(block * n, n).noalias() += scale * x_.col(j % x_.cols());
}

Eigen::VectorXd BlockDiagonalDesign::multiply(const Eigen::VectorXd& beta) const {
  const Index n = x_.rows();
  const Index m = x_.cols();
  Eigen::VectorXd out(rows());
  for (Index b = 0; b < blocks_; ++b) out.segment(b * n, n).noalias() = x_ * beta.segment(b * m, m);
  return out;
}

Eigen::VectorXd BlockDiagonalDesign::transpose_multiply(const Eigen::VectorXd& v) const {
  const Index n = x_.rows();
  const Index m = x_.cols();
  Eigen::VectorXd out(cols());
  for (Index b = 0; b < blocks_; ++b) {
    out.segment(b * m, m).noalias() = x_.transpose() * v.segment(b * n, n);
  }
  return out;
}

Eigen::MatrixXd BlockDiagonalDesign::gram(std::span<const Index> columns) const {
  const auto k = static_cast<Index>(columns.size());
  const Index m = x_.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, k);
  for (Index a = 0; a < k; ++a) {
    const Index ja = columns[static_cast<std::size_t>(a)];
    for (Index b = a; b < k; ++b) {
      const Index jb = columns[static_cast<std::size_t>(b)];
      if (ja / m != jb / m) continue;
      g(a, b) = x_.col(ja % m).dot(x_.col(jb % m));
      g(b, a) = g(a, b);
    }
  }
  return g;
}

}  // namespace lvar
