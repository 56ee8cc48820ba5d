#include "pbsid/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>

namespace pbsid::linalg {

double rank_tolerance(const Vector& singular_values, Index rows, Index cols) {
  if (singular_values.size() == 0) return 0.0;
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() *
         singular_values.maxCoeff();
}

Index numerical_rank(const Vector& singular_values, Index rows, Index cols) {
  const double tol = rank_tolerance(singular_values, rows, cols);
  Index rank = 0;
  for (Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values[i] > tol) ++rank;
  }
  return rank;
}

namespace {

// Thresholded pseudo-inverse applied from an SVD; returns the rank used.
Matrix apply_pinv(const Eigen::BDCSVD<Matrix>& svd, const Matrix& rhs, Index rows, Index cols,
                  Index& rank) {
  const Vector& s = svd.singularValues();
  rank = numerical_rank(s, rows, cols);
  const Matrix& U = svd.matrixU();
  const Matrix& V = svd.matrixV();
  Matrix tmp = U.leftCols(rank).transpose() * rhs;
  for (Index i = 0; i < rank; ++i) tmp.row(i) /= s[i];
  return V.leftCols(rank) * tmp;
}

}  // namespace

LeastSquares solve_left(const Matrix& A, const Matrix& b) {
  LeastSquares ls;
  ls.full_rank = A.cols();
  if (A.size() == 0) {
    ls.solution = Matrix::Zero(A.cols(), b.cols());
    return ls;
  }
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ls.solution = apply_pinv(svd, b, A.rows(), A.cols(), ls.rank);
  return ls;
}

LeastSquares solve_right(const Matrix& Y, const Matrix& Z) {
  // X Z = Y  <=>  Z^T X^T = Y^T
  LeastSquares ls = solve_left(Z.transpose(), Y.transpose());
  ls.solution.transposeInPlace();
  ls.full_rank = Z.rows();
  return ls;
}

Matrix pseudo_inverse(const Matrix& A, Index* rank) {
  Index r = 0;
  Matrix out;
  if (A.size() == 0) {
    out = Matrix::Zero(A.cols(), A.rows());
  } else {
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out = apply_pinv(svd, Matrix::Identity(A.rows(), A.rows()), A.rows(), A.cols(), r);
  }
  if (rank != nullptr) *rank = r;
  return out;
}

double spectral_radius(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace pbsid::linalg
