#pragma once

#include "pbsid/core.hpp"

namespace pbsid::linalg {

/// Singular values below max(rows, cols) * eps * sigma_max count as zero.
[[nodiscard]] double rank_tolerance(const Vector& singular_values, Index rows, Index cols);
[[nodiscard]] Index numerical_rank(const Vector& singular_values, Index rows, Index cols);

struct LeastSquares {
  Matrix solution;
  Index rank = 0;
  Index full_rank = 0;  // rank required for a unique solution

  [[nodiscard]] bool rank_deficient() const { return rank < full_rank; }
};

/// Minimum-norm X minimizing ||Y - X Z||_F, via an SVD of Z.
[[nodiscard]] LeastSquares solve_right(const Matrix& Y, const Matrix& Z);

/// Minimum-norm x minimizing ||A x - b||, via an SVD of A.
[[nodiscard]] LeastSquares solve_left(const Matrix& A, const Matrix& b);

[[nodiscard]] Matrix pseudo_inverse(const Matrix& A, Index* rank = nullptr);

[[nodiscard]] double spectral_radius(const Matrix& A);

}  // namespace pbsid::linalg
