#pragma once

#include "pbsid/core.hpp"

#include <string>
#include <vector>

namespace pbsid::sid {

/// Q̂_{p-1} (r f x (m + r) p): block row i is [0_{r x (m+r) i}  M̂(:, 1:(m+r)(p-i))].
[[nodiscard]] Matrix build_q_matrix(const core::VarxEstimate& markov, Index f);

/// SVD of Q̂ Z, shared by every state order n at a fixed future window.
struct ProjectionSvd {
  Vector singular_values;  // full spectrum, nonincreasing
  Matrix U;                // thin
  Matrix V;                // thin
  Index rows = 0;
  Index cols = 0;
};

[[nodiscard]] ProjectionSvd decompose_projection(const Matrix& q_matrix,
                                                 const core::DataMatrix& Z);

struct StateSequence {
  Vector singular_values;
  Matrix states;  // n x (l + 1): X̂ = Σ(1:n,1:n)^{1/2} Vᵀ(1:n,:)
  Index numerical_rank = 0;
  std::vector<std::string> warnings;
};

[[nodiscard]] StateSequence truncate(const ProjectionSvd& svd, Index n);

[[nodiscard]] StateSequence state_sequence(const Matrix& q_matrix, const core::DataMatrix& Z,
                                           Index n);

struct MatrixEstimate {
  core::InnovationModel model;
  Matrix theta;  // [Ã̂ B̂ K̂]
  Index regressor_rank = 0;
  bool ill_conditioned = false;
  double predictor_spectral_radius = 0.0;
  std::vector<std::string> warnings;
};

/**
 * Least-squares system matrices from an estimated state sequence.
 *
 * @param states     X̂_{p,p}^{(l)}, n x (l + 1)
 * @param z_shifted  Z_{p,p}^{(l-1)}, (m + r) x l (z_p .. z_{p+l-1})
 * @param outputs    Y_{p,p}^{(l)}, r x (l + 1)
 *
 * Solves X̂_{p+1} ≈ [Ã B K] [X̂_p; Z] and Y ≈ C X̂, then A = Ã + K C.
 */
[[nodiscard]] MatrixEstimate estimate_matrices(const Matrix& states, const Matrix& z_shifted,
                                               const Matrix& outputs, Index m, Index r);

/// Full second stage on identification data for one (n, f) pair.
struct StateRealization {
  core::InnovationModel model;
  Vector singular_values;
  Matrix state_sequence;
  bool ill_conditioned = false;
  double predictor_spectral_radius = 0.0;
  std::vector<std::string> warnings;
};

[[nodiscard]] StateRealization realize(const core::SignalDataset& identification,
                                       const core::VarxEstimate& markov, Index f, Index n);

/// Same as realize() with the projection SVD already computed for this f.
[[nodiscard]] StateRealization realize(const core::SignalDataset& identification,
                                       const core::VarxEstimate& markov,
                                       const ProjectionSvd& svd, Index f, Index n);

}  // namespace pbsid::sid
