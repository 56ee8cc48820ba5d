#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace pbsid {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace pbsid

namespace pbsid::core {

/// A sequence of d-vectors stored column-wise: column k holds sample k.
using Sequence = Matrix;

/**
 * Time-indexed multichannel input/output record (u_k, y_k), k = 0..N.
 *
 * Inputs are m x (N+1), outputs r x (N+1). Labels hold the m input names
 * followed by the r output names.
 */
struct SignalDataset {
  std::vector<double> timestamps;
  Matrix inputs;
  Matrix outputs;
  double sample_period = 1.0;
  std::vector<std::string> labels;

  [[nodiscard]] Index samples() const { return static_cast<Index>(timestamps.size()); }
  [[nodiscard]] Index input_dim() const { return inputs.rows(); }
  [[nodiscard]] Index output_dim() const { return outputs.rows(); }

  /// Throws DataError when an invariant is violated. An empty record is
  /// only accepted with `allow_empty` (header-only files).
  void validate(bool allow_empty = false) const;

  /// Samples [first, first + count) with timestamps preserved.
  [[nodiscard]] SignalDataset slice(Index first, Index count) const;

  /// z_k = [u_k; y_k] for every k, (m + r) x (N+1).
  [[nodiscard]] Matrix stacked() const;
};

/// Builds a dataset with timestamps t0 + k * sample_period and default
/// labels u1..um, y1..yr.
[[nodiscard]] SignalDataset make_dataset(Matrix inputs, Matrix outputs, double sample_period,
                                         double t0 = 0.0);

[[nodiscard]] std::vector<std::string> default_labels(Index m, Index r);

/// Block-Hankel data matrix W_{q,r}^{(l)}: column j is lift(seq, q + j, last + j).
struct DataMatrix {
  Matrix values;
  Index block_dim = 0;
  Index first = 0;   // q
  Index last = 0;    // r
  Index shifts = 0;  // l

  [[nodiscard]] Index block_rows() const { return last - first + 1; }
};

/// Vertical stack seq_q, seq_{q+1}, ..., seq_last.
[[nodiscard]] Vector lift(const Sequence& seq, Index first, Index last);

[[nodiscard]] DataMatrix build_data_matrix(const Sequence& seq, Index first, Index last,
                                           Index shifts);

/**
 * Kalman innovation state-space model
 *
 *   x_{k+1} = A x_k + B u_k + K e_k,   y_k = C x_k + e_k.
 */
struct InnovationModel {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix K;
  Index f_used = 0;
  Index p_used = 0;

  [[nodiscard]] Index order() const { return A.rows(); }
  [[nodiscard]] Index input_dim() const { return B.cols(); }
  [[nodiscard]] Index output_dim() const { return C.rows(); }

  void validate() const;
};

/// Predictor form x_{k+1} = Ã x_k + B̃ z_k with Ã = A - K C and B̃ = [B K].
struct PredictorForm {
  Matrix A_tilde;
  Matrix B_tilde;
};

[[nodiscard]] PredictorForm predictor_matrices(const InnovationModel& model);

/// Markov-parameter estimate of the one-step-ahead VARX predictor.
struct VarxEstimate {
  Matrix markov;        // r x (m + r) p, oldest lag first
  Index p = 0;
  Matrix residual_cov;  // r x r
  double aic = 0.0;
  Index input_dim = 0;
  Index output_dim = 0;
  Index samples = 0;    // l + 1 regression columns
  Index rank = 0;       // numerical rank of Z
  bool rank_deficient = false;
  bool degenerate_fit = false;

  [[nodiscard]] Index block_dim() const { return input_dim + output_dim; }
};

}  // namespace pbsid::core
