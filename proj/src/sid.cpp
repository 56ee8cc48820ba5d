#include "pbsid/sid.hpp"

#include "pbsid/error.hpp"
#include "pbsid/linalg.hpp"
#include "pbsid/varx.hpp"

#include <Eigen/SVD>

#include <sstream>

namespace pbsid::sid {

Matrix build_q_matrix(const core::VarxEstimate& markov, Index f) {
  const Index p = markov.p;
  const Index r = markov.output_dim;
  const Index d = markov.block_dim();
  if (f < 1 || f > p) {
    std::ostringstream os;
    os << "future window f=" << f << " must lie in [1, p=" << p << "]";
    throw DataError(os.str());
  }
  if (markov.markov.rows() != r || markov.markov.cols() != d * p) {
    throw DataError("Markov matrix dimensions inconsistent with (m, r, p)");
  }
  Matrix Q = Matrix::Zero(r * f, d * p);
  for (Index i = 0; i < f; ++i) {
    Q.block(r * i, d * i, r, d * (p - i)) = markov.markov.leftCols(d * (p - i));
  }
  return Q;
}

ProjectionSvd decompose_projection(const Matrix& q_matrix, const core::DataMatrix& Z) {
  if (q_matrix.cols() != Z.values.rows()) {
    throw DataError("Q̂ column count does not match the rows of Z");
  }
  const Matrix product = q_matrix * Z.values;
  ProjectionSvd out;
  out.rows = product.rows();
  out.cols = product.cols();
  Eigen::BDCSVD<Matrix> svd(product, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.singular_values = svd.singularValues();
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  return out;
}

StateSequence truncate(const ProjectionSvd& svd, Index n) {
  const Index available = svd.singular_values.size();
  if (n < 1 || n > available) {
    std::ostringstream os;
    os << "state order n=" << n << " must lie in [1, min(r f, l + 1)=" << available << "]";
    throw DataError(os.str());
  }
  StateSequence out;
  out.singular_values = svd.singular_values;
  out.numerical_rank = linalg::numerical_rank(svd.singular_values, svd.rows, svd.cols);
  if (n > out.numerical_rank) {
    std::ostringstream os;
    os << "state order n=" << n << " exceeds the numerical rank " << out.numerical_rank
       << " of Q̂Z; the model is over-parameterized";
    out.warnings.push_back(os.str());
  }
  const Vector root = svd.singular_values.head(n).cwiseMax(0.0).cwiseSqrt();
  out.states = root.asDiagonal() * svd.V.leftCols(n).transpose();
  return out;
}

StateSequence state_sequence(const Matrix& q_matrix, const core::DataMatrix& Z, Index n) {
  return truncate(decompose_projection(q_matrix, Z), n);
}

MatrixEstimate estimate_matrices(const Matrix& states, const Matrix& z_shifted,
                                 const Matrix& outputs, Index m, Index r) {
  const Index n = states.rows();
  const Index l = states.cols() - 1;
  if (l < 1) throw DataError("state sequence needs at least 2 columns");
  if (z_shifted.rows() != m + r || z_shifted.cols() != l) {
    throw DataError("shifted regressor must be (m + r) x l");
  }
  if (outputs.rows() != r || outputs.cols() != l + 1) {
    throw DataError("output matrix must be r x (l + 1)");
  }

  Matrix S(n + m + r, l);
  S.topRows(n) = states.leftCols(l);
  S.bottomRows(m + r) = z_shifted;
  const linalg::LeastSquares theta = linalg::solve_right(states.rightCols(l), S);
  const linalg::LeastSquares output_map = linalg::solve_right(outputs, states);

  MatrixEstimate est;
  est.theta = theta.solution;
  est.regressor_rank = theta.rank;
  est.ill_conditioned = theta.rank_deficient() || output_map.rank_deficient();
  if (est.ill_conditioned) {
    std::ostringstream os;
    os << "regressor [X̂; Z] has rank " << theta.rank << " < " << S.rows()
       << "; solved with the pseudo-inverse";
    est.warnings.push_back(os.str());
  }
  core::InnovationModel& model = est.model;
  const Matrix A_tilde = est.theta.leftCols(n);
  model.B = est.theta.middleCols(n, m);
  model.K = est.theta.rightCols(r);
  model.C = output_map.solution;
  model.A = A_tilde + model.K * model.C;
  est.predictor_spectral_radius = linalg::spectral_radius(A_tilde);
  if (!(est.predictor_spectral_radius < 1.0)) {
    std::ostringstream os;
    os << "predictor matrix Ã is not stable (spectral radius " << est.predictor_spectral_radius
       << ")";
    est.warnings.push_back(os.str());
  }
  return est;
}

StateRealization realize(const core::SignalDataset& identification,
                         const core::VarxEstimate& markov, const ProjectionSvd& svd, Index f,
                         Index n) {
  const Index p = markov.p;
  const Index m = markov.input_dim;
  const Index r = markov.output_dim;
  const Index l = identification.samples() - 1 - p;
  StateSequence seq = truncate(svd, n);
  const Matrix z = identification.stacked();
  const MatrixEstimate est = estimate_matrices(seq.states, z.middleCols(p, l),
                                               identification.outputs.middleCols(p, l + 1), m, r);
  StateRealization out;
  out.model = est.model;
  out.model.f_used = f;
  out.model.p_used = p;
  out.singular_values = std::move(seq.singular_values);
  out.state_sequence = std::move(seq.states);
  out.ill_conditioned = est.ill_conditioned;
  out.predictor_spectral_radius = est.predictor_spectral_radius;
  out.warnings = std::move(seq.warnings);
  out.warnings.insert(out.warnings.end(), est.warnings.begin(), est.warnings.end());
  return out;
}

StateRealization realize(const core::SignalDataset& identification,
                         const core::VarxEstimate& markov, Index f, Index n) {
  const varx::Regression reg = varx::build_regression(identification, markov.p);
  return realize(identification, markov, decompose_projection(build_q_matrix(markov, f), reg.Z),
                 f, n);
}

}  // namespace pbsid::sid
