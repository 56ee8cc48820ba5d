#include "pbsid/varx.hpp"

#include "pbsid/error.hpp"
#include "pbsid/linalg.hpp"
#include "pbsid/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace pbsid::varx {

Index required_samples(Index p, Index m, Index r) { return p + (m + r) * p + 1; }

Regression build_regression(const core::SignalDataset& dataset, Index p) {
  if (p < 1) throw DataError("past window p must be >= 1");
  const Index N = dataset.samples() - 1;
  if (N < p) throw DataError("dataset shorter than the past window");
  const Index l = N - p;
  const Matrix z = dataset.stacked();
  return {core::build_data_matrix(z, 0, p - 1, l),
          core::build_data_matrix(dataset.outputs, p, p, l)};
}

double aic_value(const Matrix& residual_cov, Index samples, Index m, Index r, Index p,
                 bool* degenerate) {
  constexpr double kFloor = 1e-300;
  const Eigen::SelfAdjointEigenSolver<Matrix> es(residual_cov, Eigen::EigenvaluesOnly);
  double log_det = 0.0;
  bool singular = false;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    double ev = es.eigenvalues()[i];
    if (ev <= kFloor) {
      singular = true;
      ev = kFloor;
    }
    log_det += std::log(ev);
  }
  if (degenerate != nullptr) *degenerate = singular;
  const double penalty =
      2.0 / static_cast<double>(samples) * static_cast<double>(r * (m + r) * p);
  return log_det + penalty;
}

core::VarxEstimate estimate_markov(const core::SignalDataset& dataset, Index p,
                                   const Options& options) {
  dataset.validate();
  if (p < 1) throw DataError("past window p must be >= 1");
  const Index m = dataset.input_dim();
  const Index r = dataset.output_dim();
  const Index needed = required_samples(p, m, r);
  if (dataset.samples() < needed) {
    std::ostringstream os;
    os << "insufficient samples for past window p=" << p << ": need at least " << needed
       << ", have " << dataset.samples();
    throw DataError(os.str());
  }

  const Regression reg = build_regression(dataset, p);
  const Matrix& Z = reg.Z.values;
  const Matrix& Y = reg.Y.values;
  const linalg::LeastSquares ls = linalg::solve_right(Y, Z);
  if (ls.rank_deficient() && options.rank_policy == RankPolicy::strict) {
    std::ostringstream os;
    os << "persistency of excitation violated: Z_{0,p-1} has rank " << ls.rank << " < "
       << Z.rows() << " rows (p=" << p << ")";
    throw PersistencyOfExcitationError(os.str());
  }

  core::VarxEstimate est;
  est.markov = ls.solution;
  est.p = p;
  est.input_dim = m;
  est.output_dim = r;
  est.samples = Z.cols();
  est.rank = ls.rank;
  est.rank_deficient = ls.rank_deficient();
  const Matrix E = Y - est.markov * Z;
  est.residual_cov = (E * E.transpose()) / static_cast<double>(est.samples);
  est.residual_cov = 0.5 * (est.residual_cov + est.residual_cov.transpose()).eval();
  est.aic = aic_value(est.residual_cov, est.samples, m, r, p, &est.degenerate_fit);
  return est;
}

AicScan aic_scan(const core::SignalDataset& dataset, Index p_max, const Options& options) {
  if (p_max < 1) throw DataError("p_max must be >= 1");
  dataset.validate();
  AicScan scan;
  scan.entries.resize(static_cast<std::size_t>(p_max));
  const Index m = dataset.input_dim();
  const Index r = dataset.output_dim();
  parallel_for(static_cast<std::size_t>(p_max), [&](std::size_t i) {
    AicEntry& entry = scan.entries[i];
    entry.p = static_cast<Index>(i) + 1;
    entry.aic = std::numeric_limits<double>::infinity();
    if (dataset.samples() < required_samples(entry.p, m, r)) return;
    const core::VarxEstimate est = estimate_markov(dataset, entry.p, options);
    entry.feasible = true;
    entry.aic = est.aic;
    entry.degenerate = est.degenerate_fit;
    entry.rank_deficient = est.rank_deficient;
    entry.samples = est.samples;
  });
  double best = std::numeric_limits<double>::infinity();
  for (const AicEntry& e : scan.entries) {
    if (e.feasible && e.aic < best) {
      best = e.aic;
      scan.p_hat = e.p;
    }
  }
  if (scan.p_hat == 0) {
    std::ostringstream os;
    os << "no feasible past window: p=1 needs " << required_samples(1, m, r) << " samples, have "
       << dataset.samples();
    throw DataError(os.str());
  }
  return scan;
}

}  // namespace pbsid::varx
