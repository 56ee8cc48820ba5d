#include "pbsid/residual.hpp"

#include "pbsid/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pbsid::residual {

Matrix residual_sequence(const Matrix& measured, const Matrix& predicted) {
  if (measured.rows() != predicted.rows() || measured.cols() != predicted.cols()) {
    throw DataError("residual sequence: dimension mismatch");
  }
  return measured - predicted;
}

ResidualReport autocorrelation(const Matrix& residuals, Index max_lag, double min_variance) {
  const Index r = residuals.rows();
  const Index n1 = residuals.cols() - 1;
  if (n1 < 1) throw DataError("autocorrelation needs at least 2 samples");
  if (max_lag < 0 || max_lag >= n1) {
    std::ostringstream os;
    os << "max lag " << max_lag << " must lie in [0, N1=" << n1 << ")";
    throw DataError(os.str());
  }

  ResidualReport rep;
  rep.max_lag = max_lag;
  rep.n1 = n1;
  rep.mean = residuals.rowwise().mean();
  const Matrix centered = residuals.colwise() - rep.mean;
  const double scale = 1.0 / static_cast<double>(n1);

  rep.autocovariance.reserve(static_cast<std::size_t>(max_lag + 1));
  for (Index i = 0; i <= max_lag; ++i) {
    const Index count = n1 - i + 1;  // k = i..N1
    rep.autocovariance.push_back(scale * centered.middleCols(i, count) *
                                 centered.middleCols(0, count).transpose());
  }

  const Vector var = rep.autocovariance.front().diagonal();
  for (Index b = 0; b < r; ++b) {
    // a constant channel centres to round-off only
    const double peak = residuals.row(b).cwiseAbs().maxCoeff();
    const double floor = std::max(min_variance, std::pow(1e-12 * peak, 2));
    if (!(var[b] > floor)) {
      std::ostringstream os;
      os << "residual channel " << b + 1 << " has zero variance";
      throw DataError(os.str());
    }
  }
  const Vector inv_sd = var.cwiseSqrt().cwiseInverse();
  rep.bound = 2.0 / std::sqrt(static_cast<double>(n1));
  rep.autocorrelation.reserve(rep.autocovariance.size());
  for (Index i = 0; i <= max_lag; ++i) {
    Matrix g = inv_sd.asDiagonal() * rep.autocovariance[i] * inv_sd.asDiagonal();
    if (i == 0) g.diagonal().setOnes();
    if (i > 0) {
      for (Index s = 0; s < r; ++s) {
        for (Index b = 0; b < r; ++b) {
          if (std::abs(g(b, s)) > rep.bound) rep.violations.push_back({b, s, i, g(b, s)});
        }
      }
    }
    rep.autocorrelation.push_back(std::move(g));
  }
  return rep;
}

WhitenessVerdict whiteness_verdict(const ResidualReport& report, double threshold) {
  const Index r = report.autocorrelation.empty() ? 0 : report.autocorrelation.front().rows();
  WhitenessVerdict v;
  v.threshold = threshold;
  v.fraction = Matrix::Zero(r, r);
  if (report.max_lag == 0 || r == 0) return v;
  for (const Violation& viol : report.violations) v.fraction(viol.b, viol.s) += 1.0;
  v.overall_fraction = v.fraction.sum() / static_cast<double>(r * r * report.max_lag);
  v.fraction /= static_cast<double>(report.max_lag);
  v.pass = v.overall_fraction <= threshold;
  for (Index b = 0; b < r; ++b) {
    for (Index s = 0; s < r; ++s) {
      if (v.fraction(b, s) > threshold) v.flagged.emplace_back(b, s);
    }
  }
  return v;
}

}  // namespace pbsid::residual
