#pragma once

#include "pbsid/core.hpp"

#include <vector>

namespace pbsid::varx {

enum class RankPolicy {
  strict,        ///< rank-deficient Z raises PersistencyOfExcitationError
  minimum_norm,  ///< rank-deficient Z yields the minimum-norm M̂, flagged
};

struct Options {
  RankPolicy rank_policy = RankPolicy::strict;
};

/// Regression pair of the one-step-ahead VARX predictor: Z_{0,p-1}^{(l)} and
/// Y_{p,p}^{(l)} with l = N - p, where z_k = [u_k; y_k].
struct Regression {
  core::DataMatrix Z;
  core::DataMatrix Y;
};

[[nodiscard]] Regression build_regression(const core::SignalDataset& dataset, Index p);

/// Smallest N + 1 for which `p` is admissible: N >= p + (m + r) p.
[[nodiscard]] Index required_samples(Index p, Index m, Index r);

/// ln det Γ + (2 / samples) r (m + r) p. A singular Γ is handled through the
/// log of its eigenvalues clamped at 1e-300 and reported via `degenerate`.
[[nodiscard]] double aic_value(const Matrix& residual_cov, Index samples, Index m, Index r,
                               Index p, bool* degenerate = nullptr);

/// Least-squares Markov matrix M̂_{p-1} and residual covariance
/// Γ̂ = Ê Êᵀ / (l + 1), solved through an SVD of Z.
[[nodiscard]] core::VarxEstimate estimate_markov(const core::SignalDataset& dataset, Index p,
                                                 const Options& options = {});

struct AicEntry {
  Index p = 0;
  double aic = 0.0;  // +inf when infeasible
  bool feasible = false;
  bool degenerate = false;
  bool rank_deficient = false;
  Index samples = 0;
};

struct AicScan {
  std::vector<AicEntry> entries;  // p = 1..p_max
  Index p_hat = 0;
};

/// Evaluates AIC(p) for p = 1..p_max. Windows too long for the record are
/// marked infeasible and skipped; ties resolve to the smaller p.
[[nodiscard]] AicScan aic_scan(const core::SignalDataset& dataset, Index p_max,
                               const Options& options = {});

}  // namespace pbsid::varx
