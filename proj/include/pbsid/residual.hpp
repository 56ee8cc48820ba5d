#pragma once

#include "pbsid/core.hpp"

#include <vector>

namespace pbsid::residual {

/// ε_k = y_k - ŷ_k.
[[nodiscard]] Matrix residual_sequence(const Matrix& measured, const Matrix& predicted);

struct Violation {
  Index b = 0;  // 0-based channel of ε_k
  Index s = 0;  // 0-based channel of ε_{k-i}
  Index lag = 0;
  double value = 0.0;
};

struct ResidualReport {
  Index max_lag = 0;                  // l1
  Index n1 = 0;                       // samples - 1
  Vector mean;
  std::vector<Matrix> autocovariance;   // Δ̂_i, i = 0..l1
  std::vector<Matrix> autocorrelation;  // Γ̂_i
  double bound = 0.0;                   // 2 / sqrt(N1)
  std::vector<Violation> violations;    // |γ̂_{b,s}(i)| > bound, i >= 1
};

/**
 * Sample autocovariance Δ̂_i = (1/N1) Σ_{k=i}^{N1} (ε_k - ε̄)(ε_{k-i} - ε̄)ᵀ and
 * autocorrelation Γ̂_i = D̂₀⁻¹ Δ̂_i D̂₀⁻¹ for lags 0..max_lag.
 *
 * A channel whose Δ̂₀ diagonal entry is <= min_variance, or at round-off level
 * relative to its own peak, is rejected by name.
 */
[[nodiscard]] ResidualReport autocorrelation(const Matrix& residuals, Index max_lag,
                                             double min_variance = 0.0);

struct WhitenessVerdict {
  Matrix fraction;                    // r x r, share of lags 1..l1 beyond the bound
  double overall_fraction = 0.0;      // share of all (b, s, i) entries beyond the bound
  double threshold = 0.1;
  bool pass = true;                   // overall_fraction <= threshold
  std::vector<std::pair<Index, Index>> flagged;  // pairs whose own fraction > threshold
};

[[nodiscard]] WhitenessVerdict whiteness_verdict(const ResidualReport& report,
                                                 double threshold = 0.1);

}  // namespace pbsid::residual
