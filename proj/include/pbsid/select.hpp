#pragma once

#include "pbsid/core.hpp"
#include "pbsid/varx.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pbsid::select {

/// Validation scenario used to score a candidate model.
enum class Method {
  A,  ///< open-loop simulation of (Â, B̂, Ĉ)
  B,  ///< predictor form fed back with its own simulated outputs
  C,  ///< predictor form fed with measured outputs (one-step-ahead)
};

[[nodiscard]] char to_char(Method method);
[[nodiscard]] Method method_from_string(const std::string& text);

struct GridPair {
  Index n = 0;
  Index f = 0;
  friend bool operator==(const GridPair&, const GridPair&) = default;
};

/// Pairs (n, f) with n = 1..n_max and f = ceil(n / r)..f_max.
struct SelectionGrid {
  Index n_max = 40;
  Index f_max = 1;
  Index output_dim = 1;

  [[nodiscard]] static Index f_min(Index n, Index r) { return (n + r - 1) / r; }
  [[nodiscard]] std::vector<GridPair> pairs() const;
};

enum class InitialStateMode {
  open_loop,  ///< Method A: (Â, B̂, Ĉ) driven by u
  predictor,  ///< Methods B and C: (Ã̂, [B̂ K̂], Ĉ) driven by z = [u; y]
};

struct InitialState {
  Vector x0;
  Index rank = 0;
  std::vector<std::string> warnings;
};

/// Least-squares initial state from the first h validation samples using the
/// observability matrix O_{h-1} and the lower block-Toeplitz D̂_{h-1}.
[[nodiscard]] InitialState estimate_initial_state(const core::InnovationModel& model,
                                                  const core::SignalDataset& validation, Index h,
                                                  InitialStateMode mode);

/// Default h = max(ceil(n / r) + 5, 10), clipped to N1 / 4 (and at least 1).
[[nodiscard]] Index default_initial_window(Index n, Index r, Index validation_samples);

[[nodiscard]] Matrix simulate_method_a(const core::InnovationModel& model, const Vector& x0,
                                       const Matrix& inputs);

/// With `first_output` the first step uses the measured z_0 = [u_0; y_0];
/// later steps feed back ŷ_k = Ĉ x_k.
[[nodiscard]] Matrix simulate_method_b(const core::InnovationModel& model, const Vector& x0,
                                       const Matrix& inputs,
                                       const std::optional<Vector>& first_output = std::nullopt);

[[nodiscard]] Matrix simulate_method_c(const core::InnovationModel& model, const Vector& x0,
                                       const Matrix& inputs, const Matrix& measured_outputs);

/// ||y - ŷ||₂ / ||y||₂ over all stacked samples.
[[nodiscard]] double relative_error(const Matrix& measured, const Matrix& predicted);

struct VafResult {
  Vector percent;               // NaN for rejected channels
  std::vector<Index> rejected;  // zero-variance channels
};

/// Per-channel max(0, 1 - var(y - ŷ) / var(y)) * 100.
[[nodiscard]] VafResult vaf(const Matrix& measured, const Matrix& predicted);

/// Initial state and simulated validation outputs of one model under `method`.
struct Prediction {
  Vector x0;
  Matrix outputs;
  std::vector<std::string> warnings;
};

[[nodiscard]] Prediction predict(const core::InnovationModel& model,
                                 const core::SignalDataset& validation, Method method, Index h);

struct PairScore {
  GridPair pair;
  double relative_error = 0.0;  // +inf when the pair failed
  Vector vaf;
  Index h = 0;
  bool ok = false;
  std::string failure;
};

struct SelectionResult {
  Method method = Method::A;
  Index p = 0;
  std::vector<PairScore> scores;  // grid order
  std::size_t best_index = 0;
  core::InnovationModel best_model;
  Vector initial_state;
  Vector singular_values;  // spectrum of Q̂Z at the best f
  std::vector<std::string> warnings;

  [[nodiscard]] const PairScore& best() const { return scores.at(best_index); }
};

struct GridOptions {
  Method method = Method::A;
  std::optional<Index> h;        // default_initial_window() per pair when empty
  double tie_tolerance = 1e-10;  // errors within this of the minimum count as ties
  unsigned threads = 0;
  varx::Options varx;
};

/// Scores every pair of `grid` on the validation set; best = minimal error,
/// ties toward smaller n then smaller f.
[[nodiscard]] SelectionResult grid_search(const core::SignalDataset& identification,
                                          const core::SignalDataset& validation, Index p_hat,
                                          const SelectionGrid& grid,
                                          const GridOptions& options = {});

/// True if any (t, u, y) row appears in both datasets.
[[nodiscard]] bool datasets_overlap(const core::SignalDataset& a, const core::SignalDataset& b);

struct PipelineOptions {
  Index p_max = 40;
  Index n_max = 40;
  std::optional<Index> f_max;  // defaults to p̂
  GridOptions grid;
};

struct PipelineResult {
  varx::AicScan aic;
  SelectionResult selection;
};

/// VARX order by AIC, then the (n, f) grid search.
[[nodiscard]] PipelineResult identify(const core::SignalDataset& identification,
                                      const core::SignalDataset& validation,
                                      const PipelineOptions& options = {});

}  // namespace pbsid::select
