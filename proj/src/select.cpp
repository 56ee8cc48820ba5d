#include "pbsid/select.hpp"

#include "pbsid/error.hpp"
#include "pbsid/linalg.hpp"
#include "pbsid/parallel.hpp"
#include "pbsid/sid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace pbsid::select {

char to_char(Method method) {
  switch (method) {
    case Method::A: return 'A';
    case Method::B: return 'B';
    case Method::C: return 'C';
  }
  return '?';
}

Method method_from_string(const std::string& text) {
  if (text == "A" || text == "a") return Method::A;
  if (text == "B" || text == "b") return Method::B;
  if (text == "C" || text == "c") return Method::C;
  throw DataError("unknown validation method '" + text + "' (expected A, B or C)");
}

std::vector<GridPair> SelectionGrid::pairs() const {
  if (n_max < 1 || f_max < 1 || output_dim < 1) {
    throw DataError("selection grid needs n_max, f_max and r >= 1");
  }
  std::vector<GridPair> out;
  for (Index n = 1; n <= n_max; ++n) {
    for (Index f = f_min(n, output_dim); f <= f_max; ++f) out.push_back({n, f});
  }
  return out;
}

Index default_initial_window(Index n, Index r, Index validation_samples) {
  const Index preferred = std::max<Index>((n + r - 1) / r + 5, 10);
  const Index cap = std::max<Index>(1, (validation_samples - 1) / 4);
  return std::min(preferred, cap);
}

namespace {

struct SimulationSystem {
  Matrix A;
  Matrix B;
  Matrix drive;  // input sequence of the chosen form
};

SimulationSystem initial_state_system(const core::InnovationModel& model,
                                      const core::SignalDataset& validation,
                                      InitialStateMode mode) {
  if (mode == InitialStateMode::open_loop) return {model.A, model.B, validation.inputs};
  const core::PredictorForm pf = core::predictor_matrices(model);
  return {pf.A_tilde, pf.B_tilde, validation.stacked()};
}

void check_dimensions(const core::InnovationModel& model, Index inputs_rows, Index cols,
                      const char* what) {
  model.validate();
  if (inputs_rows != model.input_dim()) {
    std::ostringstream os;
    os << what << ": model expects " << model.input_dim() << " inputs, data has " << inputs_rows;
    throw DataError(os.str());
  }
  (void)cols;
}

}  // namespace

InitialState estimate_initial_state(const core::InnovationModel& model,
                                    const core::SignalDataset& validation, Index h,
                                    InitialStateMode mode) {
  check_dimensions(model, validation.input_dim(), validation.samples(), "initial state");
  if (validation.output_dim() != model.output_dim()) {
    throw DataError("initial state: output dimension mismatch");
  }
  if (h < 1 || h > validation.samples()) {
    throw DataError("initial state window h must lie in [1, validation length]");
  }
  const Index n = model.order();
  const Index r = model.output_dim();
  const SimulationSystem sys = initial_state_system(model, validation, mode);

  // O_{h-1} and the forced response D̂_{h-1} u_{0,h-1}, built by recursion.
  Matrix O(r * h, n);
  Vector residual(r * h);
  Matrix power = Matrix::Identity(n, n);
  Vector forced_state = Vector::Zero(n);
  for (Index i = 0; i < h; ++i) {
    O.middleRows(r * i, r) = model.C * power;
    residual.segment(r * i, r) = validation.outputs.col(i) - model.C * forced_state;
    forced_state = sys.A * forced_state + sys.B * sys.drive.col(i);
    power = sys.A * power;
  }

  InitialState out;
  const linalg::LeastSquares ls = linalg::solve_left(O, residual);
  out.x0 = ls.solution;
  out.rank = ls.rank;
  if (r * h < n) {
    std::ostringstream os;
    os << "initial state window too short: h*r=" << r * h << " < n=" << n
       << "; returning the minimum-norm solution";
    out.warnings.push_back(os.str());
  } else if (ls.rank < n) {
    std::ostringstream os;
    os << "observability matrix rank " << ls.rank << " < n=" << n
       << "; returning the minimum-norm solution";
    out.warnings.push_back(os.str());
  }
  return out;
}

Matrix simulate_method_a(const core::InnovationModel& model, const Vector& x0,
                         const Matrix& inputs) {
  check_dimensions(model, inputs.rows(), inputs.cols(), "method A");
  Matrix y(model.output_dim(), inputs.cols());
  Vector x = x0;
  for (Index k = 0; k < inputs.cols(); ++k) {
    y.col(k) = model.C * x;
    x = model.A * x + model.B * inputs.col(k);
  }
  return y;
}

Matrix simulate_method_b(const core::InnovationModel& model, const Vector& x0,
                         const Matrix& inputs, const std::optional<Vector>& first_output) {
  check_dimensions(model, inputs.rows(), inputs.cols(), "method B");
  const Matrix A_tilde = model.A - model.K * model.C;
  Matrix y(model.output_dim(), inputs.cols());
  Vector x = x0;
  for (Index k = 0; k < inputs.cols(); ++k) {
    y.col(k) = model.C * x;
    const Vector fed = (k == 0 && first_output) ? *first_output : Vector(y.col(k));
    x = A_tilde * x + model.B * inputs.col(k) + model.K * fed;
  }
  return y;
}

Matrix simulate_method_c(const core::InnovationModel& model, const Vector& x0,
                         const Matrix& inputs, const Matrix& measured_outputs) {
  check_dimensions(model, inputs.rows(), inputs.cols(), "method C");
  if (measured_outputs.rows() != model.output_dim() ||
      measured_outputs.cols() != inputs.cols()) {
    throw DataError("method C: measured outputs must be r x N and match the inputs");
  }
  const Matrix A_tilde = model.A - model.K * model.C;
  Matrix y(model.output_dim(), inputs.cols());
  Vector x = x0;
  for (Index k = 0; k < inputs.cols(); ++k) {
    y.col(k) = model.C * x;
    x = A_tilde * x + model.B * inputs.col(k) + model.K * measured_outputs.col(k);
  }
  return y;
}

double relative_error(const Matrix& measured, const Matrix& predicted) {
  if (measured.rows() != predicted.rows() || measured.cols() != predicted.cols()) {
    throw DataError("relative error: dimension mismatch");
  }
  const double denom = measured.norm();
  if (denom == 0.0) throw DataError("relative error undefined for an all-zero measured signal");
  const double e = (measured - predicted).norm() / denom;
  return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
}

VafResult vaf(const Matrix& measured, const Matrix& predicted) {
  if (measured.rows() != predicted.rows() || measured.cols() != predicted.cols()) {
    throw DataError("VAF: dimension mismatch");
  }
  if (measured.cols() < 2) throw DataError("VAF needs at least 2 samples per channel");
  const auto variance = [](const Eigen::RowVectorXd& v) {
    return (v.array() - v.mean()).square().mean();
  };
  VafResult out;
  out.percent.resize(measured.rows());
  for (Index i = 0; i < measured.rows(); ++i) {
    const double var_y = variance(measured.row(i));
    if (var_y == 0.0) {
      out.percent[i] = std::numeric_limits<double>::quiet_NaN();
      out.rejected.push_back(i);
      continue;
    }
    const double var_e = variance(measured.row(i) - predicted.row(i));
    out.percent[i] = std::isfinite(var_e) ? std::max(0.0, 1.0 - var_e / var_y) * 100.0 : 0.0;
  }
  return out;
}

Prediction predict(const core::InnovationModel& model, const core::SignalDataset& validation,
                   Method method, Index h) {
  const InitialStateMode mode =
      method == Method::A ? InitialStateMode::open_loop : InitialStateMode::predictor;
  InitialState init = estimate_initial_state(model, validation, h, mode);
  Prediction out;
  out.x0 = init.x0;
  out.warnings = std::move(init.warnings);
  switch (method) {
    case Method::A:
      out.outputs = simulate_method_a(model, out.x0, validation.inputs);
      break;
    case Method::B:
      out.outputs = simulate_method_b(model, out.x0, validation.inputs,
                                      Vector(validation.outputs.col(0)));
      break;
    case Method::C:
      out.outputs = simulate_method_c(model, out.x0, validation.inputs, validation.outputs);
      break;
  }
  return out;
}

bool datasets_overlap(const core::SignalDataset& a, const core::SignalDataset& b) {
  const auto row = [](const core::SignalDataset& ds, Index k) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(1 + ds.input_dim() + ds.output_dim()));
    v.push_back(ds.timestamps[k]);
    for (Index i = 0; i < ds.input_dim(); ++i) v.push_back(ds.inputs(i, k));
    for (Index i = 0; i < ds.output_dim(); ++i) v.push_back(ds.outputs(i, k));
    return v;
  };
  if (a.input_dim() != b.input_dim() || a.output_dim() != b.output_dim()) return false;
  std::set<std::vector<double>> seen;
  for (Index k = 0; k < a.samples(); ++k) seen.insert(row(a, k));
  for (Index k = 0; k < b.samples(); ++k) {
    if (seen.contains(row(b, k))) return true;
  }
  return false;
}

namespace {

struct PairOutcome {
  PairScore score;
  core::InnovationModel model;
  Vector x0;
  std::vector<std::string> warnings;
};

}  // namespace

SelectionResult grid_search(const core::SignalDataset& identification,
                            const core::SignalDataset& validation, Index p_hat,
                            const SelectionGrid& grid, const GridOptions& options) {
  identification.validate();
  validation.validate();
  if (identification.input_dim() != validation.input_dim() ||
      identification.output_dim() != validation.output_dim()) {
    throw DataError("identification and validation channel counts differ");
  }
  if (grid.output_dim != identification.output_dim()) {
    throw DataError("selection grid output dimension does not match the data");
  }
  if (grid.f_max > p_hat) {
    std::ostringstream os;
    os << "f_max=" << grid.f_max << " exceeds the past window p=" << p_hat;
    throw DataError(os.str());
  }

  SelectionResult result;
  result.method = options.method;
  result.p = p_hat;
  if (datasets_overlap(identification, validation)) {
    result.warnings.emplace_back("datasets overlap: validation shares samples with identification");
  }

  const core::VarxEstimate markov = varx::estimate_markov(identification, p_hat, options.varx);
  if (markov.rank_deficient) {
    std::ostringstream os;
    os << "VARX regressor rank " << markov.rank << " < " << markov.markov.cols()
       << "; minimum-norm Markov parameters used";
    result.warnings.push_back(os.str());
  }
  const varx::Regression reg = varx::build_regression(identification, p_hat);

  const std::vector<GridPair> pairs = grid.pairs();
  std::vector<sid::ProjectionSvd> svds(static_cast<std::size_t>(grid.f_max));
  parallel_for(svds.size(), [&](std::size_t i) {
    const Index f = static_cast<Index>(i) + 1;
    svds[i] = sid::decompose_projection(sid::build_q_matrix(markov, f), reg.Z);
  }, options.threads);

  std::vector<PairOutcome> outcomes(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    PairOutcome& out = outcomes[i];
    out.score.pair = pairs[i];
    out.score.relative_error = std::numeric_limits<double>::infinity();
    out.score.h = options.h.value_or(
        default_initial_window(pairs[i].n, identification.output_dim(), validation.samples()));
    try {
      const auto& svd = svds[static_cast<std::size_t>(pairs[i].f - 1)];
      sid::StateRealization real =
          sid::realize(identification, markov, svd, pairs[i].f, pairs[i].n);
      Prediction pred = predict(real.model, validation, options.method, out.score.h);
      out.score.relative_error = relative_error(validation.outputs, pred.outputs);
      out.score.vaf = vaf(validation.outputs, pred.outputs).percent;
      out.score.ok = std::isfinite(out.score.relative_error);
      if (!out.score.ok) out.score.failure = "non-finite simulated output";
      out.model = std::move(real.model);
      out.x0 = std::move(pred.x0);
      out.warnings = std::move(real.warnings);
      out.warnings.insert(out.warnings.end(), pred.warnings.begin(), pred.warnings.end());
    } catch (const Error& e) {
      out.score.failure = e.what();
    }
  }, options.threads);

  double best_error = std::numeric_limits<double>::infinity();
  for (const auto& o : outcomes) best_error = std::min(best_error, o.score.relative_error);
  if (!std::isfinite(best_error)) {
    throw NumericalError("no (n, f) pair produced a finite validation error");
  }
  // grid order is (n, f) lexicographic, so the first candidate within the
  // tolerance is the most parsimonious
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].score.relative_error <= best_error + options.tie_tolerance) {
      result.best_index = i;
      break;
    }
  }

  const PairOutcome& best = outcomes[result.best_index];
  result.best_model = best.model;
  result.initial_state = best.x0;
  result.singular_values = svds[static_cast<std::size_t>(best.score.pair.f - 1)].singular_values;
  result.warnings.insert(result.warnings.end(), best.warnings.begin(), best.warnings.end());
  result.scores.reserve(outcomes.size());
  for (auto& o : outcomes) result.scores.push_back(std::move(o.score));
  return result;
}

PipelineResult identify(const core::SignalDataset& identification,
                        const core::SignalDataset& validation, const PipelineOptions& options) {
  PipelineResult out;
  out.aic = varx::aic_scan(identification, options.p_max, options.grid.varx);
  SelectionGrid grid;
  grid.n_max = options.n_max;
  grid.f_max = std::min(options.f_max.value_or(out.aic.p_hat), out.aic.p_hat);
  grid.output_dim = identification.output_dim();
  out.selection = grid_search(identification, validation, out.aic.p_hat, grid, options.grid);
  return out;
}

}  // namespace pbsid::select
