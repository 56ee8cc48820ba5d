#include "pbsid/core.hpp"

#include "pbsid/error.hpp"

#include <cmath>
#include <sstream>

namespace pbsid::core {

namespace {

std::string describe_window(Index first, Index last, Index available) {
  std::ostringstream os;
  os << "window [" << first << ", " << last << "] outside sequence of " << available
     << " samples";
  return os.str();
}

}  // namespace

void SignalDataset::validate(bool allow_empty) const {
  const Index n = samples();
  if (n == 0 && !allow_empty) {
    throw DataError("dataset must contain at least one sample");
  }
  if (inputs.cols() != n || outputs.cols() != n) {
    std::ostringstream os;
    os << "dataset length mismatch: " << n << " timestamps, " << inputs.cols() << " inputs, "
       << outputs.cols() << " outputs";
    throw DataError(os.str());
  }
  if (!(sample_period > 0.0) || !std::isfinite(sample_period)) {
    throw DataError("sample_period must be positive");
  }
  for (Index k = 1; k < n; ++k) {
    if (!(timestamps[k] > timestamps[k - 1])) {
      std::ostringstream os;
      os << "timestamps must be strictly increasing (sample " << k << ")";
      throw DataError(os.str());
    }
  }
  if (!labels.empty() && static_cast<Index>(labels.size()) != input_dim() + output_dim()) {
    throw DataError("label count does not match channel count");
  }
}

SignalDataset SignalDataset::slice(Index first, Index count) const {
  if (first < 0 || count < 0 || first + count > samples()) {
    throw DataError(describe_window(first, first + count - 1, samples()));
  }
  SignalDataset out;
  out.timestamps.assign(timestamps.begin() + first, timestamps.begin() + first + count);
  out.inputs = inputs.middleCols(first, count);
  out.outputs = outputs.middleCols(first, count);
  out.sample_period = sample_period;
  out.labels = labels;
  return out;
}

Matrix SignalDataset::stacked() const {
  Matrix z(input_dim() + output_dim(), samples());
  z.topRows(input_dim()) = inputs;
  z.bottomRows(output_dim()) = outputs;
  return z;
}

std::vector<std::string> default_labels(Index m, Index r) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(m + r));
  for (Index i = 0; i < m; ++i) labels.push_back("u" + std::to_string(i + 1));
  for (Index i = 0; i < r; ++i) labels.push_back("y" + std::to_string(i + 1));
  return labels;
}

SignalDataset make_dataset(Matrix inputs, Matrix outputs, double sample_period, double t0) {
  SignalDataset ds;
  const Index n = inputs.cols();
  ds.timestamps.resize(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) ds.timestamps[k] = t0 + static_cast<double>(k) * sample_period;
  ds.labels = default_labels(inputs.rows(), outputs.rows());
  ds.inputs = std::move(inputs);
  ds.outputs = std::move(outputs);
  ds.sample_period = sample_period;
  ds.validate(true);
  return ds;
}

Vector lift(const Sequence& seq, Index first, Index last) {
  if (first < 0 || first > last || last >= seq.cols()) {
    throw DataError("lift: " + describe_window(first, last, seq.cols()));
  }
  const Index d = seq.rows();
  Vector out(d * (last - first + 1));
  for (Index k = first; k <= last; ++k) out.segment(d * (k - first), d) = seq.col(k);
  return out;
}

DataMatrix build_data_matrix(const Sequence& seq, Index first, Index last, Index shifts) {
  if (first < 0 || first > last || shifts < 0) {
    throw DataError("build_data_matrix: invalid window indices");
  }
  if (last + shifts >= seq.cols()) {
    std::ostringstream os;
    os << "build_data_matrix: window needs " << last + shifts + 1 << " samples, "
       << seq.cols() << " available";
    throw DataError(os.str());
  }
  const Index d = seq.rows();
  const Index blocks = last - first + 1;
  DataMatrix dm;
  dm.block_dim = d;
  dm.first = first;
  dm.last = last;
  dm.shifts = shifts;
  dm.values.resize(d * blocks, shifts + 1);
  for (Index i = 0; i < blocks; ++i) {
    dm.values.middleRows(d * i, d) = seq.middleCols(first + i, shifts + 1);
  }
  return dm;
}

void InnovationModel::validate() const {
  const Index n = A.rows();
  const auto fail = [](const std::string& what) { throw DataError("innovation model: " + what); };
  if (A.cols() != n) fail("A must be square");
  if (B.rows() != n) fail("B must have n rows");
  if (C.cols() != n) fail("C must have n columns");
  if (K.rows() != n || K.cols() != C.rows()) fail("K must be n x r");
}

PredictorForm predictor_matrices(const InnovationModel& model) {
  model.validate();
  PredictorForm pf;
  pf.A_tilde = model.A - model.K * model.C;
  pf.B_tilde.resize(model.order(), model.input_dim() + model.output_dim());
  pf.B_tilde << model.B, model.K;
  return pf;
}

}  // namespace pbsid::core
