#include "pbsid/preprocess.hpp"

#include "pbsid/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace pbsid::preprocess {

using std::numbers::pi;

void FilterSpec::validate() const {
  if (order < 1) throw DataError("filter order must be >= 1");
  if (!(sample_rate_hz > 0.0)) throw DataError("sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0)) {
    std::ostringstream os;
    os << "cutoff " << cutoff_hz << " Hz must lie in (0, " << sample_rate_hz / 2.0
       << ") Hz (Nyquist)";
    throw DataError(os.str());
  }
}

ButterworthFilter::ButterworthFilter(const FilterSpec& spec) : spec_(spec) {
  spec_.validate();
  // Prewarped analog cutoff, normalized so the bilinear map is s = (z-1)/(z+1) / K.
  const double K = std::tan(pi * spec_.cutoff_hz / spec_.sample_rate_hz);
  const double K2 = K * K;
  const int N = spec_.order;
  for (int k = 0; k < N / 2; ++k) {
    // analog pole pair damping: s^2 + 2 sin(theta_k) s + 1
    const double damping = 2.0 * std::sin(pi * (2.0 * k + 1.0) / (2.0 * N));
    const double norm = 1.0 / (1.0 + damping * K + K2);
    Biquad s;
    s.a1 = 2.0 * (K2 - 1.0) * norm;
    s.a2 = (1.0 - damping * K + K2) * norm;
    // equals K2 * norm analytically; taken from the rounded poles so the DC gain is exactly 1
    s.b0 = (1.0 + s.a1 + s.a2) / 4.0;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    sections_.push_back(s);
  }
  if (N % 2 == 1) {
    const double norm = 1.0 / (1.0 + K);
    Biquad s;
    s.a1 = (K - 1.0) * norm;
    s.b0 = (1.0 + s.a1) / 2.0;
    s.b1 = s.b0;
    sections_.push_back(s);
  }
}

std::complex<double> ButterworthFilter::response(double frequency_hz) const {
  const std::complex<double> zinv = std::polar(1.0, -2.0 * pi * frequency_hz / spec_.sample_rate_hz);
  std::complex<double> h = 1.0;
  for (const auto& s : sections_) {
    h *= (s.b0 + zinv * (s.b1 + zinv * s.b2)) / (1.0 + zinv * (s.a1 + zinv * s.a2));
  }
  return h;
}

double ButterworthFilter::magnitude_db(double frequency_hz) const {
  return 20.0 * std::log10(std::abs(response(frequency_hz)));
}

std::vector<std::complex<double>> ButterworthFilter::poles() const {
  std::vector<std::complex<double>> out;
  for (const auto& s : sections_) {
    if (s.a2 == 0.0) {
      out.emplace_back(-s.a1, 0.0);
      continue;
    }
    const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2));
    out.push_back((-s.a1 + disc) / 2.0);
    out.push_back((-s.a1 - disc) / 2.0);
  }
  return out;
}

std::size_t ButterworthFilter::transient_samples() const {
  const double normalized = spec_.cutoff_hz / (spec_.sample_rate_hz / 2.0);
  return static_cast<std::size_t>(std::ceil(3.0 / normalized));
}

std::vector<double> ButterworthFilter::apply(std::span<const double> signal) const {
  std::vector<double> y(signal.begin(), signal.end());
  for (const auto& s : sections_) {
    // transposed direct form II
    double w1 = 0.0;
    double w2 = 0.0;
    for (double& v : y) {
      const double x = v;
      const double out = s.b0 * x + w1;
      w1 = s.b1 * x - s.a1 * out + w2;
      w2 = s.b2 * x - s.a2 * out;
      v = out;
    }
  }
  return y;
}

FilteredSignal butterworth_lowpass(std::span<const double> signal, const FilterSpec& spec) {
  const ButterworthFilter filter(spec);
  if (signal.size() < static_cast<std::size_t>(spec.order) + 1) {
    throw DataError("signal shorter than filter order + 1");
  }
  return {filter.apply(signal), std::min(filter.transient_samples(), signal.size())};
}

double butterworth_magnitude(const FilterSpec& spec, double frequency_hz) {
  const double ratio = std::tan(pi * frequency_hz / spec.sample_rate_hz) /
                       std::tan(pi * spec.cutoff_hz / spec.sample_rate_hz);
  return 1.0 / std::sqrt(1.0 + std::pow(ratio, 2.0 * spec.order));
}

std::vector<double> detrend(std::span<const double> signal, DetrendMode mode) {
  const std::size_t n = signal.size();
  std::vector<double> out(signal.begin(), signal.end());
  if (n == 0) return out;
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(n);
  if (mode == DetrendMode::mean || n < 2) {
    if (mode == DetrendMode::linear) throw DataError("linear detrend needs at least 2 samples");
    for (double& v : out) v -= mean;
    return out;
  }
  // centered abscissa keeps the 2x2 normal system diagonal
  const double tc = (static_cast<double>(n) - 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) - tc;
    sxy += t * (signal[k] - mean);
    sxx += t * t;
  }
  const double slope = sxy / sxx;
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = signal[k] - mean - slope * (static_cast<double>(k) - tc);
  }
  return out;
}

std::size_t default_segment_length(std::size_t signal_len) {
  return std::max<std::size_t>(1, std::min<std::size_t>(4096, signal_len / 4));
}

PowerSpectrum psd_welch(std::span<const double> signal, double sample_rate_hz,
                        std::size_t segment_len, double overlap_frac) {
  if (segment_len == 0 || segment_len > signal.size()) {
    throw DataError("Welch segment length must be in [1, signal length]");
  }
  if (!(overlap_frac >= 0.0 && overlap_frac < 1.0)) {
    throw DataError("Welch overlap fraction must be in [0, 1)");
  }
  if (!(sample_rate_hz > 0.0)) throw DataError("sample rate must be positive");

  const std::size_t L = segment_len;
  const auto overlap = static_cast<std::size_t>(std::floor(overlap_frac * static_cast<double>(L)));
  const std::size_t step = std::max<std::size_t>(1, L - overlap);
  const std::size_t segments = 1 + (signal.size() - L) / step;

  std::vector<double> window(L);
  double window_energy = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    window[i] = L == 1 ? 1.0 : 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(L));
    window_energy += window[i] * window[i];
  }

  const std::size_t bins = L / 2 + 1;
  PowerSpectrum psd;
  psd.frequencies.resize(bins);
  psd.power.assign(bins, 0.0);
  for (std::size_t k = 0; k < bins; ++k) {
    psd.frequencies[k] = sample_rate_hz * static_cast<double>(k) / static_cast<double>(L);
  }

  Eigen::FFT<double> fft;
  std::vector<double> buffer(L);
  std::vector<std::complex<double>> spectrum;
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t start = s * step;
    for (std::size_t i = 0; i < L; ++i) buffer[i] = signal[start + i] * window[i];
    fft.fwd(spectrum, buffer);
    for (std::size_t k = 0; k < bins; ++k) psd.power[k] += std::norm(spectrum[k]);
  }
  const double scale = 1.0 / (sample_rate_hz * window_energy * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool unpaired = k == 0 || (L % 2 == 0 && k == L / 2);
    psd.power[k] *= scale * (unpaired ? 1.0 : 2.0);
  }
  return psd;
}

core::SignalDataset downsample(const core::SignalDataset& dataset, Index factor) {
  if (factor < 1) throw DataError("downsample factor must be >= 1");
  const Index kept = (dataset.samples() + factor - 1) / factor;
  core::SignalDataset out;
  out.sample_period = dataset.sample_period * static_cast<double>(factor);
  out.labels = dataset.labels;
  out.inputs.resize(dataset.input_dim(), kept);
  out.outputs.resize(dataset.output_dim(), kept);
  out.timestamps.resize(static_cast<std::size_t>(kept));
  for (Index j = 0; j < kept; ++j) {
    out.timestamps[j] = dataset.timestamps[j * factor];
    out.inputs.col(j) = dataset.inputs.col(j * factor);
    out.outputs.col(j) = dataset.outputs.col(j * factor);
  }
  return out;
}

Index downsample_factor_for_period(const core::SignalDataset& dataset, double target_period) {
  if (!(target_period >= dataset.sample_period)) {
    throw DataError("target period must not be shorter than the current sample period");
  }
  return static_cast<Index>(std::llround(target_period / dataset.sample_period));
}

namespace {

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

std::vector<double> remove_outliers(std::span<const double> signal, std::size_t window,
                                    double threshold_sigmas) {
  if (window < 3 || window % 2 == 0) throw DataError("outlier window must be odd and >= 3");
  constexpr double kMadToSigma = 1.4826;
  const std::size_t half = window / 2;
  const std::size_t n = signal.size();
  std::vector<double> out(signal.begin(), signal.end());
  std::vector<double> buf;
  buf.reserve(window);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(n, k + half + 1);
    buf.assign(signal.begin() + static_cast<std::ptrdiff_t>(lo),
               signal.begin() + static_cast<std::ptrdiff_t>(hi));
    const double med = median_of(buf);
    for (double& v : buf) v = std::abs(v - med);
    const double mad = median_of(buf);
    if (mad == 0.0) continue;  // flat window: nothing to measure against
    if (std::abs(signal[k] - med) > threshold_sigmas * kMadToSigma * mad) out[k] = med;
  }
  return out;
}

NonlinearityTrace nonlinearity_index(std::span<const double> times,
                                     std::span<const double> y_num,
                                     std::span<const double> y_den, double y0, double eps,
                                     std::string label) {
  if (y_num.size() != y_den.size() || times.size() != y_num.size()) {
    throw DataError("nonlinearity index: sequences must have equal lengths");
  }
  if (!(eps > 0.0)) throw DataError("nonlinearity index: eps must be positive");
  NonlinearityTrace trace;
  trace.label = std::move(label);
  trace.times.assign(times.begin(), times.end());
  trace.w_values.resize(y_num.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < y_num.size(); ++k) {
    const double den = y_den[k] - y0;
    if (std::abs(den) > eps) {
      trace.w_values[k] = (y_num[k] - y0) / den;
      sum += trace.w_values[k];
      ++trace.valid_points;
    } else {
      trace.w_values[k] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (trace.valid_points == 0) throw DataError("denominator below eps everywhere");
  trace.mean_w = sum / static_cast<double>(trace.valid_points);
  return trace;
}

double step_time_constant(std::span<const double> times, std::span<const double> response,
                          double baseline, double final_value) {
  if (times.size() != response.size() || times.empty()) {
    throw DataError("step response: times and samples must be non-empty and equal length");
  }
  const double rise = final_value - baseline;
  if (rise == 0.0) throw DataError("step response: zero final rise");
  const double target = (1.0 - std::exp(-1.0)) * rise;
  double prev = (response[0] - baseline) / rise;
  if (prev >= target / rise) return 0.0;
  for (std::size_t k = 1; k < response.size(); ++k) {
    const double cur = (response[k] - baseline) / rise;
    if (cur >= target / rise) {
      const double frac = (target / rise - prev) / (cur - prev);
      return times[k - 1] + frac * (times[k] - times[k - 1]) - times[0];
    }
    prev = cur;
  }
  throw DataError("step response never reaches 63.2% of its final rise");
}

}  // namespace pbsid::preprocess
