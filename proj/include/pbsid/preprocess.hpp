#pragma once

#include "pbsid/core.hpp"

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace pbsid::preprocess {

/// Low-pass Butterworth filter parameters.
struct FilterSpec {
  int order = 4;
  double cutoff_hz = 0.2;
  double sample_rate_hz = 577.0;

  void validate() const;
};

/// One second-order (or first-order, b2 = a2 = 0) section,
/// H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth low-pass in cascaded sections, designed by the
/// bilinear transform with cutoff prewarping.
class ButterworthFilter {
 public:
  explicit ButterworthFilter(const FilterSpec& spec);

  [[nodiscard]] const FilterSpec& spec() const { return spec_; }
  [[nodiscard]] const std::vector<Biquad>& sections() const { return sections_; }

  [[nodiscard]] std::complex<double> response(double frequency_hz) const;
  [[nodiscard]] double magnitude_db(double frequency_hz) const;
  [[nodiscard]] std::vector<std::complex<double>> poles() const;

  /// Samples at the start of a causal run dominated by the start-up transient,
  /// ceil(3 / (cutoff / nyquist)).
  [[nodiscard]] std::size_t transient_samples() const;

  /// Causal single-pass filtering from a zero initial state.
  [[nodiscard]] std::vector<double> apply(std::span<const double> signal) const;

 private:
  FilterSpec spec_;
  std::vector<Biquad> sections_;
};

struct FilteredSignal {
  std::vector<double> values;
  std::size_t transient_samples = 0;
};

[[nodiscard]] FilteredSignal butterworth_lowpass(std::span<const double> signal,
                                                 const FilterSpec& spec);

/// Analytic magnitude of the bilinear-warped Butterworth response,
/// 1 / sqrt(1 + (tan(pi f / fs) / tan(pi fc / fs))^(2 order)).
[[nodiscard]] double butterworth_magnitude(const FilterSpec& spec, double frequency_hz);

enum class DetrendMode { mean, linear };

[[nodiscard]] std::vector<double> detrend(std::span<const double> signal, DetrendMode mode);

struct PowerSpectrum {
  std::vector<double> frequencies;  // Hz, 0..fs/2
  std::vector<double> power;        // one-sided density, units^2 / Hz
};

/// Welch estimate with a periodic Hann window; segments overlap by overlap_frac.
[[nodiscard]] PowerSpectrum psd_welch(std::span<const double> signal, double sample_rate_hz,
                                      std::size_t segment_len, double overlap_frac = 0.5);

/// min(4096, N / 4), at least 1.
[[nodiscard]] std::size_t default_segment_length(std::size_t signal_len);

/// Keeps every factor-th sample. Anti-alias filtering is the caller's job.
[[nodiscard]] core::SignalDataset downsample(const core::SignalDataset& dataset, Index factor);

/// Factor that turns the dataset's sample period into `target_period` (rounded).
[[nodiscard]] Index downsample_factor_for_period(const core::SignalDataset& dataset,
                                                 double target_period);

/// Hampel filter: a sample further than threshold_sigmas * 1.4826 * MAD from the
/// median of its (edge-truncated) window is replaced by that median.
[[nodiscard]] std::vector<double> remove_outliers(std::span<const double> signal,
                                                  std::size_t window = 11,
                                                  double threshold_sigmas = 3.0);

struct NonlinearityTrace {
  std::vector<double> times;
  std::vector<double> w_values;  // NaN where the denominator is degenerate
  std::string label;
  double mean_w = 0.0;
  std::size_t valid_points = 0;
};

/// w(t) = (y_num(t) - y0) / (y_den(t) - y0) wherever |y_den(t) - y0| > eps.
[[nodiscard]] NonlinearityTrace nonlinearity_index(std::span<const double> times,
                                                   std::span<const double> y_num,
                                                   std::span<const double> y_den, double y0,
                                                   double eps = 0.5, std::string label = {});

/// First-order time constant of a step response: time for the rise above
/// `baseline` to first reach 1 - 1/e of (final_value - baseline), measured
/// from times[0]. Linear interpolation between samples.
[[nodiscard]] double step_time_constant(std::span<const double> times,
                                        std::span<const double> response, double baseline,
                                        double final_value);

}  // namespace pbsid::preprocess
