#pragma once

#include "pbsid/core.hpp"

#include <cstdint>
#include <vector>

namespace pbsid::simulate {

/**
 * Thin aluminum rod with band heaters and point temperature sensors.
 *
 * Heat balance per unit length:
 *   ρ c A_c ∂T/∂t = k A_c ∂²T/∂x² - h P (T - T_amb) + q(x, t)
 * with insulated ends and heater power spread uniformly over its width.
 */
struct RodConfig {
  double length = 2.0;             // m
  double diameter = 0.015;         // m
  double conductivity = 205.0;     // W/(m K)
  double density = 2700.0;         // kg/m^3
  double specific_heat = 900.0;    // J/(kg K)
  double convection_coeff = 9.41;  // W/(m^2 K), gives a 750 s sensor-1 step time constant
  double ambient = 26.5;           // °C
  std::vector<double> heater_positions{0.25, 0.65, 1.05, 1.55};
  double heater_width = 0.03;      // m
  double heater_max_power = 300.0; // W
  std::vector<double> sensor_positions{0.35, 0.50, 0.70, 0.90, 1.10, 1.50, 1.75};
  Index grid_points = 201;
  double dt = 1.0;                 // s, internal step

  void validate() const;

  [[nodiscard]] double cross_section() const;
  [[nodiscard]] double perimeter() const;
};

/// Finite-volume / backward-Euler integrator of the rod temperature field.
class HeatRod {
 public:
  explicit HeatRod(const RodConfig& config);

  [[nodiscard]] const RodConfig& config() const { return config_; }
  [[nodiscard]] const Vector& positions() const { return positions_; }
  /// Control-volume widths (half cells at the ends); they sum to the length.
  [[nodiscard]] const Vector& widths() const { return widths_; }
  /// Absolute node temperatures, °C.
  [[nodiscard]] const Vector& temperatures() const { return temperature_; }
  void set_temperatures(const Vector& t);

  /// Heat input per node (W) for the given heater powers (W).
  [[nodiscard]] Vector node_sources(const Vector& heater_powers) const;

  /// Advances by dt seconds with constant heater powers.
  void step(const Vector& heater_powers, double dt);

  /// Temperatures at the configured sensor positions (linear interpolation).
  [[nodiscard]] Vector sensor_readings() const;
  [[nodiscard]] double sample_at(double position) const;

  /// Node temperatures of the steady state under constant heater powers.
  [[nodiscard]] Vector steady_state(const Vector& heater_powers) const;

 private:
  Vector solve(const Vector& heater_powers, const Vector& previous, double inv_dt) const;

  RodConfig config_;
  Vector positions_;
  Vector widths_;
  Vector temperature_;
  double dx_ = 0.0;
};

struct SensorNoise {
  double sigma = 0.0;          // °C, white Gaussian
  double hum_amplitude = 0.0;  // °C, sinusoidal mains pickup
  double hum_hz = 60.0;
  std::uint64_t seed = 0;
};

/**
 * Samples the rod every `sample_period` seconds while holding voltage
 * fractions v_k (m x count, entries in [0, 1]) constant between samples.
 * Heater i delivers heater_max_power * v_i^2. The dataset inputs are v^2,
 * outputs the sensor temperatures at t_k = k * sample_period (before u_k acts).
 */
[[nodiscard]] core::SignalDataset simulate_rod(const RodConfig& config, const Matrix& voltages,
                                               double sample_period,
                                               const SensorNoise& noise = {});

/// Time to 63.2% of the steady rise at `sensor` for a step on `heater`.
[[nodiscard]] double step_time_constant(const RodConfig& config, Index heater = 0,
                                        Index sensor = 0, double voltage = 0.9);

/// Convection coefficient giving the target sensor time constant (bisection).
[[nodiscard]] double calibrate_convection(RodConfig config, double target_tau = 750.0,
                                          Index heater = 0, Index sensor = 0);

/**
 * x_{k+1} = A x_k + B u_k + K e_k,  y_k = C x_k + e_k with e_k ~ N(0, σ² I).
 * σ = 0 gives the deterministic plant.
 */
[[nodiscard]] core::SignalDataset simulate_lti(const core::InnovationModel& model,
                                               const Vector& x0, const Matrix& inputs,
                                               double innovation_sigma = 0.0,
                                               std::uint64_t seed = 0,
                                               double sample_period = 1.0);

/// Entries i.i.d. uniform on [0, 1], m x length, deterministic in the seed.
[[nodiscard]] Matrix prbs_like_inputs(Index m, Index length, std::uint64_t seed);

}  // namespace pbsid::simulate
