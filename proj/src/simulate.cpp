#include "pbsid/simulate.hpp"

#include "pbsid/error.hpp"
#include "pbsid/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace pbsid::simulate {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw DataError("rod config: " + field + " " + what);
}

}  // namespace

void RodConfig::validate() const {
  require(length > 0.0, "length", "must be > 0");
  require(diameter > 0.0, "diameter", "must be > 0");
  require(conductivity > 0.0, "conductivity", "must be > 0");
  require(density > 0.0, "density", "must be > 0");
  require(specific_heat > 0.0, "specific_heat", "must be > 0");
  require(convection_coeff > 0.0, "convection_coeff", "must be > 0");
  require(std::isfinite(ambient), "ambient", "must be finite");
  require(heater_width > 0.0, "heater_width", "must be > 0");
  require(heater_max_power > 0.0, "heater_max_power", "must be > 0");
  require(!heater_positions.empty(), "heater_positions", "must not be empty");
  require(!sensor_positions.empty(), "sensor_positions", "must not be empty");
  for (double x : heater_positions) {
    require(x >= 0.0 && x <= length, "heater_positions", "must lie in [0, length]");
  }
  for (double x : sensor_positions) {
    require(x >= 0.0 && x <= length, "sensor_positions", "must lie in [0, length]");
  }
  require(grid_points >= 3, "grid_points", "must be >= 3");
  require(dt > 0.0, "dt", "must be > 0");
}

double RodConfig::cross_section() const { return std::numbers::pi * diameter * diameter / 4.0; }
double RodConfig::perimeter() const { return std::numbers::pi * diameter; }

HeatRod::HeatRod(const RodConfig& config) : config_(config) {
  config_.validate();
  const Index g = config_.grid_points;
  dx_ = config_.length / static_cast<double>(g - 1);
  positions_ = Vector::LinSpaced(g, 0.0, config_.length);
  widths_ = Vector::Constant(g, dx_);
  widths_[0] = widths_[g - 1] = dx_ / 2.0;
  temperature_ = Vector::Constant(g, config_.ambient);
}

void HeatRod::set_temperatures(const Vector& t) {
  if (t.size() != temperature_.size()) throw DataError("temperature field size mismatch");
  temperature_ = t;
}

Vector HeatRod::node_sources(const Vector& heater_powers) const {
  const auto heaters = static_cast<Index>(config_.heater_positions.size());
  if (heater_powers.size() != heaters) {
    std::ostringstream os;
    os << "expected " << heaters << " heater powers, got " << heater_powers.size();
    throw DataError(os.str());
  }
  Vector q = Vector::Zero(positions_.size());
  const double half = config_.heater_width / 2.0;
  for (Index h = 0; h < heaters; ++h) {
    const double center = config_.heater_positions[static_cast<std::size_t>(h)];
    // heater band clipped to the rod
    const double lo = std::max(0.0, center - half);
    const double hi = std::min(config_.length, center + half);
    if (hi <= lo) continue;
    const double density = heater_powers[h] / (hi - lo);
    for (Index i = 0; i < positions_.size(); ++i) {
      const double cv_lo = std::max(0.0, positions_[i] - dx_ / 2.0);
      const double cv_hi = std::min(config_.length, positions_[i] + dx_ / 2.0);
      const double overlap = std::min(hi, cv_hi) - std::max(lo, cv_lo);
      if (overlap > 0.0) q[i] += density * overlap;
    }
  }
  return q;
}

Vector HeatRod::solve(const Vector& heater_powers, const Vector& previous, double inv_dt) const {
  const Index g = positions_.size();
  const double area = config_.cross_section();
  const double cond = config_.conductivity * area / dx_;
  const double loss = config_.convection_coeff * config_.perimeter();
  const double heat_cap = config_.density * config_.specific_heat * area;
  const Vector q = node_sources(heater_powers);

  // Tridiagonal system in θ = T - T_amb; Thomas algorithm.
  Vector diag(g), rhs(g), c_prime(g);
  for (Index i = 0; i < g; ++i) {
    const double capacity = heat_cap * widths_[i] * inv_dt;
    const Index neighbours = (i == 0 || i == g - 1) ? 1 : 2;
    diag[i] = capacity + loss * widths_[i] + cond * static_cast<double>(neighbours);
    rhs[i] = capacity * (previous[i] - config_.ambient) + q[i];
  }
  const double off = -cond;
  c_prime[0] = off / diag[0];
  rhs[0] /= diag[0];
  for (Index i = 1; i < g; ++i) {
    const double denom = diag[i] - off * c_prime[i - 1];
    c_prime[i] = off / denom;
    rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
  }
  for (Index i = g - 2; i >= 0; --i) rhs[i] -= c_prime[i] * rhs[i + 1];
  return rhs.array() + config_.ambient;
}

void HeatRod::step(const Vector& heater_powers, double dt) {
  if (!(dt > 0.0)) throw DataError("time step must be positive");
  temperature_ = solve(heater_powers, temperature_, 1.0 / dt);
}

Vector HeatRod::steady_state(const Vector& heater_powers) const {
  return solve(heater_powers, temperature_, 0.0);
}

double HeatRod::sample_at(double position) const {
  const double s = std::clamp(position / dx_, 0.0, static_cast<double>(positions_.size() - 1));
  const auto i = std::min<Index>(static_cast<Index>(s), positions_.size() - 2);
  const double frac = s - static_cast<double>(i);
  return (1.0 - frac) * temperature_[i] + frac * temperature_[i + 1];
}

Vector HeatRod::sensor_readings() const {
  Vector out(static_cast<Index>(config_.sensor_positions.size()));
  for (Index j = 0; j < out.size(); ++j) {
    out[j] = sample_at(config_.sensor_positions[static_cast<std::size_t>(j)]);
  }
  return out;
}

core::SignalDataset simulate_rod(const RodConfig& config, const Matrix& voltages,
                                 double sample_period, const SensorNoise& noise) {
  config.validate();
  if (!(sample_period > 0.0)) throw DataError("sample period must be positive");
  const auto m = static_cast<Index>(config.heater_positions.size());
  const auto r = static_cast<Index>(config.sensor_positions.size());
  if (voltages.rows() != m) {
    std::ostringstream os;
    os << "voltage sequence has " << voltages.rows() << " channels, rod has " << m << " heaters";
    throw DataError(os.str());
  }
  if (voltages.size() > 0 && (voltages.minCoeff() < 0.0 || voltages.maxCoeff() > 1.0)) {
    throw DataError("voltage fractions must lie in [0, 1]");
  }
  const Index count = voltages.cols();
  const auto substeps = std::max<Index>(1, static_cast<Index>(std::ceil(sample_period / config.dt - 1e-9)));
  const double dt = sample_period / static_cast<double>(substeps);

  HeatRod rod(config);
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Matrix inputs = voltages.array().square();
  Matrix outputs(r, count);
  for (Index k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * sample_period;
    Vector y = rod.sensor_readings();
    if (noise.hum_amplitude != 0.0) {
      y.array() += noise.hum_amplitude * std::sin(2.0 * std::numbers::pi * noise.hum_hz * t);
    }
    if (noise.sigma > 0.0) {
      for (Index j = 0; j < r; ++j) y[j] += noise.sigma * gauss(rng);
    }
    outputs.col(k) = y;
    const Vector power = config.heater_max_power * inputs.col(k);
    for (Index s = 0; s < substeps; ++s) rod.step(power, dt);
  }
  core::SignalDataset ds = core::make_dataset(inputs, outputs, sample_period);
  return ds;
}

double step_time_constant(const RodConfig& config, Index heater, Index sensor, double voltage) {
  HeatRod rod(config);
  const auto m = static_cast<Index>(config.heater_positions.size());
  if (heater < 0 || heater >= m) throw DataError("heater index out of range");
  if (sensor < 0 || sensor >= static_cast<Index>(config.sensor_positions.size())) {
    throw DataError("sensor index out of range");
  }
  Vector power = Vector::Zero(m);
  power[heater] = config.heater_max_power * voltage * voltage;
  const double position = config.sensor_positions[static_cast<std::size_t>(sensor)];

  HeatRod settled(config);
  settled.set_temperatures(settled.steady_state(power));
  const double final_value = settled.sample_at(position);
  const double target = config.ambient + (1.0 - std::exp(-1.0)) * (final_value - config.ambient);

  std::vector<double> times{0.0};
  std::vector<double> values{rod.sample_at(position)};
  // generous horizon; the loop stops right after the crossing
  const auto max_steps = static_cast<Index>(1e6 / config.dt);
  for (Index k = 1; k <= max_steps; ++k) {
    rod.step(power, config.dt);
    times.push_back(static_cast<double>(k) * config.dt);
    values.push_back(rod.sample_at(position));
    if (values.back() >= target) break;
  }
  return preprocess::step_time_constant(times, values, config.ambient, final_value);
}

double calibrate_convection(RodConfig config, double target_tau, Index heater, Index sensor) {
  // τ decreases monotonically with the convection coefficient
  double lo = 0.05;
  double hi = 500.0;
  for (int it = 0; it < 60 && hi / lo > 1.0 + 1e-6; ++it) {
    const double mid = std::sqrt(lo * hi);
    config.convection_coeff = mid;
    if (step_time_constant(config, heater, sensor) > target_tau) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::sqrt(lo * hi);
}

core::SignalDataset simulate_lti(const core::InnovationModel& model, const Vector& x0,
                                 const Matrix& inputs, double innovation_sigma,
                                 std::uint64_t seed, double sample_period) {
  model.validate();
  if (inputs.rows() != model.input_dim()) throw DataError("simulate_lti: input dimension mismatch");
  if (x0.size() != model.order()) throw DataError("simulate_lti: x0 dimension mismatch");
  const Index r = model.output_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix outputs(r, inputs.cols());
  Vector x = x0;
  Vector e = Vector::Zero(r);
  for (Index k = 0; k < inputs.cols(); ++k) {
    if (innovation_sigma > 0.0) {
      for (Index j = 0; j < r; ++j) e[j] = innovation_sigma * gauss(rng);
    }
    outputs.col(k) = model.C * x + e;
    x = model.A * x + model.B * inputs.col(k) + model.K * e;
  }
  return core::make_dataset(inputs, std::move(outputs), sample_period);
}

Matrix prbs_like_inputs(Index m, Index length, std::uint64_t seed) {
  if (m < 0 || length < 0) throw DataError("input shape must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix u(m, length);
  for (Index k = 0; k < length; ++k) {
    for (Index i = 0; i < m; ++i) u(i, k) = unit(rng);
  }
  return u;
}

}  // namespace pbsid::simulate
