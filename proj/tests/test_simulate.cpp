#include "doctest.h"

#include "generators.hpp"
#include "oracles.hpp"

#include "pbsid/error.hpp"
#include "pbsid/simulate.hpp"
#include "pbsid/varx.hpp"

#include <cmath>
#include <random>

using namespace pbsid;
using simulate::HeatRod;
using simulate::RodConfig;

namespace {

Vector powers(const RodConfig& cfg, double v) {
  return Vector::Constant(static_cast<Index>(cfg.heater_positions.size()), cfg.heater_max_power * v * v);
}

double simpson(const Vector& f, double dx) {
  const Index n = f.size() - 1;  // even number of intervals
  double s = f[0] + f[n];
  for (Index i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f[i];
  return s * dx / 3.0;
}

}  // namespace

TEST_CASE("rod at rest stays at ambient") {
  const RodConfig cfg;
  HeatRod rod(cfg);
  const Vector zero = powers(cfg, 0.0);
  for (int k = 0; k < 50; ++k) rod.step(zero, cfg.dt);
  CHECK((rod.temperatures().array() - cfg.ambient).abs().maxCoeff() == 0.0);
  CHECK((rod.steady_state(zero).array() - cfg.ambient).abs().maxCoeff() < 1e-12);

  const auto data = simulate::simulate_rod(cfg, Matrix::Zero(4, 20), 15.0);
  CHECK((data.outputs.array() - cfg.ambient).abs().maxCoeff() == 0.0);
  CHECK(data.inputs.isZero());
}

TEST_CASE("control volumes and sources") {
  const RodConfig cfg;
  const HeatRod rod(cfg);
  CHECK(rod.widths().sum() == doctest::Approx(cfg.length).epsilon(1e-14));
  const Vector p = powers(cfg, 0.7);
  CHECK(rod.node_sources(p).sum() == doctest::Approx(p.sum()).epsilon(1e-12));
}

TEST_CASE("steady state balances heater power against convection") {
  const RodConfig cfg;
  const HeatRod rod(cfg);
  const Vector p = powers(cfg, 0.8);
  const Vector t = rod.steady_state(p);
  const Vector excess = (t.array() - cfg.ambient).matrix();
  const double loss_coeff = cfg.convection_coeff * cfg.perimeter();
  const double discrete = loss_coeff * rod.widths().dot(excess);
  CHECK(discrete == doctest::Approx(p.sum()).epsilon(1e-9));
  const double dx = cfg.length / static_cast<double>(cfg.grid_points - 1);
  CHECK(std::abs(loss_coeff * simpson(excess, dx) - p.sum()) / p.sum() < 1e-3);
}

TEST_CASE("heating from ambient obeys the maximum principle") {
  const RodConfig cfg;
  HeatRod rod(cfg);
  const Vector p = powers(cfg, 1.0);
  const double t_max = rod.steady_state(p).maxCoeff();
  Vector previous = rod.temperatures();
  for (int k = 0; k < 3000; ++k) {
    rod.step(p, cfg.dt);
    const Vector& t = rod.temperatures();
    CHECK(t.minCoeff() >= cfg.ambient);
    CHECK(t.maxCoeff() <= t_max + 1e-9);
    CHECK(((t - previous).array() >= -1e-12).all());
    previous = t;
  }
}

TEST_CASE("grid and time-step refinement") {
  RodConfig coarse;
  RodConfig fine = coarse;
  fine.grid_points = 401;
  fine.dt = 0.5;
  const Vector p = powers(coarse, 0.9);
  HeatRod a(coarse);
  HeatRod b(fine);
  for (int k = 0; k < 600; ++k) a.step(p, 1.0);
  for (int k = 0; k < 1200; ++k) b.step(p, 0.5);
  const Vector rise_a = (a.sensor_readings().array() - coarse.ambient).matrix();
  const Vector rise_b = (b.sensor_readings().array() - coarse.ambient).matrix();
  CHECK(((rise_a - rise_b).cwiseAbs().array() / rise_b.array()).maxCoeff() < 0.01);

  const Vector ss_a = HeatRod(coarse).steady_state(p);
  const Vector ss_b = HeatRod(fine).steady_state(p);
  for (double x : coarse.sensor_positions) {
    HeatRod ra(coarse);
    HeatRod rb(fine);
    ra.set_temperatures(ss_a);
    rb.set_temperatures(ss_b);
    const double da = ra.sample_at(x) - coarse.ambient;
    const double db = rb.sample_at(x) - coarse.ambient;
    CHECK(std::abs(da - db) / db < 0.01);
  }
}

TEST_CASE("heater response scales with squared voltage") {
  const RodConfig cfg;
  const HeatRod rod(cfg);
  auto rise = [&](double v) {
    HeatRod r(cfg);
    r.set_temperatures(rod.steady_state(powers(cfg, v)));
    return (r.sensor_readings().array() - cfg.ambient).matrix().eval();
  };
  const Vector full = rise(0.9);
  CHECK((full.array() / rise(0.3).array() - 9.0).abs().maxCoeff() < 1e-9);
  CHECK((full.array() / rise(0.45).array() - 4.0).abs().maxCoeff() < 1e-9);
  CHECK((full.array() / rise(0.6).array() - 2.25).abs().maxCoeff() < 1e-9);
}

TEST_CASE("calibrated time constant") {
  const RodConfig cfg;
  CHECK(std::abs(simulate::step_time_constant(cfg) - 750.0) / 750.0 < 0.01);
  RodConfig other = cfg;
  other.convection_coeff = 20.0;
  const double h = simulate::calibrate_convection(other, 750.0);
  CHECK(std::abs(h - cfg.convection_coeff) / cfg.convection_coeff < 0.01);
  other.convection_coeff = h;
  CHECK(std::abs(simulate::step_time_constant(other) - 750.0) < 1.0);
}

TEST_CASE("sampled rod data") {
  const RodConfig cfg;
  Matrix v = Matrix::Constant(4, 30, 0.5);
  const auto data = simulate::simulate_rod(cfg, v, 15.0);
  CHECK(data.samples() == 30);
  CHECK(data.inputs.isApproxToConstant(0.25));
  CHECK(data.outputs.col(0).isApproxToConstant(cfg.ambient));  // sampled before the first input acts
  CHECK((data.outputs.col(29).array() > cfg.ambient).all());
  CHECK(data.sample_period == 15.0);

  simulate::SensorNoise noise{0.1, 0.0, 60.0, 3};
  const auto a = simulate::simulate_rod(cfg, v, 15.0, noise);
  const auto b = simulate::simulate_rod(cfg, v, 15.0, noise);
  CHECK(a.outputs == b.outputs);
  CHECK_FALSE(a.outputs == data.outputs);

  v(0, 3) = 1.5;
  CHECK_THROWS_AS((void)simulate::simulate_rod(cfg, v, 15.0), DataError);
  CHECK_THROWS_AS((void)simulate::simulate_rod(cfg, Matrix::Zero(3, 5), 15.0), DataError);
  CHECK_THROWS_AS((void)simulate::simulate_rod(cfg, Matrix::Zero(4, 5), 0.0), DataError);
}

TEST_CASE("rod configuration validation names the field") {
  auto message = [](RodConfig cfg) {
    try {
      cfg.validate();
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  RodConfig cfg;
  CHECK(message(cfg).empty());
  cfg.length = -1.0;
  CHECK(message(cfg).find("length") != std::string::npos);
  cfg = {};
  cfg.sensor_positions = {0.5, 2.5};
  CHECK(message(cfg).find("sensor_positions") != std::string::npos);
  cfg = {};
  cfg.grid_points = 2;
  CHECK(message(cfg).find("grid_points") != std::string::npos);
  cfg = {};
  cfg.heater_positions.clear();
  CHECK(message(cfg).find("heater_positions") != std::string::npos);
}

TEST_CASE("LTI simulation") {
  core::InnovationModel pass;
  pass.A = Matrix::Zero(2, 2);
  pass.B = Matrix::Identity(2, 2);
  pass.C = Matrix::Identity(2, 2);
  pass.K = Matrix::Zero(2, 2);
  const Vector c = (Vector(2) << 1.5, -0.5).finished();
  const Matrix u = c.replicate(1, 10);
  const auto out = simulate::simulate_lti(pass, c, u);
  CHECK(out.outputs == u);

  const auto model = testing::random_model({3, 2, 2, 0.5, 0.9, true, 0.3}, 21);
  const Matrix inputs = simulate::prbs_like_inputs(2, 50, 22);
  const Vector x0 = (Vector(3) << 0.1, 0.2, 0.3).finished();
  const auto noisy = simulate::simulate_lti(model, x0, inputs, 0.2, 23);
  const auto again = simulate::simulate_lti(model, x0, inputs, 0.2, 23);
  CHECK(noisy.outputs == again.outputs);

  // replay the recursion by hand with the same generator
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x = x0;
  for (Index k = 0; k < inputs.cols(); ++k) {
    Vector e(2);
    for (Index j = 0; j < 2; ++j) e[j] = 0.2 * gauss(rng);
    CHECK((noisy.outputs.col(k) - (model.C * x + e)).cwiseAbs().maxCoeff() < 1e-12);
    x = model.A * x + model.B * inputs.col(k) + model.K * e;
  }
  const auto det = simulate::simulate_lti(model, x0, inputs);
  Vector xd = x0;
  for (Index k = 0; k < inputs.cols(); ++k) {
    CHECK((det.outputs.col(k) - model.C * xd).cwiseAbs().maxCoeff() < 1e-12);
    xd = model.A * xd + model.B * inputs.col(k);
  }

  // impulse response gives the Markov parameters C A^{k-1} B
  Matrix impulse = Matrix::Zero(2, 8);
  impulse(1, 0) = 1.0;
  const auto resp = simulate::simulate_lti(model, Vector::Zero(3), impulse);
  Matrix power = Matrix::Identity(3, 3);
  for (Index k = 1; k < 8; ++k) {
    CHECK((resp.outputs.col(k) - model.C * power * model.B.col(1)).cwiseAbs().maxCoeff() < 1e-12);
    power = model.A * power;
  }

  // superposition
  const Matrix u2 = simulate::prbs_like_inputs(2, 50, 24);
  const auto y1 = simulate::simulate_lti(model, Vector::Zero(3), inputs).outputs;
  const auto y2 = simulate::simulate_lti(model, Vector::Zero(3), u2).outputs;
  const auto y12 = simulate::simulate_lti(model, Vector::Zero(3), 2.0 * inputs - 3.0 * u2).outputs;
  CHECK((y12 - (2.0 * y1 - 3.0 * y2)).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS((void)simulate::simulate_lti(model, Vector::Zero(2), inputs), DataError);
}

TEST_CASE("uniform excitation") {
  const Matrix a = simulate::prbs_like_inputs(4, 180, 1);
  CHECK(a == simulate::prbs_like_inputs(4, 180, 1));
  CHECK_FALSE(a == simulate::prbs_like_inputs(4, 180, 2));
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() < 1.0);
  CHECK(std::abs(a.mean() - 0.5) < 0.05);
  CHECK(simulate::prbs_like_inputs(2, 0, 1).cols() == 0);

  const auto data = testing::generate(testing::random_model({3, 4, 7, 0.5, 0.95, true, 0.3}, 2), 180, 10, 2, 30.0);
  const auto reg = varx::build_regression(data.identification, 10);
  CHECK(testing::svd_rank(reg.Z.values) == reg.Z.values.rows());
}
