#include "doctest.h"

#include "oracles.hpp"

#include "pbsid/error.hpp"
#include "pbsid/residual.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace pbsid;

namespace {

Matrix white(Index r, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix e(r, n);
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < r; ++i) e(i, k) = nd(rng);
  return e;
}

}  // namespace

TEST_CASE("residual sequence") {
  const Matrix y = (Matrix(1, 2) << 1, 2).finished();
  CHECK(residual::residual_sequence(y, y).isZero());
  const Matrix eps = residual::residual_sequence(y, (Matrix(1, 2) << 0.5, 1).finished());
  CHECK(eps(0, 0) == 0.5);
  CHECK(eps(0, 1) == 1.0);
  CHECK_THROWS_AS((void)residual::residual_sequence(y, Matrix::Zero(2, 2)), DataError);
}

TEST_CASE("zero-variance residuals are rejected") {
  Matrix eps = white(2, 50, 1);
  eps.row(1).setConstant(0.7);
  try {
    (void)residual::autocorrelation(eps, 5);
    FAIL("expected rejection");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("channel 2") != std::string::npos);
  }
  CHECK_THROWS_AS((void)residual::autocorrelation(white(1, 1, 2), 0), DataError);
  CHECK_THROWS_AS((void)residual::autocorrelation(white(1, 10, 2), 9), DataError);
}

TEST_CASE("autocovariance matches a direct double sum") {
  const Matrix eps = white(3, 120, 3);
  const auto rep = residual::autocorrelation(eps, 20);
  CHECK(rep.n1 == 119);
  CHECK(rep.autocovariance.size() == 21);
  for (Index i = 0; i <= 20; ++i) {
    const Matrix oracle = testing::brute_autocovariance(eps, i);
    CHECK((rep.autocovariance[static_cast<std::size_t>(i)] - oracle).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK((rep.autocovariance[0] - rep.autocovariance[0].transpose()).norm() < 1e-14);
  for (Index b = 0; b < 3; ++b) CHECK(rep.autocorrelation[0](b, b) == 1.0);
  for (const auto& g : rep.autocorrelation) CHECK(g.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("autocorrelation is invariant to channel scaling") {
  const Matrix eps = white(2, 200, 4);
  Matrix scaled = eps;
  scaled.row(0) *= 1e3;
  scaled.row(1) *= 1e-3;
  scaled.array() += 5.0;
  const auto a = residual::autocorrelation(eps, 10);
  const auto b = residual::autocorrelation(scaled, 10);
  for (std::size_t i = 0; i < a.autocorrelation.size(); ++i) {
    CHECK((a.autocorrelation[i] - b.autocorrelation[i]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("confidence bound") {
  const auto rep = residual::autocorrelation(white(1, 121, 5), 20);
  CHECK(rep.bound == doctest::Approx(0.18257).epsilon(1e-4));
}

TEST_CASE("white noise passes the whiteness test") {
  int passes = 0;
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto rep = residual::autocorrelation(white(3, 400, seed), 20);
    passes += residual::whiteness_verdict(rep).pass ? 1 : 0;
  }
  CHECK(passes == 10);
}

TEST_CASE("report without violations passes") {
  residual::ResidualReport rep;
  rep.max_lag = 5;
  rep.n1 = 100;
  rep.bound = 0.2;
  rep.autocorrelation.assign(6, Matrix::Zero(2, 2));
  rep.autocorrelation[0].setIdentity();
  const auto v = residual::whiteness_verdict(rep);
  CHECK(v.pass);
  CHECK(v.overall_fraction == 0.0);
  CHECK(v.flagged.empty());
}

TEST_CASE("coloured channel is flagged") {
  Matrix eps = white(2, 400, 6);
  for (Index k = 1; k < eps.cols(); ++k) eps(1, k) += 0.9 * eps(1, k - 1);
  const auto rep = residual::autocorrelation(eps, 10);
  CHECK(rep.autocorrelation[1](1, 1) > 0.8);
  const auto v = residual::whiteness_verdict(rep);
  CHECK(std::find(v.flagged.begin(), v.flagged.end(), std::pair<Index, Index>{1, 1}) != v.flagged.end());
  CHECK(v.fraction(0, 0) < v.fraction(1, 1));
  CHECK(v.fraction(1, 1) > 0.5);
  bool short_lag = false;
  for (const auto& viol : rep.violations) short_lag = short_lag || (viol.b == 1 && viol.s == 1 && viol.lag == 1);
  CHECK(short_lag);
}
