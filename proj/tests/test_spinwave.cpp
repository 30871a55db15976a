#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dipolar/dynamics.hpp"
#include "dipolar/fit.hpp"
#include "dipolar/scaling.hpp"
#include "dipolar/spinwave.hpp"

using namespace dipolar;

namespace {

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST(Dispersion, ZeroAtOriginAndEven) {
  for (auto kind : {LatticeKind::chain, LatticeKind::square, LatticeKind::triangular}) {
    const Dispersion d = dispersion(Lattice(kind, 36, 1.0, Boundary::periodic), 1.0);
    EXPECT_EQ(d.omega[0], 0.0);
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
      EXPECT_NEAR(d.omega[i], d.omega[d.grid.negated(i)], 1e-13);
      EXPECT_NEAR(d.fourier[i], d.fourier[d.grid.negated(i)], 1e-13);
    }
  }
}

TEST(Dispersion, MatchesSingleExcitationSpectrum) {
  // plane waves diagonalize the n = 1 block: eigenvalues 2 kappa F_k
  for (auto kind : {LatticeKind::chain, LatticeKind::triangular}) {
    const Lattice lat(kind, 25, 1.0, Boundary::periodic);
    const double kappa = 1.7;
    const Dispersion d = dispersion(lat, kappa);
    std::vector<double> expect;
    for (double f : d.fourier) expect.push_back(2 * kappa * f);
    std::sort(expect.begin(), expect.end());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_vdd(lat, kappa).block(1).to_dense());
    for (std::size_t i = 0; i < expect.size(); ++i)
      EXPECT_NEAR(es.eigenvalues()[static_cast<Eigen::Index>(i)], expect[i], 1e-12);
  }
}

TEST(Dispersion, ChainZoneEdge) {
  const Dispersion d = dispersion(Lattice(LatticeKind::chain, 400, 1.0, Boundary::periodic), 1.0);
  EXPECT_NEAR(d.omega[200] / (7 * zeta3), 1.0, 0.01);
  EXPECT_NEAR(dispersion_infinite(LatticeKind::chain, 1.0, {pi, 0.0}) / (7 * zeta3), 1.0, 1e-6);
}

TEST(Fourier, ChainLimits) {
  const Lattice lat(LatticeKind::chain, 200, 1.0, Boundary::periodic);
  EXPECT_NEAR(fourier_kernel(lat, Vec2{0.0, 0.0}) / (2 * zeta3), 1.0, 0.01);
  EXPECT_NEAR(fourier_kernel(lat, Vec2{pi, 0.0}) / (-1.5 * zeta3), 1.0, 0.01);
}

TEST(Fourier, GridAgreesWithDirectEvaluation) {
  const Lattice lat(LatticeKind::triangular, 36, 1.0, Boundary::periodic);
  const MomentumGrid g(lat);
  const auto f = fourier_kernel(lat, g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(f[i], fourier_kernel(lat, g.kvecs()[i]), 1e-12);
}

TEST(Fourier, Parseval) {
  for (auto kind : {LatticeKind::chain, LatticeKind::square, LatticeKind::triangular}) {
    const Lattice lat(kind, 49, 1.0, Boundary::periodic);
    const auto f = fourier_kernel(lat, MomentumGrid(lat));
    const auto k = coupling_kernel(lat);
    double lhs = 0.0;
    for (double v : f) lhs += v * v;
    lhs /= static_cast<double>(f.size());
    EXPECT_NEAR(lhs, k.d.row(0).squaredNorm(), 1e-12);
  }
}

TEST(Asymptote, ChainSmallK) {
  const auto rep = dispersion_asymptote_check(LatticeKind::chain, 1.0, 1e-3, 8);
  EXPECT_LT(rep.max_relative_deviation, 0.05);
  const double at = dispersion_infinite(LatticeKind::chain, 1.0, {0.01, 0.0});
  EXPECT_NEAR(at / dispersion_small_k_1d(1.0, 0.01), 1.0, 0.05);
}

TEST(Asymptote, SquareIsLinearAtSmallK) {
  const auto rep = dispersion_asymptote_check(LatticeKind::square, 1.0, 1e-3, 6, 300.0);
  EXPECT_LT(rep.linearity_spread, 0.03);
  EXPECT_GT(rep.slope, 0.0);
}

TEST(Asymptote, BesselTailLimits) {
  EXPECT_DOUBLE_EQ(detail::bessel_tail(0.0), 1.0);
  // large x: the tail tends to 1/x
  EXPECT_NEAR(detail::bessel_tail(400.0) * 400.0, 1.0, 0.01);
}

TEST(Fold, FoldedEqualsFullSum) {
  for (auto kind : {LatticeKind::chain, LatticeKind::square, LatticeKind::triangular}) {
    const Lattice lat(kind, 36, 1.0, Boundary::periodic);
    const auto times = uniform_times(50.0, 40);
    const auto a = perturbative_decay2(lat, 1.0, 0.1, times, MomentumSum::folded);
    const auto b = perturbative_decay2(lat, 1.0, 0.1, times, MomentumSum::full);
    for (std::size_t i = 0; i < times.size(); ++i) EXPECT_NEAR(a.decay[i], b.decay[i], 1e-14);
    int count = 0;
    for (auto [k, m] : folded_momenta(MomentumGrid(lat))) count += m;
    EXPECT_EQ(count, 35);
  }
}

TEST(Perturbative, ZeroXiAndShortTimes) {
  const Lattice lat(LatticeKind::chain, 36, 1.0, Boundary::periodic);
  const auto times = uniform_times(1e-3, 11);
  for (double d : perturbative_decay2(lat, 1.0, 0.0, times).decay) EXPECT_EQ(d, 0.0);
  const double xi = 0.05;
  const auto c = perturbative_decay2(lat, 1.0, xi, times);
  const auto f = fourier_kernel(lat, MomentumGrid(lat));
  double s = 0.0;
  for (std::size_t k = 1; k < f.size(); ++k) s += f[k] * f[k];
  const double coef = 16 * xi * xi / (36.0 * 36.0) * s;
  EXPECT_NEAR(c.short_time_coefficient / coef, 1.0, 1e-12);
  EXPECT_NEAR(c.decay.back() / (coef * 1e-6), 1.0, 1e-4);  // next order is (omega t)^2
}

TEST(Perturbative, QuadraticInXi) {
  const Lattice lat(LatticeKind::chain, 25, 1.0, Boundary::periodic);
  const auto times = uniform_times(100.0, 500);
  const double a = max_of(perturbative_decay2(lat, 1.0, 0.02, times).decay);
  const double b = max_of(perturbative_decay2(lat, 1.0, 0.04, times).decay);
  EXPECT_NEAR(std::log(b / a) / std::log(2.0), 2.0, 1e-12);
}

TEST(Perturbative, ExactLeakageIsQuadraticInXi) {
  // fixed absolute window so only xi changes
  const Lattice lat(LatticeKind::chain, 16, 1.0, Boundary::periodic);
  const auto times = uniform_times(150.0, 3000);
  double m[2];
  const double xs[2] = {0.01, 0.02};
  for (int i = 0; i < 2; ++i) m[i] = dicke_projections(build_full(lat, 1.0, xs[i]), times).max_decay();
  EXPECT_NEAR(std::log(m[1] / m[0]) / std::log(2.0), 2.0, 0.05);
}

TEST(Perturbative, TracksExactDecayForChainOf36) {
  const Lattice lat(LatticeKind::chain, 36, 1.0, Boundary::periodic);
  const double xi = 0.05;
  const ExactDecay exact = exact_decay(LatticeKind::chain, 36, xi, 1.0);
  const std::vector<double> at{0.0, exact.t_pi};
  const double pert = perturbative_decay2(lat, 1.0, xi, at).decay.back();
  const double ex = 1.0 - exact.fidelity_at_tpi;
  EXPECT_LT(ex, 0.05);
  EXPECT_LT(pert, 0.05);
  EXPECT_LT(std::max(pert / ex, ex / pert), 2.0);
}

TEST(Fit, RecoversSyntheticPowerLaw) {
  const std::vector<double> x{16, 25, 36, 49, 64, 81};
  std::vector<double> y;
  for (double v : x) y.push_back(0.01 * std::pow(v, 1.62));
  const auto f = fit_power_law(x, y);
  EXPECT_NEAR(f.exponent, 1.62, 1e-12);
  EXPECT_NEAR(f.prefactor, 0.01, 1e-13);
  EXPECT_LT(f.rms_residual, 1e-12);
  const std::vector<double> two{1, 2};
  EXPECT_THROW(fit_power_law(two, two), InvalidInput);
}

TEST(Scaling, PerturbativeExponentsHaveExpectedSigns) {
  const std::vector<std::size_t> sizes{16, 25, 36, 49};
  EXPECT_GT(fgr_scaling_diagnostic(LatticeKind::chain, 0.05, sizes).fit.exponent, 1.0);
  EXPECT_LT(fgr_scaling_diagnostic(LatticeKind::square, 1.0, sizes).fit.exponent, 0.5);
}
