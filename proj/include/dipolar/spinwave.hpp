#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dipolar/constants.hpp"
#include "dipolar/error.hpp"
#include "dipolar/fit.hpp"
#include "dipolar/hamiltonian.hpp"
#include "dipolar/lattice.hpp"

namespace dipolar {

/// Single-excitation band of a periodic lattice, measured down from k = 0:
/// omega_k = 4 kappa sum_{j != 0} d_0j sin^2(k . r_j / 2) = 2 kappa (F_0 - F_k).
struct Dispersion {
  MomentumGrid grid;
  std::vector<double> omega;    // units kappa
  std::vector<double> fourier;  // F_k
  LatticeKind kind = LatticeKind::chain;
  std::size_t n_sites = 0;
  double kappa = 1.0;
};

/// F_k = sum_{j != 0} d_0j cos(k . r_j) at an arbitrary wave vector (units 1/a).
inline double fourier_kernel(const Lattice& lattice, const Vec2& k) {
  if (!lattice.periodic()) throw InvalidInput("fourier_kernel requires a periodic lattice");
  double s = 0.0;
  for (std::size_t j = 1; j < lattice.size(); ++j) {
    const Cell c = lattice.cell_displacement(0, j);
    const double r2 = lattice.squared_length(c);
    s += std::cos(dot(k, lattice.cartesian(c))) / (r2 * std::sqrt(r2));
  }
  return s;
}

/// F_k on every grid point, with k . r reduced through integer arithmetic.
inline std::vector<double> fourier_kernel(const Lattice& lattice, const MomentumGrid& grid) {
  if (!lattice.periodic()) throw InvalidInput("fourier_kernel requires a periodic lattice");
  std::vector<Cell> cells;
  std::vector<double> d;
  for (std::size_t j = 1; j < lattice.size(); ++j) {
    cells.push_back(lattice.cell_displacement(0, j));
    const double r2 = lattice.squared_length(cells.back());
    d.push_back(1.0 / (r2 * std::sqrt(r2)));
  }
  std::vector<double> f(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = 0; j < cells.size(); ++j) f[i] += d[j] * std::cos(grid.phase(i, cells[j]));
  return f;
}

inline Dispersion dispersion(const Lattice& lattice, double kappa) {
  if (!lattice.periodic()) throw InvalidInput("dispersion requires a periodic lattice");
  Dispersion out{MomentumGrid(lattice), {}, {}, lattice.kind(), lattice.size(), kappa};
  out.fourier = fourier_kernel(lattice, out.grid);
  out.omega.resize(out.fourier.size());
  for (std::size_t i = 0; i < out.fourier.size(); ++i) out.omega[i] = 2.0 * kappa * (out.fourier[0] - out.fourier[i]);
  out.omega[0] = 0.0;
  return out;
}

namespace detail {

/// int_x^inf (1 - J0(u)) / u^2 du, from int_0^inf = 1 and Simpson's rule on [0, x].
inline double bessel_tail(double x) {
  if (x <= 0.0) return 1.0;
  auto f = [](double u) { return u < 1e-4 ? 0.25 - u * u / 64.0 : (1.0 - std::cyl_bessel_j(0.0, u)) / (u * u); };
  const auto n = static_cast<std::size_t>(std::max(200.0, std::ceil(x * 40.0))) * 2;
  const double h = x / static_cast<double>(n);
  double s = f(0.0) + f(x);
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(h * static_cast<double>(i));
  return 1.0 - s * h / 3.0;
}

}  // namespace detail

/// Dispersion of the infinite lattice at wave vector k (units 1/a). The chain
/// is summed directly to |r| <= cutoff with the averaged tail added; 2D lattices
/// are summed over a disk of radius `cutoff` plus the continuum remainder
/// (4 pi kappa |k| / A_cell) int_{|k| R}^inf (1 - J0(u)) / u^2 du.
inline double dispersion_infinite(LatticeKind kind, double kappa, const Vec2& k, double cutoff = 0.0) {
  if (kind == LatticeKind::chain) {
    const double r_max = cutoff > 0 ? cutoff : 1e5;
    const auto n = static_cast<long long>(r_max);
    double s = 0.0;
    for (long long d = n; d >= 1; --d) {
      const double x = static_cast<double>(d);
      const double sn = std::sin(0.5 * k[0] * x);
      s += sn * sn / (x * x * x);
    }
    // sin^2 averages to 1/2 beyond the cutoff
    return 8.0 * kappa * s + 2.0 * kappa / (r_max * r_max);
  }
  const double r_max = cutoff > 0 ? cutoff : 600.0;
  const Lattice unit(kind, 4, 1.0, Boundary::periodic);
  const auto& a = unit.primitive();
  const double area = std::abs(a[0][0] * a[1][1] - a[0][1] * a[1][0]);
  const auto m = static_cast<int>(std::ceil(2.0 * r_max)) + 2;
  double s = 0.0;
  for (int n2 = -m; n2 <= m; ++n2) {
    for (int n1 = -m; n1 <= m; ++n1) {
      if (n1 == 0 && n2 == 0) continue;
      const Vec2 r{n1 * a[0][0] + n2 * a[1][0], n1 * a[0][1] + n2 * a[1][1]};
      const double r2 = dot(r, r);
      if (r2 > r_max * r_max) continue;
      const double sn = std::sin(0.5 * dot(k, r));
      s += sn * sn / (r2 * std::sqrt(r2));
    }
  }
  const double kn = norm(k);
  return 4.0 * kappa * s + 4.0 * pi * kappa * kn / area * detail::bessel_tail(kn * r_max);
}

/// Small-k closed form for the chain, kappa (3 - 2 ln ka)(ka)^2.
inline double dispersion_small_k_1d(double kappa, double ka) {
  return kappa * (3.0 - 2.0 * std::log(ka)) * ka * ka;
}

struct AsymptoteReport {
  LatticeKind kind = LatticeKind::chain;
  std::vector<double> ka;
  std::vector<double> omega;
  std::vector<double> reference;       // 1D: small-k closed form; 2D: slope * |k|
  double max_relative_deviation = 0.0; // 1D only
  double slope = 0.0;                  // 2D: least-squares omega / |k| through the origin
  double linearity_spread = 0.0;       // 2D: max/min of omega/|k| minus 1 over the smallest decade
};

/// Compares the infinite-lattice dispersion with its small-k behaviour.
/// 1D: ka log-spaced over [ka_min, 0.05]. 2D: k along the first axis over one decade above ka_min.
inline AsymptoteReport dispersion_asymptote_check(LatticeKind kind, double kappa, double ka_min = 1e-3,
                                                  std::size_t points = 8, double cutoff = 0.0) {
  if (points < 3) throw InvalidInput("asymptote check needs at least 3 small-k points");
  AsymptoteReport rep;
  rep.kind = kind;
  const double ka_max = kind == LatticeKind::chain ? 0.05 : 10.0 * ka_min;
  for (std::size_t i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(points - 1);
    rep.ka.push_back(ka_min * std::pow(ka_max / ka_min, f));
  }
  for (double k : rep.ka) rep.omega.push_back(dispersion_infinite(kind, kappa, {k, 0.0}, cutoff));
  if (kind == LatticeKind::chain) {
    for (std::size_t i = 0; i < rep.ka.size(); ++i) {
      rep.reference.push_back(dispersion_small_k_1d(kappa, rep.ka[i]));
      rep.max_relative_deviation =
          std::max(rep.max_relative_deviation, std::abs(rep.omega[i] - rep.reference[i]) / rep.reference[i]);
    }
    return rep;
  }
  double num = 0.0, den = 0.0, lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < rep.ka.size(); ++i) {
    num += rep.omega[i] * rep.ka[i];
    den += rep.ka[i] * rep.ka[i];
    lo = std::min(lo, rep.omega[i] / rep.ka[i]);
    hi = std::max(hi, rep.omega[i] / rep.ka[i]);
  }
  rep.slope = num / den / kappa;
  rep.linearity_spread = hi / lo - 1.0;
  for (double k : rep.ka) rep.reference.push_back(rep.slope * kappa * k);
  return rep;
}

/// One representative per +-k pair of a grid with its multiplicity (2, or 1
/// when k = -k up to a reciprocal vector); k = 0 is excluded.
inline std::vector<std::pair<std::size_t, int>> folded_momenta(const MomentumGrid& grid) {
  std::vector<std::pair<std::size_t, int>> out;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const std::size_t j = grid.negated(i);
    if (i < j) out.emplace_back(i, 2);
    if (i == j) out.emplace_back(i, 1);
  }
  return out;
}

enum class MomentumSum { folded, full };

struct DecayCurve {
  std::vector<double> times;
  std::vector<double> decay;
  std::vector<double> matrix_element;  // M_k = (4 xi / N) F_k, per grid point
  double short_time_coefficient = 0.0; // decay / t^2 as t -> 0
  bool out_of_range = false;           // estimate exceeded 0.5
};

/// Leakage of |2> out of the Dicke manifold to first order in the Ising part:
/// (16 xi^2 / N^2) sum_{k != 0} |F_k|^2 sin^2(omega_k t) / omega_k^2,
/// with omega_k the exchange-only band.
inline DecayCurve perturbative_decay2(const Dispersion& disp, double xi, std::span<const double> times,
                                      MomentumSum mode = MomentumSum::folded) {
  if (xi < 0.0) throw InvalidInput("perturbative decay takes xi >= 0");
  DecayCurve c;
  c.times.assign(times.begin(), times.end());
  c.decay.assign(times.size(), 0.0);
  const double n = static_cast<double>(disp.n_sites);
  const double pref = 16.0 * xi * xi / (n * n);
  for (double f : disp.fourier) c.matrix_element.push_back(4.0 * xi / n * f);
  std::vector<std::pair<std::size_t, int>> terms;
  if (mode == MomentumSum::folded) {
    terms = folded_momenta(disp.grid);
  } else {
    for (std::size_t i = 1; i < disp.grid.size(); ++i) terms.emplace_back(i, 1);
  }
  for (const auto& [k, mult] : terms) {
    const double f2 = disp.fourier[k] * disp.fourier[k];
    c.short_time_coefficient += pref * mult * f2;
    const double w = disp.omega[k];
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double t = times[i];
      const double s = w == 0.0 ? t : std::sin(w * t) / w;
      c.decay[i] += pref * mult * f2 * s * s;
    }
  }
  for (double d : c.decay) c.out_of_range = c.out_of_range || d > 0.5;
  return c;
}

inline DecayCurve perturbative_decay2(const Lattice& lattice, double kappa, double xi, std::span<const double> times,
                                      MomentumSum mode = MomentumSum::folded) {
  return perturbative_decay2(dispersion(lattice, kappa), xi, times, mode);
}

/// Time grid over [0, t_max] fine enough to resolve oscillations at `max_frequency`.
inline std::vector<double> resolving_times(double t_max, double max_frequency, std::size_t min_samples = 2000,
                                           double points_per_radian = 4.0) {
  const auto need = static_cast<std::size_t>(std::ceil(t_max * max_frequency * points_per_radian)) + 1;
  const std::size_t n = std::max(min_samples, need);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = t_max * static_cast<double>(i) / static_cast<double>(n - 1);
  return t;
}

struct ScalingReport {
  LatticeKind kind = LatticeKind::chain;
  double xi_over_kappa = 0.0;
  double window = 2.0;  // units of t_pi(chi_tilde_eff)
  std::vector<std::size_t> sizes;
  std::vector<double> max_decay;
  PowerLawFit fit;
};

/// Maximum first-order leakage over [0, window * t_pi] on periodic lattices of
/// several sizes, fitted to max_decay ~ prefactor * N^alpha.
inline ScalingReport fgr_scaling_diagnostic(LatticeKind kind, double xi_over_kappa, std::span<const std::size_t> sizes,
                                            double window = 2.0) {
  if (sizes.size() < 3) throw InvalidInput("scaling diagnostic needs at least 3 lattice sizes");
  if (!(xi_over_kappa > 0.0)) throw InvalidInput("scaling diagnostic needs xi / kappa > 0");
  ScalingReport rep;
  rep.kind = kind;
  rep.xi_over_kappa = xi_over_kappa;
  rep.window = window;
  std::vector<double> xs;
  for (std::size_t n : sizes) {
    const Lattice lat(kind, n, 1.0, Boundary::periodic);
    const auto gp = gate_params(lat, 1.0, xi_over_kappa, GateCoupling::ising);
    const Dispersion disp = dispersion(lat, 1.0);
    const double w_max = *std::max_element(disp.omega.begin(), disp.omega.end());
    const auto times = resolving_times(window * gp.t_pi, w_max);
    const DecayCurve c = perturbative_decay2(disp, xi_over_kappa, times);
    rep.sizes.push_back(n);
    rep.max_decay.push_back(*std::max_element(c.decay.begin(), c.decay.end()));
    xs.push_back(static_cast<double>(n));
  }
  rep.fit = fit_power_law(xs, rep.max_decay);
  return rep;
}

}  // namespace dipolar
