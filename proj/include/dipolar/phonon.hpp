#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dipolar/constants.hpp"
#include "dipolar/error.hpp"
#include "dipolar/lattice.hpp"
#include "dipolar/spinwave.hpp"

namespace dipolar {

/// Harmonic phonons of a dipolar crystal on a periodic chain or triangular
/// lattice. Frequencies f are dimensionless, omega = (U_dd / sqrt(beta)) f;
/// times are in hbar sqrt(beta) / U_dd and temperatures in U_dd / (sqrt(beta) k_B).
class PhononModel {
 public:
  /// `kappa` is the exchange scale in units of U_dd; the spin-wave band enters
  /// decay sums through magnon_scale = kappa sqrt(beta).
  PhononModel(const Lattice& lattice, double beta, double kappa)
      : lattice_(lattice), grid_(lattice), beta_(beta), magnon_scale_(kappa * std::sqrt(beta)) {
    if (!lattice.periodic()) throw InvalidInput("phonon model requires a periodic lattice");
    if (lattice.kind() == LatticeKind::square)
      throw InvalidInput("phonon model supports chain and triangular lattices");
    if (!(beta > 0.0)) throw InvalidInput("beta must be positive");
    if (kappa < 0.0) throw InvalidInput("kappa must be non-negative");
    dim_ = lattice.dimension();
    for (std::size_t j = 1; j < lattice.size(); ++j) {
      const Cell c = lattice.cell_displacement(0, j);
      cells_.push_back(c);
      r_.push_back(lattice.cartesian(c));
    }
    const std::size_t nq = grid_.size();
    freq_.resize(nq);
    pol_.resize(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dynamical_matrix(q));
      const Eigen::VectorXd ev = es.eigenvalues();
      for (Eigen::Index b = 0; b < ev.size(); ++b)
        if (ev[b] < -1e-10)
          throw NumericalError("unstable phonon mode at q index " + std::to_string(q) + " (" +
                               std::to_string(grid_.kvecs()[q][0]) + ", " + std::to_string(grid_.kvecs()[q][1]) +
                               "): f^2 = " + std::to_string(ev[b]));
      freq_[q] = ev.cwiseMax(0.0).cwiseSqrt();
      pol_[q] = es.eigenvectors();
    }
    freq_[0].setZero();
    spin_ = dispersion(lattice, 1.0).omega;
  }

  const Lattice& lattice() const { return lattice_; }
  const MomentumGrid& grid() const { return grid_; }
  int branches() const { return dim_; }
  double beta() const { return beta_; }
  double magnon_scale() const { return magnon_scale_; }
  std::size_t size() const { return grid_.size(); }

  /// D(q) = sum_{R != 0} K(R) (1 - cos q.R), K(R) = 3 (5 n n^T - I) / |R|^5.
  Eigen::MatrixXd dynamical_matrix(std::size_t q) const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dim_, dim_);
    for (std::size_t j = 0; j < r_.size(); ++j) {
      const double w = 1.0 - std::cos(grid_.phase(q, cells_[j]));
      if (w == 0.0) continue;
      d += w * pair_stiffness(j);
    }
    return d;
  }

  /// Same sum at an arbitrary wave vector.
  Eigen::MatrixXd dynamical_matrix(const Vec2& q) const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dim_, dim_);
    for (std::size_t j = 0; j < r_.size(); ++j) d += (1.0 - std::cos(dot(q, r_[j]))) * pair_stiffness(j);
    return d;
  }

  /// Branch frequencies at grid point q, ascending.
  const Eigen::VectorXd& frequencies(std::size_t q) const { return freq_[q]; }
  const Eigen::MatrixXd& polarizations(std::size_t q) const { return pol_[q]; }

  /// Spin-wave band omega_k at grid point k, units U_dd / sqrt(beta).
  double spin_wave(std::size_t k) const { return magnon_scale_ * spin_[k]; }

  /// g(q) = (9 / f) (sum_{i != 0} sin(q.r_i) (e . r_i) / |r_i|^5)^2 for one branch.
  double coupling_weight(std::size_t q, int branch) const {
    if (q == 0) return 0.0;
    const double f = freq_[q][branch];
    if (!(f > 0.0)) throw NumericalError("zero phonon frequency at q != 0");
    double s = 0.0;
    for (std::size_t j = 0; j < r_.size(); ++j) {
      const double r2 = dot(r_[j], r_[j]);
      double er = 0.0;
      for (int a = 0; a < dim_; ++a) er += pol_[q](a, branch) * r_[j][static_cast<std::size_t>(a)];
      s += std::sin(grid_.phase(q, cells_[j])) * er / (r2 * r2 * std::sqrt(r2));
    }
    return 9.0 / f * s * s;
  }

 private:
  Eigen::MatrixXd pair_stiffness(std::size_t j) const {
    const Vec2& r = r_[j];
    const double r2 = dot(r, r);
    const double r5 = r2 * r2 * std::sqrt(r2);
    Eigen::MatrixXd k(dim_, dim_);
    for (int a = 0; a < dim_; ++a)
      for (int b = 0; b < dim_; ++b)
        k(a, b) = 3.0 * (5.0 * r[static_cast<std::size_t>(a)] * r[static_cast<std::size_t>(b)] / r2 - (a == b)) / r5;
    return k;
  }

  Lattice lattice_;
  MomentumGrid grid_;
  double beta_;
  double magnon_scale_;
  int dim_ = 1;
  std::vector<Cell> cells_;
  std::vector<Vec2> r_;
  std::vector<Eigen::VectorXd> freq_;
  std::vector<Eigen::MatrixXd> pol_;
  std::vector<double> spin_;
};

struct PhononBands {
  std::vector<Vec2> q;                     // centred wave vectors
  std::vector<std::vector<double>> f;      // per q, ascending branches
  std::vector<double> sound_speed;         // per branch
};

/// Band table over the model's grid; sound speeds are the mean f/|q| over the
/// smallest 10% of nonzero |q| (at least one point).
inline PhononBands phonon_spectrum(const PhononModel& m) {
  PhononBands b;
  std::vector<std::pair<double, std::size_t>> by_norm;
  for (std::size_t i = 0; i < m.size(); ++i) {
    b.q.push_back(m.grid().centered(i));
    const auto& f = m.frequencies(i);
    b.f.emplace_back(f.data(), f.data() + f.size());
    if (i != 0) by_norm.emplace_back(norm(b.q.back()), i);
  }
  std::sort(by_norm.begin(), by_norm.end());
  const std::size_t take = std::max<std::size_t>(1, by_norm.size() / 10);
  b.sound_speed.assign(static_cast<std::size_t>(m.branches()), 0.0);
  for (std::size_t s = 0; s < take; ++s)
    for (int br = 0; br < m.branches(); ++br)
      b.sound_speed[static_cast<std::size_t>(br)] +=
          b.f[by_norm[s].second][static_cast<std::size_t>(br)] / by_norm[s].first / static_cast<double>(take);
  return b;
}

inline double bose_occupation(double f, double temperature) {
  if (temperature <= 0.0) return 0.0;
  return 1.0 / std::expm1(f / temperature);
}

/// (1 - cos(w t)) / w^2, the double time integral of cos(w tau).
inline double double_time_integral(double w, double t) {
  const double x = 0.5 * w * t;
  if (std::abs(x) < 1e-4) return 0.5 * t * t * (1.0 - x * x / 3.0);
  const double s = std::sin(x) / w;
  return 2.0 * s * s;
}

struct PhononDecay {
  std::vector<double> times;
  std::vector<double> normalized;  // (1 - F) sqrt(beta) / (xi + 4 B0)^2
  std::vector<double> decay;       // 1 - F
  double temperature = 0.0;
  bool out_of_range = false;       // 1 - F exceeded 0.5
  double max_normalized() const {
    return normalized.empty() ? 0.0 : *std::max_element(normalized.begin(), normalized.end());
  }
};

namespace detail {
inline void check_coupling(double temperature) {
  if (temperature < 0.0) throw InvalidInput("temperature must be non-negative");
}

inline void finish(PhononDecay& d, const PhononModel& m, double coupling) {
  const double scale = coupling * coupling / std::sqrt(m.beta());
  d.decay.resize(d.normalized.size());
  for (std::size_t i = 0; i < d.normalized.size(); ++i) {
    d.decay[i] = scale * d.normalized[i];
    d.out_of_range = d.out_of_range || d.decay[i] > 0.5;
  }
}
}  // namespace detail

/// Phonon-induced loss from the one-excitation Dicke state. A phonon q is
/// emitted or absorbed together with a spin wave k = -q; each mode contributes
/// (g/N) [(n+1) h(omega_lambda - omega_k, t) + n h(omega_lambda + omega_k, t)].
inline PhononDecay gamma1_time(const PhononModel& m, double xi, double b0, double temperature,
                               std::span<const double> times) {
  detail::check_coupling(temperature);
  PhononDecay d;
  d.times.assign(times.begin(), times.end());
  d.temperature = temperature;
  d.normalized.assign(times.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(m.size());
  for (std::size_t q = 1; q < m.size(); ++q) {
    const double wk = m.spin_wave(m.grid().negated(q));
    for (int br = 0; br < m.branches(); ++br) {
      const double f = m.frequencies(q)[br];
      const double g = m.coupling_weight(q, br) * inv_n;
      const double n = bose_occupation(f, temperature);
      for (std::size_t i = 0; i < times.size(); ++i)
        d.normalized[i] += g * ((n + 1.0) * double_time_integral(f - wk, times[i]) +
                                n * double_time_integral(f + wk, times[i]));
    }
  }
  detail::finish(d, m, xi + 4.0 * b0);
  return d;
}

struct FgrRate {
  double rate = 0.0;        // units (xi + 4 B0)^2 / sqrt(beta), per hbar sqrt(beta) / U_dd
  bool resonant = false;    // a sign change of omega_lambda - omega_k was found on the grid
  double asymptote_1d = 0.0;  // sqrt(3 zeta(3)) / 4 * T, chains only
  double mean_width = 0.0;    // mean Gaussian width used for the deltas
};

/// pi (1/N) sum_{q,lambda} g [(n+1) delta(omega_lambda - omega_k) + n delta(omega_lambda + omega_k)]
/// with Gaussian deltas whose width is twice the local spacing of the argument on the grid.
inline FgrRate gamma1_fgr(const PhononModel& m, double temperature) {
  detail::check_coupling(temperature);
  const auto& grid = m.grid();
  const std::size_t nq = m.size();
  auto detuning = [&](std::size_t q, int br, double sign) {
    return m.frequencies(q)[br] + sign * m.spin_wave(grid.negated(q));
  };
  FgrRate out;
  std::size_t widths = 0;
  const double inv_n = 1.0 / static_cast<double>(nq);
  for (std::size_t q = 1; q < nq; ++q) {
    const Cell& idx = grid.index(q);
    const std::size_t nb[4] = {grid.flat(idx[0] + 1, idx[1]), grid.flat(idx[0] - 1, idx[1]),
                               grid.flat(idx[0], idx[1] + 1), grid.flat(idx[0], idx[1] - 1)};
    for (int br = 0; br < m.branches(); ++br) {
      const double g = m.coupling_weight(q, br) * inv_n;
      const double n = bose_occupation(m.frequencies(q)[br], temperature);
      for (double sign : {-1.0, 1.0}) {
        const double x = detuning(q, br, sign);
        double spacing = 0.0;
        for (std::size_t p : nb) {
          if (p == 0 || p == q) continue;
          const double y = detuning(p, br, sign);
          spacing = std::max(spacing, std::abs(y - x));
          if (sign < 0 && (x > 0) != (y > 0)) out.resonant = true;
        }
        const double sigma = std::max(2.0 * spacing, 1e-12);
        out.mean_width += sigma;
        ++widths;
        const double delta = std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * pi));
        out.rate += pi * g * (sign < 0 ? n + 1.0 : n) * delta;
      }
    }
  }
  if (widths) out.mean_width /= static_cast<double>(widths);
  if (m.lattice().kind() == LatticeKind::chain) out.asymptote_1d = std::sqrt(3.0 * zeta3) / 4.0 * temperature;
  return out;
}

struct TwoExcitationDecay {
  PhononDecay full;      // with the -4 xi / N exchange term
  PhononDecay dominant;  // (xi + 4 B0) terms only
  PhononDecay one;       // gamma1_time for the same inputs
};

/// Loss from the two-excitation Dicke state. Final states carry spin waves
/// (k, k') with k + k' = -q, summed over ordered pairs, with amplitude
/// (xi + 4 B0)(delta_{k,-q} delta_{k',0} + delta_{k',-q} delta_{k,0}) - 4 xi / N.
inline TwoExcitationDecay gamma2(const PhononModel& m, double xi, double b0, double temperature,
                                 std::span<const double> times) {
  detail::check_coupling(temperature);
  const auto& grid = m.grid();
  const std::size_t nq = m.size();
  const double c = xi + 4.0 * b0;
  const double exch = 4.0 * xi / static_cast<double>(nq);
  TwoExcitationDecay out;
  out.one = gamma1_time(m, xi, b0, temperature, times);
  // raw sums in units 1/sqrt(beta), converted to the normalized form at the end
  std::vector<double> full(times.size(), 0.0), dom(times.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(nq);
  for (std::size_t q = 1; q < nq; ++q) {
    const std::size_t mq = grid.negated(q);
    for (int br = 0; br < m.branches(); ++br) {
      const double f = m.frequencies(q)[br];
      const double g = m.coupling_weight(q, br) * inv_n;
      const double n = bose_occupation(f, temperature);
      for (std::size_t k = 0; k < nq; ++k) {
        // k + k' = -q
        const std::size_t kp = grid.add(mq, grid.negated(k));
        const bool dominant = (k == mq && kp == 0) || (kp == mq && k == 0);
        const double a_dom = dominant ? c : 0.0;
        const double a_full = a_dom - exch;
        if (a_full == 0.0 && a_dom == 0.0) continue;
        const double w = m.spin_wave(k) + m.spin_wave(kp);
        for (std::size_t i = 0; i < times.size(); ++i) {
          const double h = (n + 1.0) * double_time_integral(f - w, times[i]) + n * double_time_integral(f + w, times[i]);
          full[i] += g * a_full * a_full * h;
          dom[i] += g * a_dom * a_dom * h;
        }
      }
    }
  }
  for (PhononDecay* d : {&out.full, &out.dominant}) {
    d->times.assign(times.begin(), times.end());
    d->temperature = temperature;
  }
  const double norm = c == 0.0 ? 1.0 : 1.0 / (c * c);
  for (std::size_t i = 0; i < times.size(); ++i) {
    out.full.normalized.push_back(full[i] * norm);
    out.dominant.normalized.push_back(dom[i] * norm);
  }
  detail::finish(out.full, m, c == 0.0 ? 1.0 : c);
  detail::finish(out.dominant, m, c == 0.0 ? 1.0 : c);
  return out;
}

}  // namespace dipolar
