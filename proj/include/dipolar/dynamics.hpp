#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dipolar/basis.hpp"
#include "dipolar/constants.hpp"
#include "dipolar/evolution.hpp"
#include "dipolar/hamiltonian.hpp"
#include "dipolar/symmetry.hpp"

namespace dipolar {

/// Normalized Dicke projections C_n(t) = <n|psi(t)> / <n|psi(0)>.
struct DickeProjection {
  Complex c0{1.0, 0.0};
  Complex c1{1.0, 0.0};
  Complex c2{1.0, 0.0};
};

struct Trajectory {
  std::vector<double> times;  // units hbar / kappa
  std::vector<Complex> c0, c1, c2;
  std::vector<double> fidelity;  // |C2|^2
  std::vector<double> theta;     // nonlinear phase, unwrapped, radians
  std::vector<double> cos_half;  // cos(theta / 2)
  std::vector<Complex> combination;  // (C0* C2 + (C0* C1)^2) / 2
  std::vector<std::string> warnings;
  std::optional<double> gate_time;

  std::size_t size() const { return times.size(); }

  double max_decay() const {
    double m = 0.0;
    for (double f : fidelity) m = std::max(m, 1.0 - f);
    return m;
  }
};

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * pi);
  return a;
}

/// arg(C2* C1^2 C0*) = theta_2 - 2 theta_1 + theta_0 modulo 2 pi.
inline double phase_combination(const DickeProjection& p) {
  return std::arg(std::conj(p.c2) * p.c1 * p.c1 * std::conj(p.c0));
}

/// Evolves the Dicke states |0>, |1>, |2> under each sector block of a spin
/// Hamiltonian. The sectors decouple, so each is propagated on its own.
class DickeDynamics {
 public:
  /// Initial superposition weights (C0, C1, C2)(0); only their nonzero-ness matters.
  static constexpr std::array<double, 3> initial_weights = {0.57735026918962576, 0.57735026918962576,
                                                            0.57735026918962576};

  explicit DickeDynamics(const SpinHamiltonian& h, EvolutionOptions opt = {}) : h_(&h), opt_(opt) {
    for (std::size_t n = 0; n < 3; ++n) {
      const SectorOperator& block = h.block(n);
      dicke_[n] = dicke_state(block.basis_ptr()).amplitudes * initial_weights[n];
      if (use_dense(block.dimension(), opt_)) {
        const DenseSpectrum spec(block.to_dense());
        values_[n] = spec.values();
        weights_[n] = spec.weights(dicke_[n]);
        spectral_[n] = true;
      } else if (opt_.reduced_dimension_limit > 0) {
        // the Dicke state never leaves the span of the equitable-partition classes
        if (auto q = equitable_quotient(block, opt_.reduced_dimension_limit)) {
          const DenseSpectrum spec(q->matrix);
          values_[n] = spec.values();
          weights_[n] = spec.weights(q->restrict_uniform(dicke_[n]).cast<Complex>());
          spectral_[n] = true;
        }
      }
    }
  }

  /// True when sector n is evaluated from a spectral measure rather than by stepping.
  bool spectral(std::size_t n) const { return spectral_[n]; }

  /// Width of the spectral measure of sector n (0 when it is not spectral).
  double spectral_span(std::size_t n) const {
    if (!spectral_[n] || values_[n].size() == 0) return 0.0;
    return values_[n].maxCoeff() - values_[n].minCoeff();
  }

  /// Projections at arbitrary time. Krylov sectors restart from the latest
  /// checkpoint recorded by `projections` that lies at or before t.
  DickeProjection at(double t) const {
    std::array<Complex, 3> c;
    for (std::size_t n = 0; n < 3; ++n) {
      if (spectral_[n]) {
        c[n] = DenseSpectrum::return_amplitude(values_[n], weights_[n], t);
      } else {
        std::size_t best = 0;
        bool found = false;
        for (std::size_t i = 0; i < check_times_.size(); ++i)
          if (check_times_[i] <= t && (!found || check_times_[i] >= check_times_[best])) {
            best = i;
            found = true;
          }
        Eigen::VectorXcd psi = found ? checkpoints_[n][best] : dicke_[n];
        const double t0 = found ? check_times_[best] : 0.0;
        const KrylovPropagator<SectorOperator> prop(h_->block(n), opt_.krylov_tolerance, opt_.krylov_dimension);
        if (t != t0) psi = prop.propagate(psi, t - t0);
        c[n] = dicke_[n].dot(psi);
      }
      c[n] /= initial_weights[n] * initial_weights[n];
    }
    return {c[0], c[1], c[2]};
  }

  /// C_n(t) and F(t) = |C2(t)|^2 on a time grid (must start at 0, ascending).
  Trajectory projections(std::span<const double> times) {
    if (times.empty() || times.front() != 0.0) throw InvalidInput("time grid must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw InvalidInput("time grid must be strictly ascending");
    Trajectory tr;
    tr.times.assign(times.begin(), times.end());
    std::array<std::vector<Complex>, 3> c;
    check_times_.assign(times.begin(), times.end());
    for (std::size_t n = 0; n < 3; ++n) {
      c[n].resize(times.size());
      checkpoints_[n].clear();
      if (spectral_[n]) {
        for (std::size_t i = 0; i < times.size(); ++i)
          c[n][i] = DenseSpectrum::return_amplitude(values_[n], weights_[n], times[i]) /
                    (initial_weights[n] * initial_weights[n]);
        continue;
      }
      const auto states = evolve(h_->block(n), dicke_[n] / initial_weights[n], times, opt_);
      for (std::size_t i = 0; i < times.size(); ++i) {
        const Eigen::VectorXcd scaled = states[i] * initial_weights[n];
        c[n][i] = dicke_[n].dot(scaled) / (initial_weights[n] * initial_weights[n]);
        checkpoints_[n].push_back(scaled);
      }
    }
    tr.c0 = std::move(c[0]);
    tr.c1 = std::move(c[1]);
    tr.c2 = std::move(c[2]);
    tr.fidelity.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) tr.fidelity[i] = std::norm(tr.c2[i]);
    return tr;
  }

  const SpinHamiltonian& hamiltonian() const { return *h_; }

 private:
  const SpinHamiltonian* h_;
  EvolutionOptions opt_;
  std::array<Eigen::VectorXcd, 3> dicke_;
  std::array<bool, 3> spectral_{false, false, false};
  std::array<Eigen::VectorXd, 3> values_;
  std::array<Eigen::VectorXd, 3> weights_;
  std::vector<double> check_times_;
  std::array<std::vector<Eigen::VectorXcd>, 3> checkpoints_;
};

inline Trajectory dicke_projections(const SpinHamiltonian& h, std::span<const double> times,
                                    const EvolutionOptions& opt = {}) {
  DickeDynamics dyn(h, opt);
  return dyn.projections(times);
}

/// Fills theta, cos_half and the raw combination. Returns the largest
/// per-sample phase increment, which callers compare against pi/2.
inline double nonlinear_phase(Trajectory& tr) {
  const std::size_t n = tr.size();
  tr.theta.assign(n, 0.0);
  tr.cos_half.assign(n, 1.0);
  tr.combination.assign(n, Complex{});
  double max_jump = 0.0;
  double worst_excess = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const DickeProjection p{tr.c0[i], tr.c1[i], tr.c2[i]};
    const Complex c0s = std::conj(p.c0);
    tr.combination[i] = 0.5 * (c0s * p.c2 + (c0s * p.c1) * (c0s * p.c1));
    worst_excess = std::max(worst_excess, std::abs(tr.combination[i]) - 1.0);
    const double phi = phase_combination(p);
    if (i == 0) {
      tr.theta[0] = phi;
    } else {
      const double step = wrap_angle(phi - prev);
      max_jump = std::max(max_jump, std::abs(step));
      tr.theta[i] = tr.theta[i - 1] + step;
    }
    prev = phi;
    tr.cos_half[i] = std::cos(0.5 * tr.theta[i]);
  }
  if (worst_excess > 1e-6)
    tr.warnings.push_back("|C0* C2 + (C0* C1)^2| / 2 exceeds 1 by " + std::to_string(worst_excess) +
                          "; the phase combination is not a cosine there");
  return max_jump;
}

/// First root of cos(theta/2): sign-change bracket on the samples, then
/// bisection with fresh evaluations down to a relative width `rel_tol`.
inline std::optional<double> gate_time(const DickeDynamics& dyn, const Trajectory& tr, double rel_tol = 1e-4) {
  for (std::size_t i = 1; i < tr.size(); ++i) {
    if (tr.cos_half[i] == 0.0) return tr.times[i];
    if ((tr.cos_half[i - 1] > 0.0) == (tr.cos_half[i] > 0.0)) continue;
    double lo = tr.times[i - 1], hi = tr.times[i];
    const double theta_lo = tr.theta[i - 1];
    const double phi_lo = phase_combination({tr.c0[i - 1], tr.c1[i - 1], tr.c2[i - 1]});
    const bool lo_positive = tr.cos_half[i - 1] > 0.0;
    auto value = [&](double t) {
      const double th = theta_lo + wrap_angle(phase_combination(dyn.at(t)) - phi_lo);
      return std::cos(0.5 * th);
    };
    while (hi - lo > rel_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      if ((value(mid) > 0.0) == lo_positive)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

inline std::vector<double> uniform_times(double t_max, std::size_t n_samples) {
  if (n_samples < 2) throw InvalidInput("need at least 2 time samples");
  std::vector<double> t(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i)
    t[i] = t_max * static_cast<double>(i) / static_cast<double>(n_samples - 1);
  return t;
}

/// Projections plus phase extraction, doubling the sampling density until
/// no per-sample phase increment exceeds pi/2, then locating the gate time.
inline Trajectory phase_gate_trajectory(DickeDynamics& dyn, double t_max, std::size_t n_samples,
                                        int max_refinements = 6) {
  Trajectory tr;
  for (int r = 0;; ++r) {
    tr = dyn.projections(uniform_times(t_max, n_samples));
    const double jump = nonlinear_phase(tr);
    if (jump <= 0.5 * pi) break;
    if (r == max_refinements) {
      tr.warnings.push_back("phase increment per sample still above pi/2 after refinement");
      break;
    }
    n_samples = 2 * n_samples - 1;
  }
  tr.gate_time = gate_time(dyn, tr);
  return tr;
}

}  // namespace dipolar
