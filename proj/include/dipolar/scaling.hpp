#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "dipolar/dynamics.hpp"
#include "dipolar/fit.hpp"
#include "dipolar/hamiltonian.hpp"
#include "dipolar/lattice.hpp"
#include "dipolar/spinwave.hpp"

namespace dipolar {

struct ExactDecay {
  std::size_t n_sites = 0;
  double t_pi = 0.0;
  double max_decay = 0.0;      // 1 - min F over the window
  double fidelity_at_tpi = 0.0;
  std::vector<double> times;
  std::vector<double> fidelity;
};

/// 1 - min F(t) over [0, window * t_pi(chi_tilde_eff)] for the full Hamiltonian
/// at kappa = 1 on a periodic lattice. The grid resolves the spectral width of
/// the n = 2 sector, or uses `min_samples` when it is evolved by stepping.
inline ExactDecay exact_decay(LatticeKind kind, std::size_t n_sites, double xi_over_kappa, double window = 2.0,
                              std::size_t min_samples = 2000, const EvolutionOptions& opt = {}) {
  const Lattice lat(kind, n_sites, 1.0, Boundary::periodic);
  const auto gp = gate_params(lat, 1.0, xi_over_kappa, GateCoupling::ising);
  const SpinHamiltonian h = build_full(lat, 1.0, xi_over_kappa);
  DickeDynamics dyn(h, opt);
  const auto times = resolving_times(window * gp.t_pi, dyn.spectral_span(2), min_samples);
  const Trajectory tr = dyn.projections(times);
  ExactDecay out;
  out.n_sites = n_sites;
  out.t_pi = gp.t_pi;
  out.max_decay = tr.max_decay();
  out.fidelity_at_tpi = std::norm(dyn.at(gp.t_pi).c2);
  out.times = tr.times;
  out.fidelity = tr.fidelity;
  return out;
}

/// Power-law fit of the exact maximum decay over several lattice sizes.
inline ScalingReport exact_scaling_fit(LatticeKind kind, double xi_over_kappa, std::span<const std::size_t> sizes,
                                       double window = 2.0) {
  if (sizes.size() < 3) throw InvalidInput("scaling fit needs at least 3 lattice sizes");
  ScalingReport rep;
  rep.kind = kind;
  rep.xi_over_kappa = xi_over_kappa;
  rep.window = window;
  std::vector<double> xs;
  for (std::size_t n : sizes) {
    rep.sizes.push_back(n);
    rep.max_decay.push_back(exact_decay(kind, n, xi_over_kappa, window).max_decay);
    xs.push_back(static_cast<double>(n));
  }
  rep.fit = fit_power_law(xs, rep.max_decay);
  return rep;
}

}  // namespace dipolar
