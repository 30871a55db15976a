#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "dipolar/constants.hpp"
#include "dipolar/error.hpp"

namespace dipolar {

/// Rigid-rotor molecule. Energies below are in units of the rotational
/// constant B, fields in B / mu0 and dipole moments in mu0 unless stated.
struct MolecularParams {
  std::string name;
  double b_rot_hz = 0.0;    // B / h
  double mu0_debye = 0.0;   // permanent dipole moment
  double mass_amu = 0.0;

  void validate() const {
    if (!(b_rot_hz > 0.0) || !(mu0_debye > 0.0) || !(mass_amu > 0.0))
      throw InvalidInput("molecular parameters must be positive");
  }
  double b_rot_joule() const { return si::planck * b_rot_hz; }
  double mu0_si() const { return mu0_debye * si::debye; }
  double mass_kg() const { return mass_amu * si::amu; }
  /// Field strength in V/m corresponding to one unit of B / mu0.
  double field_unit_si() const { return b_rot_joule() / mu0_si(); }
};

inline MolecularParams strontium_oxide() { return {"SrO", 10.13e9, 8.89, 103.9}; }

/// Rotor level |J, M> (zero-field parent of a dressed state).
struct RotorLabel {
  int j = 0;
  int m = 0;
};

inline std::string to_string(const RotorLabel& l) {
  return "|" + std::to_string(l.j) + "," + std::to_string(l.m) + ">";
}

/// <J+1, M| cos(theta) |J, M>
inline double cos_theta_element(int j, int m) {
  const double jj = j, mm = m;
  return std::sqrt(((jj + 1) * (jj + 1) - mm * mm) / ((2 * jj + 1) * (2 * jj + 3)));
}

inline constexpr int min_j_max = 8;
inline constexpr int default_j_max = 20;

/// Eigensystem of H = J(J+1) - E cos(theta) within one M block, basis J = |M| .. J_max.
/// Eigenvalues come out ascending; the tridiagonal block has no level crossings,
/// so the i-th state is adiabatically connected to |J = |M| + i, M>.
struct RotorEigensystem {
  double field = 0.0;
  int m = 0;
  int j_max = 0;
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns; row r is basis state J = |M| + r
  Eigen::MatrixXd cos_theta;

  int j_min() const { return std::abs(m); }
  Eigen::Index index_of(int j) const {
    if (j < j_min() || j > j_max) throw InvalidInput("rotor label J out of range");
    return j - j_min();
  }
  auto state(int j) const { return vectors.col(index_of(j)); }
  double energy(int j) const { return values[index_of(j)]; }
  double dipole(int j_a, int j_b) const { return state(j_a).dot(cos_theta * state(j_b)); }
  double top_weight(int j) const {
    const double w = state(j)[vectors.rows() - 1];
    return w * w;
  }
};

inline RotorEigensystem rotor_eigensystem(double field, int m, int j_max = default_j_max, int checked_states = 3) {
  if (j_max < min_j_max) throw InvalidInput("J_max must be at least " + std::to_string(min_j_max));
  if (field < 0.0) throw InvalidInput("field must be non-negative");
  if (std::abs(m) > j_max) throw InvalidInput("|M| exceeds J_max");
  RotorEigensystem r;
  r.field = field;
  r.m = m;
  r.j_max = j_max;
  const int n = j_max - std::abs(m) + 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  r.cos_theta = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = std::abs(m) + i;
    h(i, i) = j * (j + 1.0);
    if (i + 1 < n) r.cos_theta(i, i + 1) = r.cos_theta(i + 1, i) = cos_theta_element(j, m);
  }
  h -= field * r.cos_theta;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("rotor eigendecomposition failed");
  r.values = es.eigenvalues();
  r.vectors = es.eigenvectors();
  for (int i = 0; i < n; ++i) {
    // fix the sign so each state overlaps its parent positively
    if (r.vectors(i, i) < 0) r.vectors.col(i) *= -1.0;
    if (i + 1 < n && r.values[i + 1] - r.values[i] < 1e-9)
      throw NumericalError("near-degenerate rotor levels at field " + std::to_string(field) +
                           "; adiabatic labels are ambiguous");
  }
  for (int i = 0; i < std::min(checked_states, n); ++i) {
    const int j = std::abs(m) + i;
    if (r.top_weight(j) > 1e-8)
      throw NumericalError("rotor basis truncated too early: state J=" + std::to_string(j) +
                           " has weight " + std::to_string(r.top_weight(j)) + " on J_max=" + std::to_string(j_max) +
                           " at field " + std::to_string(field));
  }
  return r;
}

/// Two dressed rotor states used as |g> and |e>, and the resulting
/// interaction parameters for molecules a distance `spacing_m` apart.
struct DressedPair {
  double field = 0.0;  // B / mu0
  RotorLabel g, e;
  double mu_gg = 0.0, mu_ee = 0.0, mu_eg = 0.0;  // units mu0
  double xi_over_kappa = 1.0;
  double b0_reduced = 0.0;  // mu_ee^2 - mu_gg^2, i.e. B0 in units mu0^2 / (8 pi eps0 a^3)
  // physical values, present when molecule and spacing are given
  double spacing_m = 0.0;
  double kappa_hz = 0.0, xi_hz = 0.0, b0_hz = 0.0, u_dd_hz = 0.0;
  double beta = 0.0;
};

/// xi / kappa = 1 - (mu_ee - mu_gg)^2 / (2 mu_eg^2)
inline double xi_over_kappa(double mu_gg, double mu_ee, double mu_eg) {
  if (mu_eg == 0.0) throw NumericalError("vanishing transition dipole; xi / kappa undefined");
  const double d = mu_ee - mu_gg;
  return 1.0 - d * d / (2.0 * mu_eg * mu_eg);
}

/// beta = U_dd m a^2 / hbar^2 with U_dd = mu_gg^2 / (4 pi eps0 a^3); mu_gg in units mu0.
inline double beta_parameter(const MolecularParams& mol, double mu_gg, double spacing_m) {
  if (!(spacing_m > 0.0)) throw InvalidInput("spacing must be positive");
  const double mu = mu_gg * mol.mu0_si();
  const double u_dd = mu * mu / (4.0 * pi * si::epsilon0 * spacing_m * spacing_m * spacing_m);
  return u_dd * mol.mass_kg() * spacing_m * spacing_m / (si::hbar * si::hbar);
}

inline DressedPair dressed_pair(double field, RotorLabel g, RotorLabel e, int j_max = default_j_max) {
  if (g.m != e.m) throw InvalidInput("dressed pair labels must share M");
  if (g.j == e.j) throw InvalidInput("dressed pair labels must differ");
  const int hi = std::max(g.j, e.j) - std::abs(g.m) + 1;
  const RotorEigensystem r = rotor_eigensystem(field, g.m, j_max, hi);
  DressedPair p;
  p.field = field;
  p.g = g;
  p.e = e;
  p.mu_gg = r.dipole(g.j, g.j);
  p.mu_ee = r.dipole(e.j, e.j);
  p.mu_eg = r.dipole(e.j, g.j);
  p.xi_over_kappa = xi_over_kappa(p.mu_gg, p.mu_ee, p.mu_eg);
  p.b0_reduced = p.mu_ee * p.mu_ee - p.mu_gg * p.mu_gg;
  return p;
}

/// Adds kappa, xi, B0, U_dd (all as frequencies E / h) and beta for a molecule and spacing.
inline DressedPair dressed_pair(const MolecularParams& mol, double field, RotorLabel g, RotorLabel e,
                                double spacing_m, int j_max = default_j_max) {
  mol.validate();
  if (!(spacing_m > 0.0)) throw InvalidInput("spacing must be positive");
  DressedPair p = dressed_pair(field, g, e, j_max);
  const double mu0 = mol.mu0_si();
  const double unit = mu0 * mu0 / (8.0 * pi * si::epsilon0 * spacing_m * spacing_m * spacing_m) / si::planck;
  p.spacing_m = spacing_m;
  p.kappa_hz = p.mu_eg * p.mu_eg * unit;
  p.xi_hz = (p.mu_eg * p.mu_eg - 0.5 * (p.mu_ee - p.mu_gg) * (p.mu_ee - p.mu_gg)) * unit;
  p.b0_hz = p.b0_reduced * unit;
  p.u_dd_hz = 2.0 * p.mu_gg * p.mu_gg * unit;
  p.beta = beta_parameter(mol, p.mu_gg, spacing_m);
  return p;
}

/// Dressed-pair parameters along a field grid (must be ascending).
inline std::vector<DressedPair> xi_kappa_sweep(const std::vector<double>& fields, RotorLabel g, RotorLabel e,
                                               int j_max = default_j_max) {
  for (std::size_t i = 1; i < fields.size(); ++i)
    if (!(fields[i] > fields[i - 1])) throw InvalidInput("field grid must be strictly ascending");
  std::vector<DressedPair> out;
  out.reserve(fields.size());
  for (double f : fields) out.push_back(dressed_pair(f, g, e, j_max));
  return out;
}

}  // namespace dipolar
