#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dipolar/config.hpp"
#include "dipolar/dynamics.hpp"
#include "dipolar/hamiltonian.hpp"
#include "dipolar/io.hpp"
#include "dipolar/lattice.hpp"
#include "dipolar/parallel.hpp"
#include "dipolar/phonon.hpp"
#include "dipolar/scaling.hpp"
#include "dipolar/spinwave.hpp"
#include "dipolar/stark.hpp"

#ifndef DIPOLAR_VERSION
#define DIPOLAR_VERSION "0.0.0"
#endif

namespace dipolar {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline constexpr const char* version = DIPOLAR_VERSION;

struct RunResult {
  std::string experiment;
  ordered_json metadata;
  ordered_json summary;
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  std::vector<std::string> warnings;
  bool gate_not_reached = false;
};

// ---------------------------------------------------------------------------
// catalogue

inline const std::vector<ExperimentSpec>& experiment_catalog() {
  using V = ValueType;
  static const std::vector<ExperimentSpec> specs = {
      {"phase_gate",
       "Dicke-state projections, nonlinear phase and gate time for one lattice",
       {{"kind", V::text, "chain", "lattice kind: chain, square or triangular"},
        {"n_sites", V::integer, std::nullopt, "number of molecules N"},
        {"boundary", V::text, "periodic", "open or periodic"},
        {"spacing", V::real, "1", "lattice spacing a (lengths are in units of a)"},
        {"kappa", V::real, "1", "exchange energy kappa (unit of energy)"},
        {"xi_over_kappa", V::real, "0", "Ising ratio xi/kappa; 0 selects the pure exchange Hamiltonian"},
        {"t_max", V::real, "4", "time window in units of t_pi"},
        {"n_times", V::integer, "400", "uniform time samples (refined automatically if Theta jumps)"},
        {"method", V::text, "auto", "evolution method: auto, dense or krylov"},
        {"max_dimension", V::integer, "1000000", "cap on any sector dimension"}}},
      {"mpm_sweep",
       "Gate time and leakage from the Dicke manifold versus xi/kappa",
       {{"kind", V::text, "chain", "lattice kind"},
        {"n_sites", V::integer, std::nullopt, "number of molecules N"},
        {"boundary", V::text, "periodic", "open or periodic"},
        {"kappa", V::real, "1", "exchange energy"},
        {"xi_over_kappa_values", V::real_list, "0.05, 0.1, 0.2", "Ising ratios to sweep"},
        {"t_max", V::real, "2", "window in units of t_pi(xi) for the gate search and the decay maximum"},
        {"n_times", V::integer, "400", "minimum number of time samples"},
        {"max_dimension", V::integer, "1000000", "cap on any sector dimension"}}},
      {"dispersion",
       "Single-excitation band on a periodic lattice and its small-k asymptotes",
       {{"kind", V::text, "chain", "lattice kind"},
        {"n_sites", V::integer, std::nullopt, "sites of the periodic lattice"},
        {"kappa", V::real, "1", "exchange energy"},
        {"asymptote_cutoff", V::real, "0", "lattice-sum radius for the infinite-lattice check; 0 uses the default"},
        {"ka_min", V::real, "0.001", "smallest ka in the asymptote check"},
        {"asymptote_points", V::integer, "8", "number of small-k points"}}},
      {"stark_sweep",
       "Dressed dipole moments and xi/kappa, B0, beta along a DC field grid",
       {{"molecule", V::text, "SrO", "SrO or custom"},
        {"b_rot_hz", V::real, "0", "rotational constant B/h in Hz (custom molecule)"},
        {"mu0_debye", V::real, "0", "permanent dipole moment in debye (custom molecule)"},
        {"mass_amu", V::real, "0", "molecular mass in amu (custom molecule)"},
        {"g_j", V::integer, "0", "J of the ground-state parent"},
        {"g_m", V::integer, "0", "M of the ground-state parent"},
        {"e_j", V::integer, "1", "J of the excited-state parent"},
        {"e_m", V::integer, "0", "M of the excited-state parent"},
        {"e_min", V::real, "0", "first field, units B/mu0"},
        {"e_max", V::real, "10", "last field, units B/mu0"},
        {"e_step", V::real, "0.01", "field step, units B/mu0"},
        {"spacing_nm", V::real, "500", "lattice spacing in nm"},
        {"j_max", V::integer, "20", "rotor basis truncation"}}},
      {"phonon_bands",
       "Phonon branches of the dipolar crystal",
       {{"kind", V::text, "chain", "chain or triangular"},
        {"n_sites", V::integer, std::nullopt, "sites of the periodic crystal"},
        {"beta", V::real, "100", "ratio of dipolar to kinetic energy"}}},
      {"phonon_decay",
       "Phonon-induced loss of the one- and two-excitation Dicke states",
       {{"kind", V::text, "chain", "chain or triangular"},
        {"n_sites", V::integer, std::nullopt, "sites of the periodic crystal"},
        {"kappa", V::real, "1", "exchange energy in units of U_dd"},
        {"xi", V::real, "0.1", "Ising energy in units of U_dd"},
        {"b0", V::real, "0.1", "B0 in units of U_dd"},
        {"beta", V::real, "100", "ratio of dipolar to kinetic energy"},
        {"temperature", V::real, "1", "k_B T in units of U_dd/sqrt(beta)"},
        {"t_max", V::real, "50", "final time in units of hbar sqrt(beta)/U_dd"},
        {"n_times", V::integer, "400", "uniform time samples"},
        {"gamma2", V::integer, "1", "1 to include the two-excitation sums"}}},
      {"scaling_fit",
       "Power-law fits of the maximum leakage versus N on chains and square lattices",
       {{"xi_over_kappa", V::real, "0.05", "Ising ratio for chains"},
        {"xi_over_kappa_2d", V::real, "1", "Ising ratio for square lattices"},
        {"sizes_1d", V::integer_list, "16, 25, 36, 49, 64, 81", "chain sizes"},
        {"sizes_2d", V::integer_list, "16, 25, 36, 49, 64, 81", "square lattice sizes"},
        {"window", V::real, "2", "window in units of t_pi for the decay maximum"}}},
  };
  return specs;
}

inline const ExperimentSpec& find_experiment(const std::string& name) {
  for (const auto& s : experiment_catalog())
    if (s.name == name) return s;
  throw ConfigError("[section]", "unknown experiment '" + name + "'");
}

inline RunConfig load_config_text(std::string_view text) {
  ConfigText t = parse_config_text(text);
  return RunConfig(find_experiment(t.section), std::move(t.entries));
}

inline RunConfig load_config(const std::string& path) { return load_config_text(read_file(path)); }

// ---------------------------------------------------------------------------
// shared helpers

namespace detail {

inline LatticeKind config_kind(const RunConfig& c) {
  try {
    return parse_lattice_kind(c.text("kind"));
  } catch (const InvalidInput& e) {
    throw ConfigError("kind", e.what());
  }
}

inline Boundary config_boundary(const RunConfig& c) {
  try {
    return parse_boundary(c.text("boundary"));
  } catch (const InvalidInput& e) {
    throw ConfigError("boundary", e.what());
  }
}

inline std::size_t config_sites(const RunConfig& c) {
  const long long n = c.integer("n_sites");
  if (n < 2) throw ConfigError("n_sites", "must be at least 2");
  return static_cast<std::size_t>(n);
}

// lattice construction errors are size rules, so they are charged to n_sites
inline Lattice config_lattice(LatticeKind kind, std::size_t n, double spacing, Boundary b) {
  try {
    return build_lattice(kind, n, spacing, b);
  } catch (const InvalidInput& e) {
    throw ConfigError("n_sites", e.what());
  }
}

inline json number_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

inline ordered_json config_echo(const std::vector<std::pair<std::string, std::string>>& kv) {
  ordered_json o = ordered_json::object();
  for (const auto& [k, v] : kv) o[k] = v;
  return o;
}

inline ordered_json base_conventions() {
  ordered_json c;
  c["units"] = "energies in kappa, hbar = 1, times in hbar/kappa, lengths in a";
  c["pair_sum"] = "ordered sums over i != j; exchange amplitude between sites i and j is 2 kappa d_ij";
  c["periodic_images"] = "minimum-image displacement";
  return c;
}

inline ordered_json dynamics_conventions() {
  ordered_json c = base_conventions();
  c["initial_weights"] = "(C0, C1, C2)(0) = (1, 1, 1)/sqrt(3); projections normalized by initial values";
  c["theta"] = "continuously unwrapped arg(C2* C1^2 C0*) = theta_2 - 2 theta_1 + theta_0";
  c["gate_time"] = "first sign change of cos(Theta/2), bisection to relative width 1e-4";
  c["t_pi"] = "pi / (2 chi), chi = chi_eff for xi = 0, else chi_tilde_eff = (xi/kappa) chi_eff";
  return c;
}

inline Trajectory gate_trajectory(DickeDynamics& dyn, double t_end, std::size_t n_times) {
  return phase_gate_trajectory(dyn, t_end, std::max<std::size_t>(n_times, 2));
}

inline EvolutionOptions config_method(const RunConfig& c) {
  EvolutionOptions o;
  const std::string m = c.text("method");
  if (m == "auto")
    o.method = EvolutionMethod::automatic;
  else if (m == "dense")
    o.method = EvolutionMethod::dense;
  else if (m == "krylov")
    o.method = EvolutionMethod::krylov;
  else
    throw ConfigError("method", "expected auto, dense or krylov, got '" + m + "'");
  return o;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// experiments

inline RunResult run_phase_gate(const RunConfig& c, std::size_t /*workers*/) {
  const LatticeKind kind = detail::config_kind(c);
  const std::size_t n = detail::config_sites(c);
  const Boundary bc = detail::config_boundary(c);
  const double spacing = c.positive_real("spacing");
  const double kappa = c.positive_real("kappa");
  const double ratio = c.real("xi_over_kappa");
  const double window = c.positive_real("t_max");
  const auto n_times = static_cast<std::size_t>(c.positive_integer("n_times"));
  const auto max_dim = static_cast<std::size_t>(c.positive_integer("max_dimension"));
  const EvolutionOptions opt = detail::config_method(c);

  const Lattice lat = detail::config_lattice(kind, n, spacing, bc);
  const bool exchange_only = ratio == 0.0;
  const double xi = ratio * kappa;
  EffectiveGateParams gp;
  try {
    gp = gate_params(lat, kappa, xi, exchange_only ? GateCoupling::exchange : GateCoupling::ising);
  } catch (const InvalidInput& e) {
    throw ConfigError("xi_over_kappa", e.what());
  }
  const SpinHamiltonian h = exchange_only ? build_vdd(lat, kappa, max_dim) : build_full(lat, kappa, xi, max_dim);
  DickeDynamics dyn(h, opt);
  Trajectory tr = detail::gate_trajectory(dyn, window * gp.t_pi, n_times);

  RunResult r;
  r.experiment = c.experiment();
  r.files.emplace_back("trajectory.csv", trajectory_table(tr).str());
  r.warnings = tr.warnings;
  r.gate_not_reached = !tr.gate_time;

  double max_abs_comb = 0.0;
  for (const auto& z : tr.combination) max_abs_comb = std::max(max_abs_comb, std::abs(z));
  ordered_json s;
  s["experiment"] = r.experiment;
  s["kind"] = std::string(to_string(kind));
  s["boundary"] = std::string(to_string(bc));
  s["n_sites"] = n;
  s["hamiltonian"] = exchange_only ? "exchange" : "heisenberg_plus_ising";
  s["chi_eff"] = gp.chi_eff;
  s["chi_tilde_eff"] = gp.chi_tilde_eff;
  s["t_pi"] = gp.t_pi;
  s["gate_time"] = detail::number_or_null(tr.gate_time);
  s["gate_time_over_t_pi"] = detail::number_or_null(tr.gate_time ? std::optional(*tr.gate_time / gp.t_pi) : std::nullopt);
  s["gate_reached"] = tr.gate_time.has_value();
  s["min_fidelity"] = 1.0 - tr.max_decay();
  s["fidelity_at_t_pi"] = std::norm(dyn.at(gp.t_pi).c2);
  s["max_abs_combination"] = max_abs_comb;
  s["time_samples"] = tr.size();
  s["sector_dimensions"] = {h.block(0).dimension(), h.block(1).dimension(), h.block(2).dimension()};
  s["vacuum_energy"] = h.vacuum_energy;
  // the ordered-pair reading gives Theta = 2 chi t; the closed form uses chi t
  ordered_json th;
  th["ordered_pairs_theta_at_t_pi"] = 2.0 * (exchange_only ? gp.chi_eff : gp.chi_tilde_eff) * gp.t_pi;
  if (kind != LatticeKind::triangular)
    th["closed_form_theta_at_t_pi"] = theta_analytic(kind, kappa, gp.t_pi, n) * (exchange_only ? 1.0 : ratio);
  s["theta_conventions"] = th;
  s["warnings"] = tr.warnings;
  r.summary = s;
  r.metadata["conventions"] = detail::dynamics_conventions();
  return r;
}

inline RunResult run_mpm_sweep(const RunConfig& c, std::size_t workers) {
  const LatticeKind kind = detail::config_kind(c);
  const std::size_t n = detail::config_sites(c);
  const Boundary bc = detail::config_boundary(c);
  const double kappa = c.positive_real("kappa");
  const std::vector<double> ratios = c.reals("xi_over_kappa_values");
  const double window = c.positive_real("t_max");
  const auto n_times = static_cast<std::size_t>(c.positive_integer("n_times"));
  const auto max_dim = static_cast<std::size_t>(c.positive_integer("max_dimension"));
  for (double x : ratios)
    if (!(x > 0.0)) throw ConfigError("xi_over_kappa_values", "every ratio must be positive");
  const Lattice lat = detail::config_lattice(kind, n, 1.0, bc);

  struct Point {
    double ratio, t_pi, gate, max_decay, f_tpi;
  };
  std::vector<Point> pts(ratios.size());
  std::vector<std::vector<std::string>> warns(ratios.size());
  parallel_for(ratios.size(), workers, [&](std::size_t i) {
    const double xi = ratios[i] * kappa;
    const auto gp = gate_params(lat, kappa, xi, GateCoupling::ising);
    const SpinHamiltonian h = build_full(lat, kappa, xi, max_dim);
    DickeDynamics dyn(h);
    const Trajectory tr = detail::gate_trajectory(dyn, window * gp.t_pi, n_times);
    const auto fine = resolving_times(window * gp.t_pi, dyn.spectral_span(2), n_times);
    const double md = dyn.spectral(2) ? dyn.projections(fine).max_decay() : tr.max_decay();
    pts[i] = {ratios[i], gp.t_pi, tr.gate_time ? *tr.gate_time / gp.t_pi : std::numeric_limits<double>::quiet_NaN(),
              md, std::norm(dyn.at(gp.t_pi).c2)};
    warns[i] = tr.warnings;
  });

  RunResult r;
  r.experiment = c.experiment();
  CsvTable t({"xi_over_kappa", "t_pi", "gate_time_over_t_pi", "max_decay", "fidelity_at_t_pi"});
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    t.add_row({p.ratio, p.t_pi, p.gate, p.max_decay, p.f_tpi});
    ordered_json row;
    row["xi_over_kappa"] = p.ratio;
    row["t_pi"] = p.t_pi;
    row["gate_time_over_t_pi"] = std::isnan(p.gate) ? json(nullptr) : json(p.gate);
    row["max_decay"] = p.max_decay;
    row["fidelity_at_t_pi"] = p.f_tpi;
    rows.push_back(row);
    for (const auto& w : warns[i]) r.warnings.push_back("xi/kappa=" + format_double(p.ratio) + ": " + w);
  }
  r.files.emplace_back("sweep.csv", t.str());
  r.summary["experiment"] = r.experiment;
  r.summary["kind"] = std::string(to_string(kind));
  r.summary["boundary"] = std::string(to_string(bc));
  r.summary["n_sites"] = n;
  r.summary["points"] = rows;
  r.summary["warnings"] = r.warnings;
  r.metadata["conventions"] = detail::dynamics_conventions();
  r.metadata["conventions"]["max_decay"] = "1 - min |C2|^2 over [0, t_max t_pi] on a grid resolving the n = 2 spectral width";
  return r;
}

inline RunResult run_dispersion(const RunConfig& c, std::size_t /*workers*/) {
  const LatticeKind kind = detail::config_kind(c);
  const std::size_t n = detail::config_sites(c);
  const double kappa = c.positive_real("kappa");
  const double cutoff = c.real("asymptote_cutoff");
  const double ka_min = c.positive_real("ka_min");
  const auto points = static_cast<std::size_t>(c.positive_integer("asymptote_points"));
  if (cutoff < 0) throw ConfigError("asymptote_cutoff", "must be non-negative");
  if (points < 3) throw ConfigError("asymptote_points", "need at least 3 points");
  const Lattice lat = detail::config_lattice(kind, n, 1.0, Boundary::periodic);
  const Dispersion d = dispersion(lat, kappa);

  RunResult r;
  r.experiment = c.experiment();
  CsvTable band({"m1", "m2", "kx", "ky", "omega", "fourier"});
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    const Vec2 k = d.grid.centered(i);
    band.add_row({double(d.grid.index(i)[0]), double(d.grid.index(i)[1]), k[0], k[1], d.omega[i], d.fourier[i]});
  }
  r.files.emplace_back("dispersion.csv", band.str());

  const AsymptoteReport rep = dispersion_asymptote_check(kind, kappa, ka_min, points, cutoff);
  CsvTable asym({"ka", "omega", "reference"});
  for (std::size_t i = 0; i < rep.ka.size(); ++i) asym.add_row({rep.ka[i], rep.omega[i], rep.reference[i]});
  r.files.emplace_back("asymptote.csv", asym.str());

  ordered_json s;
  s["experiment"] = r.experiment;
  s["kind"] = std::string(to_string(kind));
  s["n_sites"] = n;
  s["omega_max"] = *std::max_element(d.omega.begin(), d.omega.end());
  if (kind == LatticeKind::chain && n % 2 == 0) s["omega_zone_edge"] = d.omega[n / 2];
  if (kind == LatticeKind::chain) {
    s["small_k_max_relative_deviation"] = rep.max_relative_deviation;
  } else {
    s["small_k_slope"] = rep.slope;
    s["small_k_linearity_spread"] = rep.linearity_spread;
  }
  r.summary = s;
  r.metadata["conventions"] = detail::base_conventions();
  r.metadata["conventions"]["omega"] = "omega_k = 4 kappa sum_j d_0j sin^2(k.r_j/2), exchange-only band measured from k = 0";
  r.metadata["conventions"]["small_k_1d"] = "compared against kappa (3 - 2 ln ka)(ka)^2";
  r.metadata["conventions"]["infinite_lattice"] =
      "chain: direct sum to the cutoff plus averaged tail; 2D: disk sum plus continuum Bessel remainder";
  return r;
}

inline RunResult run_stark_sweep(const RunConfig& c, std::size_t workers) {
  MolecularParams mol;
  const std::string name = c.text("molecule");
  if (name == "SrO") {
    // nonzero overrides replace individual SrO values
    mol = strontium_oxide();
    if (c.real("b_rot_hz") > 0) mol.b_rot_hz = c.real("b_rot_hz");
    if (c.real("mu0_debye") > 0) mol.mu0_debye = c.real("mu0_debye");
    if (c.real("mass_amu") > 0) mol.mass_amu = c.real("mass_amu");
  } else if (name == "custom") {
    mol = {"custom", c.positive_real("b_rot_hz"), c.positive_real("mu0_debye"), c.positive_real("mass_amu")};
  } else {
    throw ConfigError("molecule", "expected SrO or custom, got '" + name + "'");
  }
  const RotorLabel g{static_cast<int>(c.integer("g_j")), static_cast<int>(c.integer("g_m"))};
  const RotorLabel e{static_cast<int>(c.integer("e_j")), static_cast<int>(c.integer("e_m"))};
  if (g.j < std::abs(g.m)) throw ConfigError("g_j", "J must be at least |M|");
  if (e.j < std::abs(e.m)) throw ConfigError("e_j", "J must be at least |M|");
  if (g.m != e.m) throw ConfigError("e_m", "the pair must share M");
  if (g.j == e.j) throw ConfigError("e_j", "the pair labels must differ");
  const double e_min = c.real("e_min"), e_max = c.real("e_max"), e_step = c.positive_real("e_step");
  if (e_min < 0) throw ConfigError("e_min", "must be non-negative");
  if (!(e_max >= e_min)) throw ConfigError("e_max", "must be at least e_min");
  const double spacing = c.positive_real("spacing_nm") * 1e-9;
  const long long j_max = c.integer("j_max");
  if (j_max < min_j_max) throw ConfigError("j_max", "must be at least " + std::to_string(min_j_max));
  if (std::max(g.j, e.j) + 4 > j_max) throw ConfigError("j_max", "too small for the requested labels");

  const auto count = static_cast<std::size_t>(std::llround((e_max - e_min) / e_step)) + 1;
  std::vector<double> fields(count);
  for (std::size_t i = 0; i < count; ++i) fields[i] = e_min + e_step * static_cast<double>(i);
  std::vector<DressedPair> rows(count);
  parallel_for(count, workers, [&](std::size_t i) {
    rows[i] = dressed_pair(mol, fields[i], g, e, spacing, static_cast<int>(j_max));
  });

  RunResult r;
  r.experiment = c.experiment();
  CsvTable t({"field", "mu_gg", "mu_ee", "mu_eg", "xi_over_kappa", "b0_reduced", "kappa_hz", "xi_hz", "b0_hz",
              "u_dd_hz", "beta"});
  t.comment("molecule " + mol.name + " B/h=" + format_double(mol.b_rot_hz) + " Hz mu0=" +
            format_double(mol.mu0_debye) + " D mass=" + format_double(mol.mass_amu) + " amu");
  t.comment("pair g=" + to_string(g) + " e=" + to_string(e) + " J_max=" + std::to_string(j_max) +
            " spacing=" + format_double(spacing) + " m");
  t.comment("field in B/mu0, dipoles in mu0, b0_reduced = mu_ee^2 - mu_gg^2 in mu0^2 / (8 pi eps0 a^3)");
  t.comment("U_dd = mu_gg^2 / (4 pi eps0 a^3); beta = U_dd m a^2 / hbar^2");
  double max_jump = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& p = rows[i];
    t.add_row({p.field, p.mu_gg, p.mu_ee, p.mu_eg, p.xi_over_kappa, p.b0_reduced, p.kappa_hz, p.xi_hz, p.b0_hz,
               p.u_dd_hz, p.beta});
    if (i) max_jump = std::max(max_jump, std::abs(p.xi_over_kappa - rows[i - 1].xi_over_kappa));
  }
  r.files.emplace_back("stark_sweep.csv", t.str());
  auto minmax = std::minmax_element(rows.begin(), rows.end(),
                                    [](const auto& a, const auto& b) { return a.xi_over_kappa < b.xi_over_kappa; });
  ordered_json s;
  s["experiment"] = r.experiment;
  s["molecule"] = mol.name;
  s["pair"] = {to_string(g), to_string(e)};
  s["points"] = count;
  s["xi_over_kappa_first"] = rows.front().xi_over_kappa;
  s["xi_over_kappa_min"] = minmax.first->xi_over_kappa;
  s["field_at_min"] = minmax.first->field;
  s["xi_over_kappa_max"] = minmax.second->xi_over_kappa;
  s["max_adjacent_jump"] = max_jump;
  s["field_unit_v_per_m"] = mol.field_unit_si();
  r.summary = s;
  ordered_json conv;
  conv["units"] = "field in B/mu0, dipole moments in mu0, energies in Hz (E/h)";
  conv["labels"] = "dressed states labelled by their zero-field parent |J,M>, continuity in the field";
  conv["dipole_operator"] = "z component only";
  conv["u_dd"] = "mu_gg^2 / (4 pi eps0 a^3) at the operating field";
  conv["kappa"] = "mu_eg^2 / (8 pi eps0 a^3)";
  conv["xi"] = "(mu_eg^2 - (mu_ee - mu_gg)^2 / 2) / (8 pi eps0 a^3)";
  conv["b0"] = "(mu_ee^2 - mu_gg^2) / (8 pi eps0 a^3)";
  r.metadata["conventions"] = conv;
  return r;
}

namespace detail {
inline LatticeKind phonon_kind(const RunConfig& c) {
  const LatticeKind k = config_kind(c);
  if (k == LatticeKind::square) throw ConfigError("kind", "phonon experiments take chain or triangular");
  return k;
}

inline ordered_json phonon_conventions() {
  ordered_json conv;
  conv["units"] = "frequencies f in U_dd/sqrt(beta), times in hbar sqrt(beta)/U_dd, k_B T in U_dd/sqrt(beta)";
  conv["dynamical_matrix"] = "D(q) = sum_R 3 (5 n n^T - I) / |R|^5 (1 - cos q.R), minimum-image R";
  conv["u_dd"] = "mu_gg^2 / (4 pi eps0 a^3)";
  return conv;
}
}  // namespace detail

inline RunResult run_phonon_bands(const RunConfig& c, std::size_t /*workers*/) {
  const LatticeKind kind = detail::phonon_kind(c);
  const std::size_t n = detail::config_sites(c);
  const double beta = c.positive_real("beta");
  const Lattice lat = detail::config_lattice(kind, n, 1.0, Boundary::periodic);
  const PhononModel m(lat, beta, 0.0);
  const PhononBands b = phonon_spectrum(m);

  RunResult r;
  r.experiment = c.experiment();
  std::vector<std::string> header{"m1", "m2", "qx", "qy"};
  for (int br = 0; br < m.branches(); ++br) header.push_back("f" + std::to_string(br + 1));
  CsvTable t(header);
  double f_max = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::vector<double> row{double(m.grid().index(i)[0]), double(m.grid().index(i)[1]), b.q[i][0], b.q[i][1]};
    for (double f : b.f[i]) {
      row.push_back(f);
      f_max = std::max(f_max, f);
    }
    t.add_row(row);
  }
  r.files.emplace_back("bands.csv", t.str());
  ordered_json s;
  s["experiment"] = r.experiment;
  s["kind"] = std::string(to_string(kind));
  s["n_sites"] = n;
  s["branches"] = m.branches();
  s["sound_speeds"] = b.sound_speed;
  s["f_max"] = f_max;
  s["f_at_q0"] = b.f[0];
  if (kind == LatticeKind::chain && n % 2 == 0) s["f_zone_edge"] = b.f[n / 2][0];
  r.summary = s;
  r.metadata["conventions"] = detail::phonon_conventions();
  return r;
}

inline RunResult run_phonon_decay(const RunConfig& c, std::size_t /*workers*/) {
  const LatticeKind kind = detail::phonon_kind(c);
  const std::size_t n = detail::config_sites(c);
  const double kappa = c.real("kappa");
  if (kappa < 0) throw ConfigError("kappa", "must be non-negative");
  const double xi = c.real("xi"), b0 = c.real("b0");
  const double beta = c.positive_real("beta");
  const double temp = c.real("temperature");
  if (temp < 0) throw ConfigError("temperature", "must be non-negative");
  const double t_max = c.positive_real("t_max");
  const auto n_times = static_cast<std::size_t>(c.positive_integer("n_times"));
  if (n_times < 2) throw ConfigError("n_times", "need at least 2 samples");
  const bool with_two = c.integer("gamma2") != 0;
  const Lattice lat = detail::config_lattice(kind, n, 1.0, Boundary::periodic);
  const PhononModel m(lat, beta, kappa);
  const auto times = uniform_times(t_max, n_times);

  RunResult r;
  r.experiment = c.experiment();
  const PhononDecay one = gamma1_time(m, xi, b0, temp, times);
  std::optional<TwoExcitationDecay> two;
  if (with_two) two = gamma2(m, xi, b0, temp, times);
  std::vector<std::string> header{"t", "normalized_1", "decay_1"};
  if (two) header.insert(header.end(), {"normalized_2_full", "normalized_2_dominant", "decay_2_full"});
  CsvTable t(header);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row{times[i], one.normalized[i], one.decay[i]};
    if (two) row.insert(row.end(), {two->full.normalized[i], two->dominant.normalized[i], two->full.decay[i]});
    t.add_row(row);
  }
  r.files.emplace_back("decay.csv", t.str());

  const FgrRate fgr = gamma1_fgr(m, temp);
  ordered_json s;
  s["experiment"] = r.experiment;
  s["kind"] = std::string(to_string(kind));
  s["n_sites"] = n;
  s["magnon_scale"] = m.magnon_scale();
  s["max_normalized_1"] = one.max_normalized();
  s["final_normalized_1"] = one.normalized.back();
  s["fgr_rate"] = fgr.rate;
  s["fgr_resonance_found"] = fgr.resonant;
  s["fgr_mean_width"] = fgr.mean_width;
  if (kind == LatticeKind::chain) s["fgr_asymptote_1d"] = fgr.asymptote_1d;
  if (!fgr.resonant) r.warnings.push_back("no resonance omega_lambda = omega_k on the grid; FGR rate is broadening-limited");
  if (two) {
    const double base = one.normalized.back();
    s["gamma2_dominant_over_gamma1"] = base > 0 ? two->dominant.normalized.back() / base : 0.0;
    s["gamma2_full_over_gamma1"] = base > 0 ? two->full.normalized.back() / base : 0.0;
    if (two->full.out_of_range) r.warnings.push_back("two-excitation decay exceeds 0.5; beyond perturbation theory");
  }
  if (one.out_of_range) r.warnings.push_back("one-excitation decay exceeds 0.5; beyond perturbation theory");
  s["warnings"] = r.warnings;
  r.summary = s;
  ordered_json conv = detail::phonon_conventions();
  conv["normalization"] = "normalized = (1 - F) sqrt(beta) / (xi + 4 B0)^2";
  conv["pairing"] = "(n+1) with omega_lambda - omega_k, n with omega_lambda + omega_k; spin wave k = -q";
  conv["magnon_scale"] = "spin-wave band in U_dd/sqrt(beta) is kappa sqrt(beta) times the kappa = 1 band";
  conv["fgr_deltas"] = "Gaussian, width twice the local grid spacing of the detuning";
  conv["gamma2_final_states"] = "ordered spin-wave pairs (k, k') with k + k' = -q";
  r.metadata["conventions"] = conv;
  return r;
}

inline RunResult run_scaling_fit(const RunConfig& c, std::size_t workers) {
  const double x1 = c.positive_real("xi_over_kappa");
  const double x2 = c.positive_real("xi_over_kappa_2d");
  const double window = c.positive_real("window");
  auto sizes = [&](const char* key, LatticeKind kind) {
    std::vector<std::size_t> out;
    for (long long v : c.integers(key)) {
      if (v < 2) throw ConfigError(key, "sizes must be at least 2");
      if (kind == LatticeKind::square && detail::exact_sqrt(static_cast<std::size_t>(v)) == 0)
        throw ConfigError(key, "square lattice sizes must be perfect squares");
      out.push_back(static_cast<std::size_t>(v));
    }
    if (out.size() < 3) throw ConfigError(key, "need at least 3 sizes");
    return out;
  };
  const auto s1 = sizes("sizes_1d", LatticeKind::chain);
  const auto s2 = sizes("sizes_2d", LatticeKind::square);

  struct Job {
    LatticeKind kind;
    std::size_t n;
    double ratio;
    double exact = 0, pert = 0;
  };
  std::vector<Job> jobs;
  for (auto n : s1) jobs.push_back({LatticeKind::chain, n, x1});
  for (auto n : s2) jobs.push_back({LatticeKind::square, n, x2});
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    Job& j = jobs[i];
    j.exact = exact_decay(j.kind, j.n, j.ratio, window).max_decay;
    const Lattice lat(j.kind, j.n, 1.0, Boundary::periodic);
    const auto gp = gate_params(lat, 1.0, j.ratio, GateCoupling::ising);
    const Dispersion d = dispersion(lat, 1.0);
    const auto times = resolving_times(window * gp.t_pi, *std::max_element(d.omega.begin(), d.omega.end()));
    const DecayCurve curve = perturbative_decay2(d, j.ratio, times);
    j.pert = *std::max_element(curve.decay.begin(), curve.decay.end());
  });

  auto fit_of = [&](LatticeKind kind, bool exact) {
    std::vector<double> xs, ys;
    for (const auto& j : jobs)
      if (j.kind == kind) {
        xs.push_back(static_cast<double>(j.n));
        ys.push_back(exact ? j.exact : j.pert);
      }
    return fit_power_law(xs, ys);
  };
  const PowerLawFit e1 = fit_of(LatticeKind::chain, true), e2 = fit_of(LatticeKind::square, true);
  const PowerLawFit p1 = fit_of(LatticeKind::chain, false), p2 = fit_of(LatticeKind::square, false);

  RunResult r;
  r.experiment = c.experiment();
  CsvTable t({"dimension", "n_sites", "xi_over_kappa", "max_decay_exact", "max_decay_perturbative"});
  for (const auto& j : jobs)
    t.add_row({j.kind == LatticeKind::chain ? 1.0 : 2.0, double(j.n), j.ratio, j.exact, j.pert});
  r.files.emplace_back("scaling.csv", t.str());
  ordered_json s;
  s["experiment"] = r.experiment;
  s["alpha_1d"] = e1.exponent;
  s["alpha_2d"] = e2.exponent;
  s["prefactor_1d"] = e1.prefactor;
  s["prefactor_2d"] = e2.prefactor;
  s["prefactor_1d_over_xi2"] = e1.prefactor / (x1 * x1);
  s["prefactor_2d_over_xi2"] = e2.prefactor / (x2 * x2);
  s["fit_residuals"] = {{"1d", e1.residuals}, {"2d", e2.residuals}};
  s["grid_sizes"] = {{"1d", s1}, {"2d", s2}};
  s["perturbative"] = {{"alpha_1d", p1.exponent}, {"alpha_2d", p2.exponent},
                       {"prefactor_1d", p1.prefactor}, {"prefactor_2d", p2.prefactor}};
  r.summary = s;
  r.metadata["conventions"] = detail::dynamics_conventions();
  r.metadata["conventions"]["lattices"] = "periodic chains and square lattices";
  r.metadata["conventions"]["max_decay"] = "1 - min |C2|^2 over [0, window t_pi(chi_tilde_eff)]";
  r.metadata["conventions"]["fit"] = "least squares on ln(max_decay) versus ln N";
  r.metadata["conventions"]["perturbative_k_sum"] =
      "one representative per +-k pair weighted by its multiplicity, k = 0 excluded";
  return r;
}

// ---------------------------------------------------------------------------
// dispatch

inline RunResult run_experiment(const RunConfig& c, std::size_t workers = 1) {
  RunResult r;
  const std::string& e = c.experiment();
  if (e == "phase_gate")
    r = run_phase_gate(c, workers);
  else if (e == "mpm_sweep")
    r = run_mpm_sweep(c, workers);
  else if (e == "dispersion")
    r = run_dispersion(c, workers);
  else if (e == "stark_sweep")
    r = run_stark_sweep(c, workers);
  else if (e == "phonon_bands")
    r = run_phonon_bands(c, workers);
  else if (e == "phonon_decay")
    r = run_phonon_decay(c, workers);
  else if (e == "scaling_fit")
    r = run_scaling_fit(c, workers);
  else
    throw ConfigError("[section]", "unknown experiment '" + e + "'");

  ordered_json meta;
  meta["experiment"] = e;
  meta["version"] = version;
  meta["config"] = detail::config_echo(c.given());
  meta["resolved_config"] = detail::config_echo(c.resolved());
  meta["conventions"] = r.metadata.value("conventions", ordered_json::object());
  meta["outputs"] = ordered_json::array();
  for (const auto& f : r.files) meta["outputs"].push_back(f.first);
  meta["warnings"] = r.warnings;
  r.metadata = meta;
  return r;
}

/// Writes data files, metadata.json and summary.json into `dir` (created if needed).
inline void write_run(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : r.files) write_text_file(dir / name, content);
  write_text_file(dir / "metadata.json", r.metadata.dump(2) + "\n");
  write_text_file(dir / "summary.json", r.summary.dump(2) + "\n");
}

}  // namespace dipolar
