// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Usage: acceptance [--expect-fail 2,4,...]
// Exit status is 0 when the set of failing criteria equals the expected set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dipolar/experiments.hpp"
#include "dipolar/symmetry.hpp"

using namespace dipolar;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "MISS ") + what);
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Lattice periodic_chain(std::size_t n) { return Lattice(LatticeKind::chain, n, 1.0, Boundary::periodic); }

Eigen::VectorXcd random_state(Eigen::Index n, unsigned seed) {
  std::srand(seed);
  Eigen::VectorXcd v = Eigen::VectorXcd::Random(n);
  return v / v.norm();
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Lattice lat = periodic_chain(36);
  const auto gp = gate_params(lat, 1.0, 0.0, GateCoupling::exchange);
  const auto h = build_vdd(lat, 1.0);
  DickeDynamics dyn(h);
  const auto tr = phase_gate_trajectory(dyn, 4 * gp.t_pi, 400);
  const double elapsed = seconds_since(t0);
  const double ratio = tr.gate_time ? *tr.gate_time / gp.t_pi : -1.0;
  o.check(tr.gate_time && std::abs(ratio - 3.5) <= 0.5, fmt("N=36 first zero of |cos(Theta/2)| at t/t_pi = %.4f (3.5 +- 0.5)", ratio));
  o.check(elapsed < 60.0, fmt("N=36 runtime %.2f s (< 60 s)", elapsed));

  const Lattice big = periodic_chain(81);
  const auto gb = gate_params(big, 1.0, 0.0, GateCoupling::exchange);
  const auto hb = build_vdd(big, 1.0);
  DickeDynamics db(hb);
  const auto tb = phase_gate_trajectory(db, 12 * gb.t_pi, 1200);
  double distortion = 0.0;
  for (std::size_t i = 0; i < tb.size(); ++i)
    if (tb.times[i] <= gb.t_pi) distortion = std::max(distortion, std::abs(tb.theta[i] - 2 * gb.chi_eff * tb.times[i]));
  const double rb = tb.gate_time ? *tb.gate_time / gb.t_pi : -1.0;
  o.check(tb.gate_time && rb > 1.0, fmt("N=81 first zero at t/t_pi = %.4f (beyond t_pi)", rb));
  o.check(distortion > 0.1, fmt("N=81 max |Theta - 2 chi_eff t| on [0, t_pi] = %.3f rad (distorted)", distortion));
  o.lines.push_back(fmt("info N=81 min F over [0, 4 t_pi] = %.4f", 1.0 - [&] {
    double m = 0;
    for (std::size_t i = 0; i < tb.size(); ++i)
      if (tb.times[i] <= 4 * gb.t_pi) m = std::max(m, 1.0 - tb.fidelity[i]);
    return m;
  }()));
  return o;
}

Outcome criterion2() {
  Outcome o;
  double f_tpi[2];
  const std::size_t sizes[2] = {36, 81};
  for (int i = 0; i < 2; ++i) {
    const Lattice lat = periodic_chain(sizes[i]);
    const auto gp = gate_params(lat, 1.0, 0.05, GateCoupling::ising);
    const auto h = build_full(lat, 1.0, 0.05);
    DickeDynamics dyn(h);
    const auto tr = phase_gate_trajectory(dyn, 2 * gp.t_pi, 800);
    const double r = tr.gate_time ? *tr.gate_time / gp.t_pi : -1.0;
    f_tpi[i] = std::norm(dyn.at(gp.t_pi).c2);
    o.check(tr.gate_time && std::abs(r - 1.0) <= 0.15,
            fmt("N=%.0f gate time / t_pi(chi_tilde) = %.4f (within 15%%)", double(sizes[i]), r));
  }
  o.check(f_tpi[1] < f_tpi[0], fmt("F(t_pi): N=36 %.5f > N=81 %.5f", f_tpi[0], f_tpi[1]));
  return o;
}

Outcome criterion3() {
  Outcome o;
  for (std::size_t n : {36u, 81u}) {
    const Lattice lat = periodic_chain(n);
    const auto gp = gate_params(lat, 1.0, 0.0, GateCoupling::exchange);
    const auto h = build_vdd(lat, 1.0);
    const auto tr = dicke_projections(h, uniform_times(4 * gp.t_pi, 400));
    double dev = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i)
      dev = std::max({dev, std::abs(std::norm(tr.c0[i]) - 1.0), std::abs(std::norm(tr.c1[i]) - 1.0)});
    o.check(dev <= 1e-10, fmt("N=%.0f max |F - 1| for |0>, |1> over [0, 4 t_pi] = %.2e (<= 1e-10)", double(n), dev));
  }
  return o;
}

struct Scaling {
  PowerLawFit fit;
  std::vector<double> decay;
  double seconds = 0;
};

Scaling exact_fit(LatticeKind kind, double ratio) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::size_t> sizes{16, 25, 36, 49, 64, 81};
  const auto rep = exact_scaling_fit(kind, ratio, sizes, 2.0);
  return {rep.fit, rep.max_decay, seconds_since(t0)};
}

std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? " " : "") << fmt("%.5f", v[i]);
  return s.str();
}

Outcome criterion4() {
  Outcome o;
  const double xi = 0.05;
  const auto s = exact_fit(LatticeKind::chain, xi);
  o.lines.push_back("info max decay over [0, 2 t_pi], N = 16..81: " + join(s.decay));
  o.check(std::abs(s.fit.exponent - 1.62) <= 0.35, fmt("exponent %.3f (1.62 +- 0.35)", s.fit.exponent));
  const double factor = s.fit.prefactor / (0.01 * xi * xi);
  o.check(factor <= 3.0 && factor >= 1.0 / 3.0,
          fmt("prefactor %.3e = %.2f x 0.01 xi^2/kappa^2 (within factor 3)", s.fit.prefactor, factor));
  o.check(s.seconds < 600.0, fmt("runtime %.1f s (< 600 s)", s.seconds));
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto s = exact_fit(LatticeKind::square, 1.0);
  o.lines.push_back("info max decay over [0, 2 t_pi], N = 16..81: " + join(s.decay));
  o.check(s.fit.exponent < 0.0, fmt("exponent %.3f is negative", s.fit.exponent));
  o.check(std::abs(s.fit.exponent + 0.86) <= 0.4, fmt("exponent %.3f (-0.86 +- 0.4)", s.fit.exponent));
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto sq = dispersion_asymptote_check(LatticeKind::square, 1.0, 1e-3, 8);
  o.check(std::abs(sq.slope / 3.27 - 1.0) <= 0.02,
          fmt("2D small-k slope %.4f kappa a (3.27 +- 2%%), linearity spread %.1e", sq.slope, sq.linearity_spread));
  const auto ch = dispersion_asymptote_check(LatticeKind::chain, 1.0, 1e-3, 8);
  o.check(ch.max_relative_deviation <= 0.05,
          fmt("1D max relative deviation from kappa(3 - 2 ln ka)(ka)^2 for ka in [1e-3, 0.05]: %.2e", ch.max_relative_deviation));
  const double edge = dispersion_infinite(LatticeKind::chain, 1.0, {pi, 0.0});
  o.check(std::abs(edge / (7 * zeta3) - 1.0) <= 0.01, fmt("1D zone edge %.6f vs 7 zeta(3) = %.6f", edge, 7 * zeta3));
  const Dispersion d = dispersion(periodic_chain(400), 1.0);
  o.check(std::abs(d.omega[200] / (7 * zeta3) - 1.0) <= 0.01, fmt("N=400 ring zone edge %.6f", d.omega[200]));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const double xi = 0.05;
  const ExactDecay exact = exact_decay(LatticeKind::chain, 36, xi, 2.0);
  const DecayCurve pert = perturbative_decay2(periodic_chain(36), 1.0, xi, exact.times);
  double run_e = 0, run_p = 0, worst = 1.0;
  bool small = true;
  for (std::size_t i = 1; i < exact.times.size(); ++i) {
    run_e = std::max(run_e, 1.0 - exact.fidelity[i]);
    run_p = std::max(run_p, pert.decay[i]);
    small = small && run_e <= 0.05 && run_p <= 0.05;
    if (run_e > 1e-12 && run_p > 1e-12) worst = std::max({worst, run_p / run_e, run_e / run_p});
  }
  o.check(small, fmt("both curves <= 0.05 on [0, 2 t_pi] (max exact %.4f, perturbative %.4f)", run_e, run_p));
  o.check(worst <= 2.0, fmt("running-maximum envelope ratio worst case %.3f (<= 2)", worst));
  const std::vector<double> at{0.0, exact.t_pi};
  const double p_tpi = perturbative_decay2(periodic_chain(36), 1.0, xi, at).decay.back();
  const double e_tpi = 1.0 - exact.fidelity_at_tpi;
  const double r = std::max(p_tpi / e_tpi, e_tpi / p_tpi);
  o.check(r <= 2.0, fmt("at t_pi: exact %.5f, perturbative %.5f, ratio %.3f", e_tpi, p_tpi, r));
  return o;
}

Outcome criterion8() {
  Outcome o;
  for (auto [g, e] : {std::pair<RotorLabel, RotorLabel>{{0, 0}, {1, 0}}, {{1, 0}, {2, 0}}}) {
    const double x0 = dressed_pair(0.0, g, e).xi_over_kappa;
    const double x1 = dressed_pair(1e-4, g, e).xi_over_kappa;
    o.check(std::abs(x0 - 1.0) <= 1e-6 && std::abs(x1 - 1.0) <= 1e-6,
            "pair " + to_string(g) + "-" + to_string(e) + fmt(": xi/kappa(E=0) - 1 = %.1e, at E=1e-4: %.1e", x0 - 1.0, x1 - 1.0));
  }
  double hf = 0.0, conv = 0.0;
  const double h = 1e-4;
  for (double f : {0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0}) {
    const auto r = rotor_eigensystem(f, 0);
    const auto rp = rotor_eigensystem(f + h, 0), rm = rotor_eigensystem(f - h, 0);
    for (int j : {0, 1, 2}) hf = std::max(hf, std::abs(r.dipole(j, j) + (rp.energy(j) - rm.energy(j)) / (2 * h)));
    for (auto [g, e] : {std::pair<RotorLabel, RotorLabel>{{0, 0}, {1, 0}}, {{1, 0}, {2, 0}}}) {
      const auto a = dressed_pair(f, g, e, 20), b = dressed_pair(f, g, e, 24);
      conv = std::max({conv, std::abs(a.mu_gg - b.mu_gg), std::abs(a.mu_ee - b.mu_ee), std::abs(a.mu_eg - b.mu_eg),
                       std::abs(a.xi_over_kappa - b.xi_over_kappa)});
    }
  }
  o.check(hf <= 1e-6, fmt("Hellmann-Feynman max |<cos> + dE/dF| = %.1e (<= 1e-6)", hf));
  o.check(conv <= 1e-8, fmt("J_max 20 vs 24 max change = %.1e (<= 1e-8)", conv));
  return o;
}

double ring_energy(std::size_t n, double eps) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) + eps * (i % 2 ? -1.0 : 1.0);
  const double len = static_cast<double>(n);
  double u = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double r = std::abs(x[j] - x[i]);
      r = std::min(r, len - r);
      u += 1.0 / (r * r * r);
    }
  return u;
}

Outcome criterion9() {
  Outcome o;
  const PhononModel chain(periodic_chain(400), 100.0, 1.0);
  const PhononModel tri(Lattice(LatticeKind::triangular, 144, 1.0, Boundary::periodic), 100.0, 1.0);
  double f0 = 0.0;
  for (const PhononModel* m : {&chain, &tri})
    for (int b = 0; b < m->branches(); ++b) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m->dynamical_matrix(Vec2{0.0, 0.0}));
      f0 = std::max(f0, std::sqrt(std::max(0.0, es.eigenvalues()[b])));
      f0 = std::max(f0, m->frequencies(0)[b]);
    }
  o.check(f0 <= 1e-10, fmt("max f(q=0) = %.1e (<= 1e-10)", f0));
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 1; i <= 10; ++i) {
    const double r = chain.frequencies(i)[0] / chain.grid().centered(i)[0];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  o.check(hi / lo - 1.0 <= 0.03, fmt("1D f/q spread over the smallest |q| decade %.2e (<= 3%%)", hi / lo - 1.0));
  const std::size_t n = 36;
  const PhononModel ring(periodic_chain(n), 100.0, 1.0);
  const double eps = 1e-4;
  const double oracle =
      std::sqrt((ring_energy(n, eps) + ring_energy(n, -eps) - 2 * ring_energy(n, 0.0)) / (eps * eps) / double(n));
  const double rel = std::abs(ring.frequencies(n / 2)[0] / oracle - 1.0);
  o.check(rel <= 1e-6, fmt("1D zone edge f = %.8f vs Hessian oracle %.8f, rel %.1e", ring.frequencies(n / 2)[0], oracle, rel));
  return o;
}

Outcome criterion10() {
  Outcome o;
  const double beta = 100.0, kappa = 1.0, xi = 0.1, b0 = 0.1;
  const auto times = uniform_times(50.0, 400);
  const PhononModel c36(periodic_chain(36), beta, kappa), c81(periodic_chain(81), beta, kappa);
  const auto g2 = gamma2(c36, xi, b0, 1.0, times);
  double worst = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i)
    worst = std::max(worst, std::abs(g2.dominant.normalized[i] / g2.one.normalized[i] - 2.0));
  o.check(worst <= 1e-12, fmt("gamma2 dominant / gamma1 - 2: max %.1e", worst));
  const double ra = gamma1_fgr(c81, 100.0).rate, rb = gamma1_fgr(c81, 200.0).rate;
  o.check(ra > 0 && std::abs(rb / ra / 2.0 - 1.0) <= 0.05, fmt("1D FGR rate(T=200) / rate(T=100) = %.4f (2 +- 5%%)", rb / ra));
  const auto ta = gamma1_time(c81, xi, b0, 100.0, times), tb = gamma1_time(c81, xi, b0, 200.0, times);
  const double rt = tb.normalized.back() / ta.normalized.back();
  o.check(std::abs(rt / 2.0 - 1.0) <= 0.05, fmt("1D decay at t=50, T=200 vs T=100 ratio %.4f (2 +- 5%%)", rt));
  const double m36 = gamma1_time(c36, xi, b0, 1.0, times).max_normalized();
  const double m81 = gamma1_time(c81, xi, b0, 1.0, times).max_normalized();
  o.check(m81 > m36, fmt("1D normalized max decay N=36 %.4f < N=81 %.4f", m36, m81));
  std::vector<double> rates;
  for (std::size_t n : {36u, 144u, 576u})
    rates.push_back(gamma1_fgr(PhononModel(Lattice(LatticeKind::triangular, n, 1.0, Boundary::periodic), beta, kappa), 1.0).rate);
  o.check(rates[1] < rates[0] && rates[2] < rates[1],
          fmt("2D FGR rate L=6, 12, 24: %.4f %.4f %.4f (decreasing)", rates[0], rates[1], rates[2]));
  return o;
}

// full 2^N matrix, written independently of the sector code
Eigen::MatrixXd brute_force(const Lattice& lat, double hop, double zz) {
  const std::size_t n = lat.size(), dim = std::size_t{1} << n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(Eigen::Index(dim), Eigen::Index(dim));
  for (std::size_t x = 0; x < dim; ++x)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double r = lat.distance(i, j), d = 1.0 / (r * r * r);
        const bool bi = (x >> i) & 1u, bj = (x >> j) & 1u;
        h(Eigen::Index(x), Eigen::Index(x)) += zz * d * (bi == bj ? 1.0 : -1.0);
        if (bi != bj) h(Eigen::Index(x ^ ((std::size_t{1} << i) | (std::size_t{1} << j))), Eigen::Index(x)) += hop * d;
      }
  return h;
}

Outcome criterion11() {
  Outcome o;
  const auto h = build_full(Lattice(LatticeKind::chain, 30, 1.0, Boundary::open), 1.0, 0.1);
  const auto& b = h.block(2);
  const Eigen::VectorXcd psi0 = random_state(Eigen::Index(b.dimension()), 17);
  EvolutionOptions kry;
  kry.method = EvolutionMethod::krylov;
  const double e0 = b.expectation(psi0);
  double unit = 0, energy = 0;
  for (const auto& s : evolve(b, psi0, uniform_times(30.0, 7), kry)) {
    unit = std::max(unit, std::abs(s.norm() - 1.0));
    energy = std::max(energy, std::abs(b.expectation(s) / e0 - 1.0));
  }
  o.check(unit <= 1e-10, fmt("unitarity max |norm - 1| = %.1e (<= 1e-10)", unit));
  o.check(energy <= 1e-9, fmt("energy max relative drift = %.1e (<= 1e-9)", energy));

  double brute = 0.0;
  for (std::size_t n : {2u, 3u, 4u})
    for (auto kind : {LatticeKind::chain, LatticeKind::square}) {
      if (kind == LatticeKind::square && n != 4) continue;
      const Lattice lat(kind, n, 1.0, Boundary::open);
      const auto hf = build_full(lat, 1.0, 0.3);
      const Eigen::MatrixXd full = brute_force(lat, 2.0, 0.7);
      for (std::size_t s = 0; s < 3; ++s) {
        const auto& blk = hf.block(s);
        std::vector<Eigen::Index> mask(blk.dimension());
        for (std::size_t k = 0; k < blk.dimension(); ++k)
          for (auto site : blk.basis().config(k)) mask[k] |= Eigen::Index{1} << site;
        const Eigen::MatrixXd mine = blk.to_dense();
        for (std::size_t r = 0; r < mask.size(); ++r)
          for (std::size_t c = 0; c < mask.size(); ++c)
            brute = std::max(brute, std::abs(mine(Eigen::Index(r), Eigen::Index(c)) - full(mask[r], mask[c])));
      }
    }
  o.check(brute <= 1e-13, fmt("brute-force 2^N sector blocks, N <= 4: max deviation %.1e", brute));

  const auto h2 = build_full(Lattice(LatticeKind::square, 25, 1.0, Boundary::periodic), 1.0, 0.2);
  const Eigen::VectorXcd p2 = random_state(Eigen::Index(h2.block(2).dimension()), 23);
  const KrylovPropagator<SectorOperator> prop(h2.block(2));
  const double rt = (prop.propagate(prop.propagate(p2, 9.0), -9.0) - p2).norm();
  o.check(rt <= 1e-8, fmt("time-reversal round trip error %.1e (<= 1e-8)", rt));

  bool same = true;
  for (const char* text : {"[phase_gate]\nn_sites = 36\n", "[mpm_sweep]\nn_sites = 25\n",
                           "[stark_sweep]\ne_max = 4\ne_step = 0.1\n", "[phonon_decay]\nn_sites = 36\n"}) {
    const auto cfg = load_config_text(text);
    const auto a = run_experiment(cfg, 1), c = run_experiment(cfg, 2);
    for (std::size_t i = 0; i < a.files.size(); ++i) same = same && a.files[i].second == c.files[i].second;
    same = same && a.summary.dump() == c.summary.dump() && a.metadata.dump() == c.metadata.dump();
  }
  o.check(same, "re-runs byte-identical across worker counts (4 experiments)");
  return o;
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--expect-fail" && i + 1 < argc) expected = parse_list(argv[++i]);
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exchange gate time, N=36 and N=81 chains", criterion1},
      {"protected-manifold gate time, N=36 and N=81", criterion2},
      {"exact protection of |0> and |1>", criterion3},
      {"1D leakage scaling fit", criterion4},
      {"2D leakage scaling fit", criterion5},
      {"spin-wave dispersion asymptotes", criterion6},
      {"perturbative versus exact leakage", criterion7},
      {"Stark limits and convergence", criterion8},
      {"phonon bands", criterion9},
      {"phonon-induced decay", criterion10},
      {"property suite", criterion11},
  };
  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) failed.insert(id);
    std::printf("%s criterion %d: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, seconds_since(t0));
    for (const auto& l : o.lines) std::printf("    %s\n", l.c_str());
    std::fflush(stdout);
  }
  std::printf("\n%zu of %zu criteria pass\n", criteria.size() - failed.size(), criteria.size());
  bool ok = true;
  for (int id : failed)
    if (!expected.count(id)) {
      std::printf("unexpected failure: criterion %d\n", id);
      ok = false;
    }
  for (int id : expected)
    if (!failed.count(id)) {
      std::printf("criterion %d was expected to fail but passes; update the expected list\n", id);
      ok = false;
    }
  if (!expected.empty()) {
    std::printf("known failing criteria:");
    for (int id : expected) std::printf(" %d", id);
    std::printf("\n");
  }
  return ok ? 0 : 1;
}
