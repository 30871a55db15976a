#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "dipolar/basis.hpp"
#include "dipolar/constants.hpp"
#include "dipolar/error.hpp"
#include "dipolar/lattice.hpp"

namespace dipolar {

/// Excitation-conserving operator on one sector: a diagonal plus single-excitation
/// hopping J_ij between configurations that differ by moving one excitation i -> j.
/// Applied matrix-free; `to_dense()` materializes it for small sectors.
class SectorOperator {
 public:
  SectorOperator() = default;
  SectorOperator(std::shared_ptr<const SectorBasis> basis, Eigen::VectorXd diagonal,
                 std::shared_ptr<const Eigen::MatrixXd> hopping = nullptr)
      : basis_(std::move(basis)), diagonal_(std::move(diagonal)), hopping_(std::move(hopping)) {
    if (static_cast<std::size_t>(diagonal_.size()) != basis_->dimension())
      throw InvalidInput("diagonal length does not match sector dimension");
    if (hopping_ && (static_cast<std::size_t>(hopping_->rows()) != basis_->n_sites() ||
                     hopping_->rows() != hopping_->cols()))
      throw InvalidInput("hopping matrix must be N x N");
  }

  std::size_t dimension() const { return basis_->dimension(); }
  const SectorBasis& basis() const { return *basis_; }
  const std::shared_ptr<const SectorBasis>& basis_ptr() const { return basis_; }
  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  const Eigen::MatrixXd* hopping() const { return hopping_.get(); }

  /// y = H x
  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    y = diagonal_.cwiseProduct(x);
    if (!hopping_) return;
    for_each_hop([&](std::size_t from, std::size_t to, double amp) { y[to] += amp * x[from]; });
  }

  Eigen::MatrixXd to_dense() const {
    const auto dim = static_cast<Eigen::Index>(dimension());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    h.diagonal() = diagonal_;
    if (hopping_)
      for_each_hop([&](std::size_t from, std::size_t to, double amp) {
        h(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) += amp;
      });
    return h;
  }

  double expectation(const Eigen::VectorXcd& psi) const {
    Eigen::VectorXcd hpsi;
    apply(psi, hpsi);
    return psi.dot(hpsi).real();
  }

  SectorOperator with_diagonal(Eigen::VectorXd diagonal) const {
    return SectorOperator(basis_, std::move(diagonal), hopping_);
  }

  /// Calls f(from, to, amplitude) for every off-diagonal element H[to, from].
  template <class F>
  void for_each_hop(F&& f) const {
    if (!hopping_) return;
    const SectorBasis& b = *basis_;
    const Eigen::MatrixXd& j = *hopping_;
    const std::size_t n = b.n_sites();
    const std::size_t k = b.n_exc();
    if (k == 0 || k == n) return;
    if (k == 2) {
      for (std::size_t idx = 0; idx < b.dimension(); ++idx) {
        const auto c = b.config(idx);
        const std::uint32_t sites[2] = {c[0], c[1]};
        for (int moved = 0; moved < 2; ++moved) {
          const std::uint32_t from_site = sites[moved];
          const std::uint32_t kept = sites[1 - moved];
          const double* col = j.data() + static_cast<std::ptrdiff_t>(from_site) * j.rows();
          for (std::uint32_t r = 0; r < n; ++r) {
            if (r == sites[0] || r == sites[1]) continue;
            const double amp = col[r];
            if (amp == 0.0) continue;
            const std::uint32_t lo = std::min(r, kept), hi = std::max(r, kept);
            const std::size_t to = static_cast<std::size_t>(hi) * (hi - 1) / 2 + lo;
            f(idx, to, amp);
          }
        }
      }
      return;
    }
    std::vector<std::uint32_t> scratch(k);
    std::vector<char> occupied(n, 0);
    for (std::size_t idx = 0; idx < b.dimension(); ++idx) {
      const auto c = b.config(idx);
      for (auto s : c) occupied[s] = 1;
      for (std::size_t p = 0; p < k; ++p) {
        for (std::uint32_t r = 0; r < n; ++r) {
          if (occupied[r]) continue;
          const double amp = j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c[p]));
          if (amp == 0.0) continue;
          std::size_t w = 0;
          bool placed = false;
          for (std::size_t q = 0; q < k; ++q) {
            if (q == p) continue;
            if (!placed && r < c[q]) {
              scratch[w++] = r;
              placed = true;
            }
            scratch[w++] = c[q];
          }
          if (!placed) scratch[w++] = r;
          f(idx, b.rank(scratch), amp);
        }
      }
      for (auto s : c) occupied[s] = 0;
    }
  }

 private:
  std::shared_ptr<const SectorBasis> basis_;
  Eigen::VectorXd diagonal_;
  std::shared_ptr<const Eigen::MatrixXd> hopping_;
};

/// Dipolar spin Hamiltonian restricted to the n = 0, 1, 2 excitation sectors.
/// Energies in units of kappa, hbar = 1. Pair sums over i != j are ordered, so
/// the physical exchange amplitude between sites i and j is 2 kappa d_ij.
struct SpinHamiltonian {
  double kappa = 0.0;
  double xi = 0.0;
  std::size_t n_sites = 0;
  std::shared_ptr<const CouplingKernel> kernel;
  std::array<SectorOperator, 3> blocks;
  /// Energy of the all-ground configuration (the n = 0 block entry).
  double vacuum_energy = 0.0;

  const SectorOperator& block(std::size_t n) const {
    if (n > 2) throw InvalidInput("only sectors n = 0, 1, 2 are represented");
    return blocks[n];
  }
};

namespace detail {

/// sum_{i<j} d_ij s_i s_j with s = +1 on excited sites and -1 elsewhere.
inline Eigen::VectorXd zz_pattern(const SectorBasis& basis, const Eigen::MatrixXd& d) {
  const double pair_sum = 0.5 * d.sum();
  const Eigen::VectorXd row = d.rowwise().sum();
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis.dimension()));
  for (std::size_t idx = 0; idx < basis.dimension(); ++idx) {
    const auto c = basis.config(idx);
    double flipped = 0.0;
    for (std::size_t p = 0; p < c.size(); ++p) {
      flipped += row[c[p]];
      for (std::size_t q = p + 1; q < c.size(); ++q) flipped -= 2.0 * d(c[p], c[q]);
    }
    out[static_cast<Eigen::Index>(idx)] = pair_sum - 2.0 * flipped;
  }
  return out;
}

inline std::array<std::shared_ptr<const SectorBasis>, 3> sectors(std::size_t n_sites, std::size_t max_dim) {
  return {sector_basis(n_sites, 0, max_dim), sector_basis(n_sites, 1, max_dim),
          sector_basis(n_sites, std::min<std::size_t>(2, n_sites), max_dim)};
}

inline SpinHamiltonian assemble(const Lattice& lattice, double kappa, double xi, double hop_scale,
                                double zz_weight, std::size_t max_dim) {
  auto kernel = std::make_shared<const CouplingKernel>(coupling_kernel(lattice));
  std::shared_ptr<const Eigen::MatrixXd> hop;
  if (hop_scale != 0.0) hop = std::make_shared<const Eigen::MatrixXd>(hop_scale * kernel->d);
  SpinHamiltonian h;
  h.kappa = kappa;
  h.xi = xi;
  h.n_sites = lattice.size();
  h.kernel = kernel;
  const auto b = sectors(lattice.size(), max_dim);
  for (std::size_t n = 0; n < 3; ++n) {
    Eigen::VectorXd diag = zz_weight == 0.0 ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b[n]->dimension()))
                                            : Eigen::VectorXd(zz_weight * zz_pattern(*b[n], kernel->d));
    h.blocks[n] = SectorOperator(b[n], std::move(diag), hop);
  }
  h.vacuum_energy = h.blocks[0].diagonal()[0];
  return h;
}

inline void require_positive_kappa(double kappa) {
  if (!(kappa > 0.0)) throw InvalidInput("kappa must be positive");
}

}  // namespace detail

/// Pure exchange form: sum_{i != j} kappa d_ij (s+_i s-_j + s-_i s+_j).
inline SpinHamiltonian build_vdd(const Lattice& lattice, double kappa,
                                 std::size_t max_dim = default_max_dimension) {
  detail::require_positive_kappa(kappa);
  return detail::assemble(lattice, kappa, 0.0, 2.0 * kappa, 0.0, max_dim);
}

/// Heisenberg part (kappa/2) sum_{i != j} d_ij sigma_i . sigma_j.
inline SpinHamiltonian build_heisenberg(const Lattice& lattice, double kappa,
                                        std::size_t max_dim = default_max_dimension) {
  detail::require_positive_kappa(kappa);
  return detail::assemble(lattice, kappa, 0.0, 2.0 * kappa, kappa, max_dim);
}

/// Ising part -(xi/2) sum_{i != j} d_ij sigma^z_i sigma^z_j (diagonal only).
inline SpinHamiltonian build_ising(const Lattice& lattice, double xi,
                                   std::size_t max_dim = default_max_dimension) {
  return detail::assemble(lattice, 0.0, xi, 0.0, -xi, max_dim);
}

/// Heisenberg plus Ising parts; the sigma^z sigma^z weight per unordered pair is (kappa - xi) d_ij.
inline SpinHamiltonian build_full(const Lattice& lattice, double kappa, double xi,
                                  std::size_t max_dim = default_max_dimension) {
  detail::require_positive_kappa(kappa);
  return detail::assemble(lattice, kappa, xi, 2.0 * kappa, kappa - xi, max_dim);
}

/// Ideal chi J_z^2 generator: every configuration of sector n sits at chi (N/2 - n)^2.
inline SpinHamiltonian ideal_jz2(std::size_t n_sites, double chi) {
  SpinHamiltonian h;
  h.kappa = 0.0;
  h.n_sites = n_sites;
  const auto b = detail::sectors(n_sites, default_max_dimension);
  for (std::size_t n = 0; n < 3; ++n) {
    const double m = 0.5 * static_cast<double>(n_sites) - static_cast<double>(n);
    h.blocks[n] = SectorOperator(
        b[n], Eigen::VectorXd::Constant(static_cast<Eigen::Index>(b[n]->dimension()), chi * m * m));
  }
  h.vacuum_energy = h.blocks[0].diagonal()[0];
  return h;
}

/// chi_eff = 2 kappa / (N (N - 1)) sum_{i != j} d_ij
inline double chi_eff(const CouplingKernel& kernel, double kappa) {
  const auto n = static_cast<double>(kernel.size());
  if (n < 2) throw InvalidInput("chi_eff needs at least 2 sites");
  return 2.0 * kappa / (n * (n - 1.0)) * kernel.ordered_sum();
}

inline double chi_eff(const Lattice& lattice, double kappa) { return chi_eff(coupling_kernel(lattice), kappa); }

enum class GateCoupling {
  exchange,  ///< t_pi from chi_eff (pure dipolar exchange)
  ising,     ///< t_pi from chi_tilde_eff = (xi / kappa) chi_eff (protected manifold)
};

struct EffectiveGateParams {
  double chi_eff = 0.0;
  double chi_tilde_eff = 0.0;
  double t_pi = 0.0;  // units hbar / kappa
};

inline EffectiveGateParams gate_params(const Lattice& lattice, double kappa, double xi, GateCoupling which) {
  detail::require_positive_kappa(kappa);
  EffectiveGateParams p;
  p.chi_eff = chi_eff(lattice, kappa);
  p.chi_tilde_eff = xi / kappa * p.chi_eff;
  if (which == GateCoupling::ising && xi == 0.0)
    throw InvalidInput("xi = 0 has no Ising gate coupling");
  const double chi = which == GateCoupling::exchange ? p.chi_eff : p.chi_tilde_eff;
  if (!(chi > 0.0)) throw InvalidInput("effective coupling must be positive");
  p.t_pi = pi / (2.0 * chi);
  return p;
}

/// Closed-form large-N nonlinear phase: 4 kappa t zeta(3) / (N - 1) for a chain,
/// twice that for a square lattice.
inline double theta_analytic(LatticeKind kind, double kappa, double t, std::size_t n_sites) {
  if (n_sites < 2) throw InvalidInput("theta_analytic needs N >= 2");
  const double one_d = 4.0 * kappa * t * zeta3 / (static_cast<double>(n_sites) - 1.0);
  switch (kind) {
    case LatticeKind::chain: return one_d;
    case LatticeKind::square: return 2.0 * one_d;
    default: throw InvalidInput("theta_analytic supports chain and square lattices only");
  }
}

}  // namespace dipolar
