#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dipolar/error.hpp"

namespace dipolar {

using Complex = std::complex<double>;

inline constexpr std::size_t default_max_dimension = 1'000'000;

/// Binomial coefficient, saturating at UINT64_MAX on overflow.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > UINT64_MAX) return UINT64_MAX;
  }
  return static_cast<std::uint64_t>(r);
}

/// All n-subsets of N sites in colexicographic order. A configuration is the
/// sorted tuple of excited sites; rank(c) = sum_i C(c_i, i + 1).
class SectorBasis {
 public:
  SectorBasis(std::size_t n_sites, std::size_t n_exc, std::size_t max_dimension = default_max_dimension)
      : n_sites_(n_sites), n_exc_(n_exc) {
    if (n_exc > n_sites) throw InvalidInput("excitation number exceeds site count");
    const std::uint64_t dim = binomial(n_sites, n_exc);
    if (dim > max_dimension)
      throw ResourceLimit("sector dimension C(" + std::to_string(n_sites) + "," + std::to_string(n_exc) +
                          ") exceeds cap " + std::to_string(max_dimension));
    dim_ = static_cast<std::size_t>(dim);

    table_.assign((n_sites + 1) * (n_exc + 1), 0);
    for (std::size_t m = 0; m <= n_sites; ++m)
      for (std::size_t r = 0; r <= n_exc; ++r) table_[m * (n_exc + 1) + r] = binomial(m, r);

    configs_.resize(dim_ * n_exc_);
    std::vector<std::uint32_t> c(n_exc_);
    for (std::size_t i = 0; i < n_exc_; ++i) c[i] = static_cast<std::uint32_t>(i);
    for (std::size_t idx = 0; idx < dim_; ++idx) {
      std::copy(c.begin(), c.end(), configs_.begin() + static_cast<std::ptrdiff_t>(idx * n_exc_));
      // colex successor: bump the lowest entry that has room, reset those below it
      std::size_t i = 0;
      while (i < n_exc_) {
        const std::uint32_t limit = (i + 1 < n_exc_) ? c[i + 1] : static_cast<std::uint32_t>(n_sites_);
        if (c[i] + 1 < limit) break;
        ++i;
      }
      if (i == n_exc_) break;
      ++c[i];
      for (std::size_t j = 0; j < i; ++j) c[j] = static_cast<std::uint32_t>(j);
    }
  }

  std::size_t n_sites() const { return n_sites_; }
  std::size_t n_exc() const { return n_exc_; }
  std::size_t dimension() const { return dim_; }

  std::span<const std::uint32_t> config(std::size_t index) const {
    return {configs_.data() + index * n_exc_, n_exc_};
  }

  /// Rank of a sorted configuration.
  std::size_t rank(std::span<const std::uint32_t> sorted) const {
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) r += choose(sorted[i], i + 1);
    return static_cast<std::size_t>(r);
  }

  /// Configuration at a given rank, by greedy descent over the combinatorial number system.
  std::vector<std::uint32_t> unrank(std::size_t index) const {
    if (index >= dim_) throw InvalidInput("rank out of range");
    std::vector<std::uint32_t> c(n_exc_);
    std::uint64_t rem = index;
    std::uint32_t hi = static_cast<std::uint32_t>(n_sites_);
    for (std::size_t i = n_exc_; i-- > 0;) {
      std::uint32_t v = hi - 1;
      while (choose(v, i + 1) > rem) --v;
      c[i] = v;
      rem -= choose(v, i + 1);
      hi = v;
    }
    return c;
  }

  bool same_sector(const SectorBasis& other) const {
    return n_sites_ == other.n_sites_ && n_exc_ == other.n_exc_;
  }

 private:
  std::uint64_t choose(std::uint64_t m, std::size_t r) const {
    return m > n_sites_ ? binomial(m, r) : table_[m * (n_exc_ + 1) + r];
  }

  std::size_t n_sites_;
  std::size_t n_exc_;
  std::size_t dim_ = 0;
  std::vector<std::uint64_t> table_;
  std::vector<std::uint32_t> configs_;
};

inline std::shared_ptr<const SectorBasis> sector_basis(std::size_t n_sites, std::size_t n_exc,
                                                       std::size_t max_dimension = default_max_dimension) {
  return std::make_shared<const SectorBasis>(n_sites, n_exc, max_dimension);
}

/// Complex amplitudes over one excitation sector.
struct StateVector {
  std::shared_ptr<const SectorBasis> basis;
  Eigen::VectorXcd amplitudes;

  std::size_t dimension() const { return static_cast<std::size_t>(amplitudes.size()); }
  double norm() const { return amplitudes.norm(); }
};

/// Uniform superposition over every configuration of the sector.
inline StateVector dicke_state(std::shared_ptr<const SectorBasis> basis) {
  const auto dim = static_cast<Eigen::Index>(basis->dimension());
  const double a = 1.0 / std::sqrt(static_cast<double>(dim));
  return {std::move(basis), Eigen::VectorXcd::Constant(dim, Complex(a, 0.0))};
}

/// <psi|phi>. States from different excitation sectors of the same lattice are orthogonal.
inline Complex overlap(const StateVector& psi, const StateVector& phi) {
  if (psi.basis->n_sites() != phi.basis->n_sites())
    throw InvalidInput("overlap between states of different site counts");
  if (psi.basis->n_exc() != phi.basis->n_exc()) return {0.0, 0.0};
  if (psi.amplitudes.size() != phi.amplitudes.size())
    throw InvalidInput("amplitude count does not match sector dimension");
  return psi.amplitudes.dot(phi.amplitudes);
}

/// Direct sum over the n = 0, 1, 2 sectors.
struct SectorSuperposition {
  std::array<StateVector, 3> sectors;

  double norm() const {
    double s = 0.0;
    for (const auto& v : sectors) s += v.amplitudes.squaredNorm();
    return std::sqrt(s);
  }
};

inline Complex overlap(const SectorSuperposition& psi, const SectorSuperposition& phi) {
  Complex s{0.0, 0.0};
  for (std::size_t n = 0; n < 3; ++n) s += overlap(psi.sectors[n], phi.sectors[n]);
  return s;
}

}  // namespace dipolar
