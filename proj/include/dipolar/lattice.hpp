#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dipolar/constants.hpp"
#include "dipolar/error.hpp"

namespace dipolar {

using Vec2 = std::array<double, 2>;
using Cell = std::array<int, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec2& a) { return std::sqrt(dot(a, a)); }

enum class LatticeKind { chain, square, triangular };
enum class Boundary { open, periodic };

inline std::string_view to_string(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::chain: return "chain";
    case LatticeKind::square: return "square";
    case LatticeKind::triangular: return "triangular";
  }
  return "?";
}

inline std::string_view to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

inline LatticeKind parse_lattice_kind(std::string_view s) {
  if (s == "chain") return LatticeKind::chain;
  if (s == "square") return LatticeKind::square;
  if (s == "triangular") return LatticeKind::triangular;
  throw InvalidInput("unknown lattice kind '" + std::string(s) + "'");
}

inline Boundary parse_boundary(std::string_view s) {
  if (s == "open") return Boundary::open;
  if (s == "periodic") return Boundary::periodic;
  throw InvalidInput("unknown boundary '" + std::string(s) + "'");
}

namespace detail {
inline std::size_t exact_sqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : 0;
}
}  // namespace detail

/// Finite array of molecule sites. Every site carries integer coordinates along
/// the two primitive vectors, so squared distances are evaluated exactly through
/// the lattice metric; all lengths are in units of the spacing a.
class Lattice {
 public:
  Lattice(LatticeKind kind, std::size_t n_sites, double spacing = 1.0,
          Boundary boundary = Boundary::open)
      : kind_(kind), boundary_(boundary), n_(n_sites), spacing_(spacing) {
    if (n_sites < 2) throw InvalidInput("lattice needs at least 2 sites");
    if (!(spacing > 0.0)) throw InvalidInput("lattice spacing must be positive");

    const double h = std::sqrt(3.0) / 2.0;
    switch (kind) {
      case LatticeKind::chain:
        primitive_ = {Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};
        gram_ = {1.0, 0.0, 1.0};
        extent_ = {n_sites, 1};
        for (std::size_t i = 0; i < n_sites; ++i) cells_.push_back({static_cast<int>(i), 0});
        break;
      case LatticeKind::square: {
        const std::size_t side = detail::exact_sqrt(n_sites);
        if (side == 0) throw InvalidInput("square lattice requires a perfect-square site count");
        primitive_ = {Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};
        gram_ = {1.0, 0.0, 1.0};
        extent_ = {side, side};
        for (std::size_t y = 0; y < side; ++y)
          for (std::size_t x = 0; x < side; ++x)
            cells_.push_back({static_cast<int>(x), static_cast<int>(y)});
        break;
      }
      case LatticeKind::triangular: {
        primitive_ = {Vec2{1.0, 0.0}, Vec2{0.5, h}};
        gram_ = {1.0, 0.5, 1.0};
        if (boundary == Boundary::periodic) {
          const std::size_t side = detail::exact_sqrt(n_sites);
          if (side == 0)
            throw InvalidInput("periodic triangular lattice requires a perfect-square site count");
          extent_ = {side, side};
          for (std::size_t c2 = 0; c2 < side; ++c2)
            for (std::size_t c1 = 0; c1 < side; ++c1)
              cells_.push_back({static_cast<int>(c1), static_cast<int>(c2)});
        } else {
          // Rows of width ceil(sqrt(N)), odd rows shifted by a/2.
          auto width = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_sites))));
          extent_ = {width, (n_sites + width - 1) / width};
          for (std::size_t i = 0; i < n_sites; ++i) {
            const int row = static_cast<int>(i / width);
            const int col = static_cast<int>(i % width);
            cells_.push_back({col - row / 2, row});
          }
        }
        break;
      }
    }
    positions_.reserve(n_);
    for (const Cell& c : cells_) positions_.push_back(cartesian(c));
  }

  int dimension() const { return kind_ == LatticeKind::chain ? 1 : 2; }
  LatticeKind kind() const { return kind_; }
  Boundary boundary() const { return boundary_; }
  bool periodic() const { return boundary_ == Boundary::periodic; }
  std::size_t size() const { return n_; }
  double spacing() const { return spacing_; }
  std::span<const Vec2> positions() const { return positions_; }
  std::span<const Cell> cells() const { return cells_; }
  const std::array<std::size_t, 2>& extent() const { return extent_; }
  const std::array<Vec2, 2>& primitive() const { return primitive_; }

  Vec2 cartesian(const Cell& c) const {
    return {c[0] * primitive_[0][0] + c[1] * primitive_[1][0],
            c[0] * primitive_[0][1] + c[1] * primitive_[1][1]};
  }

  /// Exact squared length of an integer cell displacement.
  double squared_length(const Cell& d) const {
    return gram_[0] * d[0] * d[0] + 2.0 * gram_[1] * d[0] * d[1] + gram_[2] * d[1] * d[1];
  }

  /// Cell displacement from site i to site j, minimum image when periodic.
  Cell cell_displacement(std::size_t i, std::size_t j) const {
    Cell d{cells_[j][0] - cells_[i][0], cells_[j][1] - cells_[i][1]};
    if (!periodic()) return d;
    const int l1 = static_cast<int>(extent_[0]);
    const int l2 = static_cast<int>(extent_[1]);
    d[0] = ((d[0] % l1) + l1) % l1;
    d[1] = ((d[1] % l2) + l2) % l2;
    Cell best = d;
    double best_len = std::numeric_limits<double>::infinity();
    const int s2_lo = dimension() == 1 ? 0 : -1;
    const int s2_hi = dimension() == 1 ? 0 : 1;
    for (int s1 = -1; s1 <= 1; ++s1) {
      for (int s2 = s2_lo; s2 <= s2_hi; ++s2) {
        const Cell c{d[0] + s1 * l1, d[1] + s2 * l2};
        const double len = squared_length(c);
        if (len < best_len - 1e-12) {
          best_len = len;
          best = c;
        }
      }
    }
    return best;
  }

  Vec2 displacement(std::size_t i, std::size_t j) const { return cartesian(cell_displacement(i, j)); }
  double distance(std::size_t i, std::size_t j) const {
    return std::sqrt(squared_length(cell_displacement(i, j)));
  }

 private:
  LatticeKind kind_;
  Boundary boundary_;
  std::size_t n_;
  double spacing_;
  std::array<Vec2, 2> primitive_{};
  std::array<double, 3> gram_{};  // g11, g12, g22
  std::array<std::size_t, 2> extent_{};
  std::vector<Cell> cells_;
  std::vector<Vec2> positions_;
};

inline Lattice build_lattice(LatticeKind kind, std::size_t n_sites, double spacing = 1.0,
                             Boundary boundary = Boundary::open) {
  return Lattice(kind, n_sites, spacing, boundary);
}

/// Dimensionless r^-3 kernel d_ij = a^3 / |r_i - r_j|^3 with zero diagonal.
struct CouplingKernel {
  Eigen::MatrixXd d;

  std::size_t size() const { return static_cast<std::size_t>(d.rows()); }
  /// Sum over ordered pairs i != j.
  double ordered_sum() const { return d.sum(); }
};

inline CouplingKernel coupling_kernel(const Lattice& lattice) {
  const std::size_t n = lattice.size();
  CouplingKernel k{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r2 = lattice.squared_length(lattice.cell_displacement(i, j));
      if (!(r2 > 0.0)) throw InvalidInput("coincident lattice sites");
      const double v = 1.0 / (r2 * std::sqrt(r2));
      k.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      k.d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return k;
}

/// Discrete quasi-momenta k = (m1 b1 + m2 b2) / L of a periodic lattice,
/// stored with m in [0, L) so that k = 0 is entry 0.
class MomentumGrid {
 public:
  explicit MomentumGrid(const Lattice& lattice) : extent_(lattice.extent()) {
    if (!lattice.periodic()) throw InvalidInput("momentum grid requires a periodic lattice");
    const auto& a = lattice.primitive();
    // b_i . a_j = 2 pi delta_ij
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    reciprocal_ = {Vec2{2 * pi * a[1][1] / det, -2 * pi * a[1][0] / det},
                   Vec2{-2 * pi * a[0][1] / det, 2 * pi * a[0][0] / det}};
    const std::size_t n = extent_[0] * extent_[1];
    for (std::size_t m2 = 0; m2 < extent_[1]; ++m2) {
      for (std::size_t m1 = 0; m1 < extent_[0]; ++m1) {
        index_.push_back({static_cast<int>(m1), static_cast<int>(m2)});
        kvecs_.push_back(combine(static_cast<double>(m1) / extent_[0], static_cast<double>(m2) / extent_[1]));
      }
    }
    weights_.assign(n, 1.0 / static_cast<double>(n));
  }

  std::size_t size() const { return kvecs_.size(); }
  std::span<const Vec2> kvecs() const { return kvecs_; }
  std::span<const double> weights() const { return weights_; }
  const Cell& index(std::size_t i) const { return index_[i]; }
  const std::array<Vec2, 2>& reciprocal() const { return reciprocal_; }

  std::size_t flat(int m1, int m2) const {
    const int l1 = static_cast<int>(extent_[0]);
    const int l2 = static_cast<int>(extent_[1]);
    m1 = ((m1 % l1) + l1) % l1;
    m2 = ((m2 % l2) + l2) % l2;
    return static_cast<std::size_t>(m1) + extent_[0] * static_cast<std::size_t>(m2);
  }
  std::size_t negated(std::size_t i) const { return flat(-index_[i][0], -index_[i][1]); }
  std::size_t add(std::size_t i, std::size_t j) const {
    return flat(index_[i][0] + index_[j][0], index_[i][1] + index_[j][1]);
  }

  /// k . r for a cell displacement, reduced through the integer phase.
  double phase(std::size_t i, const Cell& d) const {
    const auto l1 = static_cast<long long>(extent_[0]);
    const auto l2 = static_cast<long long>(extent_[1]);
    // 2 pi (m1 d1 / L1 + m2 d2 / L2) with the numerator reduced mod L1*L2
    const long long num = static_cast<long long>(index_[i][0]) * d[0] * l2 +
                          static_cast<long long>(index_[i][1]) * d[1] * l1;
    const long long den = l1 * l2;
    const long long red = ((num % den) + den) % den;
    return 2 * pi * static_cast<double>(red) / static_cast<double>(den);
  }

  /// Minimal-norm reciprocal-lattice image of k_i.
  Vec2 centered(std::size_t i) const {
    const double f1 = static_cast<double>(index_[i][0]) / extent_[0];
    const double f2 = static_cast<double>(index_[i][1]) / extent_[1];
    Vec2 best = kvecs_[i];
    double best_len = dot(best, best);
    for (int s1 = -2; s1 <= 1; ++s1) {
      for (int s2 = -2; s2 <= 1; ++s2) {
        if (extent_[1] == 1 && s2 != 0) continue;
        const Vec2 k = combine(f1 + s1, f2 + s2);
        const double len = dot(k, k);
        if (len < best_len - 1e-12) {
          best_len = len;
          best = k;
        }
      }
    }
    return best;
  }

 private:
  Vec2 combine(double f1, double f2) const {
    return {f1 * reciprocal_[0][0] + f2 * reciprocal_[1][0],
            f1 * reciprocal_[0][1] + f2 * reciprocal_[1][1]};
  }

  std::array<std::size_t, 2> extent_;
  std::array<Vec2, 2> reciprocal_{};
  std::vector<Cell> index_;
  std::vector<Vec2> kvecs_;
  std::vector<double> weights_;
};

inline MomentumGrid momentum_grid(const Lattice& lattice) { return MomentumGrid(lattice); }

}  // namespace dipolar
