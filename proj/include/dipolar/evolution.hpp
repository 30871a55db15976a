#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <span>
#include <vector>

#include "dipolar/basis.hpp"
#include "dipolar/error.hpp"

namespace dipolar {

/// Real-symmetric operator applied to complex vectors.
template <class Op>
concept HermitianOperator = requires(const Op& op, const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
  { op.dimension() } -> std::convertible_to<std::size_t>;
  op.apply(x, y);
  { op.to_dense() } -> std::convertible_to<Eigen::MatrixXd>;
};

enum class EvolutionMethod { automatic, dense, krylov };

inline constexpr std::size_t dense_dimension_limit = 2000;

struct EvolutionOptions {
  EvolutionMethod method = EvolutionMethod::automatic;
  double krylov_tolerance = 1e-10;  ///< per-step error bound on a unit vector
  int krylov_dimension = 40;
  /// Largest symmetry-reduced space used for return amplitudes above the dense
  /// limit (0 disables the reduction and forces time stepping).
  std::size_t reduced_dimension_limit = 2000;
};

inline bool use_dense(std::size_t dim, const EvolutionOptions& opt) {
  switch (opt.method) {
    case EvolutionMethod::dense: return true;
    case EvolutionMethod::krylov: return false;
    default: return dim <= dense_dimension_limit;
  }
}

/// Full eigendecomposition; exp(-iHt) applied exactly in the eigenbasis.
class DenseSpectrum {
 public:
  DenseSpectrum() = default;
  explicit DenseSpectrum(const Eigen::MatrixXd& h) {
    if (h.rows() == 1) {
      values_ = h.diagonal();
      vectors_ = Eigen::MatrixXd::Ones(1, 1);
      return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigendecomposition failed");
    values_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
  }

  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  Eigen::VectorXcd propagate(const Eigen::VectorXcd& psi, double t) const {
    Eigen::VectorXcd c = vectors_.transpose() * psi;
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::polar(1.0, -values_[i] * t);
    return vectors_ * c;
  }

  /// Spectral weights |<v_i|phi>|^2 for the return amplitude <phi|exp(-iHt)|phi>.
  Eigen::VectorXd weights(const Eigen::VectorXcd& phi) const {
    return (vectors_.transpose() * phi).cwiseAbs2();
  }

  static Complex return_amplitude(const Eigen::VectorXd& values, const Eigen::VectorXd& weights, double t) {
    Complex s{0.0, 0.0};
    for (Eigen::Index i = 0; i < values.size(); ++i) s += weights[i] * std::polar(1.0, -values[i] * t);
    return s;
  }

 private:
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
};

/// Lanczos propagator: psi <- exp(-iH dt) psi with adaptive sub-stepping.
/// Each Krylov basis is built once and reused for the largest sub-step whose
/// a-posteriori error estimate beta_m |e_m^T exp(-iT tau) e_1| stays below the tolerance.
template <HermitianOperator Op>
class KrylovPropagator {
 public:
  KrylovPropagator(const Op& op, double tolerance = 1e-10, int max_dimension = 40)
      : op_(&op), tol_(tolerance), m_max_(std::max(2, max_dimension)) {}

  Eigen::VectorXcd propagate(Eigen::VectorXcd psi, double dt) const {
    double remaining = dt;
    const double sign = dt < 0 ? -1.0 : 1.0;
    int guard = 0;
    while (std::abs(remaining) > 0.0) {
      if (++guard > 10'000'000) throw NumericalError("Krylov propagation did not advance");
      const double taken = step(psi, remaining);
      remaining -= taken;
      if (sign * remaining < 0) remaining = 0.0;
    }
    return psi;
  }

  std::size_t matvec_count() const { return matvecs_; }

 private:
  double step(Eigen::VectorXcd& psi, double want) const {
    const double beta0 = psi.norm();
    if (beta0 == 0.0) return want;
    const Eigen::Index n = psi.size();
    const int m_cap = static_cast<int>(std::min<Eigen::Index>(m_max_, n));

    Eigen::MatrixXcd v(n, m_cap + 1);
    std::vector<double> alpha, beta;
    v.col(0) = psi / beta0;
    Eigen::VectorXcd w;
    int m = 0;
    bool exhausted = false;
    double beta_last = 0.0;
    for (int j = 0; j < m_cap; ++j) {
      op_->apply(v.col(j), w);
      ++matvecs_;
      const double a = v.col(j).dot(w).real();
      alpha.push_back(a);
      w -= a * v.col(j);
      if (j > 0) w -= beta.back() * v.col(j - 1);
      // full reorthogonalization, twice is enough
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) w -= v.col(i).dot(w) * v.col(i);
      const double b = w.norm();
      m = j + 1;
      beta_last = b;
      if (b < 1e-13 * std::max(1.0, std::abs(a))) {
        exhausted = true;
        break;
      }
      if (j + 1 < m_cap) {
        beta.push_back(b);
        v.col(j + 1) = w / b;
      }
    }
    if (m == m_cap && m_cap == n) exhausted = true;

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = alpha[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXd& q = es.eigenvectors();

    auto small_exp = [&](double tau) {
      Eigen::VectorXcd c(m);
      for (int i = 0; i < m; ++i) c[i] = q(0, i) * std::polar(1.0, -lam[i] * tau);
      Eigen::VectorXcd y = q.cast<Complex>() * c;
      return y;
    };

    double tau = want;
    Eigen::VectorXcd y;
    for (int halvings = 0;; ++halvings) {
      y = small_exp(tau);
      if (exhausted) break;
      const double err = beta0 * beta_last * std::abs(y[m - 1]);
      if (err <= tol_) break;
      if (halvings > 200) throw NumericalError("Krylov step size underflow");
      tau *= 0.5;
    }
    psi = beta0 * (v.leftCols(m) * y);
    return tau;
  }

  const Op* op_;
  double tol_;
  int m_max_;
  mutable std::size_t matvecs_ = 0;
};

namespace detail {
inline void check_evolution_input(const Eigen::VectorXcd& psi0, std::span<const double> times) {
  if (std::abs(psi0.norm() - 1.0) > 1e-10) throw InvalidInput("initial state is not normalized");
  if (times.empty()) return;
  if (times.front() != 0.0) throw InvalidInput("time grid must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw InvalidInput("time grid must be strictly ascending");
}
}  // namespace detail

/// psi(t) = exp(-iHt) psi0 at every requested time (hbar = 1).
template <HermitianOperator Op>
std::vector<Eigen::VectorXcd> evolve(const Op& op, const Eigen::VectorXcd& psi0, std::span<const double> times,
                                     const EvolutionOptions& opt = {}) {
  if (static_cast<std::size_t>(psi0.size()) != op.dimension())
    throw InvalidInput("state dimension does not match operator");
  detail::check_evolution_input(psi0, times);
  std::vector<Eigen::VectorXcd> out;
  out.reserve(times.size());
  if (use_dense(op.dimension(), opt)) {
    const DenseSpectrum spec(op.to_dense());
    for (double t : times) out.push_back(spec.propagate(psi0, t));
    return out;
  }
  const KrylovPropagator<Op> prop(op, opt.krylov_tolerance, opt.krylov_dimension);
  Eigen::VectorXcd psi = psi0;
  double now = 0.0;
  for (double t : times) {
    if (t > now) psi = prop.propagate(psi, t - now);
    now = t;
    out.push_back(psi);
  }
  return out;
}

inline StateVector evolve_state(const auto& op, const StateVector& psi0, double t, const EvolutionOptions& opt = {}) {
  const double times[] = {0.0, t};
  auto states = evolve(op, psi0.amplitudes, std::span<const double>(times, t == 0.0 ? 1 : 2), opt);
  return {psi0.basis, states.back()};
}

/// Block-diagonal operator over several sectors, applied block by block.
template <HermitianOperator Op>
class DirectSumOperator {
 public:
  explicit DirectSumOperator(std::vector<const Op*> blocks) : blocks_(std::move(blocks)) {
    offsets_.push_back(0);
    for (const Op* b : blocks_) offsets_.push_back(offsets_.back() + b->dimension());
  }

  std::size_t dimension() const { return offsets_.back(); }
  std::size_t offset(std::size_t block) const { return offsets_[block]; }

  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    y.resize(x.size());
    Eigen::VectorXcd part;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto off = static_cast<Eigen::Index>(offsets_[b]);
      const auto len = static_cast<Eigen::Index>(blocks_[b]->dimension());
      blocks_[b]->apply(x.segment(off, len), part);
      y.segment(off, len) = part;
    }
  }

  Eigen::MatrixXd to_dense() const {
    const auto n = static_cast<Eigen::Index>(dimension());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto off = static_cast<Eigen::Index>(offsets_[b]);
      const auto len = static_cast<Eigen::Index>(blocks_[b]->dimension());
      h.block(off, off, len, len) = blocks_[b]->to_dense();
    }
    return h;
  }

 private:
  std::vector<const Op*> blocks_;
  std::vector<std::size_t> offsets_;
};

}  // namespace dipolar
