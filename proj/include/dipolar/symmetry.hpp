#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "dipolar/error.hpp"
#include "dipolar/hamiltonian.hpp"

namespace dipolar {

/// Coarsest equitable partition of a sector operator's configurations.
/// Every configuration in class a has the same diagonal entry and the same
/// summed coupling into each class b. The class indicator vectors then span an
/// invariant subspace that contains every uniform (Dicke) vector, and H acts
/// on it through the small quotient matrix.
struct EquitableQuotient {
  std::vector<std::uint32_t> class_of;  // per configuration
  std::vector<std::size_t> class_size;
  Eigen::MatrixXd matrix;  // <e_a|H|e_b> with e_a the normalized indicator of class a

  std::size_t size() const { return class_size.size(); }

  /// Coordinates of a vector that is constant on every class.
  Eigen::VectorXd restrict_uniform(const Eigen::VectorXcd& v) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    std::vector<char> seen(size(), 0);
    for (std::size_t x = 0; x < class_of.size(); ++x) {
      const auto a = class_of[x];
      if (seen[a]) continue;
      seen[a] = 1;
      c[a] = v[static_cast<Eigen::Index>(x)].real() * std::sqrt(static_cast<double>(class_size[a]));
    }
    return c;
  }
};

namespace detail {
inline long long quantize(double v, double scale) { return std::llround(v / scale); }
}  // namespace detail

/// Colour refinement on the weighted graph of H, starting from one class.
/// Couplings are compared after quantization to `resolution` times the
/// largest matrix entry. Returns nothing if the partition exceeds `max_classes`.
inline std::optional<EquitableQuotient> equitable_quotient(const SectorOperator& op, std::size_t max_classes,
                                                           double resolution = 1e-11) {
  const std::size_t dim = op.dimension();
  double scale = op.diagonal().size() ? op.diagonal().cwiseAbs().maxCoeff() : 0.0;
  if (op.hopping()) scale = std::max(scale, op.hopping()->cwiseAbs().maxCoeff());
  scale = std::max(scale, 1e-300) * resolution;

  // off-diagonal structure, gathered once by row
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(dim);
  op.for_each_hop([&](std::size_t from, std::size_t to, double amp) {
    rows[to].emplace_back(static_cast<std::uint32_t>(from), amp);
  });

  std::vector<std::uint32_t> colour(dim, 0);
  std::size_t n_colours = 0;
  {
    std::map<long long, std::uint32_t> ids;
    for (std::size_t x = 0; x < dim; ++x) {
      const auto key = detail::quantize(op.diagonal()[static_cast<Eigen::Index>(x)], scale);
      auto [it, inserted] = ids.emplace(key, static_cast<std::uint32_t>(ids.size()));
      colour[x] = it->second;
    }
    n_colours = ids.size();
  }

  std::vector<std::pair<std::uint32_t, double>> acc;
  for (;;) {
    if (n_colours > max_classes) return std::nullopt;
    std::map<std::vector<long long>, std::uint32_t> ids;
    std::vector<std::uint32_t> next(dim);
    std::vector<long long> sig;
    for (std::size_t x = 0; x < dim; ++x) {
      acc.clear();
      for (const auto& [y, amp] : rows[x]) acc.emplace_back(colour[y], amp);
      std::sort(acc.begin(), acc.end());
      sig.clear();
      sig.push_back(colour[x]);
      for (std::size_t i = 0; i < acc.size();) {
        double s = 0.0;
        std::size_t j = i;
        for (; j < acc.size() && acc[j].first == acc[i].first; ++j) s += acc[j].second;
        sig.push_back(acc[i].first);
        sig.push_back(detail::quantize(s, scale));
        i = j;
      }
      auto [it, inserted] = ids.emplace(sig, static_cast<std::uint32_t>(ids.size()));
      next[x] = it->second;
    }
    const std::size_t count = ids.size();
    colour.swap(next);
    if (count == n_colours) break;
    n_colours = count;
  }
  if (n_colours > max_classes) return std::nullopt;

  // renumber by first appearance so the result does not depend on map ordering
  std::vector<std::int64_t> remap(n_colours, -1);
  std::uint32_t next_id = 0;
  for (auto& c : colour) {
    if (remap[c] < 0) remap[c] = next_id++;
    c = static_cast<std::uint32_t>(remap[c]);
  }

  EquitableQuotient q;
  q.class_of = std::move(colour);
  q.class_size.assign(n_colours, 0);
  for (auto c : q.class_of) ++q.class_size[c];
  const auto m = static_cast<Eigen::Index>(n_colours);
  // summed coupling from one representative of each class a into class b
  Eigen::MatrixXd into = Eigen::MatrixXd::Zero(m, m);
  std::vector<char> done(n_colours, 0);
  for (std::size_t x = 0; x < dim; ++x) {
    const auto a = q.class_of[x];
    if (done[a]) continue;
    done[a] = 1;
    into(a, a) += op.diagonal()[static_cast<Eigen::Index>(x)];
    for (const auto& [y, amp] : rows[x]) into(a, q.class_of[y]) += amp;
  }
  q.matrix.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      q.matrix(a, b) = std::sqrt(static_cast<double>(q.class_size[a]) / static_cast<double>(q.class_size[b])) *
                       into(a, b);
  q.matrix = 0.5 * (q.matrix + q.matrix.transpose()).eval();
  return q;
}

}  // namespace dipolar
