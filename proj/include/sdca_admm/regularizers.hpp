#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"

namespace sdca_admm {

/// A separable "simple" penalty psi with closed-form prox. Coordinates are
/// split into disjoint groups; group g contributes
///
///   c_g * ( ||u_g|| + (eps / 2) * ||u_g||^2 ).
///
/// The l1 flavour is the special case where every group is a singleton.
class SimpleRegularizer {
 public:
  enum class Kind { ElasticNetL1, GroupElasticNetL2 };

  /// Weighted elastic-net l1: sum_j c_j (|u_j| + eps/2 u_j^2).
  static SimpleRegularizer elastic_net_l1(Vector weights, double eps) {
    SimpleRegularizer r;
    r.kind_ = Kind::ElasticNetL1;
    r.dim_ = weights.size();
    r.eps_ = eps;
    r.weights_ = std::move(weights);
    r.group_ptr_.resize(r.dim_ + 1);
    r.members_.resize(r.dim_);
    for (std::size_t j = 0; j < r.dim_; ++j) {
      r.group_ptr_[j] = j;
      r.members_[j] = j;
    }
    r.group_ptr_[r.dim_] = r.dim_;
    r.validate();
    return r;
  }

  /// Group elastic-net over disjoint groups that together cover [0, dim).
  static SimpleRegularizer group_elastic_net(std::size_t dim, const std::vector<IndexList>& groups,
                                             Vector weights, double eps) {
    if (groups.size() != weights.size()) {
      throw std::invalid_argument("group_elastic_net: one weight per group required");
    }
    SimpleRegularizer r;
    r.kind_ = Kind::GroupElasticNetL2;
    r.dim_ = dim;
    r.eps_ = eps;
    r.weights_ = std::move(weights);
    r.group_ptr_.push_back(0);
    std::vector<bool> covered(dim, false);
    for (const auto& g : groups) {
      for (std::size_t j : g) {
        if (j >= dim) throw std::invalid_argument("group_elastic_net: index out of range");
        if (covered[j]) throw std::invalid_argument("group_elastic_net: groups overlap");
        covered[j] = true;
        r.members_.push_back(j);
      }
      r.group_ptr_.push_back(r.members_.size());
    }
    for (bool c : covered) {
      if (!c) throw std::invalid_argument("group_elastic_net: groups do not cover every coordinate");
    }
    r.validate();
    return r;
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  double eps() const noexcept { return eps_; }
  std::size_t group_count() const noexcept { return weights_.size(); }
  double weight(std::size_t g) const { return weights_[g]; }
  std::span<const std::size_t> group(std::size_t g) const {
    return {members_.data() + group_ptr_[g], group_ptr_[g + 1] - group_ptr_[g]};
  }

  /// psi(u)
  double eval(std::span<const double> u) const {
    check_dim(u.size());
    double total = 0.0;
    for (std::size_t g = 0; g < group_count(); ++g) {
      const double sq = group_squared_norm(g, u);
      total += weights_[g] * (std::sqrt(sq) + 0.5 * eps_ * sq);
    }
    return total;
  }

  /// psi*(v). With eps = 0 (or a zero weight) the conjugate of a group is the
  /// indicator of a norm ball; points within kIndicatorSlack of the ball count
  /// as inside so that roundoff does not produce spurious infinities.
  double eval_conjugate(std::span<const double> v) const {
    check_dim(v.size());
    double total = 0.0;
    for (std::size_t g = 0; g < group_count(); ++g) {
      const double c = weights_[g];
      const double nv = std::sqrt(group_squared_norm(g, v));
      if (eps_ > 0.0 && c > 0.0) {
        const double excess = std::max(nv - c, 0.0);
        total += excess * excess / (2.0 * eps_ * c);
      } else if (nv > c + kIndicatorSlack) {
        return std::numeric_limits<double>::infinity();
      }
    }
    return total;
  }

  /// prox(q | scale * psi): per group, ST_{t/(1+eps t)}(q_g / (1 + eps t))
  /// with t = c_g * scale.
  Vector prox(std::span<const double> q, double scale) const {
    check_dim(q.size());
    if (!(scale > 0.0)) throw std::invalid_argument("prox: scale must be positive");
    Vector out(q.size(), 0.0);
    for (std::size_t g = 0; g < group_count(); ++g) {
      const double t = weights_[g] * scale;
      const double shrink = 1.0 / (1.0 + eps_ * t);
      const double nq = std::sqrt(group_squared_norm(g, q));
      if (nq <= t) continue;
      const double factor = shrink * (1.0 - t / nq);
      for (std::size_t j : group(g)) out[j] = factor * q[j];
    }
    return out;
  }

  /// prox(q | (scale * psi)*) through the Moreau decomposition.
  Vector prox_conjugate(std::span<const double> q, double scale) const {
    Vector out = prox(q, scale);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = q[j] - out[j];
    return out;
  }

  static constexpr double kIndicatorSlack = 1e-9;

 private:
  SimpleRegularizer() = default;

  void validate() const {
    if (!(eps_ >= 0.0) || !std::isfinite(eps_)) {
      throw std::invalid_argument("regularizer: eps must be finite and >= 0");
    }
    for (double c : weights_) {
      if (!(c >= 0.0) || !std::isfinite(c)) {
        throw std::invalid_argument("regularizer: weights must be finite and >= 0");
      }
    }
  }

  void check_dim(std::size_t n) const {
    if (n != dim_) throw std::invalid_argument("regularizer: dimension mismatch");
  }

  double group_squared_norm(std::size_t g, std::span<const double> u) const {
    double s = 0.0;
    for (std::size_t j : group(g)) s += u[j] * u[j];
    return s;
  }

  Kind kind_ = Kind::ElasticNetL1;
  std::size_t dim_ = 0;
  double eps_ = 0.0;
  Vector weights_;
  std::vector<std::size_t> group_ptr_;
  std::vector<std::size_t> members_;
};

inline double eval_psi(const SimpleRegularizer& r, std::span<const double> u) { return r.eval(u); }
inline double eval_psi_conjugate(const SimpleRegularizer& r, std::span<const double> v) {
  return r.eval_conjugate(v);
}
inline Vector prox_psi(const SimpleRegularizer& r, std::span<const double> q, double scale) {
  return r.prox(q, scale);
}
inline Vector prox_psi_conjugate(const SimpleRegularizer& r, std::span<const double> q, double scale) {
  return r.prox_conjugate(q, scale);
}

/// psi(B^T w): a simple penalty composed with a sparse splitting matrix
/// B (p x d). eta_B is the linearization constant, strictly above
/// sigma_max(B^T B).
struct StructuredRegularizer {
  SimpleRegularizer simple;
  SparseColumnMatrix B;
  double eta_B = 0.0;

  std::size_t primal_dim() const { return B.rows(); }
  std::size_t split_dim() const { return B.cols(); }

  /// psi(B^T w)
  double eval_composite(std::span<const double> w) const {
    return simple.eval(matvec_transpose(B, w));
  }
};

/// sigma_max(B B^T) + 1
inline double default_eta_B(const SparseColumnMatrix& B) {
  if (B.nonzeros() == 0) return 1.0;
  return spectral_norm_gram(B, 1e-12, 100000).value + 1.0;
}

/// Overlapped row/column group lasso on a rows x cols weight matrix W,
/// with w = vec(W) stored column-major (W(j, i) = w[i * rows + j]).
/// B^T w = [w; w]; the first copy is grouped by columns of W, the second by
/// rows, every group carrying weight C and quadratic factor eps.
inline StructuredRegularizer build_overlapped_group(std::size_t rows, std::size_t cols, double C,
                                                    double eps,
                                                    std::optional<std::size_t> feature_dim = {}) {
  const std::size_t p = rows * cols;
  if (p == 0) throw std::invalid_argument("build_overlapped_group: empty grid");
  if (feature_dim && *feature_dim != p) {
    throw std::invalid_argument("build_overlapped_group: rows*cols = " + std::to_string(p) +
                                " does not match feature dimension " + std::to_string(*feature_dim));
  }
  std::vector<std::vector<SparseColumnMatrix::Entry>> columns(2 * p);
  for (std::size_t j = 0; j < p; ++j) {
    columns[j].push_back({j, 1.0});
    columns[p + j].push_back({j, 1.0});
  }
  std::vector<IndexList> groups;
  groups.reserve(rows + cols);
  for (std::size_t i = 0; i < cols; ++i) {
    IndexList g(rows);
    for (std::size_t j = 0; j < rows; ++j) g[j] = i * rows + j;
    groups.push_back(std::move(g));
  }
  for (std::size_t j = 0; j < rows; ++j) {
    IndexList g(cols);
    for (std::size_t i = 0; i < cols; ++i) g[i] = p + i * rows + j;
    groups.push_back(std::move(g));
  }
  StructuredRegularizer reg{
      SimpleRegularizer::group_elastic_net(2 * p, groups, Vector(groups.size(), C), eps),
      SparseColumnMatrix::from_columns(p, std::move(columns)), 0.0};
  reg.eta_B = default_eta_B(reg.B);
  return reg;
}

using Edge = std::pair<std::size_t, std::size_t>;

/// Graph-guided fused penalty: B^T = [I_p; F] with F(e, i) = 1, F(e, j) = -1
/// for edge e = (i, j). The first p split coordinates carry weight C1, the
/// last |E| carry C2, all with quadratic factor eps.
inline StructuredRegularizer build_graph_guided(std::size_t p, const std::vector<Edge>& edges,
                                                double C1, double C2, double eps) {
  std::set<Edge> seen;
  std::vector<std::vector<SparseColumnMatrix::Entry>> columns(p + edges.size());
  for (std::size_t j = 0; j < p; ++j) columns[j].push_back({j, 1.0});
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    if (i >= p || j >= p) throw std::invalid_argument("build_graph_guided: edge endpoint out of range");
    if (i == j) throw std::invalid_argument("build_graph_guided: self loop");
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second) {
      throw std::invalid_argument("build_graph_guided: duplicate edge (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ")");
    }
    columns[p + e].push_back({i, 1.0});
    columns[p + e].push_back({j, -1.0});
  }
  Vector weights(p + edges.size(), C1);
  std::fill(weights.begin() + static_cast<std::ptrdiff_t>(p), weights.end(), C2);
  StructuredRegularizer reg{SimpleRegularizer::elastic_net_l1(std::move(weights), eps),
                            SparseColumnMatrix::from_columns(p, std::move(columns)), 0.0};
  reg.eta_B = default_eta_B(reg.B);
  return reg;
}

/// Edge list text: one "i j" pair (zero-based) per line, '#' starts a comment.
inline std::vector<Edge> parse_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long i = 0, j = 0;
    std::string rest;
    if (!(ls >> i >> j) || i < 0 || j < 0 || (ls >> rest)) {
      throw std::runtime_error("edge list: malformed line " + std::to_string(lineno));
    }
    edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return edges;
}

inline std::vector<Edge> read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list '" + path + "'");
  return parse_edge_list(in);
}

}  // namespace sdca_admm
