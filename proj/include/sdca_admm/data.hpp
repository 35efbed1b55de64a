#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "linalg.hpp"
#include "regularizers.hpp"

namespace sdca_admm {

/// Training or test samples. Z is p x n with one sample per column.
struct Dataset {
  SparseColumnMatrix Z;
  Vector labels;

  std::size_t feature_dim() const { return Z.rows(); }
  std::size_t sample_count() const { return Z.cols(); }

  void validate() const {
    if (labels.size() != Z.cols()) throw std::invalid_argument("Dataset: label count != column count");
    for (double y : labels) {
      if (y != 1.0 && y != -1.0) throw std::invalid_argument("Dataset: labels must be +1 or -1");
    }
  }
};

struct SyntheticProblem {
  Dataset data;
  Vector true_weights;
};

/// Draws n samples with i.i.d. standard normal features and labels
/// sign(z^T w0 + noise), noise ~ N(0, noise_sd^2). sign(0) is taken as +1.
inline Dataset sample_linear_classification(std::span<const double> w0, std::size_t n,
                                            double noise_sd, std::mt19937_64& rng) {
  const std::size_t p = w0.size();
  std::normal_distribution<double> normal;
  std::vector<std::vector<SparseColumnMatrix::Entry>> columns(n);
  Vector labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& col = columns[i];
    col.reserve(p);
    double margin = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double v = normal(rng);
      col.push_back({j, v});
      margin += v * w0[j];
    }
    const double noise = noise_sd > 0.0 ? noise_sd * normal(rng) : 0.0;
    labels[i] = (margin + noise) >= 0.0 ? 1.0 : -1.0;
  }
  return {SparseColumnMatrix::from_columns(p, std::move(columns)), std::move(labels)};
}

/// Overlapped-group synthetic classification data on a grid_rows x grid_cols
/// weight matrix. The true weight matrix is standard normal in its first
/// column and zero elsewhere, vectorized column-major.
inline SyntheticProblem gen_synthetic_grid(std::size_t grid_rows, std::size_t grid_cols, std::size_t n,
                                           double noise_sd, std::mt19937_64& rng) {
  if (n == 0) throw std::invalid_argument("gen_synthetic_grid: n must be >= 1");
  if (grid_rows == 0 || grid_cols == 0) throw std::invalid_argument("gen_synthetic_grid: empty grid");
  const std::size_t p = grid_rows * grid_cols;
  std::normal_distribution<double> normal;
  Vector w0(p, 0.0);
  for (std::size_t j = 0; j < grid_rows; ++j) w0[j] = normal(rng);
  Dataset data = sample_linear_classification(w0, n, noise_sd, rng);
  return {std::move(data), std::move(w0)};
}

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_index(std::string_view s, std::size_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Reads LIBSVM text ("label idx:val ...", 1-based indices). Labels in
/// {-1,+1} are kept, {0,1} map 0 -> -1, and {1,2} map 1 -> -1, 2 -> +1.
/// The feature dimension is the largest index seen, or `feature_dim` when
/// given (which must not be smaller).
inline Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> feature_dim = {}) {
  std::vector<std::vector<SparseColumnMatrix::Entry>> columns;
  std::vector<double> raw_labels;
  std::size_t max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("libsvm: line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string_view rest(line);
    auto next_token = [&]() -> std::string_view {
      const auto b = rest.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) {
        rest = {};
        return {};
      }
      rest.remove_prefix(b);
      const auto e = rest.find_first_of(" \t\r");
      const auto tok = rest.substr(0, e);
      rest.remove_prefix(e == std::string_view::npos ? rest.size() : e);
      return tok;
    };
    const auto label_tok = next_token();
    if (label_tok.empty()) continue;
    double label = 0.0;
    if (!detail::parse_double(label_tok, label)) fail("bad label '" + std::string(label_tok) + "'");
    std::vector<SparseColumnMatrix::Entry> col;
    std::set<std::size_t> seen;
    for (auto tok = next_token(); !tok.empty(); tok = next_token()) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) fail("expected idx:val, got '" + std::string(tok) + "'");
      std::size_t idx = 0;
      double val = 0.0;
      if (!detail::parse_index(tok.substr(0, colon), idx) || idx == 0) {
        fail("bad feature index in '" + std::string(tok) + "'");
      }
      if (!detail::parse_double(tok.substr(colon + 1), val) || !std::isfinite(val)) {
        fail("bad feature value in '" + std::string(tok) + "'");
      }
      if (!seen.insert(idx).second) fail("duplicate feature index " + std::to_string(idx));
      max_index = std::max(max_index, idx);
      col.push_back({idx - 1, val});
    }
    raw_labels.push_back(label);
    columns.push_back(std::move(col));
  }
  if (columns.empty()) throw std::runtime_error("libsvm: no samples");

  std::set<double> distinct(raw_labels.begin(), raw_labels.end());
  auto subset_of = [&](std::initializer_list<double> allowed) {
    return std::all_of(distinct.begin(), distinct.end(), [&](double v) {
      return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    });
  };
  Vector labels(raw_labels.size());
  if (subset_of({-1.0, 1.0})) {
    labels = raw_labels;
  } else if (subset_of({0.0, 1.0})) {
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = raw_labels[i] == 0.0 ? -1.0 : 1.0;
  } else if (subset_of({1.0, 2.0})) {
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = raw_labels[i] == 1.0 ? -1.0 : 1.0;
  } else {
    throw std::runtime_error("libsvm: labels are not binary ({-1,+1}, {0,1} or {1,2})");
  }

  std::size_t p = max_index;
  if (feature_dim) {
    if (*feature_dim < max_index) {
      throw std::runtime_error("libsvm: feature index " + std::to_string(max_index) +
                               " exceeds requested dimension " + std::to_string(*feature_dim));
    }
    p = *feature_dim;
  }
  return {SparseColumnMatrix::from_columns(p, std::move(columns)), std::move(labels)};
}

inline Dataset read_libsvm(const std::string& path, std::optional<std::size_t> feature_dim = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_libsvm(in, feature_dim);
}

/// Writes LIBSVM text with shortest round-trip formatting.
inline void write_libsvm(const Dataset& data, std::ostream& out) {
  for (std::size_t i = 0; i < data.sample_count(); ++i) {
    out << (data.labels[i] > 0 ? "+1" : "-1");
    const auto rows = data.Z.column_rows(i);
    const auto vals = data.Z.column_values(i);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out << ' ' << rows[k] + 1 << ':' << detail::format_double(vals[k]);
    }
    out << '\n';
  }
}

struct CorrelationEdges {
  std::vector<Edge> edges;
  IndexList constant_features;  // excluded: zero sample variance
};

/// Feature-similarity graph from thresholded sample correlations: edges
/// (i, j), i < j, with |corr| >= threshold, strongest first, at most
/// max_edges. Ties are broken by (i, j) order.
inline CorrelationEdges build_edges_by_correlation(
    const Dataset& data, double threshold,
    std::size_t max_edges = std::numeric_limits<std::size_t>::max()) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("build_edges_by_correlation: threshold must lie in (0, 1)");
  }
  const std::size_t p = data.feature_dim();
  const std::size_t n = data.sample_count();
  if (n < 2) throw std::invalid_argument("build_edges_by_correlation: need at least two samples");

  Vector mean(p, 0.0);
  Vector cross(p * p, 0.0);  // sum_k z_ki z_kj
  for (std::size_t s = 0; s < n; ++s) {
    const auto rows = data.Z.column_rows(s);
    const auto vals = data.Z.column_values(s);
    for (std::size_t a = 0; a < rows.size(); ++a) {
      mean[rows[a]] += vals[a];
      for (std::size_t b = a; b < rows.size(); ++b) cross[rows[a] * p + rows[b]] += vals[a] * vals[b];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto& m : mean) m *= inv_n;

  CorrelationEdges result;
  Vector sd(p);
  for (std::size_t i = 0; i < p; ++i) {
    const double var = cross[i * p + i] * inv_n - mean[i] * mean[i];
    // relative test: variance lost in cancellation counts as zero
    const double scale = cross[i * p + i] * inv_n;
    sd[i] = var > 1e-12 * scale && var > 0.0 ? std::sqrt(var) : 0.0;
    if (sd[i] == 0.0) result.constant_features.push_back(i);
  }

  struct Candidate {
    double strength;
    Edge edge;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < p; ++i) {
    if (sd[i] == 0.0) continue;
    for (std::size_t j = i + 1; j < p; ++j) {
      if (sd[j] == 0.0) continue;
      const double cov = cross[i * p + j] * inv_n - mean[i] * mean[j];
      const double r = std::clamp(cov / (sd[i] * sd[j]), -1.0, 1.0);
      if (std::abs(r) >= threshold) candidates.push_back({std::abs(r), {i, j}});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.strength > b.strength; });
  if (candidates.size() > max_edges) candidates.resize(max_edges);
  for (const auto& c : candidates) result.edges.push_back(c.edge);
  return result;
}

}  // namespace sdca_admm
