#pragma once

// Experiment harness: builds a problem, runs the solver for several repeats
// and writes per-checkpoint traces plus an across-repeat aggregate as CSV.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "data.hpp"
#include "metrics.hpp"
#include "solver.hpp"

namespace sdca_admm {

struct SyntheticGridSpec {
  std::size_t rows = 32;
  std::size_t cols = 32;
  std::size_t n = 512;
  double noise_sd = 0.1;
  std::size_t test_n = 1000;  // drawn from the same true weights
};

struct EdgeFile {
  std::string path;
};
struct EdgeCorrelation {
  double threshold = 0.5;
  std::size_t max_edges = std::numeric_limits<std::size_t>::max();
};
using EdgeSource = std::variant<EdgeFile, EdgeCorrelation>;

struct GraphGuidedSpec {
  std::string train_path;
  std::string test_path;  // empty: no test metrics
  EdgeSource edges = EdgeCorrelation{};
};

using ProblemSpec = std::variant<SyntheticGridSpec, GraphGuidedSpec>;

/// Unset constants follow the defaults: C1 = 0.1/sqrt(n), eps = 0.01 for the
/// grid problem; C1 = 0.01/sqrt(n), C2 = C1 |E| / p, eps = 0.02 for graphs.
struct RegConstants {
  std::optional<double> C1;
  std::optional<double> C2;
  std::optional<double> eps;
};

enum class SolverKind { Sdca, Batch };

struct ExperimentConfig {
  ProblemSpec problem = SyntheticGridSpec{};
  LossKind loss = LossKind::SmoothedHinge;
  SolverKind solver_kind = SolverKind::Sdca;
  SolverConfig solver;  // solver.seed is the base seed
  RegConstants reg;
  std::size_t repeats = 1;
  std::string output_path = "trace.csv";
  std::string reference_cache;  // empty: no on-disk cache
  bool record_wall_clock = true;

  void validate() const {
    if (repeats < 1) throw std::invalid_argument("ExperimentConfig: repeats must be >= 1");
    if (output_path.empty()) throw std::invalid_argument("ExperimentConfig: empty output path");
    if (const auto* s = std::get_if<SyntheticGridSpec>(&problem)) {
      if (s->rows == 0 || s->cols == 0 || s->n == 0) throw std::invalid_argument("synthetic grid: empty problem");
      if (!(s->noise_sd >= 0.0)) throw std::invalid_argument("synthetic grid: noise_sd must be >= 0");
    }
  }
};

/// One built instance (training problem plus optional test set).
struct ExperimentInstance {
  Problem problem;
  std::optional<Dataset> test;
  std::size_t edge_count = 0;
};

inline ExperimentInstance build_synthetic_instance(const SyntheticGridSpec& spec, const RegConstants& reg,
                                                   LossKind loss, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto syn = gen_synthetic_grid(spec.rows, spec.cols, spec.n, spec.noise_sd, rng);
  std::optional<Dataset> test;
  if (spec.test_n > 0) test = sample_linear_classification(syn.true_weights, spec.test_n, spec.noise_sd, rng);
  const double C = reg.C1.value_or(0.1 / std::sqrt(static_cast<double>(spec.n)));
  const double eps = reg.eps.value_or(0.01);
  return {Problem{std::move(syn.data), loss, build_overlapped_group(spec.rows, spec.cols, C, eps)}, std::move(test),
          0};
}

inline ExperimentInstance build_graph_instance(const GraphGuidedSpec& spec, const RegConstants& reg, LossKind loss) {
  Dataset train = read_libsvm(spec.train_path);
  std::optional<Dataset> test;
  if (!spec.test_path.empty()) {
    test = read_libsvm(spec.test_path);
    if (test->feature_dim() > train.feature_dim()) {
      // widen the training matrix so both share one feature space
      train = read_libsvm(spec.train_path, test->feature_dim());
    } else if (test->feature_dim() < train.feature_dim()) {
      test = read_libsvm(spec.test_path, train.feature_dim());
    }
  }
  const std::size_t p = train.feature_dim();
  std::vector<Edge> edges;
  if (const auto* f = std::get_if<EdgeFile>(&spec.edges)) {
    edges = read_edge_list(f->path);
  } else {
    const auto& c = std::get<EdgeCorrelation>(spec.edges);
    edges = build_edges_by_correlation(train, c.threshold, c.max_edges).edges;
  }
  const double n = static_cast<double>(train.sample_count());
  const double C1 = reg.C1.value_or(0.01 / std::sqrt(n));
  const double C2 = reg.C2.value_or(C1 * static_cast<double>(edges.size()) / static_cast<double>(p));
  const double eps = reg.eps.value_or(0.02);
  const std::size_t m = edges.size();
  return {Problem{std::move(train), loss, build_graph_guided(p, edges, C1, C2, eps)}, std::move(test), m};
}

/// The synthetic problem is redrawn for every repeat; graph data is fixed.
inline ExperimentInstance build_instance(const ExperimentConfig& config, std::size_t repeat) {
  return std::visit(
      [&](const auto& spec) -> ExperimentInstance {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, SyntheticGridSpec>) {
          return build_synthetic_instance(spec, config.reg, config.loss, config.solver.seed + repeat);
        } else {
          return build_graph_instance(spec, config.reg, config.loss);
        }
      },
      config.problem);
}

// ---------------------------------------------------------------------------
// Reference optimum

namespace detail {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  template <class T>
  void range(std::span<const T> v) {
    value(v.size());
    bytes(v.data(), v.size() * sizeof(T));
  }
  void matrix(const SparseColumnMatrix& m) {
    value(m.rows());
    value(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) {
      range(m.column_rows(j));
      range(m.column_values(j));
    }
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace detail

/// Hash of everything the reference run depends on.
inline std::uint64_t reference_key(const Problem& problem, const SolverConfig& ref) {
  detail::Fnv1a h;
  h.matrix(problem.data.Z);
  h.range(std::span<const double>(problem.data.labels));
  h.value(static_cast<int>(problem.loss));
  h.matrix(problem.reg.B);
  h.value(problem.reg.eta_B);
  const auto& s = problem.reg.simple;
  h.value(static_cast<int>(s.kind()));
  h.value(s.eps());
  for (std::size_t g = 0; g < s.group_count(); ++g) {
    h.value(s.weight(g));
    h.range(s.group(g));
  }
  h.value(ref.rho);
  h.value(ref.K);
  h.value(ref.max_epochs);
  h.value(ref.seed);
  return h.digest();
}

/// Text cache of reference optima, one "hex-key value" pair per line.
class ReferenceCache {
 public:
  explicit ReferenceCache(std::string path = {}) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    if (!in) throw std::runtime_error("cannot read reference cache " + path_);
    std::string key, value;
    while (in >> key >> value) {
      double v = 0.0;
      if (!detail::parse_double(value, v)) throw std::runtime_error("malformed reference cache " + path_);
      entries_[key] = v;
    }
  }

  std::optional<double> find(std::uint64_t key) const {
    const auto it = entries_.find(hex(key));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void store(std::uint64_t key, double value) {
    entries_[hex(key)] = value;
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write reference cache " + path_);
    for (const auto& [k, v] : entries_) out << k << ' ' << detail::format_double(v) << '\n';
  }

 private:
  static std::string hex(std::uint64_t key) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(key));
    return buf;
  }

  std::string path_;
  std::map<std::string, double> entries_;
};

/// Cached long-run estimate of min F_P for `problem`.
inline double reference_optimum(const Problem& problem, const SolverConfig& base, ReferenceCache& cache) {
  const SolverConfig ref = reference_config(base);
  const auto key = reference_key(problem, ref);
  if (auto hit = cache.find(key)) return *hit;
  const double value = estimate_optimum(problem, ref);
  cache.store(key, value);
  return value;
}

// ---------------------------------------------------------------------------
// CSV output

inline constexpr const char* kTraceHeader =
    "repeat,epoch,wall_seconds,primal_objective,excess_risk,dual_objective,feasibility,test_loss,test_error";

struct TraceRow {
  std::size_t repeat = 0;
  TraceRecord record;
  double excess_risk = 0.0;
};

namespace detail {

inline std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace detail

inline void write_trace_csv(const std::vector<TraceRow>& rows, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : rows) {
    const auto& t = r.record;
    out << std::to_string(r.repeat) << ',' << detail::format_double(t.epoch) << ',' << detail::format_double(t.wall_seconds) << ','
        << detail::format_double(t.primal_objective) << ',' << detail::format_double(r.excess_risk) << ','
        << detail::format_double(t.dual_objective) << ',' << detail::format_double(t.constraint_residual) << ','
        << detail::optional_field(t.test_loss) << ',' << detail::optional_field(t.test_error) << '\n';
  }
}

/// Per-epoch mean and population standard deviation across repeats. A metric
/// missing from some rows is averaged over the rows that have it.
inline void write_aggregate_csv(const std::vector<TraceRow>& rows, std::ostream& out) {
  static constexpr const char* names[] = {"wall_seconds",   "primal_objective", "excess_risk", "dual_objective",
                                          "feasibility",    "test_loss",        "test_error"};
  constexpr std::size_t M = std::size(names);
  struct Acc {
    std::size_t count = 0;
    std::array<std::vector<double>, M> values;
  };
  std::map<double, Acc> by_epoch;
  for (const auto& r : rows) {
    auto& a = by_epoch[r.record.epoch];
    ++a.count;
    const std::array<std::optional<double>, M> v{r.record.wall_seconds,        r.record.primal_objective,
                                                 r.excess_risk,                r.record.dual_objective,
                                                 r.record.constraint_residual, r.record.test_loss,
                                                 r.record.test_error};
    for (std::size_t k = 0; k < M; ++k)
      if (v[k]) a.values[k].push_back(*v[k]);
  }
  out << "epoch,repeats";
  for (const auto* name : names) out << ",mean_" << name << ",std_" << name;
  out << '\n';
  for (const auto& [epoch, a] : by_epoch) {
    out << detail::format_double(epoch) << ',' << std::to_string(a.count);
    for (const auto& vals : a.values) {
      if (vals.empty()) {
        out << ",,";
        continue;
      }
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= static_cast<double>(vals.size());
      out << ',' << detail::format_double(mean) << ',' << detail::format_double(std::sqrt(var));
    }
    out << '\n';
  }
}

/// "dir/trace.csv" -> "dir/trace_aggregate.csv"
inline std::string aggregate_path(const std::string& trace_path) {
  std::filesystem::path p(trace_path);
  const auto ext = p.extension().string();
  p.replace_filename(p.stem().string() + "_aggregate" + (ext.empty() ? ".csv" : ext));
  return p.string();
}

struct ExperimentResult {
  std::vector<TraceRow> rows;
  std::vector<double> reference_optima;  // one per repeat
  std::string trace_path;
  std::string aggregate_path;
};

/// Runs every repeat (seed = base seed + repeat index), computes excess risk
/// against the cached reference optimum and writes both CSV files.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.trace_path = config.output_path;
  result.aggregate_path = aggregate_path(config.output_path);

  // fail before any solver work when the outputs cannot be written
  std::ofstream trace_out(result.trace_path, std::ios::trunc);
  if (!trace_out) throw std::runtime_error("cannot write " + result.trace_path);
  std::ofstream agg_out(result.aggregate_path, std::ios::trunc);
  if (!agg_out) throw std::runtime_error("cannot write " + result.aggregate_path);

  ReferenceCache cache(config.reference_cache);
  std::optional<ExperimentInstance> fixed;
  for (std::size_t r = 0; r < config.repeats; ++r) {
    if (!fixed || std::holds_alternative<SyntheticGridSpec>(config.problem)) fixed = build_instance(config, r);
    const ExperimentInstance& inst = *fixed;
    SolverConfig cfg = config.solver;
    cfg.seed = config.solver.seed + r;
    const Dataset* test = inst.test ? &*inst.test : nullptr;
    const SolverResult run = config.solver_kind == SolverKind::Batch ? run_batch_admm(inst.problem, cfg, test)
                                                                     : run_sdca_admm(inst.problem, cfg, test);
    // the reference run uses the sampled K; batch runs share it with K = 1
    SolverConfig ref_base = cfg;
    if (config.solver_kind == SolverKind::Batch) ref_base.K = 1;
    double opt = reference_optimum(inst.problem, ref_base, cache);
    for (const auto& rec : run.trace) opt = std::min(opt, rec.primal_objective);
    result.reference_optima.push_back(opt);
    for (auto rec : run.trace) {
      if (!config.record_wall_clock) rec.wall_seconds = 0.0;
      const double excess = rec.primal_objective - opt;
      result.rows.push_back({r, std::move(rec), excess});
    }
  }
  write_trace_csv(result.rows, trace_out);
  write_aggregate_csv(result.rows, agg_out);
  trace_out.close();
  agg_out.close();
  if (!trace_out || !agg_out) throw std::runtime_error("error while writing " + result.trace_path);
  return result;
}

}  // namespace sdca_admm
