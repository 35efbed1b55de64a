#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "data.hpp"
#include "linalg.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "regularizers.hpp"

namespace sdca_admm {

/// min_w (1/n) sum_i f_i(z_i^T w) + psi(B^T w)
struct Problem {
  Dataset data;
  LossKind loss = LossKind::SmoothedHinge;
  StructuredRegularizer reg;

  std::size_t n() const { return data.sample_count(); }
  std::size_t p() const { return data.feature_dim(); }
  std::size_t d() const { return reg.split_dim(); }

  void validate() const {
    data.validate();
    if (n() == 0) throw std::invalid_argument("Problem: no samples");
    if (reg.B.rows() != p()) {
      throw std::invalid_argument("Problem: B has " + std::to_string(reg.B.rows()) +
                                  " rows but the data has " + std::to_string(p()) + " features");
    }
    if (reg.simple.dim() != reg.B.cols()) throw std::invalid_argument("Problem: psi dimension != B columns");
    if (!(reg.eta_B > 0.0)) throw std::invalid_argument("Problem: eta_B must be positive");
  }
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linearization constant policies.
struct PaperDefaultEta {};  // eta_Z = 1.1 sigma_max(Z_I^T Z_I), eta_B = sigma_max(B B^T) + 1
struct TheoremSafeEta {};   // eta_Z = 1.01 (1 + 2 gamma n (1 - 1/K)) sigma_max(Z_I^T Z_I)
struct ExplicitEta {
  Vector values;  // eta_B: one value; eta_Z: one per block, or one shared by all blocks
};
using EtaBPolicy = std::variant<PaperDefaultEta, ExplicitEta>;
using EtaZPolicy = std::variant<PaperDefaultEta, TheoremSafeEta, ExplicitEta>;

struct SolverConfig {
  double rho = 0.1;
  std::optional<double> gamma;  // unset: 1/n, or 1/(4n) under TheoremSafeEta
  std::size_t K = 1;
  std::size_t max_epochs = 100;
  EtaBPolicy eta_B_policy = PaperDefaultEta{};
  EtaZPolicy eta_Z_policy = PaperDefaultEta{};
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 1;  // epochs

  bool early_stop = false;
  double feasibility_tol = 1e-8;
  double objective_tol = 1e-8;

  bool theorem_safe() const { return std::holds_alternative<TheoremSafeEta>(eta_Z_policy); }
};

inline double resolved_gamma(const SolverConfig& config, std::size_t n) {
  if (config.gamma) return *config.gamma;
  return config.theorem_safe() ? 1.0 / (4.0 * static_cast<double>(n)) : 1.0 / static_cast<double>(n);
}

inline void validate_config(const SolverConfig& config, std::size_t n) {
  if (!(config.rho > 0.0)) throw std::invalid_argument("SolverConfig: rho must be positive");
  if (!(resolved_gamma(config, n) > 0.0)) throw std::invalid_argument("SolverConfig: gamma must be positive");
  if (config.K < 1 || config.K > n) {
    throw std::invalid_argument("SolverConfig: K must satisfy 1 <= K <= n (K=" + std::to_string(config.K) +
                                ", n=" + std::to_string(n) + ")");
  }
  if (config.checkpoint_every == 0) throw std::invalid_argument("SolverConfig: checkpoint_every must be >= 1");
}

/// Disjoint blocks I_1..I_K covering {0..n-1}.
struct Partition {
  std::vector<IndexList> blocks;

  std::size_t size() const { return blocks.size(); }
};

/// Random permutation of {0..n-1} cut into K contiguous chunks; the first
/// n mod K chunks hold ceil(n/K) indices, the rest floor(n/K).
inline Partition make_partition(std::size_t n, std::size_t K, std::mt19937_64& rng) {
  if (K < 1 || K > n) throw std::invalid_argument("make_partition: need 1 <= K <= n");
  IndexList perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Partition part;
  part.blocks.reserve(K);
  const std::size_t base = n / K;
  const std::size_t extra = n % K;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    part.blocks.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                             perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return part;
}

/// Uniform block index; every sample is then selected with probability 1/K.
inline std::size_t draw_block(const Partition& part, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(0, part.size() - 1)(rng);
}

struct DualState {
  Vector x;    // n
  Vector y;    // d
  Vector w;    // p
  Vector zx;   // Z x, maintained incrementally
  Vector by;   // B y
  Vector eta_Z;  // per block
  double eta_B = 0.0;
  Partition partition;
  std::size_t iterations = 0;
};

struct TraceRecord {
  double epoch = 0.0;
  double wall_seconds = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double constraint_residual = 0.0;
  std::optional<double> test_loss;
  std::optional<double> test_error;
};

using TraceCallback = std::function<void(const TraceRecord&)>;

struct SolverResult {
  DualState state;
  std::vector<TraceRecord> trace;
  bool stopped_early = false;
};

// ---------------------------------------------------------------------------
// Objectives and optimality diagnostics

/// F_P(w) = (1/n) sum_i f_i(z_i^T w) + psi(B^T w)
inline double primal_objective(const Problem& problem, std::span<const double> w) {
  if (w.size() != problem.p()) throw std::invalid_argument("primal_objective: dimension mismatch");
  double risk = 0.0;
  for (std::size_t i = 0; i < problem.n(); ++i) {
    risk += loss_value(problem.loss, problem.data.Z.column_dot(i, w), problem.data.labels[i]);
  }
  return risk / static_cast<double>(problem.n()) + problem.reg.eval_composite(w);
}

/// (1/n) sum_i f_i*(x_i) + psi*(y/n). The negated value equals the primal
/// optimum at a dual optimum with Zx + By = 0.
inline double dual_objective(const Problem& problem, std::span<const double> x, std::span<const double> y) {
  if (x.size() != problem.n() || y.size() != problem.d()) {
    throw std::invalid_argument("dual_objective: dimension mismatch");
  }
  const double n = static_cast<double>(problem.n());
  double total = 0.0;
  for (std::size_t i = 0; i < problem.n(); ++i) {
    total += loss_conjugate(problem.loss, x[i], problem.data.labels[i]);
  }
  Vector scaled(y.begin(), y.end());
  for (auto& v : scaled) v /= n;
  return total / n + problem.reg.simple.eval_conjugate(scaled);
}

/// ||Z x + B y|| recomputed from scratch.
inline double feasibility_residual(const Problem& problem, std::span<const double> x, std::span<const double> y) {
  Vector r = matvec(problem.data.Z, x);
  const Vector by = matvec(problem.reg.B, y);
  for (std::size_t j = 0; j < r.size(); ++j) r[j] += by[j];
  return norm2(r);
}

struct KktResiduals {
  double feasibility = 0.0;
  double loss_stationarity = 0.0;  // max_i dist(z_i^T w, subdifferential of f_i* at x_i)
};

inline KktResiduals kkt_residuals(const Problem& problem, const DualState& state) {
  KktResiduals r;
  r.feasibility = feasibility_residual(problem, state.x, state.y);
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const double margin = problem.data.Z.column_dot(i, state.w);
    const auto sub = loss_conjugate_subdifferential(problem.loss, state.x[i], problem.data.labels[i]);
    r.loss_stationarity = std::max(r.loss_stationarity, sub.distance(margin));
  }
  return r;
}

// ---------------------------------------------------------------------------
// State setup

/// sigma_max(Z_I^T Z_I) for every block.
inline Vector block_spectral_norms(const SparseColumnMatrix& Z, const Partition& part) {
  Vector sigma(part.size());
  for (std::size_t k = 0; k < part.size(); ++k) {
    sigma[k] = spectral_norm_gram(select_columns(Z, part.blocks[k]), 1e-10, 20000).value;
  }
  return sigma;
}

inline Vector resolve_eta_Z(const Problem& problem, const SolverConfig& config, const Partition& part) {
  const std::size_t K = part.size();
  if (const auto* ex = std::get_if<ExplicitEta>(&config.eta_Z_policy)) {
    if (ex->values.size() != 1 && ex->values.size() != K) {
      throw std::invalid_argument("explicit eta_Z needs 1 or K values");
    }
    Vector eta = ex->values.size() == 1 ? Vector(K, ex->values[0]) : ex->values;
    for (double e : eta) {
      if (!(e > 0.0)) throw std::invalid_argument("explicit eta_Z must be positive");
    }
    return eta;
  }
  Vector eta = block_spectral_norms(problem.data.Z, part);
  double factor = 1.1;
  if (config.theorem_safe()) {
    const double gamma = resolved_gamma(config, problem.n());
    const double bound = 1.0 + 2.0 * gamma * static_cast<double>(problem.n()) * (1.0 - 1.0 / static_cast<double>(K));
    factor = 1.01 * bound;
  }
  for (auto& e : eta) e = e > 0.0 ? factor * e : 1.0;  // an all-zero block accepts any eta
  return eta;
}

inline double resolve_eta_B(const Problem& problem, const SolverConfig& config) {
  if (const auto* ex = std::get_if<ExplicitEta>(&config.eta_B_policy)) {
    if (ex->values.size() != 1 || !(ex->values[0] > 0.0)) {
      throw std::invalid_argument("explicit eta_B needs one positive value");
    }
    return ex->values[0];
  }
  return problem.reg.eta_B;
}

/// x = 0, y = 0, w = 0 plus the partition and linearization constants.
inline DualState initial_state(const Problem& problem, const SolverConfig& config, std::mt19937_64& rng) {
  problem.validate();
  validate_config(config, problem.n());
  DualState s;
  s.x.assign(problem.n(), 0.0);
  s.y.assign(problem.d(), 0.0);
  s.w.assign(problem.p(), 0.0);
  s.zx.assign(problem.p(), 0.0);
  s.by.assign(problem.p(), 0.0);
  s.partition = make_partition(problem.n(), config.K, rng);
  s.eta_Z = resolve_eta_Z(problem, config, s.partition);
  s.eta_B = resolve_eta_B(problem, config);
  return s;
}

// ---------------------------------------------------------------------------
// One iteration, split into its three updates

/// y-update: q = y + B^T {w - rho (Zx + By)} / (rho eta_B), then
/// y = q - prox(q | n psi(rho eta_B .) / (rho eta_B)). With a = rho eta_B the
/// prox of the scaled composition is prox_psi(a q, n a) / a.
inline Vector step_y(const Problem& problem, const DualState& state, const SolverConfig& config) {
  const double a = config.rho * state.eta_B;
  Vector v(problem.p());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = state.w[j] - config.rho * (state.zx[j] + state.by[j]);
  Vector aq = matvec_transpose(problem.reg.B, v);
  for (std::size_t j = 0; j < aq.size(); ++j) aq[j] += a * state.y[j];
  Vector y = problem.reg.simple.prox_conjugate(aq, static_cast<double>(problem.n()) * a);
  for (auto& e : y) e /= a;
  return y;
}

namespace detail {

inline Vector step_x_given_by(const Problem& problem, const DualState& state, std::size_t block,
                              std::span<const double> by_new, const SolverConfig& config) {
  const auto& idx = state.partition.blocks.at(block);
  const double c = config.rho * state.eta_Z[block];
  Vector u(problem.p());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = state.w[j] - config.rho * (state.zx[j] + by_new[j]);
  Vector out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    const double p_i = state.x[i] + problem.data.Z.column_dot(i, u) / c;
    out[k] = prox_dual_loss(problem.loss, p_i, problem.data.labels[i], c);
  }
  return out;
}

}  // namespace detail

/// x-update on block I: p_I = x_I + Z_I^T {w - rho (Zx + B y_new)} / (rho eta_I),
/// then x_i = prox(p_i | f_i* / (rho eta_I)) for each i in I. Returns the new
/// values in block order; coordinates outside the block are untouched.
inline Vector step_x(const Problem& problem, const DualState& state, std::size_t block,
                     std::span<const double> y_new, const SolverConfig& config) {
  const Vector by_new = matvec(problem.reg.B, y_new);
  return detail::step_x_given_by(problem, state, block, by_new, config);
}

/// w - gamma rho { n (Zx_new + By_new) - (n - n/K)(Zx_old + By_old) }
inline Vector step_w(const DualState& state, std::span<const double> zx_new, std::span<const double> by_new,
                     std::span<const double> zx_old, std::span<const double> by_old,
                     const SolverConfig& config) {
  const double n = static_cast<double>(state.x.size());
  const double gr = resolved_gamma(config, state.x.size()) * config.rho;
  const double carry = n - n / static_cast<double>(config.K);
  Vector w(state.w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = state.w[j] - gr * (n * (zx_new[j] + by_new[j]) - carry * (zx_old[j] + by_old[j]));
  }
  return w;
}

/// One full iteration on block k, advancing `state` in place. The Zx cache
/// is updated incrementally and recomputed from scratch every n iterations.
inline void iterate_block(const Problem& problem, const SolverConfig& config, DualState& state, std::size_t block) {
  Vector y_new = step_y(problem, state, config);
  Vector by_new = matvec(problem.reg.B, y_new);
  const Vector x_block = detail::step_x_given_by(problem, state, block, by_new, config);

  Vector zx_new = state.zx;
  const auto& idx = state.partition.blocks[block];
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    const double delta = x_block[k] - state.x[i];
    if (delta != 0.0) problem.data.Z.axpy_column(i, delta, zx_new);
  }

  state.w = step_w(state, zx_new, by_new, state.zx, state.by, config);
  for (std::size_t k = 0; k < idx.size(); ++k) state.x[idx[k]] = x_block[k];
  state.y = std::move(y_new);
  state.by = std::move(by_new);
  state.zx = std::move(zx_new);
  ++state.iterations;
  if (state.iterations % problem.n() == 0) state.zx = matvec(problem.data.Z, state.x);
}

// ---------------------------------------------------------------------------
// Drivers

namespace detail {

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

inline TraceRecord make_record(const Problem& problem, const DualState& state, double epoch, double wall,
                               const Dataset* test) {
  if (!all_finite(state.w) || !all_finite(state.x) || !all_finite(state.y)) {
    throw DivergenceError("non-finite iterate at epoch " + std::to_string(epoch) +
                          "; the configuration diverges (check rho, gamma and eta)");
  }
  TraceRecord rec;
  rec.epoch = epoch;
  rec.wall_seconds = wall;
  rec.primal_objective = primal_objective(problem, state.w);
  rec.dual_objective = dual_objective(problem, state.x, state.y);
  rec.constraint_residual = feasibility_residual(problem, state.x, state.y);
  if (!std::isfinite(rec.primal_objective)) {
    throw DivergenceError("non-finite primal objective at epoch " + std::to_string(epoch));
  }
  if (test != nullptr) {
    const auto m = compute_test_metrics(state.w, *test, problem.loss);
    rec.test_loss = m.loss;
    rec.test_error = m.error;
  }
  return rec;
}

}  // namespace detail

/// Stochastic dual coordinate ascent ADMM. Starts from x = y = w = 0, runs
/// max_epochs epochs of K block iterations each, and records a TraceRecord
/// at epoch 0, every checkpoint_every epochs and at the end. Deterministic
/// for a fixed seed apart from wall-clock fields.
inline SolverResult run_sdca_admm(const Problem& problem, const SolverConfig& config,
                                  const Dataset* test = nullptr, const TraceCallback& callback = {}) {
  if (test != nullptr && test->feature_dim() != problem.p()) {
    throw std::invalid_argument("run_sdca_admm: test set feature dimension differs from training data");
  }
  std::mt19937_64 rng(config.seed);
  SolverResult result;
  DualState& state = result.state;
  state = initial_state(problem, config, rng);

  const std::size_t K = config.K;
  double wall = 0.0;
  auto record = [&](std::size_t epoch) {
    auto rec = detail::make_record(problem, state, static_cast<double>(epoch), wall, test);
    if (callback) callback(rec);
    result.trace.push_back(std::move(rec));
  };
  record(0);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t t = 0; t < K; ++t) iterate_block(problem, config, state, draw_block(state.partition, rng));
    wall += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (epoch % config.checkpoint_every != 0 && epoch != config.max_epochs) continue;
    const double previous = result.trace.back().primal_objective;
    record(epoch);
    if (config.early_stop) {
      const auto& last = result.trace.back();
      if (last.constraint_residual <= config.feasibility_tol &&
          std::abs(last.primal_objective - previous) <= config.objective_tol * (1.0 + std::abs(previous))) {
        result.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

/// Linearized batch ADMM: the K = 1 case of run_sdca_admm. The G and Q
/// linearization terms are kept, so every iteration touches all samples.
inline SolverResult run_batch_admm(const Problem& problem, SolverConfig config, const Dataset* test = nullptr,
                                   const TraceCallback& callback = {}) {
  config.K = 1;
  return run_sdca_admm(problem, config, test, callback);
}

/// Configuration for the long reference run used to estimate min F_P:
/// theorem-safe constants, `budget_factor` times the epoch budget, early
/// stopping on tight tolerances.
inline SolverConfig reference_config(const SolverConfig& base, std::size_t budget_factor = 50) {
  SolverConfig ref = base;
  ref.eta_Z_policy = TheoremSafeEta{};
  ref.gamma.reset();
  ref.max_epochs = std::max<std::size_t>(base.max_epochs, 1) * budget_factor;
  ref.checkpoint_every = std::max<std::size_t>(1, ref.max_epochs / 500);
  ref.early_stop = true;
  ref.feasibility_tol = 1e-12;
  ref.objective_tol = 1e-15;
  return ref;
}

/// Best primal objective seen along a reference run.
inline double estimate_optimum(const Problem& problem, const SolverConfig& ref_config) {
  const auto result = run_sdca_admm(problem, ref_config);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : result.trace) best = std::min(best, r.primal_objective);
  return best;
}

}  // namespace sdca_admm
