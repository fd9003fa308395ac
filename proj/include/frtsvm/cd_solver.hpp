#pragma once

// Dual coordinate descent for the box-constrained twin-plane duals
//
//   min_a  f(a) = 1/2 a^T Qbar a - e^T a    s.t.  0 <= a <= upper
//
// where Qbar = G Q is never formed: Q = inner^-1 G^T is kept column-wise and
// the gradient is read off the maintained vector u = -Q a as
//   grad_i f(a) = -G_i u - 1.
// solve_plain sweeps coordinates cyclically; solve_shrinking adds randomized
// order and active-set shrinking with a full-set confirmation pass.

#include "frtsvm/common.hpp"
#include "frtsvm/kernel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace frtsvm {

// Non-owning view of one dual problem. The referenced factor and matrix must
// outlive the view.
struct DualProblem {
  const QFactor* qfactor = nullptr;
  const RowMatrix* g_other = nullptr;  // one row per dual variable
  Vector upper;                        // box upper bounds

  Index size() const { return upper.size(); }

  void validate() const {
    if (qfactor == nullptr || g_other == nullptr) throw ConfigError("DualProblem: missing factor");
    if (qfactor->variables() != size() || g_other->rows() != size() || qfactor->qbar_diag.size() != size())
      throw ConfigError("DualProblem: inconsistent dimensions");
    if (g_other->cols() != qfactor->dim()) throw ConfigError("DualProblem: G and Q disagree on dimension");
    if ((upper.array() < 0.0).any()) throw ConfigError("DualProblem: negative upper bound");
  }
};

// Owning holder for a dual given by a dense symmetric Qbar, used by tests and
// the timing harness. Represents Qbar = I * Qbar, so G is the identity.
struct DenseDual {
  QFactor qfactor;
  RowMatrix g_other;
  Vector upper;

  DenseDual(const Matrix& qbar, Vector ub) : g_other(RowMatrix::Identity(qbar.rows(), qbar.rows())), upper(std::move(ub)) {
    qfactor.q = qbar;
    qfactor.qbar_diag = qbar.diagonal();
  }
  DualProblem view() const { return {&qfactor, &g_other, upper}; }
};

struct SolverConfig {
  double epsilon = 1e-4;
  long max_epochs = 1000;
  std::uint64_t seed = 1;
  bool shrinking = true;
  bool trace = false;  // record per-epoch (objective, gap, active size)

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("solver epsilon must be > 0");
    if (max_epochs < 1) throw ConfigError("solver max_epochs must be >= 1");
  }
};

struct SolverState {
  Vector alpha;
  Vector u_aux;  // -Q alpha
  IndexList active;
  double mbar = std::numeric_limits<double>::infinity();
  double mbar_low = -std::numeric_limits<double>::infinity();

  static SolverState zero(const DualProblem& p) {
    SolverState s;
    s.alpha = Vector::Zero(p.size());
    s.u_aux = Vector::Zero(p.qfactor->dim());
    s.active.resize(static_cast<std::size_t>(p.size()));
    std::iota(s.active.begin(), s.active.end(), Index{0});
    return s;
  }
};

struct TraceRow {
  long epoch;
  double objective;
  double kkt_gap;
  Index active_size;
};

struct SolverReport {
  Vector alpha;
  double objective = 0.0;
  double kkt_gap = 0.0;
  long epochs = 0;
  long updates = 0;
  long shrink_events = 0;
  long skipped = 0;  // coordinates with non-positive Qbar_ii
  bool converged = false;
  std::chrono::duration<double> wall_time{0};
  std::vector<TraceRow> trace;
};

// Projected gradient of coordinate i for the box [0, upper_i].
inline double projected_gradient(double alpha_i, double grad_i, double upper_i) {
  if (alpha_i < 0.0 || alpha_i > upper_i) throw ConfigError("projected_gradient: alpha outside its box");
  if (upper_i == 0.0) return 0.0;
  if (alpha_i == 0.0) return std::min(0.0, grad_i);
  if (alpha_i == upper_i) return std::max(0.0, grad_i);
  return grad_i;
}

inline double coordinate_gradient(const SolverState& s, Index i, const DualProblem& p) {
  return -p.g_other->row(i).dot(s.u_aux) - 1.0;
}

namespace detail {

inline constexpr double kZeroProjectedGradient = 1e-12;

// Exact minimizer of the one-variable subproblem given the current gradient.
inline bool apply_step(SolverState& s, Index i, const DualProblem& p, double grad) {
  const double qii = p.qfactor->qbar_diag(i);
  const double old = s.alpha(i);
  const double next = std::min(std::max(old - grad / qii, 0.0), p.upper(i));
  if (next == old) return false;
  s.alpha(i) = next;
  s.u_aux.noalias() -= (next - old) * p.qfactor->q.col(i);
  return true;
}

// Gap max(0, max p) - min(0, min p) over a set of projected gradients.
struct GapTracker {
  double hi = 0.0;
  double lo = 0.0;
  void add(double pg) {
    hi = std::max(hi, pg);
    lo = std::min(lo, pg);
  }
  double gap() const { return hi - lo; }
};

}  // namespace detail

// One coordinate descent step on coordinate i. Returns true when alpha_i moved.
inline bool cd_update(SolverState& s, Index i, const DualProblem& p) {
  if (p.qfactor->qbar_diag(i) <= 0.0) return false;
  const double grad = coordinate_gradient(s, i, p);
  const double pg = projected_gradient(s.alpha(i), grad, p.upper(i));
  if (std::abs(pg) <= detail::kZeroProjectedGradient) return false;
  return detail::apply_step(s, i, p, grad);
}

// Full gradient Qbar alpha - e, recomputed from scratch.
inline Vector dual_gradient(const DualProblem& p, const Vector& alpha) {
  return (*p.g_other) * (p.qfactor->q * alpha) - Vector::Ones(p.size());
}

inline double dual_objective(const DualProblem& p, const Vector& alpha) {
  const Vector qa = (*p.g_other) * (p.qfactor->q * alpha);
  return 0.5 * alpha.dot(qa) - alpha.sum();
}

// max(0, max_i pg_i) - min(0, min_i pg_i) at alpha, from a fresh gradient.
inline double kkt_gap(const DualProblem& p, const Vector& alpha) {
  const Vector grad = dual_gradient(p, alpha);
  detail::GapTracker t;
  for (Index i = 0; i < p.size(); ++i) {
    if (p.qfactor->qbar_diag(i) <= 0.0) continue;
    t.add(projected_gradient(alpha(i), grad(i), p.upper(i)));
  }
  return t.gap();
}

namespace detail {

inline SolverReport finish(const DualProblem& p, SolverState& s, SolverReport r,
                           std::chrono::steady_clock::time_point t0) {
  r.alpha = s.alpha;
  r.objective = dual_objective(p, s.alpha);
  r.wall_time = std::chrono::steady_clock::now() - t0;
  return r;
}

inline void record(SolverReport& r, const DualProblem& p, const SolverState& s, double gap, Index active) {
  const Vector qa = -(*p.g_other) * s.u_aux;
  r.trace.push_back({r.epochs, 0.5 * s.alpha.dot(qa) - s.alpha.sum(), gap, active});
}

}  // namespace detail

// Cyclic coordinate descent over all variables in index order.
inline SolverReport solve_plain(const DualProblem& p, const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SolverState s = SolverState::zero(p);
  SolverReport r;
  const Index n = p.size();
  for (Index i = 0; i < n; ++i)
    if (p.qfactor->qbar_diag(i) <= 0.0) ++r.skipped;

  while (r.epochs < cfg.max_epochs) {
    detail::GapTracker sweep;
    for (Index i = 0; i < n; ++i) {
      if (p.qfactor->qbar_diag(i) <= 0.0) continue;
      const double grad = coordinate_gradient(s, i, p);
      const double pg = projected_gradient(s.alpha(i), grad, p.upper(i));
      sweep.add(pg);
      if (std::abs(pg) > detail::kZeroProjectedGradient && detail::apply_step(s, i, p, grad)) ++r.updates;
    }
    ++r.epochs;
    if (cfg.trace) detail::record(r, p, s, sweep.gap(), n);
    if (sweep.gap() < cfg.epsilon) {
      r.kkt_gap = kkt_gap(p, s.alpha);
      if (r.kkt_gap <= cfg.epsilon) {
        r.converged = true;
        break;
      }
    }
  }
  if (!r.converged) r.kkt_gap = kkt_gap(p, s.alpha);
  return detail::finish(p, s, std::move(r), t0);
}

// Coordinate descent with heuristic shrinking and randomized sweep order.
// Variables at a bound whose gradient lies beyond the previous sweep's
// extreme projected gradients are dropped from the active set. Once the
// active set meets the gap, it is reset to the full set; termination
// requires a full-set sweep within the gap.
inline SolverReport solve_shrinking(const DualProblem& p, const SolverConfig& cfg) {
  if (!cfg.shrinking) return solve_plain(p, cfg);
  p.validate();
  cfg.validate();
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto t0 = std::chrono::steady_clock::now();
  SolverState s = SolverState::zero(p);
  SolverReport r;
  const Index n = p.size();
  std::mt19937_64 rng(cfg.seed);

  // Coordinates with a non-positive diagonal can never be updated.
  s.active.clear();
  for (Index i = 0; i < n; ++i) {
    if (p.qfactor->qbar_diag(i) > 0.0)
      s.active.push_back(i);
    else
      ++r.skipped;
  }
  const IndexList full = s.active;

  while (r.epochs < cfg.max_epochs) {
    double hi = -inf;
    double lo = inf;
    std::shuffle(s.active.begin(), s.active.end(), rng);
    std::size_t active_size = s.active.size();
    for (std::size_t k = 0; k < active_size; ++k) {
      const Index i = s.active[k];
      const double grad = coordinate_gradient(s, i, p);
      const double a = s.alpha(i);
      const double ub = p.upper(i);
      double pg = 0.0;
      if (a == 0.0) {
        if (grad > s.mbar) {
          std::swap(s.active[k], s.active[--active_size]);
          --k;
          ++r.shrink_events;
          continue;
        }
        if (grad < 0.0 && ub > 0.0) pg = grad;
      } else if (a == ub) {
        if (grad < s.mbar_low) {
          std::swap(s.active[k], s.active[--active_size]);
          --k;
          ++r.shrink_events;
          continue;
        }
        if (grad > 0.0) pg = grad;
      } else {
        pg = grad;
      }
      hi = std::max(hi, pg);
      lo = std::min(lo, pg);
      if (std::abs(pg) > detail::kZeroProjectedGradient && detail::apply_step(s, i, p, grad)) ++r.updates;
    }
    s.active.resize(active_size);
    ++r.epochs;

    const double gap = (active_size == 0) ? 0.0 : std::max(hi, 0.0) - std::min(lo, 0.0);
    if (cfg.trace) detail::record(r, p, s, gap, static_cast<Index>(active_size));

    if (gap < cfg.epsilon) {
      if (s.active.size() == full.size()) {
        r.kkt_gap = kkt_gap(p, s.alpha);
        if (r.kkt_gap <= cfg.epsilon) {
          r.converged = true;
          break;
        }
      }
      s.active = full;
      s.mbar = inf;
      s.mbar_low = -inf;
      continue;
    }
    s.mbar = hi > 0.0 ? hi : inf;
    s.mbar_low = lo < 0.0 ? lo : -inf;
  }
  if (!r.converged) r.kkt_gap = kkt_gap(p, s.alpha);
  return detail::finish(p, s, std::move(r), t0);
}

inline SolverReport solve(const DualProblem& p, const SolverConfig& cfg) {
  return cfg.shrinking ? solve_shrinking(p, cfg) : solve_plain(p, cfg);
}

// ---------------------------------------------------------------------------
// Reference solver used to check the coordinate descent routes. Projected
// gradient descent with step 1/L on a dense Qbar, followed by a KKT check.

struct OracleOptions {
  Index max_dim = 50;
  long max_iterations = 5'000'000;
  double tolerance = 1e-10;  // target KKT gap
};

struct OracleResult {
  Vector alpha;
  double objective = 0.0;
  double kkt_gap = 0.0;
  long iterations = 0;
  bool converged = false;
};

inline double box_kkt_gap(const Matrix& qbar, const Vector& e, const Vector& upper, const Vector& alpha) {
  const Vector grad = qbar * alpha - e;
  detail::GapTracker t;
  for (Index i = 0; i < alpha.size(); ++i) t.add(projected_gradient(alpha(i), grad(i), upper(i)));
  return t.gap();
}

inline OracleResult brute_force_oracle(const Matrix& qbar, const Vector& e, const Vector& upper,
                                       const OracleOptions& opts = {}) {
  const Index n = qbar.rows();
  if (qbar.cols() != n || e.size() != n || upper.size() != n) throw ConfigError("oracle: dimension mismatch");
  if (n > opts.max_dim) throw ConfigError("oracle: dimension " + std::to_string(n) + " above limit");
  if ((upper.array() < 0.0).any()) throw ConfigError("oracle: negative upper bound");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(qbar, Eigen::EigenvaluesOnly);
  const double lipschitz = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
  const double step = 1.0 / lipschitz;

  OracleResult res;
  Vector alpha = Vector::Zero(n);
  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    if (res.iterations % 32 == 0 && box_kkt_gap(qbar, e, upper, alpha) < opts.tolerance) break;
    const Vector grad = qbar * alpha - e;
    alpha = (alpha - step * grad).cwiseMax(0.0).cwiseMin(upper);
  }
  res.alpha = alpha;
  res.kkt_gap = box_kkt_gap(qbar, e, upper, alpha);
  res.converged = res.kkt_gap < std::max(opts.tolerance, 1e-8);
  res.objective = 0.5 * alpha.dot(qbar * alpha) - e.dot(alpha);
  return res;
}

}  // namespace frtsvm
