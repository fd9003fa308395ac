#pragma once

#include "frtsvm/cd_solver.hpp"
#include "frtsvm/common.hpp"
#include "frtsvm/data.hpp"
#include "frtsvm/kernel.hpp"
#include "frtsvm/membership.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <variant>

namespace frtsvm {

enum class Mode { frtsvm, tsvm };

inline const char* to_string(Mode m) { return m == Mode::frtsvm ? "frtsvm" : "tsvm"; }

inline Mode mode_from_string(const std::string& s) {
  if (s == "frtsvm") return Mode::frtsvm;
  if (s == "tsvm") return Mode::tsvm;
  throw ConfigError("unknown mode '" + s + "' (expected frtsvm or tsvm)");
}

// Ridge added to both inner matrices by the plain TSVM baseline.
inline constexpr double kTsvmRidge = 0.01;

struct TrainConfig {
  // FR-TSVM: c1/c2 weight the margin terms of plane +/-, c3/c4 scale the
  // fuzzy slack boxes. TSVM: c1/c2 are the slack boxes, c3/c4 unused.
  double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;
  KernelSpec kernel = KernelSpec::gaussian(1.0);
  MembershipParams membership;
  SolverConfig solver;
  Mode mode = Mode::frtsvm;
  bool scale = true;               // fit a [0,1] min-max scaler on the training data
  bool unit_memberships = false;   // force s = 1 (always on in tsvm mode)
  bool require_convergence = true; // throw SolverError when a dual does not converge

  void validate() const {
    if (!(c1 > 0.0 && c2 > 0.0 && c3 > 0.0 && c4 > 0.0)) throw ConfigError("c1..c4 must all be > 0");
    kernel.validate();
    membership.validate();
    solver.validate();
  }
};

struct LinearModel {
  Vector w_plus, w_minus;
  double b_plus = 0.0, b_minus = 0.0;
  MinMaxScaler scaler;
  TrainConfig config;
};

struct KernelModel {
  Matrix support;  // scaled training features
  Vector coeff_plus, coeff_minus;
  double b_plus = 0.0, b_minus = 0.0;
  KernelSpec kernel;
  Matrix gram_xx;  // gram(support, support)
  double norm_plus = 0.0, norm_minus = 0.0;  // sqrt(w^T K w), clamped below
  MinMaxScaler scaler;
  TrainConfig config;

  // Recomputes gram_xx and the plane norms from support and coefficients.
  void refresh_cache() {
    gram_xx = gram(support, kernel);
    norm_plus = std::max(std::sqrt(std::max(coeff_plus.dot(gram_xx * coeff_plus), 0.0)), 1e-12);
    norm_minus = std::max(std::sqrt(std::max(coeff_minus.dot(gram_xx * coeff_minus), 0.0)), 1e-12);
  }
};

using Model = std::variant<LinearModel, KernelModel>;

struct TrainDiagnostics {
  SolverReport plus;   // dual of plane + (variables over the -1 class)
  SolverReport minus;  // dual of plane - (variables over the +1 class)
  double stationarity_plus = 0.0;
  double stationarity_minus = 0.0;
  double jitter_plus = 0.0;
  double jitter_minus = 0.0;
  MembershipVector memberships;
  std::chrono::duration<double> wall_time{0};

  bool converged() const { return plus.converged && minus.converged; }
};

template <typename M>
struct Trained {
  M model;
  TrainDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Training stages. train_* compose these; the grid search reuses the
// intermediate results across cells that share them.

// Everything that depends only on data, kernel, membership and mode.
struct PreparedData {
  MinMaxScaler scaler;
  Dataset scaled;
  ClassSplit split;
  Matrix gram_xx;  // kernel route only
  MembershipVector memberships;
  Matrix h_plus;   // [X+, e] or [K(X+, X), e]
  Matrix h_minus;
  RowMatrix h_plus_rows;
  RowMatrix h_minus_rows;
  bool kernel_route = false;
};

inline PreparedData prepare(const Dataset& train, const TrainConfig& cfg, bool kernel_route) {
  train.validate();
  cfg.validate();
  PreparedData p;
  p.kernel_route = kernel_route;
  p.scaler = cfg.scale ? MinMaxScaler::fit(train) : MinMaxScaler::identity(train.cols());
  p.scaled = cfg.scale ? p.scaler.transform(train) : train;
  p.split = split_by_class(p.scaled);
  const bool unit = cfg.unit_memberships || cfg.mode == Mode::tsvm;
  if (kernel_route) {
    p.gram_xx = gram(p.scaled.features, cfg.kernel);
    p.h_plus = build_augmented(detail::take_rows(p.gram_xx, p.split.plus_rows));
    p.h_minus = build_augmented(detail::take_rows(p.gram_xx, p.split.minus_rows));
    p.memberships = unit ? MembershipVector::ones(p.split.plus.rows(), p.split.minus.rows())
                         : membership_kernel(p.scaled, p.gram_xx, cfg.membership);
  } else {
    p.h_plus = build_augmented(p.split.plus);
    p.h_minus = build_augmented(p.split.minus);
    p.memberships = unit ? MembershipVector::ones(p.split.plus.rows(), p.split.minus.rows())
                         : membership_linear(p.scaled, cfg.membership);
  }
  p.h_plus_rows = p.h_plus;
  p.h_minus_rows = p.h_minus;
  return p;
}

struct PlaneFactors {
  QFactor plus;   // own = H+, other = H-
  QFactor minus;  // own = H-, other = H+
};

inline PlaneFactors build_factors(const PreparedData& p, const TrainConfig& cfg) {
  if (cfg.mode == Mode::tsvm)
    return {build_q_factor(p.h_plus, p.h_minus, 0.0, kTsvmRidge), build_q_factor(p.h_minus, p.h_plus, 0.0, kTsvmRidge)};
  return {build_q_factor(p.h_plus, p.h_minus, cfg.c1), build_q_factor(p.h_minus, p.h_plus, cfg.c2)};
}

struct TwinSolution {
  Vector u_plus;   // [w+; b+]
  Vector u_minus;  // [w-; b-]
  TrainDiagnostics diagnostics;
};

// Box bounds of the two duals: plane + ranges over the -1 class, plane - over
// the +1 class.
inline std::pair<Vector, Vector> dual_boxes(const PreparedData& p, const TrainConfig& cfg) {
  if (cfg.mode == Mode::tsvm)
    return {Vector::Constant(p.split.minus.rows(), cfg.c1), Vector::Constant(p.split.plus.rows(), cfg.c2)};
  return {cfg.c3 * p.memberships.minus, cfg.c4 * p.memberships.plus};
}

namespace detail {

inline double relative_residual(const Vector& r, const Vector& scale) {
  return r.norm() / std::max(scale.norm(), 1e-300);
}

}  // namespace detail

// Solves both duals and recovers the primal planes.
inline TwinSolution solve_planes(const PreparedData& p, const PlaneFactors& f, const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  auto [box_plus, box_minus] = dual_boxes(p, cfg);
  const DualProblem dual_plus{&f.plus, &p.h_minus_rows, std::move(box_plus)};
  const DualProblem dual_minus{&f.minus, &p.h_plus_rows, std::move(box_minus)};

  TwinSolution sol;
  auto& diag = sol.diagnostics;
  SolverConfig scfg = cfg.solver;
  diag.plus = solve(dual_plus, scfg);
  scfg.seed = cfg.solver.seed + 1;
  diag.minus = solve(dual_minus, scfg);

  if (cfg.require_convergence && !diag.plus.converged)
    throw SolverError("dual of plane + did not converge within " + std::to_string(cfg.solver.max_epochs) +
                      " epochs (gap " + std::to_string(diag.plus.kkt_gap) + ")");
  if (cfg.require_convergence && !diag.minus.converged)
    throw SolverError("dual of plane - did not converge within " + std::to_string(cfg.solver.max_epochs) +
                      " epochs (gap " + std::to_string(diag.minus.kkt_gap) + ")");

  // u+ = -inner+^-1 H-^T alpha,  u- = inner-^-1 H+^T beta
  sol.u_plus = -(f.plus.q * diag.plus.alpha);
  sol.u_minus = f.minus.q * diag.minus.alpha;

  const Vector ht_alpha = p.h_minus.transpose() * diag.plus.alpha;
  const Vector ht_beta = p.h_plus.transpose() * diag.minus.alpha;
  diag.stationarity_plus = detail::relative_residual(f.plus.system * sol.u_plus + ht_alpha, ht_alpha);
  diag.stationarity_minus = detail::relative_residual(f.minus.system * sol.u_minus - ht_beta, ht_beta);
  diag.jitter_plus = f.plus.jitter;
  diag.jitter_minus = f.minus.jitter;
  diag.memberships = p.memberships;
  diag.wall_time = std::chrono::steady_clock::now() - t0;
  return sol;
}

inline LinearModel linear_model_from(const PreparedData& p, const TwinSolution& sol, const TrainConfig& cfg) {
  const Index n = p.scaled.cols();
  LinearModel m;
  m.w_plus = sol.u_plus.head(n);
  m.b_plus = sol.u_plus(n);
  m.w_minus = sol.u_minus.head(n);
  m.b_minus = sol.u_minus(n);
  m.scaler = p.scaler;
  m.config = cfg;
  if (m.w_plus.norm() < 1e-12 || m.w_minus.norm() < 1e-12)
    throw SolverError("degenerate linear model: a recovered plane has |w| < 1e-12");
  return m;
}

inline KernelModel kernel_model_from(const PreparedData& p, const TwinSolution& sol, const TrainConfig& cfg) {
  const Index l = p.scaled.rows();
  KernelModel m;
  m.support = p.scaled.features;
  m.coeff_plus = sol.u_plus.head(l);
  m.b_plus = sol.u_plus(l);
  m.coeff_minus = sol.u_minus.head(l);
  m.b_minus = sol.u_minus(l);
  m.kernel = cfg.kernel;
  m.gram_xx = p.gram_xx;
  m.scaler = p.scaler;
  m.config = cfg;
  const double qp = m.coeff_plus.dot(m.gram_xx * m.coeff_plus);
  const double qm = m.coeff_minus.dot(m.gram_xx * m.coeff_minus);
  if (!(qp > 1e-24) || !(qm > 1e-24))
    throw SolverError("degenerate kernel model: non-positive plane norm w^T K w");
  m.norm_plus = std::max(std::sqrt(qp), 1e-12);
  m.norm_minus = std::max(std::sqrt(qm), 1e-12);
  return m;
}

// ---------------------------------------------------------------------------
// Training entry points

inline Trained<LinearModel> train_linear(const Dataset& train, const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const PreparedData p = prepare(train, cfg, false);
  const PlaneFactors f = build_factors(p, cfg);
  TwinSolution sol = solve_planes(p, f, cfg);
  Trained<LinearModel> out{linear_model_from(p, sol, cfg), std::move(sol.diagnostics)};
  out.diagnostics.wall_time = std::chrono::steady_clock::now() - t0;
  return out;
}

inline Trained<KernelModel> train_kernel(const Dataset& train, const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const PreparedData p = prepare(train, cfg, true);
  const PlaneFactors f = build_factors(p, cfg);
  TwinSolution sol = solve_planes(p, f, cfg);
  Trained<KernelModel> out{kernel_model_from(p, sol, cfg), std::move(sol.diagnostics)};
  out.diagnostics.wall_time = std::chrono::steady_clock::now() - t0;
  return out;
}

// Linear kernel trains in input space; Gaussian trains the kernel model.
inline Trained<Model> train(const Dataset& data, const TrainConfig& cfg) {
  if (cfg.kernel.kind == KernelKind::linear) {
    auto t = train_linear(data, cfg);
    return {Model{std::move(t.model)}, std::move(t.diagnostics)};
  }
  auto t = train_kernel(data, cfg);
  return {Model{std::move(t.model)}, std::move(t.diagnostics)};
}

// Plain TSVM: unit memberships, boxes c1 / c2, ridge 0.01 on the inner matrices.
inline Trained<Model> train_tsvm_baseline(const Dataset& data, TrainConfig cfg) {
  cfg.mode = Mode::tsvm;
  return train(data, cfg);
}

// ---------------------------------------------------------------------------
// Prediction. Inputs are raw features; the model's scaler is applied here.

struct PlaneDistances {
  double plus;
  double minus;
};

inline int label_from(const PlaneDistances& d) { return d.plus <= d.minus + 1e-12 ? 1 : -1; }

inline PlaneDistances plane_distances(const LinearModel& m, const Vector& x) {
  if (x.size() != m.w_plus.size()) throw DataError("predict: expected " + std::to_string(m.w_plus.size()) +
                                                   " features, got " + std::to_string(x.size()));
  const Vector z = m.scaler.transform(x);
  return {std::abs(m.w_plus.dot(z) + m.b_plus) / m.w_plus.norm(),
          std::abs(m.w_minus.dot(z) + m.b_minus) / m.w_minus.norm()};
}

inline PlaneDistances plane_distances(const KernelModel& m, const Vector& x) {
  if (x.size() != m.support.cols()) throw DataError("predict: expected " + std::to_string(m.support.cols()) +
                                                    " features, got " + std::to_string(x.size()));
  const Vector z = m.scaler.transform(x);
  Vector kx(m.support.rows());
  for (Index j = 0; j < m.support.rows(); ++j) kx(j) = kernel_value(z, m.support.row(j).transpose(), m.kernel);
  return {std::abs(kx.dot(m.coeff_plus) + m.b_plus) / m.norm_plus,
          std::abs(kx.dot(m.coeff_minus) + m.b_minus) / m.norm_minus};
}

inline int predict_linear(const LinearModel& m, const Vector& x) { return label_from(plane_distances(m, x)); }
inline int predict_kernel(const KernelModel& m, const Vector& x) { return label_from(plane_distances(m, x)); }

inline PlaneDistances plane_distances(const Model& m, const Vector& x) {
  return std::visit([&](const auto& mm) { return plane_distances(mm, x); }, m);
}

inline int predict(const Model& m, const Vector& x) { return label_from(plane_distances(m, x)); }

// Batch distances for every row of x (raw features).
inline std::vector<PlaneDistances> plane_distances_batch(const LinearModel& m, const Matrix& x) {
  if (x.cols() != m.w_plus.size()) throw DataError("predict: feature dimension mismatch");
  const Matrix z = m.scaler.transform(x);
  const Vector fp = (z * m.w_plus).array() + m.b_plus;
  const Vector fm = (z * m.w_minus).array() + m.b_minus;
  const double np = m.w_plus.norm(), nm = m.w_minus.norm();
  std::vector<PlaneDistances> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = {std::abs(fp(i)) / np, std::abs(fm(i)) / nm};
  return out;
}

inline std::vector<PlaneDistances> plane_distances_batch(const KernelModel& m, const Matrix& x) {
  if (x.cols() != m.support.cols()) throw DataError("predict: feature dimension mismatch");
  const Matrix k = gram(m.scaler.transform(x), m.support, m.kernel);
  const Vector fp = (k * m.coeff_plus).array() + m.b_plus;
  const Vector fm = (k * m.coeff_minus).array() + m.b_minus;
  std::vector<PlaneDistances> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i)
    out[static_cast<std::size_t>(i)] = {std::abs(fp(i)) / m.norm_plus, std::abs(fm(i)) / m.norm_minus};
  return out;
}

inline std::vector<PlaneDistances> plane_distances_batch(const Model& m, const Matrix& x) {
  return std::visit([&](const auto& mm) { return plane_distances_batch(mm, x); }, m);
}

inline Labels predict_batch(const Model& m, const Matrix& x) {
  const auto d = plane_distances_batch(m, x);
  Labels out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = label_from(d[i]);
  return out;
}

// Percentage of rows whose predicted label matches.
inline double accuracy(const Model& m, const Dataset& data) {
  const Labels pred = predict_batch(m, data.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += (pred[i] == data.labels[i]);
  return 100.0 * static_cast<double>(correct) / static_cast<double>(pred.size());
}

}  // namespace frtsvm
