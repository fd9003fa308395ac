#pragma once

#include "frtsvm/cd_solver.hpp"
#include "frtsvm/data.hpp"
#include "frtsvm/model.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace frtsvm {

struct AccuracyStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

inline AccuracyStats mean_std(const std::vector<double>& v) {
  AccuracyStats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct CvResult {
  double mean_accuracy = 0.0;  // percent
  double std_accuracy = 0.0;   // percent
  std::vector<double> per_fold;
  std::chrono::duration<double> mean_train_time{0};
};

// Fold plan whose every training part holds both classes. Retries with
// derived seeds up to 10 times.
inline FoldPlan plan_folds(const Dataset& data, int k, std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    FoldPlan plan = make_folds(data.rows(), k, seed + attempt * 0x9E3779B97F4A7C15ULL);
    bool ok = true;
    for (int f = 0; f < k && ok; ++f) {
      bool has_plus = false, has_minus = false;
      for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
        if (plan.assignments[i] == f) continue;
        (data.labels[i] > 0 ? has_plus : has_minus) = true;
      }
      ok = has_plus && has_minus;
    }
    if (ok) return plan;
  }
  throw DataError("cross-validation: cannot form folds whose training parts contain both classes");
}

namespace detail {

inline double fold_accuracy(const Model& m, const Dataset& test) { return accuracy(m, test); }

}  // namespace detail

inline CvResult cross_validate(const Dataset& data, const TrainConfig& cfg, int k, std::uint64_t seed) {
  data.validate();
  const FoldPlan plan = plan_folds(data, k, seed);
  CvResult res;
  std::chrono::duration<double> total{0};
  for (int f = 0; f < k; ++f) {
    const Dataset tr = subset(data, plan.train_rows(f));
    const Dataset te = subset(data, plan.test_rows(f));
    auto t = train(tr, cfg);
    total += t.diagnostics.wall_time;
    res.per_fold.push_back(detail::fold_accuracy(t.model, te));
  }
  const auto st = mean_std(res.per_fold);
  res.mean_accuracy = st.mean;
  res.std_accuracy = st.std;
  res.mean_train_time = total / k;
  return res;
}

// ---------------------------------------------------------------------------
// Grid search

struct GridSpec {
  int c_lo = -8, c_hi = 8;  // c1 = c2 = 2^i, c3 = c4 = 2^j
  int g_lo = -4, g_hi = 4;  // Gaussian width 2^i, ignored for the linear kernel
  double subsample = 0.3;   // fraction of the data used for the search

  void validate() const {
    if (c_lo > c_hi || g_lo > g_hi) throw ConfigError("grid: empty exponent range");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("grid: subsample must lie in (0, 1]");
  }
};

struct GridRow {
  double c1 = 0.0;   // also c2
  double c3 = 0.0;   // also c4; NaN in tsvm mode
  double g = 0.0;    // NaN for the linear kernel
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  bool ok = true;
  std::string note;
};

struct GridResult {
  TrainConfig best;
  GridRow best_row;
  std::vector<GridRow> rows;  // ordered by (g, c1, c3) exponents
  Index subsample_size = 0;
};

// Rows of the search subsample: the first round(fraction * l) entries of a
// seeded permutation, at least k.
inline IndexList grid_subsample_rows(Index l, double fraction, int k, std::uint64_t seed) {
  auto perm = permutation(l, seed);
  Index m = static_cast<Index>(std::llround(fraction * static_cast<double>(l)));
  m = std::clamp<Index>(m, std::min<Index>(k, l), l);
  perm.resize(static_cast<std::size_t>(m));
  return perm;
}

// Exhaustive search. Every cell is scored by k-fold cross-validation on one
// shared subsample; the result equals cross_validate(subsample, cell, k, seed)
// cell by cell. Best = highest mean accuracy, ties to smaller c3, then c1,
// then g.
inline GridResult grid_search(const Dataset& data, const GridSpec& grid, int k, std::uint64_t seed,
                              const TrainConfig& base) {
  data.validate();
  grid.validate();
  base.validate();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const bool tsvm = base.mode == Mode::tsvm;
  const bool kernel_route = base.kernel.kind == KernelKind::gaussian;

  GridResult out;
  const Dataset sample = subset(data, grid_subsample_rows(data.rows(), grid.subsample, k, seed));
  out.subsample_size = sample.rows();
  const FoldPlan plan = plan_folds(sample, k, seed);

  std::vector<int> g_exps, c1_exps, c3_exps;
  if (kernel_route)
    for (int e = grid.g_lo; e <= grid.g_hi; ++e) g_exps.push_back(e);
  else
    g_exps.push_back(0);
  for (int e = grid.c_lo; e <= grid.c_hi; ++e) c1_exps.push_back(e);
  if (tsvm)
    c3_exps.push_back(0);
  else
    c3_exps = c1_exps;

  const std::size_t n1 = c1_exps.size(), n3 = c3_exps.size();
  std::vector<std::vector<double>> fold_acc(g_exps.size() * n1 * n3);
  std::vector<std::string> failure(fold_acc.size());

  for (std::size_t gi = 0; gi < g_exps.size(); ++gi) {
    TrainConfig cfg = base;
    if (kernel_route) cfg.kernel.g = std::ldexp(1.0, g_exps[gi]);
    for (int f = 0; f < k; ++f) {
      const Dataset tr = subset(sample, plan.train_rows(f));
      const Dataset te = subset(sample, plan.test_rows(f));
      const PreparedData prep = prepare(tr, cfg, kernel_route);
      for (std::size_t a = 0; a < n1; ++a) {
        cfg.c1 = cfg.c2 = std::ldexp(1.0, c1_exps[a]);
        std::optional<PlaneFactors> factors;
        try {
          factors = build_factors(prep, cfg);
        } catch (const Error& e) {
          for (std::size_t b = 0; b < n3; ++b) failure[(gi * n1 + a) * n3 + b] = e.what();
          continue;
        }
        for (std::size_t b = 0; b < n3; ++b) {
          const std::size_t cell = (gi * n1 + a) * n3 + b;
          if (!failure[cell].empty()) continue;
          cfg.c3 = cfg.c4 = std::ldexp(1.0, c3_exps[b]);
          try {
            const TwinSolution sol = solve_planes(prep, *factors, cfg);
            const Model m = kernel_route ? Model{kernel_model_from(prep, sol, cfg)} : Model{linear_model_from(prep, sol, cfg)};
            fold_acc[cell].push_back(detail::fold_accuracy(m, te));
          } catch (const Error& e) {
            failure[cell] = e.what();
          }
        }
      }
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t gi = 0; gi < g_exps.size(); ++gi)
    for (std::size_t a = 0; a < n1; ++a)
      for (std::size_t b = 0; b < n3; ++b) {
        const std::size_t cell = (gi * n1 + a) * n3 + b;
        GridRow row;
        row.c1 = std::ldexp(1.0, c1_exps[a]);
        row.c3 = tsvm ? nan : std::ldexp(1.0, c3_exps[b]);
        row.g = kernel_route ? std::ldexp(1.0, g_exps[gi]) : nan;
        row.ok = failure[cell].empty();
        row.note = failure[cell];
        if (row.ok) {
          const auto st = mean_std(fold_acc[cell]);
          row.mean_accuracy = st.mean;
          row.std_accuracy = st.std;
        } else {
          row.mean_accuracy = row.std_accuracy = nan;
        }
        out.rows.push_back(row);
        if (!row.ok) continue;
        // Row order is (g, c1, c3) ascending, so among equal means the first
        // seen has the smallest g; prefer smaller c3 then c1 explicitly.
        if (!best) {
          best = out.rows.size() - 1;
          continue;
        }
        const GridRow& cur = out.rows[*best];
        const auto key = [&](const GridRow& r) {
          return std::make_tuple(-r.mean_accuracy, tsvm ? 0.0 : r.c3, r.c1, kernel_route ? r.g : 0.0);
        };
        if (key(row) < key(cur)) best = out.rows.size() - 1;
      }
  if (!best) throw SolverError("grid search: every cell failed");

  out.best_row = out.rows[*best];
  out.best = base;
  out.best.c1 = out.best.c2 = out.best_row.c1;
  if (!tsvm) out.best.c3 = out.best.c4 = out.best_row.c3;
  if (kernel_route) out.best.kernel.g = out.best_row.g;
  return out;
}

// Column order: c1,c3,g,mean_accuracy,std_accuracy,status
inline void write_grid_csv(std::ostream& out, const GridResult& r) {
  out << "c1,c3,g,mean_accuracy,std_accuracy,status\n";
  auto num = [](double v) { return std::isnan(v) ? std::string() : detail::fmt_double_short(v); };
  for (const auto& row : r.rows)
    out << num(row.c1) << ',' << num(row.c3) << ',' << num(row.g) << ',' << num(row.mean_accuracy) << ','
        << num(row.std_accuracy) << ',' << (row.ok ? "ok" : "failed") << '\n';
}

// ---------------------------------------------------------------------------
// Timing comparison of the three dual solvers on the same pair of duals.

struct TimingRow {
  std::string method;
  double mean_seconds = 0.0;
  int runs = 0;
  double objective = 0.0;  // plane + objective + plane - objective (last run)
  bool converged = true;
};

struct TimingOptions {
  int repetitions = 3;
  long oracle_max_iterations = 200'000;
};

inline std::vector<TimingRow> timing_compare(const Dataset& data, const TrainConfig& cfg, const TimingOptions& opts = {}) {
  if (opts.repetitions < 3) throw ConfigError("timing_compare: repetitions must be >= 3");
  const bool kernel_route = cfg.kernel.kind == KernelKind::gaussian;
  const PreparedData prep = prepare(data, cfg, kernel_route);
  const PlaneFactors f = build_factors(prep, cfg);
  auto [box_plus, box_minus] = dual_boxes(prep, cfg);
  const DualProblem duals[2] = {{&f.plus, &prep.h_minus_rows, box_plus}, {&f.minus, &prep.h_plus_rows, box_minus}};
  const Matrix dense[2] = {dense_qbar(f.plus, prep.h_minus), dense_qbar(f.minus, prep.h_plus)};

  SolverConfig plain = cfg.solver;
  plain.shrinking = false;
  SolverConfig shrink = cfg.solver;
  shrink.shrinking = true;
  OracleOptions oopts;
  oopts.max_dim = std::numeric_limits<Index>::max();
  oopts.max_iterations = opts.oracle_max_iterations;
  oopts.tolerance = cfg.solver.epsilon;

  using clock = std::chrono::steady_clock;
  auto time_method = [&](const std::string& name, auto&& run_once) {
    TimingRow row{name, 0.0, opts.repetitions, 0.0, true};
    run_once(row);  // warm-up, discarded
    std::chrono::duration<double> total{0};
    for (int r = 0; r < opts.repetitions; ++r) {
      const auto t0 = clock::now();
      run_once(row);
      total += clock::now() - t0;
    }
    row.mean_seconds = total.count() / opts.repetitions;
    return row;
  };

  std::vector<TimingRow> rows;
  rows.push_back(time_method("shrinking", [&](TimingRow& row) {
    row.objective = 0.0;
    row.converged = true;
    for (const auto& d : duals) {
      const auto rep = solve_shrinking(d, shrink);
      row.objective += rep.objective;
      row.converged = row.converged && rep.converged;
    }
  }));
  rows.push_back(time_method("plain", [&](TimingRow& row) {
    row.objective = 0.0;
    row.converged = true;
    for (const auto& d : duals) {
      const auto rep = solve_plain(d, plain);
      row.objective += rep.objective;
      row.converged = row.converged && rep.converged;
    }
  }));
  rows.push_back(time_method("oracle", [&](TimingRow& row) {
    row.objective = 0.0;
    row.converged = true;
    for (int i = 0; i < 2; ++i) {
      const auto res = brute_force_oracle(dense[i], Vector::Ones(dense[i].rows()), duals[i].upper, oopts);
      row.objective += res.objective;
      row.converged = row.converged && res.converged;
    }
  }));
  return rows;
}

}  // namespace frtsvm
