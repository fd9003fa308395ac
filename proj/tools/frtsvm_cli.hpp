#pragma once

// Command-line front end. Kept in a header so the tests can drive it
// in-process; tools/frtsvm.cpp only forwards main() here.

#include "frtsvm/data.hpp"
#include "frtsvm/eval.hpp"
#include "frtsvm/membership.hpp"
#include "frtsvm/model.hpp"
#include "frtsvm/serialize.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

namespace frtsvm::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

struct Settings {
  // data input
  std::string data;
  bool skip_header = false;
  int label_column = -1;
  bool binarize = false;

  // model
  std::string kernel = "gaussian";
  double g = 1.0;
  double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;
  double mu = 0.1;
  double delta = 1e-3;
  double eps = 1e-4;
  long max_epochs = 1000;
  std::uint64_t seed = 1;
  std::string mode = "frtsvm";
  bool shrinking = true;
  bool scale = true;

  // evaluation
  int folds = 10;
  int c_lo = -8, c_hi = 8, g_lo = -4, g_hi = 4;
  double subsample = 0.3;
  bool final_cv = true;
  int reps = 3;
  long oracle_iterations = 200000;

  // gen
  std::string kind;
  long count = 3000;
  long train_count = 0;
  long test_count = 1000;
  double noise = 0.0;

  // model-consuming commands
  std::string model;
  double x1_min = 0.0, x1_max = 0.0, x2_min = 0.0, x2_max = 0.0;
  int resolution = 100;

  std::string out;
  std::string trace;
  std::string best_out;
  std::string manifest;
};

namespace detail {

inline TrainConfig train_config(const Settings& s) {
  TrainConfig c;
  c.c1 = s.c1;
  c.c2 = s.c2;
  c.c3 = s.c3;
  c.c4 = s.c4;
  c.kernel.kind = kernel_kind_from_string(s.kernel);
  c.kernel.g = s.g;
  c.membership.mu = s.mu;
  c.membership.delta = s.delta;
  c.solver.epsilon = s.eps;
  c.solver.max_epochs = s.max_epochs;
  c.solver.seed = s.seed;
  c.solver.shrinking = s.shrinking;
  c.mode = mode_from_string(s.mode);
  c.scale = s.scale;
  c.validate();
  return c;
}

inline Dataset read_data(const Settings& s) {
  CsvOptions o;
  o.skip_header = s.skip_header;
  o.label_column = s.label_column;
  o.binarize = s.binarize;
  return load_csv(s.data, o);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write file: " + path);
  return f;
}

// "runs/x.csv" -> "runs/x"
inline std::string stem(const std::string& path) {
  if (path.size() > 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return path.substr(0, path.size() - 4);
  return path;
}

inline std::string num(double v) { return frtsvm::detail::fmt_double_short(v); }

inline void add_data_options(CLI::App* cmd, Settings& s) {
  cmd->add_option("--data", s.data, "Input CSV (features, label last by default)")->required();
  cmd->add_option("--skip-header", s.skip_header, "Skip the first CSV line (true/false)")->capture_default_str();
  cmd->add_option("--label-column", s.label_column, "0-based label column; negative counts from the end")
      ->capture_default_str();
  cmd->add_option("--binarize", s.binarize, "Map raw class ids to +1 (majority class) / -1 (rest) (true/false)")
      ->capture_default_str();
}

inline void add_model_options(CLI::App* cmd, Settings& s) {
  cmd->add_option("--kernel", s.kernel, "Kernel")
      ->check(CLI::IsMember({"linear", "gaussian"}))
      ->capture_default_str();
  cmd->add_option("--g", s.g, "Gaussian width g in exp(-|x-y|^2/g^2)")->capture_default_str();
  cmd->add_option("--c1", s.c1, "Margin weight of plane + (tsvm: slack box of plane +)")->capture_default_str();
  cmd->add_option("--c2", s.c2, "Margin weight of plane - (tsvm: slack box of plane -)")->capture_default_str();
  cmd->add_option("--c3", s.c3, "Fuzzy slack scale of plane +")->capture_default_str();
  cmd->add_option("--c4", s.c4, "Fuzzy slack scale of plane -")->capture_default_str();
  cmd->add_option("--mu", s.mu, "Membership weight of suspected outliers")->capture_default_str();
  cmd->add_option("--delta", s.delta, "Membership radius offset")->capture_default_str();
  cmd->add_option("--eps", s.eps, "Solver KKT gap tolerance")->capture_default_str();
  cmd->add_option("--max-epochs", s.max_epochs, "Solver epoch limit")->capture_default_str();
  cmd->add_option("--seed", s.seed, "Seed for solver order, folds and subsampling")->capture_default_str();
  cmd->add_option("--mode", s.mode, "frtsvm, or tsvm for the plain twin baseline")
      ->check(CLI::IsMember({"frtsvm", "tsvm"}))
      ->capture_default_str();
  cmd->add_option("--shrinking", s.shrinking, "Use the shrinking solver (true/false)")->capture_default_str();
  cmd->add_option("--scale", s.scale, "Min-max scale features to [0,1] on the training data (true/false)")
      ->capture_default_str();
}

inline void print_report(std::ostream& out, const char* plane, const SolverReport& r, double stationarity,
                         double jitter) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "plane %s: converged=%s epochs=%ld updates=%ld shrink_events=%ld kkt_gap=%.3e "
                "objective=%.10g stationarity=%.3e jitter=%g time=%.4fs\n",
                plane, r.converged ? "yes" : "no", r.epochs, r.updates, r.shrink_events, r.kkt_gap, r.objective,
                stationarity, jitter, r.wall_time.count());
  out << buf;
}

inline void write_trace(const std::string& path, const TrainDiagnostics& d) {
  auto f = open_out(path);
  f << "plane,epoch,objective,kkt_gap,active_size\n";
  for (const auto* rep : {&d.plus, &d.minus})
    for (const auto& t : rep->trace)
      f << (rep == &d.plus ? "plus" : "minus") << ',' << t.epoch << ',' << frtsvm::detail::fmt_double(t.objective)
        << ',' << frtsvm::detail::fmt_double(t.kkt_gap) << ',' << t.active_size << '\n';
}

// ---------------------------------------------------------------------------
// Commands

inline void cmd_gen(const Settings& s, std::ostream& out) {
  if (s.out.empty()) throw ConfigError("gen: --out is required");
  if (s.kind == "sine") {
    const Dataset all = gen_sine_band(s.count, s.seed);
    if (s.train_count <= 0) {
      write_csv(s.out, add_gaussian_noise(all, s.noise, s.seed + 2));
      out << "wrote " << s.out << " (" << all.rows() << " rows)\n";
      return;
    }
    auto [tr, te] = train_test_split(all, s.train_count, s.seed + 1);
    tr = add_gaussian_noise(tr, s.noise, s.seed + 2);
    const std::string base = stem(s.out);
    write_csv(base + "_train.csv", tr);
    write_csv(base + "_test.csv", te);
    out << "wrote " << base << "_train.csv (" << tr.rows() << " rows) and " << base << "_test.csv (" << te.rows()
        << " rows)\n";
    return;
  }
  const long n_train = s.train_count > 0 ? s.train_count : 250;
  auto [tr, te] = gen_ripley_mixture(n_train, s.test_count, s.seed);
  tr = add_gaussian_noise(tr, s.noise, s.seed + 2);
  const std::string base = stem(s.out);
  write_csv(base + "_train.csv", tr);
  write_csv(base + "_test.csv", te);
  out << "wrote " << base << "_train.csv (" << tr.rows() << " rows) and " << base << "_test.csv (" << te.rows()
      << " rows)\n";
}

inline void cmd_train(const Settings& s, std::ostream& out) {
  const Dataset data = read_data(s);
  TrainConfig cfg = train_config(s);
  cfg.solver.trace = !s.trace.empty();
  cfg.require_convergence = false;  // report first, then fail
  const auto t = train(data, cfg);
  const auto& d = t.diagnostics;
  print_report(out, "+", d.plus, d.stationarity_plus, d.jitter_plus);
  print_report(out, "-", d.minus, d.stationarity_minus, d.jitter_minus);
  if (!s.trace.empty()) write_trace(s.trace, d);
  if (!d.converged()) throw SolverError("training did not converge within " + std::to_string(s.max_epochs) + " epochs");
  char buf[128];
  std::snprintf(buf, sizeof buf, "training accuracy: %.4f%%\n", accuracy(t.model, data));
  out << buf;
  if (!s.out.empty()) {
    save_model(s.out, t.model);
    out << "model written to " << s.out << '\n';
  }
}

inline void cmd_predict(const Settings& s, std::ostream& out) {
  const Model m = load_model(s.model);
  const Dataset data = read_data(s);
  const auto dist = plane_distances_batch(m, data.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) correct += label_from(dist[i]) == data.labels[i];
  if (!s.out.empty()) {
    auto f = open_out(s.out);
    f << "index,label,predicted,d_plus,d_minus\n";
    for (std::size_t i = 0; i < dist.size(); ++i)
      f << i << ',' << data.labels[i] << ',' << label_from(dist[i]) << ','
        << frtsvm::detail::fmt_double(dist[i].plus) << ',' << frtsvm::detail::fmt_double(dist[i].minus) << '\n';
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "accuracy: %.4f%% (%zu/%zu)\n",
                100.0 * static_cast<double>(correct) / static_cast<double>(dist.size()), correct, dist.size());
  out << buf;
}

inline void cmd_cv(const Settings& s, std::ostream& out) {
  const Dataset data = read_data(s);
  const CvResult r = cross_validate(data, train_config(s), s.folds, s.seed);
  if (!s.out.empty()) {
    auto f = open_out(s.out);
    f << "fold,accuracy\n";
    for (std::size_t i = 0; i < r.per_fold.size(); ++i) f << i << ',' << num(r.per_fold[i]) << '\n';
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d-fold accuracy: %.2f +- %.2f %%  (mean train time %.4fs)\n", s.folds,
                r.mean_accuracy, r.std_accuracy, r.mean_train_time.count());
  out << buf;
}

inline void cmd_grid(const Settings& s, std::ostream& out) {
  const Dataset data = read_data(s);
  GridSpec spec;
  spec.c_lo = s.c_lo;
  spec.c_hi = s.c_hi;
  spec.g_lo = s.g_lo;
  spec.g_hi = s.g_hi;
  spec.subsample = s.subsample;
  const TrainConfig base = train_config(s);
  const GridResult r = grid_search(data, spec, s.folds, s.seed, base);
  std::size_t failed = 0;
  for (const auto& row : r.rows) failed += !row.ok;
  if (!s.out.empty()) {
    auto f = open_out(s.out);
    write_grid_csv(f, r);
  }
  out << "grid: " << r.rows.size() << " cells, " << failed << " failed, subsample " << r.subsample_size << " of "
      << data.rows() << " rows\n";
  const bool tsvm = base.mode == Mode::tsvm;
  const bool gaussian = base.kernel.kind == KernelKind::gaussian;

  std::string chosen = "[train]\ndata=\"" + s.data + "\"\nkernel=" + std::string(to_string(base.kernel.kind)) +
                       "\nmode=" + to_string(base.mode) + "\nc1=" + num(r.best.c1) + "\nc2=" + num(r.best.c2);
  if (!tsvm) chosen += "\nc3=" + num(r.best.c3) + "\nc4=" + num(r.best.c4);
  if (gaussian) chosen += "\ng=" + num(r.best.kernel.g);
  chosen += "\nseed=" + std::to_string(s.seed) + "\n";
  out << "best cell: mean " << num(r.best_row.mean_accuracy) << "% +- " << num(r.best_row.std_accuracy)
      << "\nchosen config:\n" << chosen;
  if (!s.best_out.empty()) {
    auto f = open_out(s.best_out);
    f << chosen;
  }
  if (s.final_cv) {
    const CvResult cv = cross_validate(data, r.best, s.folds, s.seed);
    char buf[128];
    std::snprintf(buf, sizeof buf, "final %d-fold accuracy on all %ld rows: %.2f +- %.2f %%\n", s.folds,
                  static_cast<long>(data.rows()), cv.mean_accuracy, cv.std_accuracy);
    out << buf;
  }
}

inline void cmd_time(const Settings& s, std::ostream& out) {
  const Dataset data = read_data(s);
  TimingOptions opts;
  opts.repetitions = s.reps;
  opts.oracle_max_iterations = s.oracle_iterations;
  const auto rows = timing_compare(data, train_config(s), opts);
  std::ofstream f;
  if (!s.out.empty()) {
    f = open_out(s.out);
    f << "method,mean_seconds,runs,objective,converged\n";
  }
  out << "method      mean_seconds  runs  objective          converged\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s  %12.6f  %4d  %-17.10g  %s\n", r.method.c_str(), r.mean_seconds, r.runs,
                  r.objective, r.converged ? "yes" : "no");
    out << buf;
    if (f.is_open())
      f << r.method << ',' << frtsvm::detail::fmt_double(r.mean_seconds) << ',' << r.runs << ','
        << frtsvm::detail::fmt_double(r.objective) << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

inline void cmd_boundary(const Settings& s, std::ostream& out) {
  if (s.out.empty()) throw ConfigError("boundary: --out is required");
  if (s.resolution < 2) throw ConfigError("boundary: --resolution must be >= 2");
  const Model m = load_model(s.model);
  const MinMaxScaler& sc = std::visit([](const auto& mm) -> const MinMaxScaler& { return mm.scaler; }, m);
  if (sc.min.size() != 2) throw ConfigError("boundary: model has " + std::to_string(sc.min.size()) +
                                            " features; only 2-D models are supported");
  // Default extent: the training range.
  double lo[2] = {s.x1_min, s.x2_min}, hi[2] = {s.x1_max, s.x2_max};
  for (int k = 0; k < 2; ++k)
    if (!(hi[k] > lo[k])) {
      lo[k] = sc.min(k);
      hi[k] = sc.min(k) + (sc.range(k) > 0.0 ? sc.range(k) : 1.0);
    }
  const int r = s.resolution;
  Matrix pts(static_cast<Index>(r) * r, 2);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      pts(static_cast<Index>(i) * r + j, 0) = lo[0] + (hi[0] - lo[0]) * j / (r - 1);
      pts(static_cast<Index>(i) * r + j, 1) = lo[1] + (hi[1] - lo[1]) * i / (r - 1);
    }
  const auto dist = plane_distances_batch(m, pts);
  auto f = open_out(s.out);
  f << "x1,x2,d_plus,d_minus,label\n";
  for (Index k = 0; k < pts.rows(); ++k)
    f << frtsvm::detail::fmt_double(pts(k, 0)) << ',' << frtsvm::detail::fmt_double(pts(k, 1)) << ','
      << frtsvm::detail::fmt_double(dist[static_cast<std::size_t>(k)].plus) << ','
      << frtsvm::detail::fmt_double(dist[static_cast<std::size_t>(k)].minus) << ','
      << label_from(dist[static_cast<std::size_t>(k)]) << '\n';
  out << "wrote " << pts.rows() << " grid points to " << s.out << '\n';
}

inline void cmd_membership(const Settings& s, std::ostream& out) {
  if (s.out.empty()) throw ConfigError("membership: --out is required");
  const Dataset raw = read_data(s);
  const TrainConfig cfg = train_config(s);
  const Dataset data = cfg.scale ? MinMaxScaler::fit(raw).transform(raw) : raw;
  const MembershipVector m = cfg.kernel.kind == KernelKind::linear ? membership_linear(data, cfg.membership)
                                                                   : membership_kernel(data, cfg.kernel, cfg.membership);
  write_membership_csv(s.out, data, m);
  out << "wrote " << data.rows() << " memberships to " << s.out << '\n';
}

}  // namespace detail

// Runs one command line. Output goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Fuzzy robust twin support vector machine: train, evaluate and inspect models."};
  app.set_config("--config", "", "Read option values from a key=value file ([command] sections); flags win");
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset as CSV");
  gen->add_option("kind", s.kind, "sine or ripley")->required()->check(CLI::IsMember({"sine", "ripley"}));
  gen->add_option("count", s.count, "sine: total instances")->capture_default_str();
  gen->add_option("--train-count", s.train_count,
                  "sine: split off this many training rows (0 = one file); ripley: training size (default 250)")
      ->capture_default_str();
  gen->add_option("--test-count", s.test_count, "ripley: test size")->capture_default_str();
  gen->add_option("--noise", s.noise, "Std. deviation of Gaussian noise added to the training features")
      ->capture_default_str();
  gen->add_option("--seed", s.seed, "Generator seed (split uses seed+1, noise seed+2)")->capture_default_str();
  gen->add_option("--out", s.out, "Output CSV; two-file outputs get _train/_test suffixes")->required();

  auto* train = app.add_subcommand("train", "Train a model and save it");
  detail::add_data_options(train, s);
  detail::add_model_options(train, s);
  train->add_option("--out", s.out, "Model file to write");
  train->add_option("--trace", s.trace, "Write the per-epoch solver trace CSV here");

  auto* predict = app.add_subcommand("predict", "Predict labels for a CSV with a saved model");
  predict->add_option("--model", s.model, "Model file")->required();
  detail::add_data_options(predict, s);
  predict->add_option("--out", s.out, "Predictions CSV (index,label,predicted,d_plus,d_minus)");

  auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
  detail::add_data_options(cv, s);
  detail::add_model_options(cv, s);
  cv->add_option("--folds", s.folds, "Number of folds")->capture_default_str();
  cv->add_option("--out", s.out, "Per-fold accuracy CSV");

  auto* grid = app.add_subcommand("grid", "Grid search over c1=c2, c3=c4 and g");
  detail::add_data_options(grid, s);
  detail::add_model_options(grid, s);
  grid->add_option("--folds", s.folds, "Number of folds")->capture_default_str();
  grid->add_option("--c-lo", s.c_lo, "Smallest exponent of 2 for c")->capture_default_str();
  grid->add_option("--c-hi", s.c_hi, "Largest exponent of 2 for c")->capture_default_str();
  grid->add_option("--g-lo", s.g_lo, "Smallest exponent of 2 for g")->capture_default_str();
  grid->add_option("--g-hi", s.g_hi, "Largest exponent of 2 for g")->capture_default_str();
  grid->add_option("--subsample", s.subsample, "Fraction of rows used for the search")->capture_default_str();
  grid->add_option("--final-cv", s.final_cv, "Cross-validate the chosen config on all rows (true/false)")
      ->capture_default_str();
  grid->add_option("--out", s.out, "Grid table CSV");
  grid->add_option("--best-out", s.best_out, "Write the chosen config as a train config file");

  auto* time = app.add_subcommand("time", "Compare solver wall times on the two duals of one config");
  detail::add_data_options(time, s);
  detail::add_model_options(time, s);
  time->add_option("--reps", s.reps, "Timed runs per method (>= 3)")->capture_default_str();
  time->add_option("--oracle-iterations", s.oracle_iterations, "Iteration cap of the projected-gradient oracle")
      ->capture_default_str();
  time->add_option("--out", s.out, "Timing CSV");

  auto* boundary = app.add_subcommand("boundary", "Evaluate a 2-D model on a regular grid");
  boundary->add_option("--model", s.model, "Model file")->required();
  boundary->add_option("--x1-min", s.x1_min, "Grid extent; min >= max selects the training range")->capture_default_str();
  boundary->add_option("--x1-max", s.x1_max, "Grid extent; min >= max selects the training range")->capture_default_str();
  boundary->add_option("--x2-min", s.x2_min, "Grid extent; min >= max selects the training range")->capture_default_str();
  boundary->add_option("--x2-max", s.x2_max, "Grid extent; min >= max selects the training range")->capture_default_str();
  boundary->add_option("--resolution", s.resolution, "Points per axis")->capture_default_str();
  boundary->add_option("--out", s.out, "Grid CSV (x1,x2,d_plus,d_minus,label)")->required();

  auto* memb = app.add_subcommand("membership", "Export fuzzy memberships as CSV");
  detail::add_data_options(memb, s);
  detail::add_model_options(memb, s);
  memb->add_option("--out", s.out, "Membership CSV (index,label,s)")->required();

  for (auto* sub : app.get_subcommands({})) {
    sub->configurable();
    sub->add_option("--manifest", s.manifest, "Also save the run manifest to this file")->configurable(false);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  // Manifest: the parsed values of the chosen command, replayable through --config.
  const std::string manifest = "[" + cmd->get_name() + "]\n" + cmd->config_to_str(true, false);
  out << "# manifest (replay: frtsvm --config FILE)\n" << manifest << "# end manifest\n";

  try {
    if (!s.manifest.empty()) {
      auto f = detail::open_out(s.manifest);
      f << manifest;
    }
    const std::string name = cmd->get_name();
    if (name == "gen") detail::cmd_gen(s, out);
    else if (name == "train") detail::cmd_train(s, out);
    else if (name == "predict") detail::cmd_predict(s, out);
    else if (name == "cv") detail::cmd_cv(s, out);
    else if (name == "grid") detail::cmd_grid(s, out);
    else if (name == "time") detail::cmd_time(s, out);
    else if (name == "boundary") detail::cmd_boundary(s, out);
    else detail::cmd_membership(s, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

}  // namespace frtsvm::cli
