#pragma once

#include "frtsvm/common.hpp"

#include <array>
#include <cmath>
#include <span>
#include <string>

namespace frtsvm {

enum class KernelKind { linear, gaussian };

inline const char* to_string(KernelKind k) { return k == KernelKind::linear ? "linear" : "gaussian"; }

inline KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "linear") return KernelKind::linear;
  if (s == "gaussian" || s == "rbf") return KernelKind::gaussian;
  throw ConfigError("unknown kernel '" + s + "' (expected linear or gaussian)");
}

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double g = 1.0;  // Gaussian width: k(x, y) = exp(-|x - y|^2 / g^2)

  void validate() const {
    if (kind == KernelKind::gaussian && !(g > 0.0)) throw ConfigError("gaussian kernel width g must be > 0");
  }

  static KernelSpec linear() { return {KernelKind::linear, 1.0}; }
  static KernelSpec gaussian(double g) { return {KernelKind::gaussian, g}; }
};

inline double gaussian_kernel(const Vector& x1, const Vector& x2, double g) {
  if (x1.size() != x2.size()) throw ConfigError("gaussian_kernel: dimension mismatch");
  if (!(g > 0.0)) throw ConfigError("gaussian_kernel: g must be > 0");
  return std::exp(-(x1 - x2).squaredNorm() / (g * g));
}

inline double kernel_value(const Vector& x1, const Vector& x2, const KernelSpec& spec) {
  if (spec.kind == KernelKind::linear) {
    if (x1.size() != x2.size()) throw ConfigError("kernel: dimension mismatch");
    return x1.dot(x2);
  }
  return gaussian_kernel(x1, x2, spec.g);
}

// Symmetric Gram block of A with itself. Gaussian diagonal is exactly 1.
inline Matrix gram(const Matrix& a, const KernelSpec& spec) {
  spec.validate();
  Matrix k = a * a.transpose();
  if (spec.kind == KernelKind::linear) return k;
  const Vector sq = k.diagonal();
  const double inv_g2 = 1.0 / (spec.g * spec.g);
  const Index n = a.rows();
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      const double d2 = std::max(0.0, sq(i) + sq(j) - 2.0 * k(i, j));
      k(i, j) = k(j, i) = std::exp(-d2 * inv_g2);
    }
    k(j, j) = 1.0;
  }
  return k;
}

// Gram block with entry (i, j) = k(A_i, B_j). Squared distances use the
// expanded form, clamped at 0.
inline Matrix gram(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
  if (a.cols() != b.cols()) throw ConfigError("gram: feature dimension mismatch");
  if (&a == &b) return gram(a, spec);
  spec.validate();
  Matrix k = a * b.transpose();
  if (spec.kind == KernelKind::linear) return k;
  const Vector sa = a.rowwise().squaredNorm();
  const Vector sb = b.rowwise().squaredNorm();
  const double inv_g2 = 1.0 / (spec.g * spec.g);
  for (Index j = 0; j < k.cols(); ++j)
    for (Index i = 0; i < k.rows(); ++i) {
      const double d2 = std::max(0.0, sa(i) + sb(j) - 2.0 * k(i, j));
      k(i, j) = std::exp(-d2 * inv_g2);
    }
  return k;
}

// [M, e]: appends a column of ones.
inline Matrix build_augmented(const Matrix& m) {
  if (m.rows() < 1) throw ConfigError("build_augmented: empty matrix");
  Matrix h(m.rows(), m.cols() + 1);
  h.leftCols(m.cols()) = m;
  h.col(m.cols()).setOnes();
  return h;
}

inline constexpr std::array<double, 5> kDefaultJitterSchedule{0.0, 1e-8, 1e-6, 1e-4, 1e-2};

// Cholesky factorization of  MtM + c_reg * E + (ridge + jitter) * I  where E
// is the identity with a zero in the last (bias) slot. Jitter is the first
// schedule entry at which the factorization succeeds.
class SpdFactor {
public:
  SpdFactor(const Matrix& mtm, double c_reg, double ridge = 0.0,
            std::span<const double> schedule = kDefaultJitterSchedule) {
    if (mtm.rows() != mtm.cols() || mtm.rows() < 1) throw ConfigError("spd_solve_factor: matrix must be square");
    if (!(c_reg >= 0.0) || !(ridge >= 0.0)) throw ConfigError("spd_solve_factor: regularization must be >= 0");
    const Index d = mtm.rows();
    for (double jitter : schedule) {
      system_ = mtm;
      system_.diagonal().head(d - 1).array() += c_reg;
      system_.diagonal().array() += ridge + jitter;
      llt_.compute(system_);
      if (llt_.info() == Eigen::Success && well_conditioned()) {
        jitter_ = jitter;
        return;
      }
    }
    throw SolverError("spd_solve_factor: factorization failed at every jitter level");
  }

  Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }
  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }

  double jitter() const { return jitter_; }
  // The regularized matrix that was factored.
  const Matrix& system() const { return system_; }

private:
  bool well_conditioned() const {
    const Vector piv = Matrix(llt_.matrixL()).diagonal();
    if (!piv.allFinite()) return false;
    const double lo = piv.minCoeff();
    const double hi = piv.maxCoeff();
    // Pivot ratio squared approximates a reciprocal condition estimate.
    return lo > 0.0 && (lo * lo) >= 1e-15 * (hi * hi);
  }

  Matrix system_;
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
};

// Solver-facing factor of one dual: Q = inner^-1 G_other^T (one column per
// dual variable) and the diagonal of Qbar = G_other Q.
struct QFactor {
  Matrix q;
  Vector qbar_diag;
  double jitter = 0.0;
  Matrix system;  // inner matrix actually factored, kept for stationarity checks

  Index variables() const { return q.cols(); }
  Index dim() const { return q.rows(); }
};

// G_own: augmented rows of the class the plane is fitted to (H or S).
// G_other: augmented rows of the class pushed away; one dual variable each.
inline QFactor build_q_factor(const Matrix& g_own, const Matrix& g_other, double c_reg, double ridge = 0.0) {
  if (g_own.cols() != g_other.cols()) throw ConfigError("build_q_factor: column mismatch");
  SpdFactor factor(g_own.transpose() * g_own, c_reg, ridge);
  QFactor qf;
  qf.q = factor.solve(Matrix(g_other.transpose()));
  qf.qbar_diag.resize(g_other.rows());
  for (Index i = 0; i < g_other.rows(); ++i) qf.qbar_diag(i) = g_other.row(i).dot(qf.q.col(i));
  qf.jitter = factor.jitter();
  qf.system = factor.system();
  return qf;
}

// Dense Qbar = G_other * Q.
inline Matrix dense_qbar(const QFactor& qf, const Matrix& g_other) { return g_other * qf.q; }

}  // namespace frtsvm
