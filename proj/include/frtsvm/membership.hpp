#pragma once

#include "frtsvm/common.hpp"
#include "frtsvm/data.hpp"
#include "frtsvm/kernel.hpp"

#include <cmath>
#include <fstream>

namespace frtsvm {

struct MembershipParams {
  double mu = 0.1;      // weight of the "suspected outlier" branch
  double delta = 1e-3;  // keeps memberships at the class radius strictly positive

  void validate() const {
    if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("membership mu must lie in [0, 1]");
    if (!(delta > 0.0)) throw ConfigError("membership delta must be > 0");
  }
};

// Fuzzy weights split by class, each in the row order of split_by_class.
struct MembershipVector {
  Vector plus;
  Vector minus;

  static MembershipVector ones(Index l_plus, Index l_minus) {
    return {Vector::Ones(l_plus), Vector::Ones(l_minus)};
  }
};

struct ClassCenters {
  Vector plus;
  Vector minus;
};

inline ClassCenters class_centers_input(const Matrix& x_plus, const Matrix& x_minus) {
  if (x_plus.rows() == 0 || x_minus.rows() == 0) throw DataError("class_centers_input: empty class");
  return {x_plus.colwise().mean().transpose(), x_minus.colwise().mean().transpose()};
}

inline double class_radius_input(const Matrix& x, const Vector& center) {
  if (x.rows() == 0) throw DataError("class_radius_input: empty class");
  return std::sqrt((x.rowwise() - center.transpose()).rowwise().squaredNorm().maxCoeff());
}

namespace detail {

// Piecewise rule shared by the input-space and feature-space memberships.
// `ratio` is the distance to the own center relative to the class radius.
inline double fuzzy_weight(double d_own, double d_other, double ratio, double mu) {
  const double branch = d_own >= d_other ? mu : 1.0 - mu;
  return branch * (1.0 - ratio);
}

}  // namespace detail

inline MembershipVector membership_linear(const Dataset& data, const MembershipParams& params) {
  params.validate();
  const ClassSplit split = split_by_class(data);
  const ClassCenters c = class_centers_input(split.plus, split.minus);
  const double r_plus = class_radius_input(split.plus, c.plus);
  const double r_minus = class_radius_input(split.minus, c.minus);

  auto assign = [&](const Matrix& x, const Vector& own, const Vector& other, double radius) {
    Vector s(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
      const double d_own = (x.row(i).transpose() - own).norm();
      const double d_other = (x.row(i).transpose() - other).norm();
      s(i) = detail::fuzzy_weight(d_own, d_other, d_own / (radius + params.delta), params.mu);
    }
    return s;
  };
  return {assign(split.plus, c.plus, c.minus, r_plus), assign(split.minus, c.minus, c.plus, r_minus)};
}

// Squared feature-space distance from phi(x_i) to the mean of phi over
// class_rows, expanded through the Gram matrix and clamped at 0.
inline double kernel_sq_dist_to_center(Index x_index, const IndexList& class_rows, const Matrix& gram_block) {
  if (class_rows.empty()) throw DataError("kernel_sq_dist_to_center: empty class");
  const double lc = static_cast<double>(class_rows.size());
  double cross = 0.0;
  double within = 0.0;
  for (Index j : class_rows) {
    cross += gram_block(x_index, j);
    for (Index k : class_rows) within += gram_block(j, k);
  }
  return std::max(0.0, gram_block(x_index, x_index) - 2.0 / lc * cross + within / (lc * lc));
}

// Feature-space memberships given the full l x l Gram matrix of the
// (already scaled) training features.
inline MembershipVector membership_kernel(const Dataset& data, const Matrix& gram_xx,
                                          const MembershipParams& params) {
  params.validate();
  if (gram_xx.rows() != data.rows() || gram_xx.cols() != data.rows())
    throw ConfigError("membership_kernel: Gram matrix does not match dataset");
  const ClassSplit split = split_by_class(data);

  // Row sums against each class, and each class's total Gram mass.
  auto class_sums = [&](const IndexList& rows) {
    Vector s = Vector::Zero(data.rows());
    for (Index j : rows) s += gram_xx.col(j);
    return s;
  };
  const Vector sum_plus = class_sums(split.plus_rows);
  const Vector sum_minus = class_sums(split.minus_rows);
  const double lp = static_cast<double>(split.plus_rows.size());
  const double lm = static_cast<double>(split.minus_rows.size());
  double total_plus = 0.0, total_minus = 0.0;
  for (Index j : split.plus_rows) total_plus += sum_plus(j);
  for (Index j : split.minus_rows) total_minus += sum_minus(j);

  Vector d2_plus(data.rows()), d2_minus(data.rows());
  for (Index i = 0; i < data.rows(); ++i) {
    d2_plus(i) = std::max(0.0, gram_xx(i, i) - 2.0 / lp * sum_plus(i) + total_plus / (lp * lp));
    d2_minus(i) = std::max(0.0, gram_xx(i, i) - 2.0 / lm * sum_minus(i) + total_minus / (lm * lm));
  }

  auto assign = [&](const IndexList& rows, const Vector& d2_own, const Vector& d2_other) {
    double r2 = 0.0;
    for (Index i : rows) r2 = std::max(r2, d2_own(i));
    Vector s(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Index i = rows[k];
      const double ratio = std::sqrt(d2_own(i) / (r2 + params.delta));
      s(static_cast<Index>(k)) =
          detail::fuzzy_weight(std::sqrt(d2_own(i)), std::sqrt(d2_other(i)), ratio, params.mu);
    }
    return s;
  };
  return {assign(split.plus_rows, d2_plus, d2_minus), assign(split.minus_rows, d2_minus, d2_plus)};
}

inline MembershipVector membership_kernel(const Dataset& data, const KernelSpec& kernel,
                                          const MembershipParams& params) {
  return membership_kernel(data, gram(data.features, kernel), params);
}

// CSV of (index, label, s) in original row order; index is 0-based.
inline void write_membership_csv(const std::string& path, const Dataset& data, const MembershipVector& s) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << "index,label,s\n";
  Index ip = 0, im = 0;
  char buf[32];
  for (Index i = 0; i < data.rows(); ++i) {
    const int y = data.labels[static_cast<std::size_t>(i)];
    const double v = y > 0 ? s.plus(ip++) : s.minus(im++);
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << i << ',' << y << ',' << buf << '\n';
  }
}

}  // namespace frtsvm
