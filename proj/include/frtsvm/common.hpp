#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace frtsvm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;
using Labels = std::vector<int>;

// Base of every error thrown by the library. The CLI maps the subclasses
// onto exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed or degenerate input data.
class DataError : public Error {
public:
  using Error::Error;
};

// Invalid configuration or precondition violation.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Solver failed to reach its termination criterion, or produced a degenerate model.
class SolverError : public Error {
public:
  using Error::Error;
};

namespace detail {

// Round-trip text for a double.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_double_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Gather the given rows of m into a new matrix, in order.
template <typename Derived>
Matrix take_rows(const Eigen::MatrixBase<Derived>& m, const IndexList& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

}  // namespace detail
}  // namespace frtsvm
