#pragma once

// Text model container. Layout is documented in docs/model_format.md.

#include "frtsvm/model.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace frtsvm {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline void write_vector(std::ostream& out, const char* key, const Vector& v) {
  out << key;
  for (Index i = 0; i < v.size(); ++i) out << ' ' << fmt_double(v(i));
  out << '\n';
}

inline void write_config(std::ostream& out, const TrainConfig& c) {
  out << "mode " << to_string(c.mode) << '\n';
  out << "kernel " << to_string(c.kernel.kind) << ' ' << fmt_double(c.kernel.g) << '\n';
  out << "c " << fmt_double(c.c1) << ' ' << fmt_double(c.c2) << ' ' << fmt_double(c.c3) << ' ' << fmt_double(c.c4)
      << '\n';
  out << "membership " << fmt_double(c.membership.mu) << ' ' << fmt_double(c.membership.delta) << ' '
      << (c.unit_memberships ? 1 : 0) << '\n';
  out << "solver " << fmt_double(c.solver.epsilon) << ' ' << c.solver.max_epochs << ' ' << c.solver.seed << ' '
      << (c.solver.shrinking ? 1 : 0) << '\n';
  out << "scale " << (c.scale ? 1 : 0) << '\n';
}

class Reader {
public:
  explicit Reader(std::istream& in) : in_(in) {}

  void expect(const std::string& key) {
    std::string tok;
    if (!(in_ >> tok) || tok != key) fail("expected '" + key + "', found '" + tok + "'");
  }
  std::string word() {
    std::string tok;
    if (!(in_ >> tok)) fail("unexpected end of model file");
    return tok;
  }
  double number() {
    const std::string tok = word();
    double v = 0.0;
    if (!parse_double(tok, v)) fail("bad number '" + tok + "'");
    return v;
  }
  long integer() {
    const double v = number();
    return static_cast<long>(v);
  }
  Vector vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = number();
    return v;
  }
  [[noreturn]] static void fail(const std::string& msg) { throw DataError("model file: " + msg); }

private:
  std::istream& in_;
};

inline TrainConfig read_config(Reader& r) {
  TrainConfig c;
  r.expect("mode");
  c.mode = mode_from_string(r.word());
  r.expect("kernel");
  c.kernel.kind = kernel_kind_from_string(r.word());
  c.kernel.g = r.number();
  r.expect("c");
  c.c1 = r.number();
  c.c2 = r.number();
  c.c3 = r.number();
  c.c4 = r.number();
  r.expect("membership");
  c.membership.mu = r.number();
  c.membership.delta = r.number();
  c.unit_memberships = r.integer() != 0;
  r.expect("solver");
  c.solver.epsilon = r.number();
  c.solver.max_epochs = r.integer();
  c.solver.seed = static_cast<std::uint64_t>(std::stoull(r.word()));
  c.solver.shrinking = r.integer() != 0;
  r.expect("scale");
  c.scale = r.integer() != 0;
  return c;
}

}  // namespace detail

inline void write_model(std::ostream& out, const Model& model) {
  out << "FRTSVM-MODEL " << kModelFormatVersion << '\n';
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        constexpr bool is_linear = std::is_same_v<M, LinearModel>;
        out << "type " << (is_linear ? "linear" : "kernel") << '\n';
        detail::write_config(out, m.config);
        out << "features " << m.scaler.min.size() << '\n';
        detail::write_vector(out, "scaler_min", m.scaler.min);
        detail::write_vector(out, "scaler_range", m.scaler.range);
        out << "b_plus " << detail::fmt_double(m.b_plus) << '\n';
        out << "b_minus " << detail::fmt_double(m.b_minus) << '\n';
        if constexpr (is_linear) {
          detail::write_vector(out, "w_plus", m.w_plus);
          detail::write_vector(out, "w_minus", m.w_minus);
        } else {
          out << "support_rows " << m.support.rows() << '\n';
          detail::write_vector(out, "coeff_plus", m.coeff_plus);
          detail::write_vector(out, "coeff_minus", m.coeff_minus);
          out << "support\n";
          for (Index i = 0; i < m.support.rows(); ++i) {
            for (Index j = 0; j < m.support.cols(); ++j) out << (j ? " " : "") << detail::fmt_double(m.support(i, j));
            out << '\n';
          }
        }
      },
      model);
  out << "end\n";
}

inline Model read_model(std::istream& in) {
  detail::Reader r(in);
  r.expect("FRTSVM-MODEL");
  const long version = r.integer();
  if (version != kModelFormatVersion) detail::Reader::fail("unsupported version " + std::to_string(version));
  r.expect("type");
  const std::string type = r.word();
  if (type != "linear" && type != "kernel") detail::Reader::fail("unknown model type '" + type + "'");
  const TrainConfig cfg = detail::read_config(r);
  r.expect("features");
  const Index n = r.integer();
  if (n < 1) detail::Reader::fail("bad feature count");
  MinMaxScaler scaler;
  r.expect("scaler_min");
  scaler.min = r.vector(n);
  r.expect("scaler_range");
  scaler.range = r.vector(n);
  r.expect("b_plus");
  const double b_plus = r.number();
  r.expect("b_minus");
  const double b_minus = r.number();

  Model out;
  if (type == "linear") {
    LinearModel m;
    m.config = cfg;
    m.scaler = scaler;
    m.b_plus = b_plus;
    m.b_minus = b_minus;
    r.expect("w_plus");
    m.w_plus = r.vector(n);
    r.expect("w_minus");
    m.w_minus = r.vector(n);
    out = std::move(m);
  } else {
    KernelModel m;
    m.config = cfg;
    m.kernel = cfg.kernel;
    m.scaler = scaler;
    m.b_plus = b_plus;
    m.b_minus = b_minus;
    r.expect("support_rows");
    const Index l = r.integer();
    if (l < 1) detail::Reader::fail("bad support row count");
    r.expect("coeff_plus");
    m.coeff_plus = r.vector(l);
    r.expect("coeff_minus");
    m.coeff_minus = r.vector(l);
    r.expect("support");
    m.support.resize(l, n);
    for (Index i = 0; i < l; ++i)
      for (Index j = 0; j < n; ++j) m.support(i, j) = r.number();
    m.refresh_cache();
    out = std::move(m);
  }
  r.expect("end");
  return out;
}

inline void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  write_model(out, model);
  if (!out) throw DataError("write failed: " + path);
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  return read_model(in);
}

}  // namespace frtsvm
