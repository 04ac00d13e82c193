#pragma once

#include <Eigen/Core>
#include <cstdio>
#include <string>

namespace mixident {

// Fixed 17-significant-digit formatting so serialized doubles round-trip
// exactly and output files are byte-identical for a given (config, seed).
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_vector(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v(i));
  }
  return out + "]";
}

inline std::string fmt_row(const Eigen::RowVectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v(i));
  }
  return out + "]";
}

inline std::string fmt_matrix_rows(const Eigen::MatrixXd& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += ",";
    out += fmt_row(m.row(i));
  }
  return out + "]";
}

inline std::string fmt_int_list(const std::vector<int>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

}  // namespace mixident
