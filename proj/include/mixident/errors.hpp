#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace mixident {

namespace detail {
// std::to_string renders tiny magnitudes as 0.000000; messages need %g.
inline std::string short_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}
}  // namespace detail

// Pipeline stage at which a gated check rejected the input.  These are
// expected outcomes on degenerate or noisy instances, not programming errors:
// the caller can continue with the next candidate subset triple.
enum class Stage { selection, hankel, power, linear_solve };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::selection: return "selection";
    case Stage::hankel: return "hankel";
    case Stage::power: return "power";
    case Stage::linear_solve: return "linear-solve";
  }
  return "?";
}

struct Failure {
  Stage stage;
  std::string detail;
};

// A square system whose smallest singular value fell below the floor that
// makes inversion meaningful.  Signals a bad family selection.
struct SingularMatrixError : std::runtime_error {
  explicit SingularMatrixError(const std::string& which, double sigma_min)
      : std::runtime_error(which + " is numerically singular (sigma_min = " +
                           detail::short_double(sigma_min) + ")"),
        sigma_min(sigma_min) {}
  double sigma_min;
};

struct DegenerateHankelError : std::runtime_error {
  explicit DegenerateHankelError(double sigma_min)
      : std::runtime_error("Hankel principal block is numerically singular (sigma_min = " +
                           detail::short_double(sigma_min) + ")"),
        sigma_min(sigma_min) {}
  double sigma_min;
};

struct ComplexEigenvalueError : std::runtime_error {
  explicit ComplexEigenvalueError(double imag_mag)
      : std::runtime_error("spike support came out complex (|imag| = " +
                           detail::short_double(imag_mag) + ")"),
        imag_mag(imag_mag) {}
  double imag_mag;
};

struct SingularVandermondeError : std::runtime_error {
  explicit SingularVandermondeError(double min_gap)
      : std::runtime_error("duplicate spike locations make the Vandermonde system singular "
                           "(min gap = " + detail::short_double(min_gap) + ")"),
        min_gap(min_gap) {}
  double min_gap;
};

struct ZeroWeightError : std::runtime_error {
  ZeroWeightError() : std::runtime_error("a mixing weight is zero or negative; cannot divide") {}
};

// Greedy column selection missed the guaranteed bound and brute force was
// infeasible at this size.
struct CheckFailedError : std::runtime_error {
  explicit CheckFailedError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mixident
