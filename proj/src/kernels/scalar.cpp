#include <algorithm>
#include <cmath>
#include <limits>

#include "dhg/kernels.hpp"

namespace dhg::kernels {
namespace {

double gather_dot(const double* w, const std::int32_t* idx, const double* values,
                  std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * values[idx[i]];
  return acc;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

void clamp_accumulate(double* z, const double* inc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = std::max(0.0, z[i] + inc[i]);
}

double max_value(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

}  // namespace

const Table& scalar_table() {
  static const Table t{gather_dot, max_abs_diff, clamp_accumulate, max_value};
  return t;
}

}  // namespace dhg::kernels
