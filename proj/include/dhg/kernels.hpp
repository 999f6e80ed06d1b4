#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Numeric inner loops with a scalar reference and an AVX2 variant. The active
// table is picked once at startup from CPUID; DHG_KERNELS=scalar forces the
// reference path.
namespace dhg::kernels {

enum class Isa { kScalar, kAvx2 };

struct Table {
  // sum_i w[i] * values[idx[i]]
  double (*gather_dot)(const double* w, const std::int32_t* idx, const double* values,
                       std::size_t n);
  // max_i |a[i] - b[i]|, 0 for n == 0
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
  // z[i] = max(0, z[i] + inc[i])
  void (*clamp_accumulate)(double* z, const double* inc, std::size_t n);
  // max_i x[i], -inf for n == 0
  double (*max_value)(const double* x, std::size_t n);
};

const Table& scalar_table();
bool available(Isa isa);
const Table& table(Isa isa);

const Table& active();
Isa active_isa();
std::string_view isa_name(Isa isa);

}  // namespace dhg::kernels
