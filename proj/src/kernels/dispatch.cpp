#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dhg/kernels.hpp"

namespace dhg::kernels {

#if defined(DHG_WITH_AVX2)
const Table& avx2_table();
#endif

bool available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(DHG_WITH_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const Table& table(Isa isa) {
  if (!available(isa)) throw std::runtime_error("kernel ISA not available: " + std::string(isa_name(isa)));
#if defined(DHG_WITH_AVX2)
  if (isa == Isa::kAvx2) return avx2_table();
#endif
  return scalar_table();
}

namespace {

Isa pick() {
  const char* env = std::getenv("DHG_KERNELS");
  if (env != nullptr && std::string(env) == "scalar") return Isa::kScalar;
  return available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = pick();
  return isa;
}

const Table& active() {
  static const Table& t = table(active_isa());
  return t;
}

std::string_view isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

}  // namespace dhg::kernels
