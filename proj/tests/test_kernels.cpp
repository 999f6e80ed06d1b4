#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "dhg/kernels.hpp"

using namespace dhg::kernels;

namespace {

struct Inputs {
  std::vector<double> a, b, w, values;
  std::vector<std::int32_t> idx;
};

Inputs random_inputs(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 63);
  Inputs in;
  for (std::size_t i = 0; i < n; ++i) {
    in.a.push_back(u(rng));
    in.b.push_back(u(rng));
    in.w.push_back(std::fabs(u(rng)));
    in.idx.push_back(pick(rng));
  }
  for (int i = 0; i < 64; ++i) in.values.push_back(u(rng));
  return in;
}

}  // namespace

TEST_CASE("scalar kernels on hand-checked inputs") {
  const Table& t = scalar_table();
  std::vector<double> values{0.5, 2.0, -1.0};
  std::vector<double> w{0.25, 0.75};
  std::vector<std::int32_t> idx{1, 2};
  CHECK(t.gather_dot(w.data(), idx.data(), values.data(), 2) == doctest::Approx(0.25 * 2.0 - 0.75));

  std::vector<double> z{0.0, 1.0, 2.0};
  std::vector<double> inc{-1.0, 0.5, -2.5};
  t.clamp_accumulate(z.data(), inc.data(), 3);
  CHECK(z == std::vector<double>{0.0, 1.5, 0.0});

  CHECK(t.max_value(values.data(), 3) == 2.0);
  CHECK(std::isinf(t.max_value(values.data(), 0)));
  std::vector<double> other{0.5, 1.0, 0.0};
  CHECK(t.max_abs_diff(values.data(), other.data(), 3) == 1.0);
  CHECK(t.max_abs_diff(values.data(), other.data(), 0) == 0.0);
}

TEST_CASE("vector kernels agree with the scalar reference") {
  if (!available(Isa::kAvx2)) {
    MESSAGE("AVX2 not available on this host; equivalence check skipped");
    return;
  }
  const Table& ref = scalar_table();
  const Table& vec = table(Isa::kAvx2);
  std::mt19937_64 rng(7);
  for (std::size_t n = 0; n <= 41; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      Inputs in = random_inputs(n, rng);
      double r = ref.gather_dot(in.w.data(), in.idx.data(), in.values.data(), n);
      double v = vec.gather_dot(in.w.data(), in.idx.data(), in.values.data(), n);
      // summation order differs; bound by n ulps of the magnitude sum
      double mag = 0.0;
      for (std::size_t i = 0; i < n; ++i) mag += in.w[i] * std::fabs(in.values[static_cast<std::size_t>(in.idx[i])]);
      CHECK(std::fabs(r - v) <= 4.0 * static_cast<double>(n + 1) * 1e-16 * (mag + 1.0));

      CHECK(ref.max_abs_diff(in.a.data(), in.b.data(), n) == vec.max_abs_diff(in.a.data(), in.b.data(), n));
      CHECK(ref.max_value(in.a.data(), n) == vec.max_value(in.a.data(), n));

      std::vector<double> z1 = in.b, z2 = in.b;
      for (auto& x : z1) x = std::fabs(x);
      z2 = z1;
      ref.clamp_accumulate(z1.data(), in.a.data(), n);
      vec.clamp_accumulate(z2.data(), in.a.data(), n);
      CHECK(z1 == z2);
    }
  }
}

TEST_CASE("active table is one of the known ISAs") {
  Isa isa = active_isa();
  CHECK(available(isa));
  CHECK((isa_name(isa) == "scalar" || isa_name(isa) == "avx2"));
}
