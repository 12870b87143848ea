#include "doctest.h"

#include <cfenv>
#include <cmath>
#include <cstring>
#include <random>

#include "sotpim/softfloat.hpp"

using namespace sotpim;

namespace {

const FloatLayout f32 = FloatLayout::f32();

std::uint64_t bits_of(double v) { return encode_float(f32, v).bits; }

// Independent check against the host FPU: stored-format values with n_e=8,
// n_m=23 are exactly the IEEE binary32 normal range, so rounding the host
// float result (computed in the matching rounding mode) must agree whenever
// no subnormal/overflow is involved.
std::uint32_t host_float_bits(float f) {
  std::uint32_t u;
  static_assert(sizeof u == sizeof f);
  std::memcpy(&u, &f, sizeof u);
  return u;
}

std::uint64_t to_layout_bits(float f) {
  const std::uint32_t u = host_float_bits(f);
  return u; // identical packing for n_e=8, n_m=23
}

float layout_bits_to_float(std::uint64_t b) {
  const auto u = static_cast<std::uint32_t>(b);
  float f;
  std::memcpy(&f, &u, sizeof f);
  return f;
}

bool host_normal(float f) {
  return f == 0.0f || std::isnormal(f);
}

std::uint64_t random_normal_bits(std::mt19937_64& rng) {
  const std::uint64_t mant = rng() & f32.mant_mask();
  const std::uint64_t exp = 1 + (rng() % 255);
  const std::uint32_t sign = static_cast<std::uint32_t>(rng() & 1);
  return pack_float(f32, FloatFields{sign, exp, mant});
}

} // namespace

TEST_CASE("encode basics") {
  const FloatFields one = unpack_float(f32, bits_of(1.0));
  CHECK(one.sign == 0);
  CHECK(one.exponent == 127);
  CHECK(one.mantissa == 0);
  const FloatFields m2 = unpack_float(f32, bits_of(-2.0));
  CHECK(m2.sign == 1);
  CHECK(m2.exponent == 128);
  CHECK(m2.mantissa == 0);
  CHECK(decode_float(f32, bits_of(0.15625)) == 0.15625);
}

TEST_CASE("encode rejects NaN and infinity") {
  CHECK_THROWS_AS(encode_float(f32, std::nan("")), std::domain_error);
  CHECK_THROWS_AS(encode_float(f32, INFINITY), std::domain_error);
}

TEST_CASE("encode saturates and flushes with flags") {
  const FloatVal big = encode_float(f32, 1e60);
  CHECK(big.flags.overflow);
  CHECK(big.bits == max_finite_bits(f32, 0));
  const FloatVal tiny = encode_float(f32, 1e-60);
  CHECK(tiny.flags.underflow);
  CHECK(is_zero_bits(f32, tiny.bits));
}

TEST_CASE("round trip for representable values") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t b = random_normal_bits(rng);
    const double v = decode_float(f32, b);
    CHECK(encode_float(f32, v).bits == b);
  }
}

TEST_CASE("spec addition examples") {
  CHECK(ref_add(f32, bits_of(1.5), bits_of(2.5)).bits == bits_of(4.0));
  // a + 0 == a, any finite a
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t a = random_normal_bits(rng);
    CHECK(ref_add(f32, a, bits_of(0.0)).bits == a);
    CHECK(ref_add(f32, bits_of(0.0), a).bits == a);
  }
  // exact cancellation gives +0
  const std::uint64_t x = bits_of(3.25);
  CHECK(ref_add(f32, x, ref_neg(f32, x)).bits == zero_bits(f32, 0));
}

TEST_CASE("spec multiplication examples") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t a = random_normal_bits(rng);
    CHECK(ref_mul(f32, a, bits_of(1.0)).bits == a);
    const FloatFields fa = unpack_float(f32, a);
    const std::uint64_t z = ref_mul(f32, a, bits_of(0.0)).bits;
    CHECK(is_zero_bits(f32, z));
    CHECK(unpack_float(f32, z).sign == fa.sign); // sign = s_a xor 0
  }
}

TEST_CASE("mac examples") {
  CHECK(ref_mac(f32, bits_of(0.0), bits_of(1.0), bits_of(1.0)).bits ==
        bits_of(1.0));
  CHECK(ref_mac(f32, bits_of(1.0), bits_of(2.0), bits_of(3.0)).bits ==
        bits_of(7.0));
}

TEST_CASE("truncation-mode add matches the host FPU rounding toward zero") {
  std::mt19937_64 rng(11);
  const int old_mode = std::fegetround();
  REQUIRE(std::fesetround(FE_TOWARDZERO) == 0);
  int checked = 0;
  for (int i = 0; i < 400000 && checked < 50000; ++i) {
    const std::uint64_t a = random_normal_bits(rng);
    const std::uint64_t b = random_normal_bits(rng);
    const float fa = layout_bits_to_float(a);
    const float fb = layout_bits_to_float(b);
    const float fs = fa + fb;
    if (!host_normal(fs)) continue; // stored format has no subnormals
    ++checked;
    const FloatVal got = ref_add(f32, a, b);
    CAPTURE(a);
    CAPTURE(b);
    REQUIRE(got.bits == to_layout_bits(fs));
  }
  std::fesetround(old_mode);
  CHECK(checked >= 50000);
}

TEST_CASE("truncation-mode mul matches the host FPU rounding toward zero") {
  std::mt19937_64 rng(12);
  const int old_mode = std::fegetround();
  REQUIRE(std::fesetround(FE_TOWARDZERO) == 0);
  int checked = 0;
  for (int i = 0; i < 400000 && checked < 50000; ++i) {
    const std::uint64_t a = random_normal_bits(rng);
    const std::uint64_t b = random_normal_bits(rng);
    const float fp = layout_bits_to_float(a) * layout_bits_to_float(b);
    if (!host_normal(fp)) continue;
    ++checked;
    const FloatVal got = ref_mul(f32, a, b);
    CAPTURE(a);
    CAPTURE(b);
    REQUIRE(got.bits == to_layout_bits(fp));
  }
  std::fesetround(old_mode);
  CHECK(checked >= 50000);
}

TEST_CASE("nearest-even mode matches the host FPU default rounding") {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int i = 0; i < 400000 && checked < 50000; ++i) {
    const std::uint64_t a = random_normal_bits(rng);
    const std::uint64_t b = random_normal_bits(rng);
    const float fs = layout_bits_to_float(a) + layout_bits_to_float(b);
    const float fp = layout_bits_to_float(a) * layout_bits_to_float(b);
    if (host_normal(fs)) {
      CHECK(ref_add(f32, a, b, RefRounding::NearestEven).bits ==
            to_layout_bits(fs));
      ++checked;
    }
    if (host_normal(fp)) {
      CHECK(ref_mul(f32, a, b, RefRounding::NearestEven).bits ==
            to_layout_bits(fp));
    }
  }
  CHECK(checked >= 50000);
}

TEST_CASE("truncation result is within 2 ulp of nearest-even") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t a = random_normal_bits(rng);
    const std::uint64_t b = random_normal_bits(rng);
    const FloatVal rz = ref_add(f32, a, b);
    const FloatVal rn = ref_add(f32, a, b, RefRounding::NearestEven);
    if (!rz.flags.any() && !rn.flags.any())
      CHECK(ulp_distance(f32, rz.bits, rn.bits) <= 2);
    const FloatVal mz = ref_mul(f32, a, b);
    const FloatVal mn = ref_mul(f32, a, b, RefRounding::NearestEven);
    if (!mz.flags.any() && !mn.flags.any())
      CHECK(ulp_distance(f32, mz.bits, mn.bits) <= 2);
  }
}

TEST_CASE("addition overflow saturates and underflow flushes") {
  const std::uint64_t big = max_finite_bits(f32, 0);
  const FloatVal ov = ref_add(f32, big, big);
  CHECK(ov.flags.overflow);
  CHECK(ov.bits == big);

  // smallest normals cancelling below the representable range
  const std::uint64_t a = pack_float(f32, {0, 1, 1});
  const std::uint64_t b = pack_float(f32, {1, 1, 0});
  const FloatVal un = ref_add(f32, a, b);
  CHECK(un.flags.underflow);
  CHECK(is_zero_bits(f32, un.bits));
}

TEST_CASE("multiplication overflow and underflow") {
  const std::uint64_t big = max_finite_bits(f32, 0);
  const FloatVal ov = ref_mul(f32, big, big);
  CHECK(ov.flags.overflow);
  const std::uint64_t tiny = pack_float(f32, {0, 1, 0});
  const FloatVal un = ref_mul(f32, tiny, tiny);
  CHECK(un.flags.underflow);
  CHECK(is_zero_bits(f32, un.bits));
}

TEST_CASE("add and mul are commutative bit-exactly") {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 20000; ++i) {
    const std::uint64_t a = random_normal_bits(rng);
    const std::uint64_t b = random_normal_bits(rng);
    CHECK(ref_add(f32, a, b).bits == ref_add(f32, b, a).bits);
    CHECK(ref_mul(f32, a, b).bits == ref_mul(f32, b, a).bits);
  }
}

TEST_CASE("other layouts stay self-consistent") {
  for (auto [ne, nm] : {std::pair<int, int>{5, 10}, {8, 7}, {8, 16},
                        {8, 32}, {11, 52}}) {
    const FloatLayout ly(static_cast<std::uint32_t>(ne),
                         static_cast<std::uint32_t>(nm));
    std::mt19937_64 rng(static_cast<std::uint64_t>(ne * 100 + nm));
    for (int i = 0; i < 3000; ++i) {
      const std::uint64_t mant = rng() & ly.mant_mask();
      const std::uint64_t exp =
          1 + (rng() % static_cast<std::uint64_t>(ly.exp_max()));
      const std::uint64_t a =
          pack_float(ly, {static_cast<std::uint32_t>(rng() & 1), exp, mant});
      const double v = decode_float(ly, a);
      CHECK(encode_float(ly, v).bits == a);
      CHECK(ref_add(ly, a, zero_bits(ly)).bits == a);
      CHECK(ref_mul(ly, a, encode_float(ly, 1.0).bits).bits == a);
    }
  }
}
