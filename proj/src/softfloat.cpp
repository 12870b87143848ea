#include "sotpim/softfloat.hpp"

#include <cmath>
#include <stdexcept>

namespace sotpim {

namespace {

using u128 = unsigned __int128;

int bit_length(u128 v) {
  const auto hi = static_cast<std::uint64_t>(v >> 64);
  if (hi) return 128 - __builtin_clzll(hi);
  const auto lo = static_cast<std::uint64_t>(v);
  if (lo) return 64 - __builtin_clzll(lo);
  return 0;
}

FloatVal saturate(const FloatLayout& ly, std::uint32_t sign) {
  FloatVal v{max_finite_bits(ly, sign), {}};
  v.flags.overflow = true;
  return v;
}

FloatVal flush(const FloatLayout& ly, std::uint32_t sign) {
  FloatVal v{zero_bits(ly, sign), {}};
  v.flags.underflow = true;
  return v;
}

// Round a positive significand given the k dropped bits; q already holds
// floor(value / 2^k). Returns true when the mantissa carried out.
bool round_nearest_even(u128& q, u128 rem, std::uint32_t k, bool sticky,
                        const FloatLayout& ly) {
  if (k == 0) return false;
  const u128 half = u128{1} << (k - 1);
  if (rem > half || (rem == half && sticky))
    q += 1;
  else if (rem == half && !sticky)
    q += static_cast<std::uint64_t>(q & 1);
  if (q == (u128{1} << (ly.n_m + 1))) {
    q >>= 1;
    return true;
  }
  return false;
}

FloatVal pack_result(const FloatLayout& ly, std::uint32_t sign,
                     std::int64_t e_res, u128 q) {
  if (e_res > ly.exp_max()) return saturate(ly, sign);
  if (e_res <= 0) return flush(ly, sign);
  return {pack_float(ly, FloatFields{sign, static_cast<std::uint64_t>(e_res),
                                     static_cast<std::uint64_t>(q) &
                                         ly.mant_mask()}),
          {}};
}

} // namespace

FloatVal ref_add(const FloatLayout& ly, std::uint64_t a, std::uint64_t b,
                 RefRounding r) {
  const FloatFields fa = unpack_float(ly, a);
  const FloatFields fb = unpack_float(ly, b);
  if (fa.exponent == 0 && fb.exponent == 0)
    return {zero_bits(ly, fa.sign & fb.sign), {}};
  if (fa.exponent == 0) return {b, {}};
  if (fb.exponent == 0) return {a, {}};

  // Order by magnitude; ties keep the first operand.
  const bool a_big = fa.exponent > fb.exponent ||
                     (fa.exponent == fb.exponent && fa.mantissa >= fb.mantissa);
  const FloatFields& big = a_big ? fa : fb;
  const FloatFields& small = a_big ? fb : fa;
  const std::uint64_t big_bits = a_big ? a : b;

  const std::uint64_t d64 = big.exponent - small.exponent;
  const std::uint32_t dcap =
      static_cast<std::uint32_t>(d64 > ly.n_m + 2 ? ly.n_m + 2 : d64);
  const std::uint64_t shift_out = d64 - dcap;
  const std::uint64_t ms = ly.hidden_bit() | small.mantissa;
  const std::uint64_t mb = ly.hidden_bit() | big.mantissa;

  std::uint64_t kept;
  bool sticky;
  if (shift_out >= 64) {
    kept = 0;
    sticky = ms != 0;
  } else {
    kept = ms >> shift_out;
    sticky = shift_out != 0 && (ms & ((std::uint64_t{1} << shift_out) - 1));
  }

  // Beyond the cap the small operand is under a quarter ulp of the big one,
  // so nearest-even rounding returns the big operand unchanged.
  if (r == RefRounding::NearestEven && shift_out != 0) return {big_bits, {}};

  const u128 big_scaled = u128{mb} << dcap;
  const std::int64_t e_big = static_cast<std::int64_t>(big.exponent);

  if (fa.sign == fb.sign) {
    const u128 sum = big_scaled + kept;
    const int top = bit_length(sum) - 1;
    const std::uint32_t k = static_cast<std::uint32_t>(top) - ly.n_m;
    u128 q = sum >> k;
    std::int64_t e_res =
        e_big + top - static_cast<int>(ly.n_m + dcap);
    if (r == RefRounding::NearestEven) {
      const u128 rem = k ? (sum & ((u128{1} << k) - 1)) : 0;
      if (round_nearest_even(q, rem, k, sticky, ly)) e_res += 1;
    }
    return pack_result(ly, fa.sign, e_res, q);
  }

  // Effective subtraction; big_scaled >= kept + sticky by the ordering.
  const std::uint32_t sign = big.sign;
  u128 diff = big_scaled - kept;
  if (r == RefRounding::TowardZero && sticky) diff -= 1;
  if (diff == 0) return {zero_bits(ly, 0), {}};
  const int top = bit_length(diff) - 1;
  std::int64_t e_res = e_big + top - static_cast<int>(ly.n_m + dcap);
  u128 q;
  if (top >= static_cast<int>(ly.n_m)) {
    const std::uint32_t k = static_cast<std::uint32_t>(top) - ly.n_m;
    q = diff >> k;
    if (r == RefRounding::NearestEven) {
      const u128 rem = k ? (diff & ((u128{1} << k) - 1)) : 0;
      if (round_nearest_even(q, rem, k, /*sticky=*/false, ly)) e_res += 1;
    }
  } else {
    q = diff << (ly.n_m - top);
  }
  return pack_result(ly, sign, e_res, q);
}

FloatVal ref_mul(const FloatLayout& ly, std::uint64_t a, std::uint64_t b,
                 RefRounding r) {
  const FloatFields fa = unpack_float(ly, a);
  const FloatFields fb = unpack_float(ly, b);
  const std::uint32_t sign = fa.sign ^ fb.sign;
  if (fa.exponent == 0 || fb.exponent == 0)
    return {zero_bits(ly, sign), {}};

  const u128 prod = u128{ly.hidden_bit() | fa.mantissa} *
                    u128{ly.hidden_bit() | fb.mantissa};
  const int top = bit_length(prod) - 1; // 2*n_m or 2*n_m + 1
  const std::uint32_t k = static_cast<std::uint32_t>(top) - ly.n_m;
  u128 q = prod >> k;
  std::int64_t e_res = static_cast<std::int64_t>(fa.exponent) +
                       static_cast<std::int64_t>(fb.exponent) - ly.bias +
                       (top - 2 * static_cast<int>(ly.n_m));
  if (r == RefRounding::NearestEven) {
    const u128 rem = prod & ((u128{1} << k) - 1);
    if (round_nearest_even(q, rem, k, /*sticky=*/false, ly)) e_res += 1;
  }
  return pack_result(ly, sign, e_res, q);
}

FloatVal ref_mac(const FloatLayout& ly, std::uint64_t acc, std::uint64_t x,
                 std::uint64_t w, RefRounding r) {
  const FloatVal p = ref_mul(ly, x, w, r);
  FloatVal s = ref_add(ly, acc, p.bits, r);
  s.flags.overflow |= p.flags.overflow;
  s.flags.underflow |= p.flags.underflow;
  return s;
}

FloatVal encode_float(const FloatLayout& ly, double v) {
  if (std::isnan(v) || std::isinf(v))
    throw std::domain_error("encode_float: NaN/infinity not representable");
  const std::uint32_t sign = std::signbit(v) ? 1u : 0u;
  if (v == 0.0) return {zero_bits(ly, sign), {}};
  int ex = 0;
  std::frexp(std::fabs(v), &ex);
  const std::int64_t e_unb = ex - 1;
  const std::int64_t e_res = e_unb + ly.bias;
  if (e_res > ly.exp_max()) return saturate(ly, sign);
  if (e_res <= 0) return flush(ly, sign);
  const double scaled =
      std::ldexp(std::fabs(v), static_cast<int>(ly.n_m) -
                                   static_cast<int>(e_unb));
  const auto q = static_cast<std::uint64_t>(scaled); // truncates toward zero
  return {pack_float(ly, FloatFields{sign, static_cast<std::uint64_t>(e_res),
                                     q & ly.mant_mask()}),
          {}};
}

double decode_float(const FloatLayout& ly, std::uint64_t bits) {
  const FloatFields f = unpack_float(ly, bits);
  if (f.exponent == 0) return f.sign ? -0.0 : 0.0;
  const double mag = std::ldexp(
      static_cast<double>(ly.hidden_bit() | f.mantissa),
      static_cast<int>(f.exponent) - ly.bias - static_cast<int>(ly.n_m));
  return f.sign ? -mag : mag;
}

} // namespace sotpim
