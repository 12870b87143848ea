#pragma once

#include <cstdint>
#include <stdexcept>

// Stored floating point format: 1 sign bit, n_e exponent bits, n_m mantissa
// bits (hidden leading 1, not stored). Exponent 0 is the unique zero class;
// every other exponent value denotes a normalized number, so there are no
// subnormals, infinities or NaNs. Arithmetic rounds by truncation toward zero
// after normalization; overflow saturates to the largest finite value and
// underflow flushes to zero, with flags.

namespace sotpim {

enum class RoundingRule : std::uint8_t { TruncateTowardZero };

struct FloatLayout {
  std::uint32_t n_e = 8;
  std::uint32_t n_m = 23;
  std::int32_t bias = 127;
  RoundingRule rounding = RoundingRule::TruncateTowardZero;

  FloatLayout() = default;
  FloatLayout(std::uint32_t ne, std::uint32_t nm)
      : n_e(ne), n_m(nm), bias((1 << (ne - 1)) - 1) {
    validate();
  }
  FloatLayout(std::uint32_t ne, std::uint32_t nm, std::int32_t b)
      : n_e(ne), n_m(nm), bias(b) {
    validate();
  }

  void validate() const {
    if (n_e < 2 || n_m < 1)
      throw std::invalid_argument("layout: need n_e >= 2, n_m >= 1");
    if (1 + n_e + n_m > 64)
      throw std::invalid_argument("layout: word wider than 64 bits");
    if (n_m > 52)
      throw std::invalid_argument("layout: n_m > 52 unsupported");
  }

  static FloatLayout f32() { return FloatLayout(8, 23); }

  std::uint32_t total_bits() const { return 1 + n_e + n_m; }
  std::int64_t exp_max() const { return (std::int64_t{1} << n_e) - 1; }
  std::uint64_t mant_mask() const { return (std::uint64_t{1} << n_m) - 1; }
  std::uint64_t hidden_bit() const { return std::uint64_t{1} << n_m; }

  bool operator==(const FloatLayout&) const = default;
};

struct FloatFields {
  std::uint32_t sign = 0;
  std::uint64_t exponent = 0; // biased; 0 means zero value
  std::uint64_t mantissa = 0;
};

inline std::uint64_t pack_float(const FloatLayout& ly, const FloatFields& f) {
  return (static_cast<std::uint64_t>(f.sign & 1) << (ly.n_e + ly.n_m)) |
         ((f.exponent & ((std::uint64_t{1} << ly.n_e) - 1)) << ly.n_m) |
         (f.mantissa & ly.mant_mask());
}

inline FloatFields unpack_float(const FloatLayout& ly, std::uint64_t bits) {
  FloatFields f;
  f.sign = static_cast<std::uint32_t>((bits >> (ly.n_e + ly.n_m)) & 1);
  f.exponent = (bits >> ly.n_m) & ((std::uint64_t{1} << ly.n_e) - 1);
  f.mantissa = bits & ly.mant_mask();
  return f;
}

inline std::uint64_t zero_bits(const FloatLayout& ly, std::uint32_t sign = 0) {
  return pack_float(ly, FloatFields{sign, 0, 0});
}

inline std::uint64_t max_finite_bits(const FloatLayout& ly,
                                     std::uint32_t sign) {
  return pack_float(
      ly, FloatFields{sign, static_cast<std::uint64_t>(ly.exp_max()),
                      ly.mant_mask()});
}

inline bool is_zero_bits(const FloatLayout& ly, std::uint64_t bits) {
  return unpack_float(ly, bits).exponent == 0;
}

// Ordinal mapping for ULP distances: magnitude order within a sign, both
// zeros mapped to 0.
inline std::int64_t float_ordinal(const FloatLayout& ly, std::uint64_t bits) {
  const FloatFields f = unpack_float(ly, bits);
  if (f.exponent == 0) return 0;
  const auto mag =
      static_cast<std::int64_t>((f.exponent << ly.n_m) | f.mantissa);
  return f.sign ? -mag : mag;
}

inline std::uint64_t ulp_distance(const FloatLayout& ly, std::uint64_t a,
                                  std::uint64_t b) {
  const std::int64_t oa = float_ordinal(ly, a);
  const std::int64_t ob = float_ordinal(ly, b);
  return static_cast<std::uint64_t>(oa > ob ? oa - ob : ob - oa);
}

} // namespace sotpim
