#pragma once

#include <cstdint>

#include "sotpim/layout.hpp"

// Reference arithmetic on the stored float format. Results are computed from
// exact integer intermediates and then rounded once, so this model is an
// independent check for the in-memory bit-level implementation: it never
// touches a subarray and shares no code with the micro-op schedules.

namespace sotpim {

struct FloatFlags {
  bool overflow = false;
  bool underflow = false;
  bool any() const { return overflow || underflow; }
  bool operator==(const FloatFlags&) const = default;
};

struct FloatVal {
  std::uint64_t bits = 0;
  FloatFlags flags;
};

enum class RefRounding : std::uint8_t { TowardZero, NearestEven };

FloatVal ref_add(const FloatLayout& ly, std::uint64_t a, std::uint64_t b,
                 RefRounding r = RefRounding::TowardZero);
FloatVal ref_mul(const FloatLayout& ly, std::uint64_t a, std::uint64_t b,
                 RefRounding r = RefRounding::TowardZero);

// acc + x*w, each step rounded like the standalone ops; flags accumulate.
FloatVal ref_mac(const FloatLayout& ly, std::uint64_t acc, std::uint64_t x,
                 std::uint64_t w, RefRounding r = RefRounding::TowardZero);

inline std::uint64_t ref_neg(const FloatLayout& ly, std::uint64_t a) {
  return a ^ (std::uint64_t{1} << (ly.n_e + ly.n_m));
}

// Host-value conversion. encode truncates toward zero to the nearest
// representable value; NaN and infinity are rejected.
FloatVal encode_float(const FloatLayout& ly, double v);
double decode_float(const FloatLayout& ly, std::uint64_t bits);

} // namespace sotpim
