#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sotpim/layout.hpp"
#include "sotpim/softfloat.hpp"
#include "sotpim/subarray.hpp"

// Bit-level arithmetic executed as subarray micro-ops. Every state change
// goes through Subarray::write_row and every data-dependent decision follows
// a Subarray::read_row / search, so the event log prices the procedures.
// The sequencer may combine bits it latched from reads issued earlier in the
// same operation when driving write bit-lines (per-column gating); it never
// inspects cells without a logged read.

namespace sotpim {

struct CellLoc {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  bool operator==(const CellLoc&) const = default;
};

// Cell assignment for the 4-step full adder. The sum lands in cache[1] and
// the carry in cache[0]; s/z_out name those cells explicitly.
struct FaLocs {
  CellLoc x, y, z;
  std::array<CellLoc, 4> cache;
  CellLoc s, z_out;

  // x,y,z side by side on one row, the four cache cells on another.
  static FaLocs plan(std::uint32_t operand_row, std::uint32_t operand_col0,
                     std::uint32_t cache_row, std::uint32_t cache_col0);
};

struct FaResult {
  int sum = 0;
  int carry = 0;
};

// One-bit full addition in four read-then-write steps using the four cache
// cells; the x, y and z operand cells are left unchanged.
FaResult full_add_1bit(Subarray& sa, const FaLocs& locs);

// Carry/scratch cells for ripple addition; must sit on the destination row.
struct AdderScratch {
  std::uint32_t row = 0;
  std::uint32_t kt_col = 0;
  std::uint32_t kc_col = 0;
};

// dst = x + y (+ carry_in), unsigned; dst.width == x.width + 1. The two
// scratch cells are reused across bit positions, so the cache footprint does
// not grow with the word width. Operand words are unchanged.
std::uint64_t add_nbit(Subarray& sa, const WordLoc& x, const WordLoc& y,
                       const WordLoc& dst, const AdderScratch& scratch,
                       int carry_in = 0);

// A float word stored on one row: mantissa LSB-first, then exponent, then
// the sign cell, matching the packed bit order.
struct StoredFloat {
  WordLoc loc;
};

StoredFloat float_word(const FloatLayout& ly, std::uint32_t row,
                       std::uint32_t col0);
StoredFloat store_float(Subarray& sa, const FloatLayout& ly,
                        std::uint64_t bits, std::uint32_t row,
                        std::uint32_t col0);
// Direct state inspection (no event); for tests and result collection.
std::uint64_t peek_float(const Subarray& sa, const FloatLayout& ly,
                         const StoredFloat& f);

// Floating point unit bound to one subarray. It owns a scratch strip on a
// single row (alignment fields, carry chain cells, exponent words) so that
// intermediate reads hit one row per step. Results are written to the
// caller's destination word; the returned value mirrors those cells.
class PimFloatUnit {
 public:
  PimFloatUnit(Subarray& sa, const FloatLayout& ly, std::uint32_t scratch_row,
               std::uint32_t scratch_col0 = 0);

  static std::uint32_t scratch_cols_needed(const FloatLayout& ly);

  FloatVal add(const StoredFloat& a, const StoredFloat& b,
               const StoredFloat& dst);
  FloatVal mul(const StoredFloat& a, const StoredFloat& b,
               const StoredFloat& dst);
  // dst = acc + x*w; product staged in `prod`.
  FloatVal mac(const StoredFloat& acc, const StoredFloat& x,
               const StoredFloat& w, const StoredFloat& prod,
               const StoredFloat& dst);

  // Batched addition: one alignment-search pass (2*(n_m+2) probes total)
  // serves all pairs; wordwise results match individual add() calls.
  std::vector<FloatVal> add_batch(std::span<const StoredFloat> as,
                                  std::span<const StoredFloat> bs,
                                  std::span<const StoredFloat> dsts);

  // Which accumulator buffer received step j of the last mul's mantissa
  // loop; roles must alternate.
  const std::vector<int>& acc_role_trace() const { return acc_roles_; }

  const FloatLayout& layout() const { return layout_; }

 private:
  struct ExpDiff;

  ExpDiff exponent_phase(const StoredFloat& a, const StoredFloat& b);
  int alignment_search(const WordLoc& diff_word, bool* matched);
  FloatVal add_core(const StoredFloat& a, const StoredFloat& b,
                    const StoredFloat& dst, const ExpDiff& ed, int shift,
                    bool far);

  std::uint64_t copy_word(const WordLoc& src, std::uint32_t dst_col0,
                          int col_shift = 0);
  void const_write(std::span<const std::uint32_t> cols,
                   std::span<const int> bits);
  void const_write_word(std::uint32_t col0, std::uint32_t width,
                        std::uint64_t value);
  void invert_cells(std::uint32_t col0, std::uint32_t width);

  // Ripple addition with the chained FA; y is a stored word or a constant.
  std::uint64_t ripple(const WordLoc& x, std::uint32_t x_width,
                       const WordLoc* y_word, std::uint64_t y_const,
                       std::uint32_t width, std::uint32_t dst_col0,
                       int carry_in);

  // One multiply accumulate step: acc_next = (acc_cur + ma*b) >> shift.
  std::uint64_t mul_step(std::uint64_t acc_shadow, std::uint64_t ma,
                         int b_bit, std::uint32_t acc_cur_col,
                         std::uint32_t acc_next_col, int shift);

  Subarray& sa_;
  FloatLayout layout_;
  std::uint32_t row_;

  // scratch strip offsets (columns)
  std::uint32_t kt_, kc_;
  std::uint32_t eb1_, eb2_, dab_, dba_, esum_, eres_;
  std::uint32_t bf_, sf_, sum_, ma_, acc_[2], chain_;
  std::uint32_t field_w_;
  std::uint32_t strip_end_;

  std::vector<int> acc_roles_;
  std::vector<ColumnOp> ops_; // reusable write buffer
};

} // namespace sotpim
