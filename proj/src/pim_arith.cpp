#include "sotpim/pim_arith.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace sotpim {

namespace {

int bit_of(std::uint64_t v, std::uint32_t i) {
  return static_cast<int>((v >> i) & 1);
}

int bitlen64(std::uint64_t v) { return v ? 64 - __builtin_clzll(v) : 0; }

void check_distinct(std::span<const CellLoc> cells, const char* what) {
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = i + 1; j < cells.size(); ++j)
      if (cells[i] == cells[j])
        throw std::invalid_argument(std::string(what) +
                                    ": overlapping cell locations");
}

bool words_overlap(const WordLoc& a, const WordLoc& b) {
  if (a.row != b.row) return false;
  return a.col0 < b.col0 + b.width && b.col0 < a.col0 + a.width;
}

// Chained-FA ripple addition. Sum bits land at dst[0..width) and the final
// carry at dst[width]; kt/kc are the reused cache pair on the dst row. Bits
// of x beyond x_width read as zero; y is either a stored word of `width`
// bits or a constant. Per bit: group reads by row, then three writes
// (seed P and park the carry, form c&P and G, finalize S and the new carry).
std::uint64_t ripple_engine(Subarray& sa, std::vector<ColumnOp>& ops,
                            std::vector<std::uint32_t>& colbuf,
                            const WordLoc& x, std::uint32_t x_width,
                            const WordLoc* y, std::uint64_t y_const,
                            std::uint32_t width, std::uint32_t dst_row,
                            std::uint32_t dst_col0, std::uint32_t kt,
                            std::uint32_t kc, int carry_in,
                            std::uint64_t* x_latch_out = nullptr,
                            std::uint64_t* y_latch_out = nullptr) {
  if (width == 0 || width > 62)
    throw std::invalid_argument("ripple: unsupported width");
  std::uint64_t sum = 0, x_latch = 0, y_latch = 0;
  int c = carry_in & 1;
  for (std::uint32_t i = 0; i < width; ++i) {
    // Gather this bit's cell reads, one event per distinct row.
    struct Want {
      std::uint32_t row, col;
      int which; // 0 = x, 1 = y, 2 = carry
    };
    Want wants[3];
    int n_want = 0;
    if (i < x_width) wants[n_want++] = {x.row, x.col0 + i, 0};
    if (y && i < y->width) wants[n_want++] = {y->row, y->col0 + i, 1};
    if (i > 0) wants[n_want++] = {dst_row, kc, 2};
    int xb = 0, yb = y ? 0 : bit_of(y_const, i);
    int zb = (i == 0) ? (carry_in & 1) : 0;
    for (int k = 0; k < n_want; ++k) {
      if (wants[k].which < 0) continue;
      colbuf.clear();
      colbuf.push_back(wants[k].col);
      int members[3] = {k, -1, -1};
      int n_members = 1;
      for (int m = k + 1; m < n_want; ++m) {
        if (wants[m].which >= 0 && wants[m].row == wants[k].row) {
          colbuf.push_back(wants[m].col);
          members[n_members++] = m;
        }
      }
      auto vals = sa.read_row(wants[k].row, colbuf);
      for (int m = 0; m < n_members; ++m) {
        Want& w = wants[members[m]];
        const int v = vals[m];
        if (w.which == 0) xb = v;
        else if (w.which == 1) yb = v;
        else zb = v;
        w.which = -1;
      }
    }
    x_latch |= static_cast<std::uint64_t>(xb) << i;
    y_latch |= static_cast<std::uint64_t>(yb) << i;

    const int P = xb ^ yb;
    const int G = xb & yb;
    // seed the sum cell with P and park the carry in kt
    ops.clear();
    ops.push_back({dst_col0 + i, make_write_config(LogicKind::Copy, P)});
    ops.push_back({kt, make_write_config(LogicKind::Copy, zb)});
    sa.write_row(dst_row, ops);
    // kt := z & P, kc := G
    ops.clear();
    ops.push_back({kt, make_write_config(LogicKind::And, P)});
    ops.push_back({kc, make_write_config(LogicKind::Copy, G)});
    sa.write_row(dst_row, ops);
    // finalize: sum bit := P ^ z, kc := G | (z & P)
    const int ktv = static_cast<int>(sa.read_row_word(dst_row, kt, 1));
    ops.clear();
    ops.push_back({dst_col0 + i, make_write_config(LogicKind::Xor, zb)});
    ops.push_back({kc, make_write_config(LogicKind::Or, ktv)});
    sa.write_row(dst_row, ops);

    sum |= static_cast<std::uint64_t>(P ^ zb) << i;
    c = G | (P & zb);
  }
  // materialize the carry-out as the top destination bit
  const int cv = static_cast<int>(sa.read_row_word(dst_row, kc, 1));
  assert(cv == c);
  (void)c;
  ops.clear();
  ops.push_back({dst_col0 + width, make_write_config(LogicKind::Copy, cv)});
  sa.write_row(dst_row, ops);
  sum |= static_cast<std::uint64_t>(cv) << width;
  if (x_latch_out) *x_latch_out = x_latch;
  if (y_latch_out) *y_latch_out = y_latch;
  return sum;
}

} // namespace

FaLocs FaLocs::plan(std::uint32_t operand_row, std::uint32_t operand_col0,
                    std::uint32_t cache_row, std::uint32_t cache_col0) {
  FaLocs l;
  l.x = {operand_row, operand_col0};
  l.y = {operand_row, operand_col0 + 1};
  l.z = {operand_row, operand_col0 + 2};
  for (std::uint32_t i = 0; i < 4; ++i)
    l.cache[i] = {cache_row, cache_col0 + i};
  l.s = l.cache[1];
  l.z_out = l.cache[0];
  return l;
}

FaResult full_add_1bit(Subarray& sa, const FaLocs& l) {
  if (l.x.row != l.y.row || l.y.row != l.z.row)
    throw std::invalid_argument("full_add_1bit: operands must share a row");
  const std::uint32_t crow = l.cache[0].row;
  for (const auto& cell : l.cache)
    if (cell.row != crow)
      throw std::invalid_argument("full_add_1bit: cache must share a row");
  const CellLoc cells[7] = {l.x,        l.y,        l.z,       l.cache[0],
                            l.cache[1], l.cache[2], l.cache[3]};
  check_distinct(cells, "full_add_1bit");
  if (!(l.s == l.cache[1]) || !(l.z_out == l.cache[0]))
    throw std::invalid_argument(
        "full_add_1bit: s must alias cache[1] and z_out cache[0]");

  std::vector<ColumnOp> ops;
  // Step 1: copy X, Y and two copies of Z into the cache row.
  const std::uint32_t s1[3] = {l.x.col, l.y.col, l.z.col};
  auto v1 = sa.read_row(l.x.row, s1);
  const int X = v1[0], Y = v1[1], Z = v1[2];
  ops = {{l.cache[0].col, make_write_config(LogicKind::Copy, X)},
         {l.cache[1].col, make_write_config(LogicKind::Copy, Y)},
         {l.cache[2].col, make_write_config(LogicKind::Copy, Z)},
         {l.cache[3].col, make_write_config(LogicKind::Copy, Z)}};
  sa.write_row(crow, ops);
  // Step 2: XY and X^Y in one parallel write.
  const std::uint32_t s2[2] = {l.x.col, l.y.col};
  sa.read_row(l.x.row, s2);
  ops = {{l.cache[0].col, make_write_config(LogicKind::And, Y)},
         {l.cache[1].col, make_write_config(LogicKind::Xor, X)}};
  sa.write_row(crow, ops);
  // Step 3: Z & (X^Y).
  const std::uint32_t s3[1] = {l.cache[1].col};
  const int p = sa.read_row(crow, s3)[0];
  ops = {{l.cache[3].col, make_write_config(LogicKind::And, p)}};
  sa.write_row(crow, ops);
  // Step 4: S and the carry, in parallel.
  const std::uint32_t s4[2] = {l.cache[2].col, l.cache[3].col};
  auto v4 = sa.read_row(crow, s4);
  ops = {{l.cache[1].col, make_write_config(LogicKind::Xor, v4[0])},
         {l.cache[0].col, make_write_config(LogicKind::Or, v4[1])}};
  sa.write_row(crow, ops);

  return FaResult{X ^ Y ^ Z, (X & Y) | (Z & (X ^ Y))};
}

std::uint64_t add_nbit(Subarray& sa, const WordLoc& x, const WordLoc& y,
                       const WordLoc& dst, const AdderScratch& scratch,
                       int carry_in) {
  if (x.width == 0 || x.width != y.width)
    throw std::invalid_argument("add_nbit: operand widths must match");
  if (dst.width != x.width + 1)
    throw std::invalid_argument("add_nbit: dst must be one bit wider");
  if (scratch.row != dst.row)
    throw std::invalid_argument("add_nbit: scratch cells must sit on dst row");
  const WordLoc kt{scratch.row, scratch.kt_col, 1};
  const WordLoc kc{scratch.row, scratch.kc_col, 1};
  for (const WordLoc* w : {&dst, &kt, &kc}) {
    if (words_overlap(*w, x) || words_overlap(*w, y))
      throw std::invalid_argument("add_nbit: destination overlaps operands");
  }
  if (words_overlap(dst, kt) || words_overlap(dst, kc) ||
      words_overlap(kt, kc))
    throw std::invalid_argument("add_nbit: scratch overlaps destination");

  std::vector<ColumnOp> ops;
  std::vector<std::uint32_t> colbuf;
  return ripple_engine(sa, ops, colbuf, x, x.width, &y, 0, x.width, dst.row,
                       dst.col0, scratch.kt_col, scratch.kc_col, carry_in);
}

StoredFloat float_word(const FloatLayout& ly, std::uint32_t row,
                       std::uint32_t col0) {
  return StoredFloat{WordLoc{row, col0, ly.total_bits()}};
}

StoredFloat store_float(Subarray& sa, const FloatLayout& ly,
                        std::uint64_t bits, std::uint32_t row,
                        std::uint32_t col0) {
  StoredFloat f = float_word(ly, row, col0);
  std::vector<ColumnOp> ops;
  ops.reserve(f.loc.width);
  for (std::uint32_t i = 0; i < f.loc.width; ++i)
    ops.push_back(
        {col0 + i, make_write_config(LogicKind::Copy, bit_of(bits, i))});
  sa.write_row(row, ops);
  return f;
}

std::uint64_t peek_float(const Subarray& sa, const FloatLayout& ly,
                         const StoredFloat& f) {
  (void)ly;
  return sa.peek_word(f.loc);
}

// ---------------------------------------------------------------------------
// PimFloatUnit

struct PimFloatUnit::ExpDiff {
  std::uint64_t ea = 0, eb = 0;
  int sign_a = 0, sign_b = 0;
  bool a_big = false;
  WordLoc diff_word;
};

PimFloatUnit::PimFloatUnit(Subarray& sa, const FloatLayout& ly,
                           std::uint32_t scratch_row,
                           std::uint32_t scratch_col0)
    : sa_(sa), layout_(ly), row_(scratch_row) {
  const std::uint32_t n_e = ly.n_e, n_m = ly.n_m;
  field_w_ = n_m + 4;
  std::uint32_t col = scratch_col0;
  kt_ = col++;
  kc_ = col++;
  eb1_ = col; col += n_e;
  eb2_ = col; col += n_e;
  dab_ = col; col += n_e + 1;
  dba_ = col; col += n_e + 1;
  esum_ = col; col += n_e + 2;
  eres_ = col; col += n_e + 3;
  bf_ = col; col += field_w_;
  sf_ = col; col += field_w_;
  sum_ = col; col += field_w_ + 1;
  ma_ = col; col += n_m + 1;
  acc_[0] = col; col += n_m + 2;
  acc_[1] = col; col += n_m + 2;
  chain_ = col; col += n_m + 3;
  strip_end_ = col;
  if (scratch_row >= sa.rows() || col > sa.cols())
    throw std::invalid_argument("pim float unit: scratch strip out of bounds");
}

std::uint32_t PimFloatUnit::scratch_cols_needed(const FloatLayout& ly) {
  return 2 + 2 * ly.n_e + 2 * (ly.n_e + 1) + (ly.n_e + 2) + (ly.n_e + 3) +
         3 * (ly.n_m + 4) + 1 + (ly.n_m + 1) + 2 * (ly.n_m + 2) +
         (ly.n_m + 3);
}

std::uint64_t PimFloatUnit::copy_word(const WordLoc& src,
                                      std::uint32_t dst_col0, int col_shift) {
  std::vector<std::uint32_t> cols;
  cols.reserve(src.width);
  for (std::uint32_t i = 0; i < src.width; ++i) cols.push_back(src.col0 + i);
  auto vals = sa_.read_row(src.row, cols);
  std::uint64_t latch = 0;
  ops_.clear();
  for (std::uint32_t i = 0; i < src.width; ++i) {
    latch |= static_cast<std::uint64_t>(vals[i]) << i;
    const int pos = static_cast<int>(i) + col_shift;
    if (pos < 0) continue;
    ops_.push_back({dst_col0 + static_cast<std::uint32_t>(pos),
                    make_write_config(LogicKind::Copy, vals[i])});
  }
  if (!ops_.empty()) sa_.write_row(row_, ops_);
  return latch;
}

void PimFloatUnit::const_write(std::span<const std::uint32_t> cols,
                               std::span<const int> bits) {
  ops_.clear();
  for (std::size_t i = 0; i < cols.size(); ++i)
    ops_.push_back({cols[i], make_write_config(LogicKind::Copy, bits[i])});
  sa_.write_row(row_, ops_);
}

void PimFloatUnit::const_write_word(std::uint32_t col0, std::uint32_t width,
                                    std::uint64_t value) {
  ops_.clear();
  for (std::uint32_t i = 0; i < width; ++i)
    ops_.push_back(
        {col0 + i, make_write_config(LogicKind::Copy, bit_of(value, i))});
  sa_.write_row(row_, ops_);
}

void PimFloatUnit::invert_cells(std::uint32_t col0, std::uint32_t width) {
  ops_.clear();
  for (std::uint32_t i = 0; i < width; ++i)
    ops_.push_back({col0 + i, make_write_config(LogicKind::Xor, 1)});
  sa_.write_row(row_, ops_);
}

std::uint64_t PimFloatUnit::ripple(const WordLoc& x, std::uint32_t x_width,
                                   const WordLoc* y_word,
                                   std::uint64_t y_const, std::uint32_t width,
                                   std::uint32_t dst_col0, int carry_in) {
  std::vector<std::uint32_t> colbuf;
  return ripple_engine(sa_, ops_, colbuf, x, x_width, y_word, y_const, width,
                       row_, dst_col0, kt_, kc_, carry_in);
}

PimFloatUnit::ExpDiff PimFloatUnit::exponent_phase(const StoredFloat& a,
                                                   const StoredFloat& b) {
  const std::uint32_t n_e = layout_.n_e, n_m = layout_.n_m;
  ExpDiff ed;
  // Stage inverted exponents; each read also latches the sign cell.
  std::vector<std::uint32_t> cols;
  for (const StoredFloat* f : {&b, &a}) {
    cols.clear();
    for (std::uint32_t i = 0; i < n_e; ++i)
      cols.push_back(f->loc.col0 + n_m + i);
    cols.push_back(f->loc.col0 + n_m + n_e); // sign
    auto vals = sa_.read_row(f->loc.row, cols);
    std::uint64_t e = 0;
    for (std::uint32_t i = 0; i < n_e; ++i)
      e |= static_cast<std::uint64_t>(vals[i]) << i;
    const std::uint32_t dst = (f == &b) ? eb1_ : eb2_;
    ops_.clear();
    for (std::uint32_t i = 0; i < n_e; ++i)
      ops_.push_back({dst + i, make_write_config(LogicKind::Copy, vals[i])});
    sa_.write_row(row_, ops_);
    invert_cells(dst, n_e);
    if (f == &b) {
      ed.eb = e;
      ed.sign_b = vals[n_e];
    } else {
      ed.ea = e;
      ed.sign_a = vals[n_e];
    }
  }
  const WordLoc a_exp{a.loc.row, a.loc.col0 + n_m, n_e};
  const WordLoc b_exp{b.loc.row, b.loc.col0 + n_m, n_e};
  const WordLoc eb1{row_, eb1_, n_e};
  const WordLoc eb2{row_, eb2_, n_e};
  const std::uint64_t dab = ripple(a_exp, n_e, &eb1, 0, n_e, dab_, 1);
  ripple(b_exp, n_e, &eb2, 0, n_e, dba_, 1);
  ed.a_big = bit_of(dab, n_e) != 0; // carry out <=> e_a >= e_b
  ed.diff_word = WordLoc{row_, ed.a_big ? dab_ : dba_, n_e};
  return ed;
}

int PimFloatUnit::alignment_search(const WordLoc& diff_word, bool* matched) {
  const WordLoc region[1] = {diff_word};
  int shift = -1;
  for (std::uint32_t s = 0; s <= layout_.n_m + 1; ++s) {
    // Two probe phases per candidate (match ones, then match zeros).
    const auto m1 = sa_.search(s, layout_.n_e, region);
    const auto m2 = sa_.search(s, layout_.n_e, region);
    if (!m1.empty() && !m2.empty()) shift = static_cast<int>(s);
  }
  *matched = shift >= 0;
  return shift;
}

FloatVal PimFloatUnit::add(const StoredFloat& a, const StoredFloat& b,
                           const StoredFloat& dst) {
  ExpDiff ed = exponent_phase(a, b);
  // Zero operands bypass alignment entirely.
  if (ed.ea == 0 && ed.eb == 0) {
    const std::uint64_t z = zero_bits(layout_, ed.sign_a & ed.sign_b);
    std::vector<ColumnOp> ops;
    for (std::uint32_t i = 0; i < dst.loc.width; ++i)
      ops.push_back(
          {dst.loc.col0 + i, make_write_config(LogicKind::Copy, bit_of(z, i))});
    sa_.write_row(dst.loc.row, ops);
    return {z, {}};
  }
  if (ed.eb == 0 || ed.ea == 0) {
    const StoredFloat& keep = ed.eb == 0 ? a : b;
    std::vector<std::uint32_t> cols;
    for (std::uint32_t i = 0; i < keep.loc.width; ++i)
      cols.push_back(keep.loc.col0 + i);
    auto vals = sa_.read_row(keep.loc.row, cols);
    std::uint64_t bits = 0;
    std::vector<ColumnOp> ops;
    for (std::uint32_t i = 0; i < keep.loc.width; ++i) {
      bits |= static_cast<std::uint64_t>(vals[i]) << i;
      ops.push_back({dst.loc.col0 + i,
                     make_write_config(LogicKind::Copy, vals[i])});
    }
    sa_.write_row(dst.loc.row, ops);
    return {bits, {}};
  }
  bool matched = false;
  const int shift = alignment_search(ed.diff_word, &matched);
  return add_core(a, b, dst, ed, shift, !matched);
}

FloatVal PimFloatUnit::add_core(const StoredFloat& a, const StoredFloat& b,
                                const StoredFloat& dst, const ExpDiff& ed,
                                int shift, bool far) {
  const std::uint32_t n_e = layout_.n_e, n_m = layout_.n_m;
  const std::uint32_t W = field_w_;
  const StoredFloat& big = ed.a_big ? a : b;
  const StoredFloat& small = ed.a_big ? b : a;
  const std::uint64_t e_big = ed.a_big ? ed.ea : ed.eb;
  const int sign_big = ed.a_big ? ed.sign_a : ed.sign_b;
  const int sign_small = ed.a_big ? ed.sign_b : ed.sign_a;

  // Big operand field: three guard zeros, mantissa, hidden one.
  const WordLoc big_mant{big.loc.row, big.loc.col0, n_m};
  copy_word(big_mant, bf_ + 3);
  {
    const std::uint32_t cols[4] = {bf_, bf_ + 1, bf_ + 2, bf_ + n_m + 3};
    const int bits[4] = {0, 0, 0, 1};
    const_write(cols, bits);
  }

  // Small operand field, pre-shifted by the searched amount.
  bool sticky = false;
  std::uint64_t m_small = 0;
  if (!far) {
    const WordLoc small_mant{small.loc.row, small.loc.col0, n_m};
    m_small = copy_word(small_mant, sf_, 3 - shift);
    ops_.clear();
    const int hidden_pos = static_cast<int>(n_m) + 3 - shift;
    for (std::uint32_t i = 0; i < W; ++i) {
      const int rel = static_cast<int>(i) - (3 - shift);
      if (rel >= 0 && rel < static_cast<int>(n_m)) continue; // landed bit
      const int v = (static_cast<int>(i) == hidden_pos) ? 1 : 0;
      ops_.push_back({sf_ + i, make_write_config(LogicKind::Copy, v)});
    }
    if (!ops_.empty()) sa_.write_row(row_, ops_);
    if (shift > 3) {
      const std::uint64_t dropped_mask =
          (std::uint64_t{1} << static_cast<std::uint32_t>(shift - 3)) - 1;
      sticky = (m_small & dropped_mask) != 0;
    }
  } else {
    const_write_word(sf_, W, 0);
    sticky = true; // the small operand is normalized and entirely below
  }

  const bool same_sign = sign_big == sign_small;
  const WordLoc bf{row_, bf_, W};
  const WordLoc sf{row_, sf_, W};
  std::uint64_t q = 0;
  std::int64_t e_res = 0;
  int res_sign = sign_big;

  if (same_sign) {
    const std::uint64_t sum = ripple(bf, W, &sf, 0, W, sum_, 0);
    const int carry = bit_of(sum, W);
    const std::uint32_t k = 3 + static_cast<std::uint32_t>(carry);
    q = sum >> k;
    // exponent adjust through the ripple path as well
    const WordLoc big_exp{big.loc.row, big.loc.col0 + n_m, n_e};
    const std::uint64_t ev = ripple(big_exp, n_e, nullptr,
                                    static_cast<std::uint64_t>(carry),
                                    n_e + 1, eres_, 0);
    e_res = static_cast<std::int64_t>(ev & ((std::uint64_t{1} << n_e) - 1));
    if (bit_of(ev, n_e)) e_res += std::int64_t{1} << n_e;
    if (e_res > layout_.exp_max()) {
      const std::uint64_t sat = max_finite_bits(layout_, res_sign);
      std::vector<ColumnOp> ops;
      for (std::uint32_t i = 0; i < dst.loc.width; ++i)
        ops.push_back({dst.loc.col0 + i,
                       make_write_config(LogicKind::Copy, bit_of(sat, i))});
      sa_.write_row(dst.loc.row, ops);
      FloatVal v{sat, {}};
      v.flags.overflow = true;
      return v;
    }
    // collect mantissa cells and exponent cells, then write the result word
    std::vector<std::uint32_t> cols;
    for (std::uint32_t i = 0; i < n_m; ++i) cols.push_back(sum_ + k + i);
    for (std::uint32_t i = 0; i < n_e; ++i) cols.push_back(eres_ + i);
    sa_.read_row(row_, cols);
  } else {
    invert_cells(sf_, W);
    const std::uint64_t raw =
        ripple(bf, W, &sf, 0, W, sum_, sticky ? 0 : 1);
    std::uint64_t diff = raw & ((std::uint64_t{1} << W) - 1);
    if (!bit_of(raw, W)) {
      // negative difference (equal exponents, larger small mantissa)
      invert_cells(sum_, W);
      const WordLoc sumw{row_, sum_, W};
      const std::uint64_t neg = ripple(sumw, W, nullptr, 0, W, sum_, 1);
      diff = neg & ((std::uint64_t{1} << W) - 1);
      res_sign = sign_small;
    }
    if (diff == 0) {
      const std::uint64_t z = zero_bits(layout_, 0);
      std::vector<ColumnOp> ops;
      for (std::uint32_t i = 0; i < dst.loc.width; ++i)
        ops.push_back({dst.loc.col0 + i,
                       make_write_config(LogicKind::Copy, bit_of(z, i))});
      sa_.write_row(dst.loc.row, ops);
      return {z, {}};
    }
    // leading-one detection from one row read, then a single shifted rewrite
    const std::uint64_t seen = sa_.read_row_word(row_, sum_, W);
    assert(seen == diff);
    (void)seen;
    const int p = bitlen64(diff) - 1;
    const int L = static_cast<int>(n_m) + 3 - p;
    if (L > 0) {
      diff <<= L;
      const_write_word(sum_, W, diff);
    }
    q = diff >> 3;
    const WordLoc big_exp{big.loc.row, big.loc.col0 + n_m, n_e};
    const std::uint64_t mask = (std::uint64_t{1} << (n_e + 1)) - 1;
    const std::uint64_t addend =
        L > 0 ? ((std::uint64_t{1} << (n_e + 1)) - static_cast<std::uint64_t>(L)) & mask
              : 0;
    const std::uint64_t ev =
        ripple(big_exp, n_e, nullptr, addend, n_e + 1, eres_, 0);
    e_res = static_cast<std::int64_t>(e_big) - L;
    assert(((ev & mask) & ((std::uint64_t{1} << n_e) - 1)) ==
           (static_cast<std::uint64_t>(e_res) & ((std::uint64_t{1} << n_e) - 1)));
    (void)ev;
    if (e_res <= 0) {
      const std::uint64_t z = zero_bits(layout_, res_sign);
      std::vector<ColumnOp> ops;
      for (std::uint32_t i = 0; i < dst.loc.width; ++i)
        ops.push_back({dst.loc.col0 + i,
                       make_write_config(LogicKind::Copy, bit_of(z, i))});
      sa_.write_row(dst.loc.row, ops);
      FloatVal v{z, {}};
      v.flags.underflow = true;
      return v;
    }
    std::vector<std::uint32_t> cols;
    for (std::uint32_t i = 0; i < n_m; ++i) cols.push_back(sum_ + 3 + i);
    for (std::uint32_t i = 0; i < n_e; ++i) cols.push_back(eres_ + i);
    sa_.read_row(row_, cols);
  }

  const std::uint64_t bits = pack_float(
      layout_,
      FloatFields{static_cast<std::uint32_t>(res_sign),
                  static_cast<std::uint64_t>(e_res), q & layout_.mant_mask()});
  std::vector<ColumnOp> ops;
  for (std::uint32_t i = 0; i < dst.loc.width; ++i)
    ops.push_back(
        {dst.loc.col0 + i, make_write_config(LogicKind::Copy, bit_of(bits, i))});
  sa_.write_row(dst.loc.row, ops);
  return {bits, {}};
}

std::uint64_t PimFloatUnit::mul_step(std::uint64_t acc_shadow,
                                     std::uint64_t ma, int b_bit,
                                     std::uint32_t acc_cur_col,
                                     std::uint32_t acc_next_col, int shift) {
  const std::uint32_t n_m = layout_.n_m;
  const std::uint32_t W2 = n_m + 2; // accumulator width
  // latch the current accumulator and the multiplicand in one row read
  std::vector<std::uint32_t> cols;
  cols.reserve(W2 + n_m + 1);
  for (std::uint32_t i = 0; i < W2; ++i) cols.push_back(acc_cur_col + i);
  for (std::uint32_t i = 0; i < n_m + 1; ++i) cols.push_back(ma_ + i);
  auto vals = sa_.read_row(row_, cols);
  std::uint64_t acc = 0, ma_l = 0;
  for (std::uint32_t i = 0; i < W2; ++i)
    acc |= static_cast<std::uint64_t>(vals[i]) << i;
  for (std::uint32_t i = 0; i < n_m + 1; ++i)
    ma_l |= static_cast<std::uint64_t>(vals[W2 + i]) << i;
  assert(acc == acc_shadow);
  assert(ma_l == ma);
  (void)acc_shadow;
  (void)ma;

  const std::uint64_t pp = b_bit ? ma_l : 0;
  const std::uint64_t sum = acc + pp;

  // Seed sum targets with P and carry-chain cells; gate bits come from the
  // latches just read.
  ops_.clear();
  auto p_at = [&](std::uint32_t i) { return bit_of(acc ^ pp, i); };
  auto g_at = [&](std::uint32_t i) { return bit_of(acc & pp, i); };
  auto s_target = [&](std::uint32_t i) {
    return acc_next_col + i - static_cast<std::uint32_t>(shift);
  };
  // carry chain: cell chain_[i] carries c_i for i >= 2; c_{W2} goes straight
  // to the top accumulator cell when this step shifts.
  auto carry_cell = [&](std::uint32_t i) -> std::int64_t {
    if (i < W2) return chain_ + i;
    return shift ? static_cast<std::int64_t>(acc_next_col + W2 - 1) : -1;
  };
  for (std::uint32_t i = static_cast<std::uint32_t>(shift); i < W2; ++i)
    ops_.push_back(
        {s_target(i), make_write_config(LogicKind::Copy, p_at(i))});
  for (std::uint32_t i = 1; i < W2; ++i) {
    const std::int64_t kcell = carry_cell(i + 1);
    if (kcell >= 0 && i + 1 >= 2) {
      // seed with P_i unless it is also a sum target already seeded
      if (static_cast<std::uint64_t>(kcell) !=
          static_cast<std::uint64_t>(s_target(i)))
        ops_.push_back({static_cast<std::uint32_t>(kcell),
                        make_write_config(LogicKind::Copy, p_at(i))});
    }
  }
  { // c_1 = G_0 seeds cell chain_[1]
    ops_.push_back({chain_ + 1, make_write_config(LogicKind::Copy, g_at(0))});
  }
  sa_.write_row(row_, ops_);

  int c = g_at(0); // c_1
  for (std::uint32_t i = 1; i < W2; ++i) {
    if (i >= 2) {
      const int cv =
          static_cast<int>(sa_.read_row_word(row_, chain_ + i, 1));
      assert(cv == c);
      c = cv;
    }
    const std::int64_t kcell = carry_cell(i + 1);
    ops_.clear();
    ops_.push_back({s_target(i), make_write_config(LogicKind::Xor, c)});
    if (kcell >= 0)
      ops_.push_back({static_cast<std::uint32_t>(kcell),
                      make_write_config(LogicKind::And, c)});
    sa_.write_row(row_, ops_);
    if (kcell >= 0) {
      ops_.clear();
      ops_.push_back({static_cast<std::uint32_t>(kcell),
                      make_write_config(LogicKind::Or, g_at(i))});
      sa_.write_row(row_, ops_);
    }
    c = g_at(i) | (p_at(i) & c);
  }
  if (!shift) assert(bit_of(sum, W2) == 0);
  return (sum >> shift) & ((std::uint64_t{1} << W2) - 1);
}

FloatVal PimFloatUnit::mul(const StoredFloat& a, const StoredFloat& b,
                           const StoredFloat& dst) {
  const std::uint32_t n_e = layout_.n_e, n_m = layout_.n_m;
  // sign: copy s_a then one XOR write with s_b
  const std::uint32_t sign_col = dst.loc.col0 + n_m + n_e;
  const int sa_bit = static_cast<int>(
      sa_.read_row_word(a.loc.row, a.loc.col0 + n_m + n_e, 1));
  std::vector<ColumnOp> ops{{sign_col, make_write_config(LogicKind::Copy,
                                                         sa_bit)}};
  sa_.write_row(dst.loc.row, ops);
  const int sb_bit = static_cast<int>(
      sa_.read_row_word(b.loc.row, b.loc.col0 + n_m + n_e, 1));
  ops = {{sign_col, make_write_config(LogicKind::Xor, sb_bit)}};
  sa_.write_row(dst.loc.row, ops);
  const int sign = sa_bit ^ sb_bit;

  // exponent sum, then remove the bias
  const WordLoc a_exp{a.loc.row, a.loc.col0 + n_m, n_e};
  const WordLoc b_exp{b.loc.row, b.loc.col0 + n_m, n_e};
  std::uint64_t ea = 0, eb = 0;
  {
    std::vector<std::uint32_t> colbuf;
    ripple_engine(sa_, ops_, colbuf, a_exp, n_e, &b_exp, 0, n_e, row_, esum_,
                  kt_, kc_, 0, &ea, &eb);
  }
  auto write_rest = [&](std::uint64_t bits) {
    std::vector<ColumnOp> w;
    for (std::uint32_t i = 0; i < n_m + n_e; ++i)
      w.push_back(
          {dst.loc.col0 + i, make_write_config(LogicKind::Copy, bit_of(bits, i))});
    sa_.write_row(dst.loc.row, w);
  };
  if (ea == 0 || eb == 0) {
    const std::uint64_t z = zero_bits(layout_, sign);
    write_rest(z);
    return {z, {}};
  }
  const WordLoc esum{row_, esum_, n_e + 1};
  const std::uint64_t mask = (std::uint64_t{1} << (n_e + 2)) - 1;
  const std::uint64_t neg_bias =
      (mask + 1 - static_cast<std::uint64_t>(layout_.bias)) & mask;
  ripple(esum, n_e + 1, nullptr, neg_bias, n_e + 2, eres_, 0);
  std::int64_t e_unb = static_cast<std::int64_t>(ea) +
                       static_cast<std::int64_t>(eb) - layout_.bias;

  // multiplicand field with the hidden one
  const WordLoc a_mant{a.loc.row, a.loc.col0, n_m};
  std::uint64_t m_a = copy_word(a_mant, ma_);
  {
    const std::uint32_t cols[1] = {ma_ + n_m};
    const int bits[1] = {1};
    const_write(cols, bits);
  }
  m_a |= layout_.hidden_bit();

  // shift-and-add over the double-buffered accumulator
  const std::uint32_t W2 = n_m + 2;
  int cur = 0;
  const_write_word(acc_[cur], W2, 0);
  std::uint64_t acc = 0;
  acc_roles_.clear();
  for (std::uint32_t j = 0; j <= n_m; ++j) {
    int b_bit = 1; // hidden multiplier bit on the last step
    if (j < n_m)
      b_bit = static_cast<int>(
          sa_.read_row_word(b.loc.row, b.loc.col0 + j, 1));
    const int next = 1 - cur;
    acc_roles_.push_back(next);
    const int shift = (j < n_m) ? 1 : 0;
    acc = mul_step(acc, m_a, b_bit, acc_[cur], acc_[next], shift);
    cur = next;
  }
  // acc == floor(Ma*Mb / 2^n_m), n_m+2 bits
  const int top = bit_of(acc, n_m + 1);
  std::uint64_t q = top ? (acc >> 1) : acc;
  std::int64_t e_res = e_unb + top;

  FloatFlags flags;
  std::uint64_t bits;
  if (e_res > layout_.exp_max()) {
    bits = max_finite_bits(layout_, sign);
    flags.overflow = true;
    write_rest(bits);
    return {bits, flags};
  }
  if (e_res <= 0) {
    bits = zero_bits(layout_, sign);
    flags.underflow = true;
    write_rest(bits);
    return {bits, flags};
  }
  // read the final accumulator (and the staged exponent) before writing out
  std::vector<std::uint32_t> cols;
  for (std::uint32_t i = 0; i < n_m + 1; ++i)
    cols.push_back(acc_[cur] + (top ? 1 : 0) + i);
  for (std::uint32_t i = 0; i < n_e + 2; ++i) cols.push_back(eres_ + i);
  sa_.read_row(row_, cols);
  bits = pack_float(layout_, FloatFields{static_cast<std::uint32_t>(sign),
                                         static_cast<std::uint64_t>(e_res),
                                         q & layout_.mant_mask()});
  write_rest(bits);
  return {bits, flags};
}

FloatVal PimFloatUnit::mac(const StoredFloat& acc, const StoredFloat& x,
                           const StoredFloat& w, const StoredFloat& prod,
                           const StoredFloat& dst) {
  const FloatVal p = mul(x, w, prod);
  FloatVal s = add(acc, prod, dst);
  s.flags.overflow |= p.flags.overflow;
  s.flags.underflow |= p.flags.underflow;
  return s;
}

std::vector<FloatVal> PimFloatUnit::add_batch(
    std::span<const StoredFloat> as, std::span<const StoredFloat> bs,
    std::span<const StoredFloat> dsts) {
  if (as.size() != bs.size() || as.size() != dsts.size())
    throw std::invalid_argument("add_batch: size mismatch");
  const std::size_t n = as.size();
  std::vector<FloatVal> out(n);
  std::vector<ExpDiff> eds(n);
  std::vector<char> pending(n, 0);
  std::vector<WordLoc> region;
  std::vector<std::size_t> region_pair;

  // Exponent phases first; zero-operand pairs resolve immediately, the rest
  // park their exponent differences for one shared search pass.
  for (std::size_t i = 0; i < n; ++i) {
    ExpDiff ed = exponent_phase(as[i], bs[i]);
    eds[i] = ed;
    if (ed.ea == 0 || ed.eb == 0) {
      // fall back to the scalar path for the degenerate cases
      out[i] = add(as[i], bs[i], dsts[i]);
      continue;
    }
    pending[i] = 1;
    // park the diff word past the strip so later phases do not clobber it
    const std::uint32_t park_col =
        strip_end_ + static_cast<std::uint32_t>(region.size()) * layout_.n_e;
    if (park_col + layout_.n_e > sa_.cols())
      throw std::invalid_argument("add_batch: batch too large for scratch");
    copy_word(ed.diff_word, park_col);
    region.push_back(WordLoc{row_, park_col, layout_.n_e});
    region_pair.push_back(i);
  }
  std::vector<int> shift(n, -1);
  if (!region.empty()) {
    for (std::uint32_t s = 0; s <= layout_.n_m + 1; ++s) {
      const auto m1 = sa_.search(s, layout_.n_e, region);
      const auto m2 = sa_.search(s, layout_.n_e, region);
      for (auto idx : m1)
        if (std::find(m2.begin(), m2.end(), idx) != m2.end())
          shift[region_pair[idx]] = static_cast<int>(s);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!pending[i]) continue;
    out[i] = add_core(as[i], bs[i], dsts[i], eds[i], shift[i], shift[i] < 0);
  }
  return out;
}

} // namespace sotpim
