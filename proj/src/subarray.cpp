#include "sotpim/subarray.hpp"

#include <ostream>
#include <stdexcept>
#include <string>

namespace sotpim {

std::string_view event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::RowRead: return "RowRead";
    case EventKind::RowWrite: return "RowWrite";
    case EventKind::Search: return "Search";
  }
  return "?";
}

LogSummary& LogSummary::operator+=(const LogSummary& o) {
  reads += o.reads;
  writes += o.writes;
  searches += o.searches;
  bits_read += o.bits_read;
  bits_written += o.bits_written;
  words_searched += o.words_searched;
  return *this;
}

LogSummary operator-(LogSummary a, const LogSummary& b) {
  a.reads -= b.reads;
  a.writes -= b.writes;
  a.searches -= b.searches;
  a.bits_read -= b.bits_read;
  a.bits_written -= b.bits_written;
  a.words_searched -= b.words_searched;
  return a;
}

Subarray::Subarray(std::uint32_t rows, std::uint32_t cols)
    : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("subarray: geometry must be positive");
  cells_.assign(static_cast<std::size_t>(rows) * cols, 0);
}

void Subarray::check_cell(std::uint32_t row, std::uint32_t col) const {
  if (row >= rows_ || col >= cols_)
    throw std::out_of_range("subarray: cell (" + std::to_string(row) + "," +
                            std::to_string(col) + ") out of bounds");
}

void Subarray::log(EventKind kind, std::uint32_t row, std::uint32_t bits) {
  if (record_events_) events_.push_back(CostEvent{kind, row, bits});
  switch (kind) {
    case EventKind::RowRead:
      summary_.reads++;
      summary_.bits_read += bits;
      break;
    case EventKind::RowWrite:
      summary_.writes++;
      summary_.bits_written += bits;
      break;
    case EventKind::Search:
      summary_.searches++;
      summary_.words_searched += bits;
      break;
  }
}

std::vector<std::uint8_t> Subarray::read_row(
    std::uint32_t row, std::span<const std::uint32_t> cols) {
  std::vector<std::uint8_t> out;
  out.reserve(cols.size());
  for (auto c : cols) {
    check_cell(row, c);
    out.push_back(cells_[static_cast<std::size_t>(row) * cols_ + c]);
  }
  log(EventKind::RowRead, row, static_cast<std::uint32_t>(cols.size()));
  return out;
}

std::uint64_t Subarray::read_row_word(std::uint32_t row, std::uint32_t col0,
                                      std::uint32_t width) {
  if (width > 64) throw std::invalid_argument("read_row_word: width > 64");
  if (width == 0) throw std::invalid_argument("read_row_word: empty width");
  check_cell(row, col0 + width - 1);
  const std::size_t base = static_cast<std::size_t>(row) * cols_ + col0;
  std::uint64_t v = 0;
  for (std::uint32_t i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(cells_[base + i]) << i;
  log(EventKind::RowRead, row, width);
  return v;
}

void Subarray::write_row(std::uint32_t row, std::span<const ColumnOp> ops) {
  if (ops.empty()) throw std::invalid_argument("write_row: no column ops");
  for (std::size_t i = 0; i < ops.size(); ++i) {
    check_cell(row, ops[i].col);
    for (std::size_t j = i + 1; j < ops.size(); ++j)
      if (ops[i].col == ops[j].col)
        throw std::invalid_argument("write_row: duplicate column " +
                                    std::to_string(ops[i].col));
  }
  const std::size_t base = static_cast<std::size_t>(row) * cols_;
  for (const auto& op : ops) {
    CellState s{cells_[base + op.col] ? Resistance::High : Resistance::Low};
    cells_[base + op.col] =
        static_cast<std::uint8_t>(decode_cell(apply_write(s, op.cfg)));
  }
  log(EventKind::RowWrite, row, static_cast<std::uint32_t>(ops.size()));
}

std::vector<std::size_t> Subarray::search(std::uint64_t key,
                                          std::uint32_t key_width,
                                          std::span<const WordLoc> region) {
  if (key_width == 0 || key_width > 64)
    throw std::invalid_argument("search: bad key width");
  std::vector<std::size_t> matches;
  for (std::size_t i = 0; i < region.size(); ++i) {
    const WordLoc& w = region[i];
    if (w.width != key_width)
      throw std::invalid_argument("search: word width != key width");
    check_cell(w.row, w.col0 + w.width - 1);
    const std::size_t base = static_cast<std::size_t>(w.row) * cols_ + w.col0;
    std::uint64_t v = 0;
    for (std::uint32_t b = 0; b < w.width; ++b)
      v |= static_cast<std::uint64_t>(cells_[base + b]) << b;
    if (v == key) matches.push_back(i);
  }
  const std::uint32_t probed =
      region.empty() ? 1u : static_cast<std::uint32_t>(region.size());
  log(EventKind::Search, region.empty() ? 0 : region.front().row, probed);
  return matches;
}

void Subarray::reset_log() {
  events_.clear();
  summary_ = LogSummary{};
}

void Subarray::write_trace_csv(std::ostream& os) const {
  os << "kind,row,bits_touched\n";
  for (const auto& e : events_)
    os << event_kind_name(e.kind) << ',' << e.row << ',' << e.bits_touched
       << '\n';
}

int Subarray::peek(std::uint32_t row, std::uint32_t col) const {
  check_cell(row, col);
  return cells_[static_cast<std::size_t>(row) * cols_ + col];
}

std::uint64_t Subarray::peek_word(const WordLoc& loc) const {
  std::uint64_t v = 0;
  for (std::uint32_t i = 0; i < loc.width; ++i)
    v |= static_cast<std::uint64_t>(peek(loc.row, loc.col0 + i)) << i;
  return v;
}

void Subarray::poke(std::uint32_t row, std::uint32_t col, int bit) {
  check_cell(row, col);
  cells_[static_cast<std::size_t>(row) * cols_ + col] =
      static_cast<std::uint8_t>(bit & 1);
}

void Subarray::poke_word(const WordLoc& loc, std::uint64_t value) {
  for (std::uint32_t i = 0; i < loc.width; ++i)
    poke(loc.row, loc.col0 + i, static_cast<int>((value >> i) & 1));
}

} // namespace sotpim
