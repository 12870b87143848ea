#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "sotpim/cell.hpp"

// R x C array of 1T-1R cells with row-granular reads, column-parallel
// conditional writes and an associative search primitive. Every micro-op is
// appended to an event log that the cost model consumes. A subarray is
// single-writer: micro-ops on one instance are strictly sequential. Distinct
// subarrays are independent; their logs can be merged by concatenation.

namespace sotpim {

enum class EventKind : std::uint8_t { RowRead, RowWrite, Search };

std::string_view event_kind_name(EventKind k);

struct CostEvent {
  EventKind kind;
  std::uint32_t row;          // row touched (first word's row for searches)
  std::uint32_t bits_touched; // cells read/written; words probed for searches
};

// Per-kind event and bit totals of an event log.
struct LogSummary {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t searches = 0;
  std::uint64_t bits_read = 0;
  std::uint64_t bits_written = 0;
  std::uint64_t words_searched = 0;

  std::uint64_t events() const { return reads + writes + searches; }
  LogSummary& operator+=(const LogSummary& o);
  friend LogSummary operator-(LogSummary a, const LogSummary& b);
  bool operator==(const LogSummary&) const = default;
};

struct ColumnOp {
  std::uint32_t col;
  WriteConfig cfg;
};

// A word stored along one row, bit i at column col0 + i (LSB first).
struct WordLoc {
  std::uint32_t row = 0;
  std::uint32_t col0 = 0;
  std::uint32_t width = 0;
  bool operator==(const WordLoc&) const = default;
};

class Subarray {
 public:
  Subarray(std::uint32_t rows = 1024, std::uint32_t cols = 1024);

  std::uint32_t rows() const { return rows_; }
  std::uint32_t cols() const { return cols_; }

  // Row read of an arbitrary column set. Non-destructive, one event.
  std::vector<std::uint8_t> read_row(std::uint32_t row,
                                     std::span<const std::uint32_t> cols);

  // Contiguous row read returned LSB-first as an integer (width <= 64).
  std::uint64_t read_row_word(std::uint32_t row, std::uint32_t col0,
                              std::uint32_t width);

  // Column-parallel conditional write: each addressed column applies its own
  // (applied bit, kind); unaddressed cells are untouched. One event.
  void write_row(std::uint32_t row, std::span<const ColumnOp> ops);

  // Parallel associative compare of `key` against every word in `region`.
  // Returns the indices into `region` whose stored bits equal the key.
  // Non-destructive; one event with bits_touched = max(1, words probed).
  std::vector<std::size_t> search(std::uint64_t key, std::uint32_t key_width,
                                  std::span<const WordLoc> region);

  void reset_log();
  LogSummary summarize_log() const { return summary_; }

  // Full per-event log (only retained when event recording is on).
  const std::vector<CostEvent>& events() const { return events_; }

  // Aggregate-counters-only mode for long runs; the summary stays exact.
  void set_event_recording(bool on) { record_events_ = on; }
  bool event_recording() const { return record_events_; }

  // One line per event: kind,row,bits_touched
  void write_trace_csv(std::ostream& os) const;

  // Direct state access; never logs. Test and setup use only.
  int peek(std::uint32_t row, std::uint32_t col) const;
  std::uint64_t peek_word(const WordLoc& loc) const;
  void poke(std::uint32_t row, std::uint32_t col, int bit);
  void poke_word(const WordLoc& loc, std::uint64_t value);
  const std::vector<std::uint8_t>& cells() const { return cells_; }

 private:
  void check_cell(std::uint32_t row, std::uint32_t col) const;
  void log(EventKind kind, std::uint32_t row, std::uint32_t bits);

  std::uint32_t rows_;
  std::uint32_t cols_;
  std::vector<std::uint8_t> cells_; // row-major, one bit per entry
  std::vector<CostEvent> events_;
  LogSummary summary_;
  bool record_events_ = true;
};

} // namespace sotpim
