#pragma once

#include <cstdint>

// Single 1T-1R SOT-MRAM cell model. A bit is stored as the MTJ resistance
// state (high = 1, low = 0). Reads are non-destructive; logic happens in the
// write path: the applied bit-line level A and the write current direction
// select which Boolean function of (A, stored bit) the cell computes.

namespace sotpim {

enum class Resistance : std::uint8_t { Low = 0, High = 1 };

struct CellState {
  Resistance resistance = Resistance::Low;
};

enum class LogicKind : std::uint8_t { Copy, And, Or, Xor };

struct WriteConfig {
  std::uint8_t applied_bit = 0;       // RBL level: 1 -> V_b, 0 -> ground
  std::uint8_t current_direction = 0; // WBL/SL write current direction
  LogicKind kind = LogicKind::Copy;
};

constexpr CellState encode_cell(int bit) {
  return CellState{bit ? Resistance::High : Resistance::Low};
}

constexpr int decode_cell(CellState c) {
  return c.resistance == Resistance::High ? 1 : 0;
}

// Non-destructive read (small negative RBL voltage raises the switching
// threshold, so the read current never flips the MTJ).
constexpr int read_cell(CellState c) { return decode_cell(c); }

// Canonical current direction for a (kind, A) pair. The electrical thresholds
// themselves are not modeled; the direction only has to be consistent so that
// (A, C, kind) determines the post-write state.
constexpr std::uint8_t canonical_direction(LogicKind kind, std::uint8_t a) {
  switch (kind) {
    case LogicKind::Or: return 1;  // drives toward high resistance
    case LogicKind::And: return 0; // drives toward low resistance
    case LogicKind::Copy:
    case LogicKind::Xor: return a;
  }
  return 0;
}

constexpr WriteConfig make_write_config(LogicKind kind, int applied_bit) {
  const auto a = static_cast<std::uint8_t>(applied_bit & 1);
  return WriteConfig{a, canonical_direction(kind, a), kind};
}

// Conditional write. New state is kind(A, B) of the applied bit A and the
// prior stored bit B. Deterministic; switching failures are not modeled.
constexpr CellState apply_write(CellState cell, const WriteConfig& cfg) {
  const int a = cfg.applied_bit & 1;
  const int b = decode_cell(cell);
  int r = 0;
  switch (cfg.kind) {
    case LogicKind::Copy: r = a; break;
    case LogicKind::And: r = a & b; break;
    case LogicKind::Or: r = a | b; break;
    case LogicKind::Xor: r = a ^ b; break;
  }
  return encode_cell(r);
}

} // namespace sotpim
