#include "doctest.h"

#include <initializer_list>

#include "sotpim/cell.hpp"

using namespace sotpim;

namespace {

int expected(LogicKind kind, int a, int b) {
  switch (kind) {
    case LogicKind::Copy: return a;
    case LogicKind::And: return a & b;
    case LogicKind::Or: return a | b;
    case LogicKind::Xor: return a ^ b;
  }
  return -1;
}

} // namespace

TEST_CASE("encode/decode round trip") {
  CHECK(decode_cell(encode_cell(0)) == 0);
  CHECK(decode_cell(encode_cell(1)) == 1);
}

TEST_CASE("read is non-destructive") {
  for (int b : {0, 1}) {
    CellState c = encode_cell(b);
    CHECK(read_cell(c) == b);
    CHECK(read_cell(c) == b); // unchanged on repeat
    CHECK(decode_cell(c) == b);
  }
}

TEST_CASE("all 16 write configurations match the Boolean definitions") {
  for (LogicKind kind :
       {LogicKind::Copy, LogicKind::And, LogicKind::Or, LogicKind::Xor}) {
    for (int a : {0, 1}) {
      for (int b : {0, 1}) {
        const CellState after =
            apply_write(encode_cell(b), make_write_config(kind, a));
        CAPTURE(static_cast<int>(kind));
        CAPTURE(a);
        CAPTURE(b);
        CHECK(decode_cell(after) == expected(kind, a, b));
      }
    }
  }
}

TEST_CASE("spec examples") {
  // OR sets the cell high when the applied bit is 1
  CHECK(decode_cell(apply_write(encode_cell(0),
                                make_write_config(LogicKind::Or, 1))) == 1);
  CHECK(decode_cell(apply_write(encode_cell(1),
                                make_write_config(LogicKind::And, 0))) == 0);
  CHECK(decode_cell(apply_write(encode_cell(1),
                                make_write_config(LogicKind::Xor, 1))) == 0);
  CHECK(decode_cell(apply_write(encode_cell(0),
                                make_write_config(LogicKind::Copy, 1))) == 1);
}

TEST_CASE("copy is idempotent") {
  for (int a : {0, 1}) {
    for (int b : {0, 1}) {
      const WriteConfig cfg = make_write_config(LogicKind::Copy, a);
      const CellState once = apply_write(encode_cell(b), cfg);
      const CellState twice = apply_write(once, cfg);
      CHECK(decode_cell(once) == decode_cell(twice));
    }
  }
}

TEST_CASE("identity elements leave the stored bit unchanged") {
  for (int b : {0, 1}) {
    CHECK(decode_cell(apply_write(encode_cell(b),
                                  make_write_config(LogicKind::Or, 0))) == b);
    CHECK(decode_cell(apply_write(encode_cell(b),
                                  make_write_config(LogicKind::And, 1))) == b);
  }
}

TEST_CASE("writes are deterministic") {
  for (LogicKind kind :
       {LogicKind::Copy, LogicKind::And, LogicKind::Or, LogicKind::Xor}) {
    for (int a : {0, 1}) {
      for (int b : {0, 1}) {
        const WriteConfig cfg = make_write_config(kind, a);
        CHECK(decode_cell(apply_write(encode_cell(b), cfg)) ==
              decode_cell(apply_write(encode_cell(b), cfg)));
      }
    }
  }
}
