#include <catch2/catch_amalgamated.hpp>

#include "metapipe/trivalue.hpp"

using namespace metapipe;

namespace {

const TriValue T = TriValue::make_true();
const TriValue F = TriValue::make_false();
const TriValue O = TriValue::out_of_domain();
const TriValue N = TriValue::not_computed();

struct TableRow {
  TriValue a, b, expected;
};

// Hand-frozen from the operator case definitions:
//  - plain operators are undefined outside dom(A) ∩ dom(B);
//  - hat operators fall back to the defined operand, and are undefined only
//    when both operands are;
//  - a NotComputed operand poisons every combination (cause precedence
//    NotComputed > OutOfDomain).
const TableRow kAndTable[] = {
    {T, T, T}, {T, F, F}, {F, T, F}, {F, F, F},
    {T, O, O}, {O, T, O}, {F, O, O}, {O, F, O}, {O, O, O},
    {N, T, N}, {N, F, N}, {N, O, N}, {N, N, N},
    {T, N, N}, {F, N, N}, {O, N, N},
};

const TableRow kOrTable[] = {
    {T, T, T}, {T, F, T}, {F, T, T}, {F, F, F},
    {T, O, O}, {O, T, O}, {F, O, O}, {O, F, O}, {O, O, O},
    {N, T, N}, {N, F, N}, {N, O, N}, {N, N, N},
    {T, N, N}, {F, N, N}, {O, N, N},
};

const TableRow kXorTable[] = {
    {T, T, F}, {T, F, T}, {F, T, T}, {F, F, F},
    {T, O, O}, {O, T, O}, {F, O, O}, {O, F, O}, {O, O, O},
    {N, T, N}, {N, F, N}, {N, O, N}, {N, N, N},
    {T, N, N}, {F, N, N}, {O, N, N},
};

const TableRow kHatAndTable[] = {
    {T, T, T}, {T, F, F}, {F, T, F}, {F, F, F},
    {T, O, T}, {O, T, T}, {F, O, F}, {O, F, F}, {O, O, O},
    {N, T, N}, {N, F, N}, {N, O, N}, {N, N, N},
    {T, N, N}, {F, N, N}, {O, N, N},
};

const TableRow kHatOrTable[] = {
    {T, T, T}, {T, F, T}, {F, T, T}, {F, F, F},
    {T, O, T}, {O, T, T}, {F, O, F}, {O, F, F}, {O, O, O},
    {N, T, N}, {N, F, N}, {N, O, N}, {N, N, N},
    {T, N, N}, {F, N, N}, {O, N, N},
};

const TableRow kHatXorTable[] = {
    {T, T, F}, {T, F, T}, {F, T, T}, {F, F, F},
    {T, O, T}, {O, T, T}, {F, O, F}, {O, F, F}, {O, O, O},
    {N, T, N}, {N, F, N}, {N, O, N}, {N, N, N},
    {T, N, N}, {F, N, N}, {O, N, N},
};

void check_table(BoolOp op, const TableRow* rows, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    INFO("op=" << to_string(op) << " a=" << to_string(rows[i].a)
               << " b=" << to_string(rows[i].b));
    CHECK(combine(op, rows[i].a, rows[i].b) == rows[i].expected);
  }
}

const TriValue kAll[] = {T, F, O, N};
const BoolOp kOps[] = {BoolOp::And, BoolOp::Or, BoolOp::Xor,
                       BoolOp::HatAnd, BoolOp::HatOr, BoolOp::HatXor};

}  // namespace

TEST_CASE("trivalue invariants") {
  CHECK(T.is_true());
  CHECK(F.is_false());
  CHECK(O.is_undef());
  CHECK(N.is_undef());
  CHECK(O.cause() == UndefCause::OutOfDomain);
  CHECK(N.cause() == UndefCause::NotComputed);
  CHECK(T.kind() == TriKind::True);
  CHECK(F.kind() == TriKind::False);
  CHECK(O.kind() == TriKind::Undef);
  CHECK(TriValue::from_bool(true) == T);
  CHECK(TriValue::from_bool(false) == F);
  CHECK(TriValue::undef(UndefCause::OutOfDomain) == O);
  CHECK(TriValue::undef(UndefCause::NotComputed) == N);
}

TEST_CASE("combine matches the frozen operator tables") {
  check_table(BoolOp::And, kAndTable, std::size(kAndTable));
  check_table(BoolOp::Or, kOrTable, std::size(kOrTable));
  check_table(BoolOp::Xor, kXorTable, std::size(kXorTable));
  check_table(BoolOp::HatAnd, kHatAndTable, std::size(kHatAndTable));
  check_table(BoolOp::HatOr, kHatOrTable, std::size(kHatOrTable));
  check_table(BoolOp::HatXor, kHatXorTable, std::size(kHatXorTable));
}

TEST_CASE("named examples") {
  // Hat fallback to the defined operand.
  CHECK(combine(BoolOp::HatOr, T, O) == T);
  // Classical xor truth table inside the defined fragment.
  CHECK(combine(BoolOp::Xor, T, T) == F);
  // Plain operators are undefined outside the domain intersection.
  CHECK(combine(BoolOp::And, T, O) == O);
}

TEST_CASE("every operator is commutative over the full value domain") {
  for (BoolOp op : kOps) {
    for (TriValue a : kAll) {
      for (TriValue b : kAll) {
        INFO("op=" << to_string(op) << " a=" << to_string(a) << " b=" << to_string(b));
        CHECK(combine(op, a, b) == combine(op, b, a));
      }
    }
  }
}

TEST_CASE("restricted to {true,false} operators agree with boolean logic") {
  const TriValue defined[] = {T, F};
  for (BoolOp op : kOps) {
    for (TriValue a : defined) {
      for (TriValue b : defined) {
        TriValue got = combine(op, a, b);
        REQUIRE(got.is_defined());
        CHECK(got.as_bool() == apply_bool(op, a.as_bool(), b.as_bool()));
      }
    }
  }
}

TEST_CASE("every operator is associative over the full value domain") {
  // Canonicalization flattens operator chains, which is sound only if the
  // three-valued semantics is associative; verify exhaustively.
  for (BoolOp op : kOps) {
    for (TriValue a : kAll) {
      for (TriValue b : kAll) {
        for (TriValue c : kAll) {
          INFO("op=" << to_string(op) << " a=" << to_string(a) << " b=" << to_string(b)
                     << " c=" << to_string(c));
          CHECK(combine(op, combine(op, a, b), c) == combine(op, a, combine(op, b, c)));
        }
      }
    }
  }
}

TEST_CASE("not-computed dominates out-of-domain for hat operators") {
  for (BoolOp op : {BoolOp::HatAnd, BoolOp::HatOr, BoolOp::HatXor}) {
    CHECK(combine(op, N, O) == N);
    CHECK(combine(op, O, N) == N);
    CHECK(combine(op, N, N) == N);
  }
}
