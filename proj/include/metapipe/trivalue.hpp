#pragma once

#include <cassert>
#include <ostream>
#include <string>

namespace metapipe {

enum class TriKind { True, False, Undef };

// Why a relation value is undefined: the test group's input class lies outside
// the relation's domain, or a value the relation reads was never produced
// (vertex skipped / executor failed).
enum class UndefCause { OutOfDomain, NotComputed };

class TriValue {
 public:
  constexpr TriValue() : state_(State::UndefNotComputed) {}

  static constexpr TriValue make_true() { return TriValue(State::True); }
  static constexpr TriValue make_false() { return TriValue(State::False); }
  static constexpr TriValue out_of_domain() { return TriValue(State::UndefOutOfDomain); }
  static constexpr TriValue not_computed() { return TriValue(State::UndefNotComputed); }
  static constexpr TriValue undef(UndefCause cause) {
    return cause == UndefCause::OutOfDomain ? out_of_domain() : not_computed();
  }
  static constexpr TriValue from_bool(bool b) { return b ? make_true() : make_false(); }

  constexpr TriKind kind() const {
    switch (state_) {
      case State::True: return TriKind::True;
      case State::False: return TriKind::False;
      default: return TriKind::Undef;
    }
  }

  constexpr bool is_true() const { return state_ == State::True; }
  constexpr bool is_false() const { return state_ == State::False; }
  constexpr bool is_undef() const { return kind() == TriKind::Undef; }
  constexpr bool is_defined() const { return !is_undef(); }

  // Valid only when is_undef().
  constexpr UndefCause cause() const {
    assert(is_undef());
    return state_ == State::UndefOutOfDomain ? UndefCause::OutOfDomain
                                             : UndefCause::NotComputed;
  }

  constexpr bool as_bool() const {
    assert(is_defined());
    return state_ == State::True;
  }

  friend constexpr bool operator==(TriValue a, TriValue b) { return a.state_ == b.state_; }
  friend constexpr bool operator!=(TriValue a, TriValue b) { return !(a == b); }

 private:
  enum class State { True, False, UndefOutOfDomain, UndefNotComputed };
  explicit constexpr TriValue(State s) : state_(s) {}
  State state_;
};

inline std::string to_string(TriValue v) {
  if (v.is_true()) return "true";
  if (v.is_false()) return "false";
  return v.cause() == UndefCause::OutOfDomain ? "undef(out-of-domain)"
                                              : "undef(not-computed)";
}

inline std::ostream& operator<<(std::ostream& os, TriValue v) {
  return os << to_string(v);
}

// The six combination operators. Plain operators live on the intersection of
// the operand domains; hat operators extend to the union by falling back to
// the operand that is defined.
enum class BoolOp { And, Or, Xor, HatAnd, HatOr, HatXor };

constexpr bool is_hat(BoolOp op) {
  return op == BoolOp::HatAnd || op == BoolOp::HatOr || op == BoolOp::HatXor;
}

constexpr bool apply_bool(BoolOp op, bool a, bool b) {
  switch (op) {
    case BoolOp::And:
    case BoolOp::HatAnd: return a && b;
    case BoolOp::Or:
    case BoolOp::HatOr: return a || b;
    case BoolOp::Xor:
    case BoolOp::HatXor: return a != b;
  }
  return false;
}

inline std::string to_string(BoolOp op) {
  switch (op) {
    case BoolOp::And: return "and";
    case BoolOp::Or: return "or";
    case BoolOp::Xor: return "xor";
    case BoolOp::HatAnd: return "hat_and";
    case BoolOp::HatOr: return "hat_or";
    case BoolOp::HatXor: return "hat_xor";
  }
  return "?";
}

// Cause precedence: NotComputed dominates OutOfDomain. A value that should
// have been produced but was not poisons any combination it appears in; the
// derivation counters that by wrapping affected relations in DEF/INDEF.
constexpr TriValue combine(BoolOp op, TriValue a, TriValue b) {
  if (a == TriValue::not_computed() || b == TriValue::not_computed()) {
    return TriValue::not_computed();
  }
  const bool a_ood = (a == TriValue::out_of_domain());
  const bool b_ood = (b == TriValue::out_of_domain());
  if (is_hat(op)) {
    if (a_ood && b_ood) return TriValue::out_of_domain();
    if (a_ood) return b;
    if (b_ood) return a;
  } else {
    if (a_ood || b_ood) return TriValue::out_of_domain();
  }
  return TriValue::from_bool(apply_bool(op, a.as_bool(), b.as_bool()));
}

}  // namespace metapipe
