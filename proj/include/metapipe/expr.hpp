#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "metapipe/errors.hpp"
#include "metapipe/relation.hpp"

namespace metapipe {

enum class ExprKind { Atom, ConstTrue, And, Or, Xor, HatAnd, HatOr, HatXor, Def, Indef };

constexpr bool is_binary(ExprKind k) {
  switch (k) {
    case ExprKind::And:
    case ExprKind::Or:
    case ExprKind::Xor:
    case ExprKind::HatAnd:
    case ExprKind::HatOr:
    case ExprKind::HatXor:
      return true;
    default:
      return false;
  }
}

constexpr bool is_wrapper(ExprKind k) {
  return k == ExprKind::Def || k == ExprKind::Indef;
}

constexpr ExprKind kind_of(BoolOp op) {
  switch (op) {
    case BoolOp::And: return ExprKind::And;
    case BoolOp::Or: return ExprKind::Or;
    case BoolOp::Xor: return ExprKind::Xor;
    case BoolOp::HatAnd: return ExprKind::HatAnd;
    case BoolOp::HatOr: return ExprKind::HatOr;
    case BoolOp::HatXor: return ExprKind::HatXor;
  }
  return ExprKind::And;
}

constexpr BoolOp op_of(ExprKind k) {
  switch (k) {
    case ExprKind::And: return BoolOp::And;
    case ExprKind::Or: return BoolOp::Or;
    case ExprKind::Xor: return BoolOp::Xor;
    case ExprKind::HatAnd: return BoolOp::HatAnd;
    case ExprKind::HatOr: return BoolOp::HatOr;
    case ExprKind::HatXor: return BoolOp::HatXor;
    default: throw UsageError("not a binary operator kind");
  }
}

// Immutable expression tree over relation atoms. Nodes are shared; copies are
// cheap and evaluation is pure.
class RelationExpr {
 public:
  RelationExpr() : RelationExpr(const_true()) {}

  static RelationExpr atom(std::string id) {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Atom;
    n->atom_id = std::move(id);
    return RelationExpr(std::move(n));
  }

  static RelationExpr const_true() {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::ConstTrue;
    return RelationExpr(std::move(n));
  }

  static RelationExpr combine(BoolOp op, RelationExpr l, RelationExpr r) {
    auto n = std::make_shared<Node>();
    n->kind = kind_of(op);
    n->lhs = l.node_;
    n->rhs = r.node_;
    return RelationExpr(std::move(n));
  }

  static RelationExpr and_(RelationExpr l, RelationExpr r) { return combine(BoolOp::And, l, r); }
  static RelationExpr or_(RelationExpr l, RelationExpr r) { return combine(BoolOp::Or, l, r); }
  static RelationExpr xor_(RelationExpr l, RelationExpr r) { return combine(BoolOp::Xor, l, r); }
  static RelationExpr hat_and(RelationExpr l, RelationExpr r) { return combine(BoolOp::HatAnd, l, r); }
  static RelationExpr hat_or(RelationExpr l, RelationExpr r) { return combine(BoolOp::HatOr, l, r); }
  static RelationExpr hat_xor(RelationExpr l, RelationExpr r) { return combine(BoolOp::HatXor, l, r); }

  static RelationExpr def(RelationExpr child) {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Def;
    n->lhs = child.node_;
    return RelationExpr(std::move(n));
  }

  static RelationExpr indef(RelationExpr child) {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Indef;
    n->lhs = child.node_;
    return RelationExpr(std::move(n));
  }

  ExprKind kind() const { return node_->kind; }
  const std::string& atom_id() const { return node_->atom_id; }
  RelationExpr lhs() const { return RelationExpr(node_->lhs); }
  RelationExpr rhs() const { return RelationExpr(node_->rhs); }
  RelationExpr child() const { return RelationExpr(node_->lhs); }

  friend bool operator==(const RelationExpr& a, const RelationExpr& b) {
    return structurally_equal(a.node_.get(), b.node_.get());
  }
  friend bool operator!=(const RelationExpr& a, const RelationExpr& b) { return !(a == b); }

 private:
  struct Node {
    ExprKind kind = ExprKind::ConstTrue;
    std::string atom_id;
    std::shared_ptr<const Node> lhs, rhs;
  };

  explicit RelationExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static bool structurally_equal(const Node* a, const Node* b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->atom_id != b->atom_id) return false;
    return structurally_equal(a->lhs.get(), b->lhs.get()) &&
           structurally_equal(a->rhs.get(), b->rhs.get());
  }

  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Canonical prefix text form, e.g. and(atom(N), hat_or(atom(K), atom(D))).
// Printing preserves structure exactly; parse(print(e)) == e.

inline std::string to_text(const RelationExpr& e) {
  switch (e.kind()) {
    case ExprKind::Atom: return "atom(" + e.atom_id() + ")";
    case ExprKind::ConstTrue: return "true";
    case ExprKind::Def: return "def(" + to_text(e.child()) + ")";
    case ExprKind::Indef: return "indef(" + to_text(e.child()) + ")";
    default:
      return to_string(op_of(e.kind())) + "(" + to_text(e.lhs()) + ", " +
             to_text(e.rhs()) + ")";
  }
}

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(const std::string& text) : text_(text) {}

  RelationExpr parse() {
    RelationExpr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("trailing input after expression", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
           c == '*' || c == '\'' || c == '.' || c == '+';
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    if (pos_ == start) throw ParseError("expected identifier", pos_);
    return text_.substr(start, pos_ - start);
  }

  RelationExpr parse_expr() {
    std::string head = ident();
    if (head == "true") return RelationExpr::const_true();
    expect('(');
    RelationExpr result = RelationExpr::const_true();
    if (head == "atom") {
      result = RelationExpr::atom(ident());
    } else if (head == "def" || head == "indef") {
      RelationExpr c = parse_expr();
      result = head == "def" ? RelationExpr::def(c) : RelationExpr::indef(c);
    } else {
      BoolOp op;
      if (head == "and") op = BoolOp::And;
      else if (head == "or") op = BoolOp::Or;
      else if (head == "xor") op = BoolOp::Xor;
      else if (head == "hat_and") op = BoolOp::HatAnd;
      else if (head == "hat_or") op = BoolOp::HatOr;
      else if (head == "hat_xor") op = BoolOp::HatXor;
      else throw ParseError("unknown operator '" + head + "'", pos_);
      RelationExpr l = parse_expr();
      expect(',');
      RelationExpr r = parse_expr();
      result = RelationExpr::combine(op, l, r);
    }
    expect(')');
    return result;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline RelationExpr parse_expr_text(const std::string& text) {
  return detail::ExprParser(text).parse();
}

// ---------------------------------------------------------------------------
// Evaluation under three-valued semantics.

inline TriValue eval_expr(const RelationExpr& e, const AtomRegistry& atoms,
                          const TestGroup& group, const ExecutionTrace& trace) {
  switch (e.kind()) {
    case ExprKind::ConstTrue:
      return TriValue::make_true();
    case ExprKind::Atom:
      return eval_atom(atoms.at(e.atom_id()), group, trace);
    case ExprKind::Def: {
      TriValue v = eval_expr(e.child(), atoms, group, trace);
      return v.is_undef() ? TriValue::make_true() : v;
    }
    case ExprKind::Indef: {
      // True exactly when the wrapped relation was not computed at runtime;
      // out-of-domain inputs stay out of domain.
      TriValue v = eval_expr(e.child(), atoms, group, trace);
      if (v == TriValue::out_of_domain()) return v;
      if (v == TriValue::not_computed()) return TriValue::make_true();
      return TriValue::make_false();
    }
    default: {
      TriValue l = eval_expr(e.lhs(), atoms, group, trace);
      TriValue r = eval_expr(e.rhs(), atoms, group, trace);
      return combine(op_of(e.kind()), l, r);
    }
  }
}

// ---------------------------------------------------------------------------
// Domain analysis. Plain operators live on the intersection of operand
// domains, hat operators on the union. DEF totalizes over the declared
// universe; INDEF keeps the domain of the relation it wraps (outside it the
// wrapped relation cannot even be out of scope meaningfully, and a split
// relation's INDEF part carries exactly the known-undefined classes).

inline DomainSet domain_of(const RelationExpr& e, const DomainSet& universe,
                           const AtomRegistry& atoms) {
  switch (e.kind()) {
    case ExprKind::ConstTrue:
    case ExprKind::Def:
      return universe;
    case ExprKind::Indef:
      return domain_of(e.child(), universe, atoms);
    case ExprKind::Atom: {
      const auto& atom = atoms.at(e.atom_id());
      if (!atom.domain.subset_of(universe)) {
        throw ConfigError("atom '" + atom.id + "' references classes outside the universe: " +
                          atom.domain.difference(universe).to_string());
      }
      return atom.domain;
    }
    default: {
      DomainSet l = domain_of(e.lhs(), universe, atoms);
      DomainSet r = domain_of(e.rhs(), universe, atoms);
      return is_hat(op_of(e.kind())) ? l.union_with(r) : l.intersect(r);
    }
  }
}

// ---------------------------------------------------------------------------
// Canonical form: associative operators flattened, operands sorted by their
// printed text, duplicates removed under idempotent operators. Used for
// deduplication and golden comparisons; evaluation is unchanged.

inline RelationExpr canonical(const RelationExpr& e);

namespace detail {

inline void flatten_into(const RelationExpr& e, ExprKind kind,
                         std::vector<RelationExpr>& out) {
  if (e.kind() == kind) {
    flatten_into(e.lhs(), kind, out);
    flatten_into(e.rhs(), kind, out);
  } else {
    out.push_back(canonical(e));
  }
}

constexpr bool idempotent(ExprKind k) {
  return k == ExprKind::And || k == ExprKind::Or || k == ExprKind::HatAnd ||
         k == ExprKind::HatOr;
}

}  // namespace detail

inline RelationExpr canonical(const RelationExpr& e) {
  switch (e.kind()) {
    case ExprKind::Atom:
    case ExprKind::ConstTrue:
      return e;
    case ExprKind::Def:
      return RelationExpr::def(canonical(e.child()));
    case ExprKind::Indef:
      return RelationExpr::indef(canonical(e.child()));
    default: {
      std::vector<RelationExpr> parts;
      detail::flatten_into(e, e.kind(), parts);
      std::vector<std::pair<std::string, RelationExpr>> keyed;
      keyed.reserve(parts.size());
      for (auto& p : parts) keyed.emplace_back(to_text(p), p);
      std::stable_sort(keyed.begin(), keyed.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      if (detail::idempotent(e.kind())) {
        keyed.erase(std::unique(keyed.begin(), keyed.end(),
                                [](const auto& a, const auto& b) { return a.first == b.first; }),
                    keyed.end());
      }
      RelationExpr acc = keyed.front().second;
      for (std::size_t i = 1; i < keyed.size(); ++i) {
        acc = RelationExpr::combine(op_of(e.kind()), acc, keyed[i].second);
      }
      return acc;
    }
  }
}

inline std::string canonical_text(const RelationExpr& e) { return to_text(canonical(e)); }

// ---------------------------------------------------------------------------
// Structural simplification. Only rewrites that preserve evaluation on every
// (group, trace): drop ConstTrue conjuncts of plain And, collapse nested Def,
// deduplicate identical operands of idempotent operators. Xor operands are
// never deduplicated (x xor x is False, not x).

inline RelationExpr simplify(const RelationExpr& e) {
  switch (e.kind()) {
    case ExprKind::Atom:
    case ExprKind::ConstTrue:
      return e;
    case ExprKind::Def: {
      RelationExpr c = simplify(e.child());
      if (c.kind() == ExprKind::Def) return c;
      return RelationExpr::def(c);
    }
    case ExprKind::Indef:
      return RelationExpr::indef(simplify(e.child()));
    default: {
      RelationExpr l = simplify(e.lhs());
      RelationExpr r = simplify(e.rhs());
      if (e.kind() == ExprKind::And) {
        if (l.kind() == ExprKind::ConstTrue) return r;
        if (r.kind() == ExprKind::ConstTrue) return l;
      }
      if (detail::idempotent(e.kind()) && canonical_text(l) == canonical_text(r)) {
        return l;
      }
      return RelationExpr::combine(op_of(e.kind()), l, r);
    }
  }
}

// ---------------------------------------------------------------------------
// Structure queries and rewriting helpers.

inline void collect_atoms(const RelationExpr& e, std::set<std::string>& out) {
  switch (e.kind()) {
    case ExprKind::Atom: out.insert(e.atom_id()); return;
    case ExprKind::ConstTrue: return;
    case ExprKind::Def:
    case ExprKind::Indef: collect_atoms(e.child(), out); return;
    default:
      collect_atoms(e.lhs(), out);
      collect_atoms(e.rhs(), out);
  }
}

inline std::set<std::string> atoms_of(const RelationExpr& e) {
  std::set<std::string> out;
  collect_atoms(e, out);
  return out;
}

inline bool contains_def_or_indef(const RelationExpr& e) {
  switch (e.kind()) {
    case ExprKind::Def:
    case ExprKind::Indef: return true;
    case ExprKind::Atom:
    case ExprKind::ConstTrue: return false;
    default: return contains_def_or_indef(e.lhs()) || contains_def_or_indef(e.rhs());
  }
}

// Rewrites every Atom node for which `fn` returns a replacement.
inline RelationExpr replace_atoms(
    const RelationExpr& e,
    const std::function<std::optional<RelationExpr>(const std::string&)>& fn) {
  switch (e.kind()) {
    case ExprKind::Atom: {
      auto repl = fn(e.atom_id());
      return repl ? *repl : e;
    }
    case ExprKind::ConstTrue:
      return e;
    case ExprKind::Def:
      return RelationExpr::def(replace_atoms(e.child(), fn));
    case ExprKind::Indef:
      return RelationExpr::indef(replace_atoms(e.child(), fn));
    default:
      return RelationExpr::combine(op_of(e.kind()), replace_atoms(e.lhs(), fn),
                                   replace_atoms(e.rhs(), fn));
  }
}

}  // namespace metapipe
