#pragma once

// Finite-trace temporal logic: syntax trees, the concrete grammar, the
// recursive reference semantics, formula progression and the compilation of
// formulas (and TL-CDs) to minimal causal DFAs.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cprm/alphabet.hpp"
#include "cprm/automata.hpp"

namespace cprm {

enum class Op {
  True,
  False,
  Atom,
  Not,
  And,
  Or,
  Implies,
  Next,
  WeakNext, // only produced by negation normal form
  Globally,
  Until,
  WeakUntil,
};

/// Immutable, shared LTLf syntax tree. Equality and ordering are structural
/// (through a canonical key computed at construction).
class Formula {
public:
  Formula();

  static Formula top();
  static Formula bottom();
  static Formula atom(std::string name);
  static Formula negation(Formula f);
  static Formula conjunction(std::vector<Formula> operands);
  static Formula disjunction(std::vector<Formula> operands);
  static Formula implication(Formula lhs, Formula rhs);
  static Formula next(Formula f);
  static Formula weak_next(Formula f);
  static Formula globally(Formula f);
  static Formula until(Formula lhs, Formula rhs);
  static Formula weak_until(Formula lhs, Formula rhs);

  Op op() const noexcept;
  const std::string& name() const noexcept;
  std::span<const Formula> children() const noexcept;
  const Formula& operator[](std::size_t i) const { return children()[i]; }

  const std::string& key() const noexcept;
  std::string to_string() const;

  bool is_literal() const noexcept;
  bool is_propositional() const noexcept;

  friend bool operator==(const Formula& a, const Formula& b) { return a.key() == b.key(); }
  friend bool operator<(const Formula& a, const Formula& b) { return a.key() < b.key(); }

private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Formula make(Op op, std::string name, std::vector<Formula> children);

  std::shared_ptr<const Node> node_;
};

std::vector<std::string> atoms(const Formula& f);

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, std::size_t position)
      : std::runtime_error("parse error at " + std::to_string(position) + ": " + msg),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

class UnknownAtomError : public std::runtime_error {
public:
  UnknownAtomError(const std::string& atom, std::size_t position)
      : std::runtime_error("unknown atom '" + atom + "' at " + std::to_string(position)),
        atom_(atom), position_(position) {}
  const std::string& atom() const noexcept { return atom_; }
  std::size_t position() const noexcept { return position_; }

private:
  std::string atom_;
  std::size_t position_;
};

/// Parses the ASCII grammar. Every identifier must belong to `ap`.
Formula parse_formula(std::string_view text, const Alphabet& ap);
/// Parses without restricting atom names.
Formula parse_formula(std::string_view text);

/// A TL-CD: cause ~> effect edges over a declared proposition set.
struct TlCd {
  Alphabet ap;
  std::vector<std::pair<Formula, Formula>> edges;
};

/// `ap: s o f` header followed by `LHS ~> RHS` lines; `#` starts a comment.
TlCd parse_tlcd(std::string_view text);

/// Conjunction of G(cause -> effect) over all edges; True for no edges.
Formula tlcd_to_formula(const TlCd& cd);

/// Recursive finite-trace semantics. On the empty trace G and W hold while
/// literals, X and U fail; Boolean connectives recurse.
bool evaluate(const Formula& f, std::span<const Label> trace);

/// Pushes negation to the atoms; implication becomes a disjunction.
Formula to_nnf(const Formula& f);

/// Constant folding, flattening, sorting and de-duplication of And/Or.
Formula simplify(const Formula& f);

/// One-step progression of an NNF formula through `label`; the result is
/// simplified so structurally equal residuals coincide.
Formula progress(const Formula& f, const Label& label);
Formula progress(const Formula& f, LabelMask label, const Alphabet& ap);

/// Whether the NNF formula holds on the empty trace.
bool empty_accepts(const Formula& f);

class StateExplosionError : public std::runtime_error {
public:
  explicit StateExplosionError(std::size_t bound)
      : std::runtime_error("progression closure exceeded " + std::to_string(bound) + " states"),
        bound_(bound) {}
  std::size_t bound() const noexcept { return bound_; }

private:
  std::size_t bound_;
};

inline constexpr std::size_t kDefaultMaxDfaStates = 10'000;

struct ProgressionAutomaton {
  CausalDfa dfa;
  std::vector<Formula> state_formulas;
};

/// Progression closure of NNF(f) over all labels, before minimization.
/// `state_formulas[q]` is the residual obligation of state q.
ProgressionAutomaton explore_progression(const Formula& f, const Alphabet& ap,
                                         std::size_t max_states = kDefaultMaxDfaStates);

/// Minimal DFA accepting exactly the words that satisfy f.
CausalDfa compile_to_dfa(const Formula& f, const Alphabet& ap,
                         std::size_t max_states = kDefaultMaxDfaStates);

/// Compiles each edge separately, composes the factors and minimizes.
CausalDfa compile_tlcd(const TlCd& cd, std::size_t max_states = kDefaultMaxDfaStates);

/// Propositional guard equivalent to the set of labels with `selected[mask]`.
Formula guard_from_labels(const std::vector<bool>& selected, const Alphabet& ap);

/// Truth of a propositional formula on one label.
bool satisfies(const Formula& guard, LabelMask label, const Alphabet& ap);

} // namespace cprm
