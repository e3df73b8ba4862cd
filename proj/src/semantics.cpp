#include <algorithm>
#include <stdexcept>

#include "cprm/ltlf.hpp"

namespace cprm {

namespace {

// Truth on the empty trace, for f (positive) or for its negation. Negated
// literals fail like literals; every other operator answers as its dual.
bool holds_on_empty(const Formula& f, bool positive) {
  switch (f.op()) {
  case Op::True: return positive;
  case Op::False: return !positive;
  case Op::Atom: return false;
  case Op::Not: return holds_on_empty(f[0], !positive);
  case Op::And:
  case Op::Or: {
    const bool all = (f.op() == Op::And) == positive;
    if (all)
      return std::all_of(f.children().begin(), f.children().end(),
                         [&](const Formula& c) { return holds_on_empty(c, positive); });
    return std::any_of(f.children().begin(), f.children().end(),
                       [&](const Formula& c) { return holds_on_empty(c, positive); });
  }
  case Op::Implies:
    if (positive)
      return holds_on_empty(f[0], false) || holds_on_empty(f[1], true);
    return holds_on_empty(f[0], true) && holds_on_empty(f[1], false);
  case Op::Next: return !positive;
  case Op::WeakNext: return positive;
  case Op::Globally: return positive;
  case Op::Until: return !positive;
  case Op::WeakUntil: return positive;
  }
  return false;
}

class Evaluator {
public:
  explicit Evaluator(std::span<const Label> trace) : trace_(trace) {}

  bool holds(const Formula& f, std::size_t i, bool positive) const {
    if (i >= trace_.size())
      return holds_on_empty(f, positive);
    switch (f.op()) {
    case Op::True: return positive;
    case Op::False: return !positive;
    case Op::Atom: return (trace_[i].count(f.name()) > 0) == positive;
    case Op::Not: return holds(f[0], i, !positive);
    case Op::And:
    case Op::Or: {
      const bool all = (f.op() == Op::And) == positive;
      if (all)
        return std::all_of(f.children().begin(), f.children().end(),
                           [&](const Formula& c) { return holds(c, i, positive); });
      return std::any_of(f.children().begin(), f.children().end(),
                         [&](const Formula& c) { return holds(c, i, positive); });
    }
    case Op::Implies:
      if (positive)
        return holds(f[0], i, false) || holds(f[1], i, true);
      return holds(f[0], i, true) && holds(f[1], i, false);
    case Op::Next:
    case Op::WeakNext: return holds(f[0], i + 1, positive);
    case Op::Globally:
      // !G g is true U !g
      if (positive)
        return holds(f[0], i, true) && holds(f, i + 1, true);
      return holds(f[0], i, false) || holds(f, i + 1, false);
    case Op::Until:
    case Op::WeakUntil: {
      if (positive)
        return holds(f[1], i, true) || (holds(f[0], i, true) && holds(f, i + 1, true));
      // !(a U b) is !b W (!a & !b), !(a W b) is !b U (!a & !b); both
      // unroll the same way and differ only on the empty suffix.
      const bool release_now = holds(f[0], i, false) && holds(f[1], i, false);
      return release_now || (holds(f[1], i, false) && holds(f, i + 1, false));
    }
    }
    return false;
  }

private:
  std::span<const Label> trace_;
};

Formula nnf(const Formula& f, bool positive) {
  switch (f.op()) {
  case Op::True: return positive ? f : Formula::bottom();
  case Op::False: return positive ? f : Formula::top();
  case Op::Atom: return positive ? f : Formula::negation(f);
  case Op::Not: return nnf(f[0], !positive);
  case Op::And:
  case Op::Or: {
    std::vector<Formula> ops;
    for (const auto& c : f.children())
      ops.push_back(nnf(c, positive));
    const bool conj = (f.op() == Op::And) == positive;
    return conj ? Formula::conjunction(std::move(ops)) : Formula::disjunction(std::move(ops));
  }
  case Op::Implies:
    if (positive)
      return Formula::disjunction({nnf(f[0], false), nnf(f[1], true)});
    return Formula::conjunction({nnf(f[0], true), nnf(f[1], false)});
  case Op::Next:
    return positive ? Formula::next(nnf(f[0], true)) : Formula::weak_next(nnf(f[0], false));
  case Op::WeakNext:
    return positive ? Formula::weak_next(nnf(f[0], true)) : Formula::next(nnf(f[0], false));
  case Op::Globally:
    return positive ? Formula::globally(nnf(f[0], true))
                    : Formula::until(Formula::top(), nnf(f[0], false));
  case Op::Until:
  case Op::WeakUntil: {
    if (positive) {
      auto lhs = nnf(f[0], true);
      auto rhs = nnf(f[1], true);
      return f.op() == Op::Until ? Formula::until(lhs, rhs) : Formula::weak_until(lhs, rhs);
    }
    auto not_rhs = nnf(f[1], false);
    auto release = Formula::conjunction({nnf(f[0], false), not_rhs});
    return f.op() == Op::Until ? Formula::weak_until(not_rhs, release)
                               : Formula::until(not_rhs, release);
  }
  }
  return f;
}

bool complementary(const Formula& a, const Formula& b) {
  return (a.op() == Op::Not && a[0] == b) || (b.op() == Op::Not && b[0] == a);
}

// Canonical n-ary And/Or of already simplified operands.
Formula make_junction(Op op, std::vector<Formula> operands) {
  const Op absorbing = op == Op::And ? Op::False : Op::True;
  const Op neutral = op == Op::And ? Op::True : Op::False;
  std::vector<Formula> flat;
  for (auto& o : operands) {
    if (o.op() == absorbing)
      return o;
    if (o.op() == neutral)
      continue;
    if (o.op() == op)
      flat.insert(flat.end(), o.children().begin(), o.children().end());
    else
      flat.push_back(std::move(o));
  }
  std::sort(flat.begin(), flat.end());
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  // a & !a is false everywhere, but a | !a fails on the empty suffix, so
  // only conjunctions fold.
  if (op == Op::And)
    for (std::size_t i = 0; i < flat.size(); ++i)
      for (std::size_t j = i + 1; j < flat.size(); ++j)
        if (flat[i].is_literal() && flat[j].is_literal() && complementary(flat[i], flat[j]))
          return Formula::bottom();
  return op == Op::And ? Formula::conjunction(std::move(flat))
                       : Formula::disjunction(std::move(flat));
}

Formula make_and(std::vector<Formula> operands) { return make_junction(Op::And, std::move(operands)); }
Formula make_or(std::vector<Formula> operands) { return make_junction(Op::Or, std::move(operands)); }

Formula progress_impl(const Formula& f, LabelMask label, const Alphabet& ap) {
  switch (f.op()) {
  case Op::True:
  case Op::False: return f;
  case Op::Atom: {
    auto i = ap.index_of(f.name());
    if (!i)
      throw UndeclaredPropositionError(f.name());
    return (label >> *i) & 1U ? Formula::top() : Formula::bottom();
  }
  case Op::Not:
    if (f[0].op() != Op::Atom)
      throw std::invalid_argument("progress requires negation normal form");
    return progress_impl(f[0], label, ap).op() == Op::True ? Formula::bottom() : Formula::top();
  case Op::And:
  case Op::Or: {
    std::vector<Formula> ops;
    ops.reserve(f.children().size());
    for (const auto& c : f.children())
      ops.push_back(progress_impl(c, label, ap));
    return f.op() == Op::And ? make_and(std::move(ops)) : make_or(std::move(ops));
  }
  case Op::Next:
  case Op::WeakNext: return f[0];
  case Op::Globally: return make_and({progress_impl(f[0], label, ap), f});
  case Op::Until:
  case Op::WeakUntil:
    return make_or({progress_impl(f[1], label, ap), make_and({progress_impl(f[0], label, ap), f})});
  case Op::Implies: throw std::invalid_argument("progress requires negation normal form");
  }
  return f;
}

} // namespace

bool evaluate(const Formula& f, std::span<const Label> trace) {
  return Evaluator(trace).holds(f, 0, true);
}

Formula to_nnf(const Formula& f) { return simplify(nnf(f, true)); }

Formula simplify(const Formula& f) {
  switch (f.op()) {
  case Op::True:
  case Op::False:
  case Op::Atom: return f;
  case Op::Not: {
    Formula g = simplify(f[0]);
    if (g.op() == Op::True)
      return Formula::bottom();
    if (g.op() == Op::False)
      return Formula::top();
    if (g.op() == Op::Not)
      return g[0];
    return Formula::negation(std::move(g));
  }
  case Op::And:
  case Op::Or: {
    std::vector<Formula> ops;
    for (const auto& c : f.children())
      ops.push_back(simplify(c));
    return make_junction(f.op(), std::move(ops));
  }
  case Op::Implies: return Formula::implication(simplify(f[0]), simplify(f[1]));
  case Op::Next: {
    Formula g = simplify(f[0]);
    return g.op() == Op::False ? g : Formula::next(std::move(g));
  }
  case Op::WeakNext: {
    Formula g = simplify(f[0]);
    return g.op() == Op::True ? g : Formula::weak_next(std::move(g));
  }
  case Op::Globally: {
    Formula g = simplify(f[0]);
    return g.op() == Op::True ? g : Formula::globally(std::move(g));
  }
  case Op::Until: {
    Formula a = simplify(f[0]);
    Formula b = simplify(f[1]);
    if (b.op() == Op::False)
      return b;
    return Formula::until(std::move(a), std::move(b));
  }
  case Op::WeakUntil: {
    Formula a = simplify(f[0]);
    Formula b = simplify(f[1]);
    if (b.op() == Op::True || a.op() == Op::True)
      return Formula::top();
    return Formula::weak_until(std::move(a), std::move(b));
  }
  }
  return f;
}

Formula progress(const Formula& f, LabelMask label, const Alphabet& ap) {
  return progress_impl(f, label, ap);
}

Formula progress(const Formula& f, const Label& label) {
  Alphabet ap(atoms(f));
  return progress_impl(f, ap.project(label), ap);
}

bool empty_accepts(const Formula& f) { return holds_on_empty(f, true); }

bool satisfies(const Formula& guard, LabelMask label, const Alphabet& ap) {
  if (!guard.is_propositional())
    throw std::invalid_argument("guard '" + guard.to_string() + "' is not propositional");
  switch (guard.op()) {
  case Op::True: return true;
  case Op::False: return false;
  case Op::Atom: {
    auto i = ap.index_of(guard.name());
    if (!i)
      throw UndeclaredPropositionError(guard.name());
    return (label >> *i) & 1U;
  }
  case Op::Not: return !satisfies(guard[0], label, ap);
  case Op::And:
    return std::all_of(guard.children().begin(), guard.children().end(),
                       [&](const Formula& c) { return satisfies(c, label, ap); });
  case Op::Or:
    return std::any_of(guard.children().begin(), guard.children().end(),
                       [&](const Formula& c) { return satisfies(c, label, ap); });
  case Op::Implies: return !satisfies(guard[0], label, ap) || satisfies(guard[1], label, ap);
  default: return false;
  }
}

} // namespace cprm
