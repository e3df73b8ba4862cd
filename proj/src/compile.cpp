#include <algorithm>
#include <deque>
#include <set>
#include <unordered_map>

#include "cprm/ltlf.hpp"

namespace cprm {

namespace {

// Residuals are Boolean combinations of literals and temporal subformulas of
// the input, so a clause set with absorption is a finite canonical form.
// Without absorption nested And/Or residuals can grow forever.
using Clause = std::set<Formula>;
using Dnf = std::vector<Clause>;

bool inconsistent(const Clause& c) {
  for (const auto& x : c)
    if (x.op() == Op::Not && x[0].op() == Op::Atom && c.count(x[0]))
      return true;
  return false;
}

Dnf absorb(Dnf d) {
  std::sort(d.begin(), d.end(),
            [](const Clause& a, const Clause& b) { return a.size() != b.size() ? a.size() < b.size() : a < b; });
  d.erase(std::unique(d.begin(), d.end()), d.end());
  Dnf out;
  for (auto& c : d) {
    const bool subsumed = std::any_of(out.begin(), out.end(), [&](const Clause& k) {
      return std::includes(c.begin(), c.end(), k.begin(), k.end());
    });
    if (!subsumed)
      out.push_back(std::move(c));
  }
  return out;
}

Dnf dnf(const Formula& f) {
  switch (f.op()) {
  case Op::True: return {Clause{}};
  case Op::False: return {};
  case Op::Or: {
    Dnf out;
    for (const auto& c : f.children()) {
      auto d = dnf(c);
      out.insert(out.end(), d.begin(), d.end());
    }
    return absorb(std::move(out));
  }
  case Op::And: {
    Dnf out{Clause{}};
    for (const auto& c : f.children()) {
      const auto d = dnf(c);
      Dnf next;
      for (const auto& x : out)
        for (const auto& y : d) {
          Clause z = x;
          z.insert(y.begin(), y.end());
          if (!inconsistent(z))
            next.push_back(std::move(z));
        }
      out = absorb(std::move(next));
    }
    return out;
  }
  default: return {Clause{f}};
  }
}

Formula canonical(const Formula& f) {
  std::vector<Formula> clauses;
  for (const auto& c : dnf(f))
    clauses.push_back(simplify(Formula::conjunction({c.begin(), c.end()})));
  return simplify(Formula::disjunction(std::move(clauses)));
}

} // namespace

ProgressionAutomaton explore_progression(const Formula& f, const Alphabet& ap,
                                         std::size_t max_states) {
  for (const auto& a : atoms(f))
    if (!ap.contains(a))
      throw UndeclaredPropositionError(a);

  const std::size_t labels = ap.label_count();
  std::vector<Formula> states{canonical(to_nnf(f))};
  std::unordered_map<std::string, std::size_t> index{{states[0].key(), 0}};
  std::vector<CausalDfa::State> delta;
  std::deque<std::size_t> frontier{0};

  while (!frontier.empty()) {
    const std::size_t q = frontier.front();
    frontier.pop_front();
    delta.resize(states.size() * labels);
    for (LabelMask l = 0; l < labels; ++l) {
      Formula residual = canonical(progress(states[q], l, ap));
      auto [it, inserted] = index.try_emplace(residual.key(), states.size());
      if (inserted) {
        if (states.size() >= max_states)
          throw StateExplosionError(max_states);
        states.push_back(std::move(residual));
        frontier.push_back(it->second);
        delta.resize(states.size() * labels);
      }
      delta[q * labels + l] = it->second;
    }
  }

  std::vector<bool> accepting(states.size());
  for (std::size_t q = 0; q < states.size(); ++q)
    accepting[q] = empty_accepts(states[q]);
  CausalDfa dfa(ap, 0, std::move(delta), std::move(accepting));
  return {std::move(dfa), std::move(states)};
}

CausalDfa compile_to_dfa(const Formula& f, const Alphabet& ap, std::size_t max_states) {
  return minimize(explore_progression(f, ap, max_states).dfa);
}

CausalDfa compile_tlcd(const TlCd& cd, std::size_t max_states) {
  if (cd.edges.empty())
    return compile_to_dfa(Formula::top(), cd.ap, max_states);
  std::optional<CausalDfa> acc;
  for (const auto& [cause, effect] : cd.edges) {
    CausalDfa factor =
        compile_to_dfa(Formula::globally(Formula::implication(cause, effect)), cd.ap, max_states);
    acc = acc ? minimize(compose_parallel(*acc, factor)) : std::move(factor);
  }
  return std::move(*acc);
}

namespace {

// Shannon expansion on the highest remaining proposition.
Formula expand(const std::vector<bool>& selected, std::size_t begin, std::size_t count,
               std::size_t vars, const Alphabet& ap) {
  bool all = true, none = true;
  for (std::size_t i = begin; i < begin + count; ++i) {
    all = all && selected[i];
    none = none && !selected[i];
  }
  if (all)
    return Formula::top();
  if (none)
    return Formula::bottom();
  const std::size_t half = count / 2;
  const Formula lo = expand(selected, begin, half, vars - 1, ap);
  const Formula hi = expand(selected, begin + half, half, vars - 1, ap);
  if (lo == hi)
    return lo;
  const Formula v = Formula::atom(ap.propositions()[vars - 1]);
  const Formula not_v = Formula::negation(v);
  if (hi.op() == Op::False)
    return simplify(Formula::conjunction({not_v, lo}));
  if (lo.op() == Op::False)
    return simplify(Formula::conjunction({v, hi}));
  if (hi.op() == Op::True)
    return simplify(Formula::disjunction({v, lo}));
  if (lo.op() == Op::True)
    return simplify(Formula::disjunction({not_v, hi}));
  return simplify(Formula::disjunction(
      {Formula::conjunction({v, hi}), Formula::conjunction({not_v, lo})}));
}

} // namespace

Formula guard_from_labels(const std::vector<bool>& selected, const Alphabet& ap) {
  if (selected.size() != ap.label_count())
    throw std::invalid_argument("label selection does not match the alphabet");
  return expand(selected, 0, selected.size(), ap.size(), ap);
}

} // namespace cprm
