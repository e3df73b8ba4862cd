#include "cprm/automata.hpp"

#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cprm/ltlf.hpp"

namespace cprm {

CausalDfa::CausalDfa(Alphabet ap, State initial, std::vector<State> delta,
                     std::vector<bool> accepting)
    : ap_(std::move(ap)), initial_(initial), delta_(std::move(delta)),
      accepting_(std::move(accepting)) {
  const std::size_t n = accepting_.size();
  if (n == 0)
    throw std::invalid_argument("a DFA needs at least one state");
  if (initial_ >= n)
    throw std::invalid_argument("initial state out of range");
  if (delta_.size() != n * ap_.label_count())
    throw std::invalid_argument("transition table is not total over states x labels");
  for (State t : delta_)
    if (t >= n)
      throw std::invalid_argument("transition target out of range");

  // Dead states: no accepting state reachable. Backward search from F.
  const std::size_t labels = ap_.label_count();
  std::vector<std::vector<State>> preds(n);
  for (State q = 0; q < n; ++q)
    for (std::size_t l = 0; l < labels; ++l)
      preds[delta_[q * labels + l]].push_back(q);
  std::vector<bool> alive(n, false);
  std::deque<State> work;
  for (State q = 0; q < n; ++q)
    if (accepting_[q]) {
      alive[q] = true;
      work.push_back(q);
    }
  while (!work.empty()) {
    State q = work.front();
    work.pop_front();
    for (State p : preds[q])
      if (!alive[p]) {
        alive[p] = true;
        work.push_back(p);
      }
  }
  dead_.resize(n);
  for (State q = 0; q < n; ++q)
    dead_[q] = !alive[q];
}

CausalDfa CausalDfa::from_function(Alphabet ap, std::size_t num_states, State initial,
                                   std::vector<bool> accepting,
                                   const std::function<State(State, const Label&)>& next) {
  const std::size_t labels = ap.label_count();
  std::vector<State> delta(num_states * labels);
  for (State q = 0; q < num_states; ++q)
    for (LabelMask l = 0; l < labels; ++l)
      delta[q * labels + l] = next(q, ap.label_of(l));
  return CausalDfa(std::move(ap), initial, std::move(delta), std::move(accepting));
}

std::vector<CausalDfa::State> CausalDfa::rejecting_sinks() const {
  std::vector<State> out;
  for (State q = 0; q < num_states(); ++q)
    if (dead_[q])
      out.push_back(q);
  return out;
}

std::vector<CausalDfa::State> CausalDfa::run(std::span<const Label> word) const {
  std::vector<LabelMask> masks;
  masks.reserve(word.size());
  for (const auto& l : word)
    masks.push_back(ap_.mask_of(l));
  return run(std::span<const LabelMask>(masks));
}

std::vector<CausalDfa::State> CausalDfa::run(std::span<const LabelMask> word) const {
  std::vector<State> states{initial_};
  states.reserve(word.size() + 1);
  for (LabelMask l : word)
    states.push_back(next(states.back(), l));
  return states;
}

bool CausalDfa::accepts(std::span<const Label> word) const { return accepting_[run(word).back()]; }
bool CausalDfa::accepts(std::span<const LabelMask> word) const {
  State q = initial_;
  for (LabelMask l : word)
    q = next(q, l);
  return accepting_[q];
}

CausalDfa minimize(const CausalDfa& d) {
  const std::size_t labels = d.alphabet().label_count();
  const std::size_t n = d.num_states();

  std::vector<bool> reachable(n, false);
  std::deque<CausalDfa::State> work{d.initial()};
  reachable[d.initial()] = true;
  while (!work.empty()) {
    auto q = work.front();
    work.pop_front();
    for (LabelMask l = 0; l < labels; ++l) {
      auto t = d.next(q, l);
      if (!reachable[t]) {
        reachable[t] = true;
        work.push_back(t);
      }
    }
  }

  // Moore refinement: split blocks by (block, successor blocks) signatures.
  std::vector<std::size_t> block(n, 0);
  std::size_t blocks = 0;
  {
    bool has_acc = false, has_rej = false;
    for (std::size_t q = 0; q < n; ++q)
      if (reachable[q])
        (d.accepting(q) ? has_acc : has_rej) = true;
    for (std::size_t q = 0; q < n; ++q)
      block[q] = (d.accepting(q) && has_rej) ? 1 : 0;
    blocks = (has_acc && has_rej) ? 2 : 1;
  }
  for (;;) {
    std::map<std::vector<std::size_t>, std::size_t> ids;
    std::vector<std::size_t> refined(n, 0);
    std::vector<std::size_t> signature(labels + 1);
    for (std::size_t q = 0; q < n; ++q) {
      if (!reachable[q])
        continue;
      signature[0] = block[q];
      for (LabelMask l = 0; l < labels; ++l)
        signature[l + 1] = block[d.next(q, l)];
      refined[q] = ids.try_emplace(signature, ids.size()).first->second;
    }
    const bool stable = ids.size() == blocks;
    block = std::move(refined);
    blocks = ids.size();
    if (stable)
      break;
  }

  // Renumber blocks breadth-first from the initial block.
  std::vector<CausalDfa::State> representative(blocks);
  for (std::size_t q = 0; q < n; ++q)
    if (reachable[q])
      representative[block[q]] = q;
  std::vector<std::size_t> order(blocks, SIZE_MAX);
  std::vector<std::size_t> by_order;
  order[block[d.initial()]] = 0;
  by_order.push_back(block[d.initial()]);
  for (std::size_t i = 0; i < by_order.size(); ++i) {
    const auto rep = representative[by_order[i]];
    for (LabelMask l = 0; l < labels; ++l) {
      const auto b = block[d.next(rep, l)];
      if (order[b] == SIZE_MAX) {
        order[b] = by_order.size();
        by_order.push_back(b);
      }
    }
  }
  std::vector<CausalDfa::State> delta(blocks * labels);
  std::vector<bool> accepting(blocks);
  for (std::size_t i = 0; i < blocks; ++i) {
    const auto rep = representative[by_order[i]];
    accepting[i] = d.accepting(rep);
    for (LabelMask l = 0; l < labels; ++l)
      delta[i * labels + l] = order[block[d.next(rep, l)]];
  }
  return CausalDfa(d.alphabet(), 0, std::move(delta), std::move(accepting));
}

CausalDfa compose_parallel(const CausalDfa& d1, const CausalDfa& d2) {
  const Alphabet ap = Alphabet::unite(d1.alphabet(), d2.alphabet());
  const Projection p1(ap, d1.alphabet()), p2(ap, d2.alphabet());
  const std::size_t n2 = d2.num_states();
  const std::size_t n = d1.num_states() * n2;
  const std::size_t labels = ap.label_count();
  std::vector<CausalDfa::State> delta(n * labels);
  std::vector<bool> accepting(n);
  for (std::size_t a = 0; a < d1.num_states(); ++a)
    for (std::size_t b = 0; b < n2; ++b) {
      const std::size_t q = a * n2 + b;
      accepting[q] = d1.accepting(a) && d2.accepting(b);
      for (LabelMask l = 0; l < labels; ++l)
        delta[q * labels + l] = d1.next(a, p1(l)) * n2 + d2.next(b, p2(l));
    }
  return CausalDfa(ap, d1.initial() * n2 + d2.initial(), std::move(delta), std::move(accepting));
}

std::optional<std::vector<Label>> distinguishing_word(const CausalDfa& d1, const CausalDfa& d2) {
  const Alphabet ap = Alphabet::unite(d1.alphabet(), d2.alphabet());
  const Projection p1(ap, d1.alphabet()), p2(ap, d2.alphabet());
  const std::size_t n2 = d2.num_states();
  struct Parent {
    std::size_t pair;
    LabelMask label;
  };
  std::vector<std::optional<Parent>> parent(d1.num_states() * n2);
  std::vector<bool> seen(d1.num_states() * n2, false);
  const std::size_t start = d1.initial() * n2 + d2.initial();
  seen[start] = true;
  std::deque<std::size_t> work{start};
  while (!work.empty()) {
    const std::size_t cur = work.front();
    work.pop_front();
    const std::size_t a = cur / n2, b = cur % n2;
    if (d1.accepting(a) != d2.accepting(b)) {
      std::vector<Label> word;
      for (std::size_t at = cur; parent[at]; at = parent[at]->pair)
        word.push_back(ap.label_of(parent[at]->label));
      return std::vector<Label>(word.rbegin(), word.rend());
    }
    for (LabelMask l = 0; l < ap.label_count(); ++l) {
      const std::size_t nxt = d1.next(a, p1(l)) * n2 + d2.next(b, p2(l));
      if (!seen[nxt]) {
        seen[nxt] = true;
        parent[nxt] = Parent{cur, l};
        work.push_back(nxt);
      }
    }
  }
  return std::nullopt;
}

bool language_equiv(const CausalDfa& d1, const CausalDfa& d2) {
  return !distinguishing_word(d1, d2).has_value();
}

namespace {

// Guard formulas of all (from, to) edges, in state order.
template <typename Emit> void for_each_edge(const CausalDfa& d, Emit&& emit) {
  const std::size_t labels = d.alphabet().label_count();
  for (std::size_t q = 0; q < d.num_states(); ++q) {
    std::map<std::size_t, std::vector<bool>> targets;
    for (LabelMask l = 0; l < labels; ++l) {
      auto& sel = targets[d.next(q, l)];
      sel.resize(labels, false);
      sel[l] = true;
    }
    for (const auto& [t, sel] : targets)
      emit(q, t, guard_from_labels(sel, d.alphabet()));
  }
}

} // namespace

std::string write_dfa_text(const CausalDfa& d) {
  std::ostringstream out;
  out << "ap:";
  for (const auto& p : d.alphabet().propositions())
    out << ' ' << p;
  out << '\n';
  for (std::size_t q = 0; q < d.num_states(); ++q) {
    out << "state " << q;
    if (d.accepting(q))
      out << " accepting";
    if (q == d.initial())
      out << " initial";
    if (d.is_rejecting_sink(q))
      out << " sink";
    out << '\n';
  }
  for_each_edge(d, [&](std::size_t from, std::size_t to, const Formula& guard) {
    out << "edge " << from << " \"" << guard.to_string() << "\" " << to << '\n';
  });
  return out.str();
}

std::string write_dfa_dot(const CausalDfa& d, const std::string& name) {
  std::ostringstream out;
  out << "digraph " << name << " {\n  rankdir=LR;\n  init [shape=point];\n";
  for (std::size_t q = 0; q < d.num_states(); ++q) {
    const char* shape =
        d.is_rejecting_sink(q) ? "diamond" : (d.accepting(q) ? "doublecircle" : "circle");
    out << "  q" << q << " [shape=" << shape << ", label=\"" << q << "\"];\n";
  }
  out << "  init -> q" << d.initial() << ";\n";
  for_each_edge(d, [&](std::size_t from, std::size_t to, const Formula& guard) {
    out << "  q" << from << " -> q" << to << " [label=\"" << guard.to_string() << "\"];\n";
  });
  out << "}\n";
  return out.str();
}

} // namespace cprm
