#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cprm/alphabet.hpp"

namespace cprm {

/// Complete deterministic automaton over the dense label alphabet 2^AP.
///
/// Rejecting sinks are the states with an empty residual language (no
/// accepting state reachable). After minimization there is at most one and
/// it self-loops on every label.
class CausalDfa {
public:
  using State = std::size_t;

  CausalDfa() = default;
  /// `delta[q * ap.label_count() + mask]` is the successor of q on mask.
  CausalDfa(Alphabet ap, State initial, std::vector<State> delta, std::vector<bool> accepting);

  /// Builds the table by querying `next(q, label)` for every state and label.
  static CausalDfa from_function(Alphabet ap, std::size_t num_states, State initial,
                                 std::vector<bool> accepting,
                                 const std::function<State(State, const Label&)>& next);

  const Alphabet& alphabet() const noexcept { return ap_; }
  std::size_t num_states() const noexcept { return accepting_.size(); }
  State initial() const noexcept { return initial_; }
  State next(State q, LabelMask label) const { return delta_[q * ap_.label_count() + label]; }
  bool accepting(State q) const { return accepting_[q]; }
  bool is_rejecting_sink(State q) const { return dead_[q]; }
  std::vector<State> rejecting_sinks() const;

  /// Visited states, starting at the initial one (n + 1 entries for n labels).
  std::vector<State> run(std::span<const Label> word) const;
  std::vector<State> run(std::span<const LabelMask> word) const;
  bool accepts(std::span<const Label> word) const;
  bool accepts(std::span<const LabelMask> word) const;

private:
  Alphabet ap_;
  State initial_ = 0;
  std::vector<State> delta_;
  std::vector<bool> accepting_;
  std::vector<bool> dead_;
};

/// Removes unreachable states and merges equivalent ones (Moore partition
/// refinement). States are renumbered in breadth-first order from the
/// initial state, so equal languages give identical tables.
CausalDfa minimize(const CausalDfa& d);

/// Synchronous product over the union alphabet; each factor reads its own
/// projection of the label. Accepting iff both factors accept. State
/// (q1, q2) gets id q1 * |Q2| + q2, every pair is kept.
CausalDfa compose_parallel(const CausalDfa& d1, const CausalDfa& d2);

/// Shortest word accepted by exactly one of the automata, if any.
std::optional<std::vector<Label>> distinguishing_word(const CausalDfa& d1, const CausalDfa& d2);

bool language_equiv(const CausalDfa& d1, const CausalDfa& d2);

/// Line format: `ap: ...`, `state <id> [accepting] [initial] [sink]`,
/// `edge <from> "<guard>" <to>`.
std::string write_dfa_text(const CausalDfa& d);
std::string write_dfa_dot(const CausalDfa& d, const std::string& name = "dfa");

} // namespace cprm
