#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cprm/alphabet.hpp"
#include "cprm/automata.hpp"
#include "cprm/ltlf.hpp"

namespace cprm {

struct Outcome {
  std::size_t to;
  double prob;
  double reward;
};

/// All transitions of one state that share a guard.
struct GuardGroup {
  Formula guard;
  std::vector<Outcome> outcomes;
};

class PrmError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Probabilistic reward machine. Each non-terminal state partitions 2^AP
/// among its guard groups; terminal states have no transitions.
class Prm {
public:
  using State = std::size_t;
  static constexpr double kProbabilityTolerance = 1e-9;

  Prm() = default;
  /// Validates determinism, totality and probability mass; throws PrmError.
  Prm(Alphabet ap, std::vector<std::string> names, State initial, std::vector<bool> terminal,
      std::vector<std::vector<GuardGroup>> groups);

  const Alphabet& alphabet() const noexcept { return ap_; }
  std::size_t num_states() const noexcept { return names_.size(); }
  State initial() const noexcept { return initial_; }
  bool is_terminal(State u) const { return terminal_[u]; }
  const std::vector<bool>& terminals() const noexcept { return terminal_; }
  const std::string& name(State u) const { return names_[u]; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<GuardGroup>& groups(State u) const { return groups_[u]; }

  /// Index into groups(u) of the group enabled by `label`.
  std::size_t group_of(State u, LabelMask label) const;
  const std::vector<Outcome>& outcomes(State u, LabelMask label) const {
    return groups_[u][group_of(u, label)].outcomes;
  }

  /// The reward set Gamma, sorted ascending.
  std::vector<double> rewards() const;

  /// Same machine with a different terminal set. Transitions leaving newly
  /// terminal states are dropped.
  Prm with_terminals(std::vector<bool> terminal) const;

private:
  Alphabet ap_;
  std::vector<std::string> names_;
  State initial_ = 0;
  std::vector<bool> terminal_;
  std::vector<std::vector<GuardGroup>> groups_;
  std::vector<std::size_t> dispatch_;
};

Prm parse_prm(std::string_view text);
std::string write_prm(const Prm& p);

/// Samples one transition. Throws std::logic_error on a terminal state.
std::pair<Prm::State, double> prm_step(const Prm& p, Prm::State u, LabelMask label,
                                       std::mt19937_64& rng);
std::pair<Prm::State, double> prm_step(const Prm& p, Prm::State u, const Label& label,
                                       std::mt19937_64& rng);

Prm negate(const Prm& p);

struct ValueTable {
  std::vector<double> values;
  double gamma = 0.9;
  double tolerance = 1e-12;
  std::size_t iterations = 0;

  double operator[](std::size_t u) const { return values[u]; }
};

constexpr double kValueTolerance = 1e-12;
constexpr double kTerminalTolerance = 1e-8;

/// Synchronous value iteration of v(u) = max_l sum tau (sigma + gamma v).
ValueTable value_iteration(const Prm& p, double gamma, double tol = kValueTolerance);

/// Expected one-step value of taking `label` in u under values v.
double label_value(const Prm& p, Prm::State u, LabelMask label, const ValueTable& v);

/// m = -1 - max|r| - max_u v*(u), with v* computed at gamma.
double minimal_reward(const Prm& p, double gamma);

/// Product of a PRM (possibly itself a product) with a causal DFA.
struct ProductPrm {
  Prm prm;
  /// product state -> (inner machine state, dfa state)
  std::vector<std::pair<std::size_t, std::size_t>> provenance;
  /// product state -> state of the original, unproducted PRM
  std::vector<std::size_t> base_state;
  /// product states whose DFA component (at any level) is a rejecting sink
  std::vector<bool> sink_component;
  double minimal_reward = 0;
};

/// Pair (u, q) gets id u * |Q| + q. Transitions whose DFA successor is a
/// rejecting sink output m; terminals are the pairs with a terminal PRM part.
ProductPrm compute_product(const Prm& p, const CausalDfa& d, double m);
/// Chained product: multiplies an existing product by one more DFA.
ProductPrm compute_product(const ProductPrm& inner, const CausalDfa& d, double m);

struct CausalPrm {
  ProductPrm product;  // B: B1 with the augmented terminal set
  ValueTable v1, v2;   // values of B1 and B2 before augmentation
  std::vector<std::size_t> added_terminals;
};

/// Products of A and of negate(A) with each DFA in turn, then every state
/// with |v1| and |v2| below `tol` becomes terminal.
CausalPrm build_causal_prm(const Prm& p, const std::vector<CausalDfa>& dfas, double gamma,
                           double tol = kTerminalTolerance);
CausalPrm build_causal_prm(const Prm& p, const CausalDfa& d, double gamma,
                           double tol = kTerminalTolerance);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

} // namespace cprm
