#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cprm/alphabet.hpp"
#include "cprm/ltlf.hpp"

namespace cprm {

enum class Action { North = 0, South = 1, East = 2, West = 3 };
constexpr std::size_t kNumActions = 4;
constexpr std::array<Action, kNumActions> kActions{Action::North, Action::South, Action::East,
                                                   Action::West};
const char* action_name(Action a);

class MapError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Move {
  std::size_t to;
  double prob;
};

/// Labeled gridworld. Cells are numbered y * width + x with y = 0 the bottom
/// row, so the last line of the map text is row 0.
class Gridworld {
public:
  using Cell = std::size_t;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t num_cells() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  Cell start() const noexcept { return start_; }
  Cell cell(int x, int y) const { return static_cast<Cell>(y) * width_ + x; }
  int x_of(Cell c) const { return static_cast<int>(c % width_); }
  int y_of(Cell c) const { return static_cast<int>(c / width_); }

  bool is_wall(Cell c) const { return kind_[c] == '#'; }
  bool is_sink(Cell c) const { return sink_[c]; }
  /// Propositions emitted when arriving at c.
  const Label& label(Cell c) const { return labels_[c]; }
  /// L(s, a, s'): labels fire on the destination.
  const Label& label(Cell, Action, Cell to) const { return labels_[to]; }
  /// All propositions used by the legend.
  std::vector<std::string> propositions() const;

  /// Outcome distribution of one action; masses sum to 1.
  const std::vector<Move>& transitions(Cell c, Action a) const {
    return moves_[c * kNumActions + static_cast<std::size_t>(a)];
  }
  Cell step(Cell c, Action a, std::mt19937_64& rng) const;

  /// Cells reachable from the start with positive probability.
  std::vector<bool> reachable() const;

  std::string render() const;

private:
  friend Gridworld load_map(std::string_view text);

  int width_ = 0, height_ = 0;
  Cell start_ = 0;
  std::vector<char> kind_;
  std::vector<bool> sink_;
  std::vector<Label> labels_;
  std::vector<std::vector<Move>> moves_;
};

/// Map text: header lines (`legend:`, `start:`, `sink:`, `oneway:`,
/// `conveyor:`, `stochastic:`) followed by the character grid.
Gridworld load_map(std::string_view text);

using LabelWord = std::vector<Label>;

/// Every label word of length <= max_len some positive-probability run from
/// the start produces. max_len is capped at 12.
std::set<LabelWord> attainable_words(const Gridworld& g, std::size_t max_len);

/// Strict: every attainable word of length <= max_len satisfies the TL-CD
/// formula. Prefix: every such word can still be extended to a satisfying
/// one, i.e. the causal DFA never enters a rejecting sink. Only the prefix
/// reading matters for the product construction.
enum class TlcdCheckMode { Strict, Prefix };

struct TlcdCheck {
  bool holds = true;
  std::optional<LabelWord> counterexample;
};

TlcdCheck tlcd_holds(const Gridworld& g, const TlCd& cd, std::size_t max_len,
                     TlcdCheckMode mode = TlcdCheckMode::Prefix);

} // namespace cprm
