#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cprm {

/// A label is the set of propositions that hold in one step.
using Label = std::set<std::string>;

/// Bit-set encoding of a label relative to a fixed Alphabet.
using LabelMask = std::uint32_t;

class UndeclaredPropositionError : public std::runtime_error {
public:
  explicit UndeclaredPropositionError(const std::string& prop)
      : std::runtime_error("undeclared proposition '" + prop + "'"), prop_(prop) {}
  const std::string& proposition() const noexcept { return prop_; }

private:
  std::string prop_;
};

/// Ordered set of atomic propositions AP; labels range over 2^AP and are
/// materialized densely, so the size is capped.
class Alphabet {
public:
  static constexpr std::size_t kMaxPropositions = 12;

  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> props);

  std::size_t size() const noexcept { return props_.size(); }
  std::size_t label_count() const noexcept { return std::size_t{1} << props_.size(); }
  const std::vector<std::string>& propositions() const noexcept { return props_; }

  std::optional<std::size_t> index_of(const std::string& prop) const;
  bool contains(const std::string& prop) const { return index_of(prop).has_value(); }

  /// Throws UndeclaredPropositionError for props outside the alphabet.
  LabelMask mask_of(const Label& label) const;
  /// Drops props outside the alphabet.
  LabelMask project(const Label& label) const;
  Label label_of(LabelMask mask) const;

  /// "{c,s}" style rendering, "{}" for the empty label.
  std::string format(LabelMask mask) const;

  static Alphabet unite(const Alphabet& a, const Alphabet& b);

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

private:
  std::vector<std::string> props_;
};

/// Precomputed restriction of labels of one alphabet onto another.
class Projection {
public:
  Projection() = default;
  Projection(const Alphabet& from, const Alphabet& to);
  LabelMask operator()(LabelMask mask) const { return table_[mask]; }

private:
  std::vector<LabelMask> table_;
};

std::string format_label(const Label& label);

} // namespace cprm
