#include "cprm/alphabet.hpp"

#include <algorithm>

namespace cprm {

Alphabet::Alphabet(std::vector<std::string> props) : props_(std::move(props)) {
  std::sort(props_.begin(), props_.end());
  props_.erase(std::unique(props_.begin(), props_.end()), props_.end());
  if (props_.size() > kMaxPropositions)
    throw std::invalid_argument("alphabet has " + std::to_string(props_.size()) +
                                " propositions; at most " +
                                std::to_string(kMaxPropositions) + " supported");
}

std::optional<std::size_t> Alphabet::index_of(const std::string& prop) const {
  auto it = std::lower_bound(props_.begin(), props_.end(), prop);
  if (it == props_.end() || *it != prop)
    return std::nullopt;
  return static_cast<std::size_t>(it - props_.begin());
}

LabelMask Alphabet::mask_of(const Label& label) const {
  LabelMask mask = 0;
  for (const auto& p : label) {
    auto i = index_of(p);
    if (!i)
      throw UndeclaredPropositionError(p);
    mask |= LabelMask{1} << *i;
  }
  return mask;
}

LabelMask Alphabet::project(const Label& label) const {
  LabelMask mask = 0;
  for (const auto& p : label)
    if (auto i = index_of(p))
      mask |= LabelMask{1} << *i;
  return mask;
}

Label Alphabet::label_of(LabelMask mask) const {
  Label out;
  for (std::size_t i = 0; i < props_.size(); ++i)
    if (mask & (LabelMask{1} << i))
      out.insert(props_[i]);
  return out;
}

std::string Alphabet::format(LabelMask mask) const { return format_label(label_of(mask)); }

Alphabet Alphabet::unite(const Alphabet& a, const Alphabet& b) {
  std::vector<std::string> all = a.props_;
  all.insert(all.end(), b.props_.begin(), b.props_.end());
  return Alphabet(std::move(all));
}

Projection::Projection(const Alphabet& from, const Alphabet& to) {
  std::vector<int> target(from.size(), -1);
  for (std::size_t i = 0; i < from.size(); ++i)
    if (auto j = to.index_of(from.propositions()[i]))
      target[i] = static_cast<int>(*j);
  table_.resize(from.label_count());
  for (LabelMask m = 0; m < from.label_count(); ++m) {
    LabelMask out = 0;
    for (std::size_t i = 0; i < from.size(); ++i)
      if ((m & (LabelMask{1} << i)) && target[i] >= 0)
        out |= LabelMask{1} << target[i];
    table_[m] = out;
  }
}

std::string format_label(const Label& label) {
  std::string s = "{";
  bool first = true;
  for (const auto& p : label) {
    if (!first)
      s += ',';
    s += p;
    first = false;
  }
  return s + "}";
}

} // namespace cprm
