#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cprm/harness.hpp"

namespace cprm::testing {

inline fs::path data_path(const std::string& case_name, const std::string& file) {
  return fs::path(CPRM_DATA_DIR) / case_name / file;
}

inline Gridworld load_case_map(const std::string& c) { return load_map(read_file(data_path(c, "map.txt"))); }
inline Prm load_case_prm(const std::string& c) { return parse_prm(read_file(data_path(c, "prm.txt"))); }
inline TlCd load_case_tlcd(const std::string& c, const std::string& file = "tlcd.txt") {
  return parse_tlcd(read_file(data_path(c, file)));
}

inline const std::vector<std::string>& case_names() {
  static const std::vector<std::string> names{"coffee_soda", "two_doors", "four_doors", "office"};
  return names;
}

/// Calls fn on every word over `labels` letters of length exactly n.
inline void for_each_word(std::size_t labels, std::size_t n,
                          const std::function<void(const std::vector<LabelMask>&)>& fn) {
  std::vector<LabelMask> w(n, 0);
  while (true) {
    fn(w);
    std::size_t i = 0;
    while (i < n && ++w[i] == labels)
      w[i++] = 0;
    if (i == n)
      return;
  }
}

inline std::vector<Label> labels_of(const Alphabet& ap, const std::vector<LabelMask>& w) {
  std::vector<Label> out;
  out.reserve(w.size());
  for (auto m : w)
    out.push_back(ap.label_of(m));
  return out;
}

/// Hand-drawn soda machine: u0 -s-> u1, u1 -f-> u2, u1 -o-> u3, u2 and u3 loop on
/// everything. Overlapping guards are resolved the way the obligation reads:
/// the label carrying s is also judged by u1's edges, and f beats o.
inline CausalDfa drawn_dfa_soda() {
  const Alphabet ap({"s", "o", "f"});
  return CausalDfa::from_function(ap, 4, 0, {true, true, true, false},
                                  [](std::size_t q, const Label& l) -> std::size_t {
                                    const bool s = l.count("s"), o = l.count("o"), f = l.count("f");
                                    switch (q) {
                                    case 0:
                                      if (!s)
                                        return 0;
                                      [[fallthrough]];
                                    case 1: return f ? 2 : o ? 3 : 1;
                                    default: return q;
                                    }
                                  });
}

/// Hand-drawn flower pot machine: t0 -f-> t1, t1 -o-> t2, t2 loops; f and o together
/// go straight to t2.
inline CausalDfa drawn_dfa_pot() {
  const Alphabet ap({"s", "o", "f"});
  return CausalDfa::from_function(ap, 3, 0, {true, true, false},
                                  [](std::size_t q, const Label& l) -> std::size_t {
                                    const bool o = l.count("o"), f = l.count("f");
                                    switch (q) {
                                    case 0: return f ? (o ? 2 : 1) : 0;
                                    case 1: return o ? 2 : 1;
                                    default: return 2;
                                    }
                                  });
}

} // namespace cprm::testing
