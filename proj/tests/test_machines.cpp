#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "support.hpp"

using namespace cprm;
using namespace cprm::testing;

namespace {

Prm::State state_named(const Prm& p, const std::string& name) {
  for (Prm::State u = 0; u < p.num_states(); ++u)
    if (p.name(u) == name)
      return u;
  FAIL("no state " << name);
  return 0;
}

Prm zero_machine() {
  return parse_prm("ap: a\nstates: u v\ninitial: u\nterminals: v\n"
                   "u \"a\" v 1 0\nu \"!a\" u 1 0\n");
}

// Value of the stationary label policy `choice` (one group per state).
std::vector<double> policy_value(const Prm& p, const std::vector<std::size_t>& choice, double gamma) {
  std::vector<double> v(p.num_states(), 0.0);
  for (int it = 0; it < 3000; ++it) {
    std::vector<double> next(p.num_states(), 0.0);
    for (Prm::State u = 0; u < p.num_states(); ++u) {
      if (p.is_terminal(u))
        continue;
      for (const auto& o : p.groups(u)[choice[u]].outcomes)
        next[u] += o.prob * (o.reward + gamma * v[o.to]);
    }
    v = next;
  }
  return v;
}

// Pointwise minimum over all stationary deterministic label policies.
std::vector<double> brute_force_min(const Prm& p, double gamma) {
  std::vector<std::size_t> choice(p.num_states(), 0);
  std::vector<double> best(p.num_states(), INFINITY);
  while (true) {
    const auto v = policy_value(p, choice, gamma);
    for (std::size_t u = 0; u < v.size(); ++u)
      best[u] = std::min(best[u], v[u]);
    std::size_t u = 0;
    for (; u < p.num_states(); ++u) {
      if (p.is_terminal(u))
        continue;
      if (++choice[u] < p.groups(u).size())
        break;
      choice[u] = 0;
    }
    if (u == p.num_states())
      return best;
  }
}

Prm random_prm(std::mt19937_64& rng, std::size_t n) {
  const Alphabet ap({"x", "y"});
  std::string text = "ap: x y\nstates:";
  for (std::size_t u = 0; u < n; ++u)
    text += " u" + std::to_string(u);
  text += "\ninitial: u0\nterminals: u" + std::to_string(n - 1) + "\n";
  const char* guards[] = {"x", "!x & y", "!x & !y"};
  std::uniform_real_distribution<double> reward(-2, 2);
  for (std::size_t u = 0; u + 1 < n; ++u)
    for (const char* g : guards) {
      const auto a = rng() % n, b = rng() % n;
      const double r1 = std::round(reward(rng) * 4) / 4, r2 = std::round(reward(rng) * 4) / 4;
      text += "u" + std::to_string(u) + " \"" + g + "\" u" + std::to_string(a) + " 0.25 " +
              format_double(r1) + "\n";
      text += "u" + std::to_string(u) + " \"" + g + "\" u" + std::to_string(b) + " 0.75 " +
              format_double(r2) + "\n";
    }
  return parse_prm(text);
}

} // namespace

TEST_CASE("coffee-soda machine values and minimal reward") {
  const Prm a = load_case_prm("coffee_soda");
  const auto v = value_iteration(a, 0.9);
  CHECK(v[state_named(a, "q4")] == 0.0);
  CHECK(v[state_named(a, "q1")] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(v[state_named(a, "q3")] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(v[state_named(a, "q2")] == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(v[state_named(a, "q0")] == doctest::Approx(0.9).epsilon(1e-10));
  // Taking c first is worth 0.9 * 0.9 + 0.1 * 0.9 * 0.1.
  CHECK(label_value(a, 0, a.alphabet().mask_of({"c"}), v) == doctest::Approx(0.819));
  CHECK(minimal_reward(a, 0.9) == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(a.rewards() == std::vector<double>{0, 0.1, 1});
}

TEST_CASE("degenerate machines") {
  const Prm z = zero_machine();
  const auto v = value_iteration(z, 0.9);
  CHECK(v[0] == 0.0);
  CHECK(minimal_reward(z, 0.9) == -1.0);
  CHECK(write_prm(negate(z)) == write_prm(z));
  CHECK_THROWS(value_iteration(z, 1.0));
  CHECK_THROWS(value_iteration(z, 0.0));
}

TEST_CASE("two-doors minimal reward from its values") {
  const Prm a = load_case_prm("two_doors");
  const auto v = value_iteration(a, 0.9);
  double vmax = 0, rmax = 0;
  for (auto x : v.values)
    vmax = std::max(vmax, x);
  for (auto r : a.rewards())
    rmax = std::max(rmax, std::abs(r));
  CHECK(minimal_reward(a, 0.9) == doctest::Approx(-1 - rmax - vmax));
  CHECK(minimal_reward(a, 0.9) < -2.0);
}

TEST_CASE("sampling transitions") {
  const Prm a = load_case_prm("coffee_soda");
  const auto& ap = a.alphabet();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i)
    CHECK(prm_step(a, 0, Label{"s"}, rng) == std::pair<Prm::State, double>{state_named(a, "q3"), 0.0});

  std::map<Prm::State, int> hits;
  for (int i = 0; i < 20000; ++i)
    ++hits[prm_step(a, 0, ap.mask_of({"c"}), rng).first];
  CHECK(hits.size() == 2);
  CHECK(hits[state_named(a, "q1")] / 20000.0 == doctest::Approx(0.9).epsilon(0.02));

  // {c,s}, {}, {o,c} runs q0 -> q3 -> q3 -> q4 with total reward 1.
  Prm::State u = a.initial();
  double total = 0;
  std::vector<std::string> visited{a.name(u)};
  for (const Label& l : std::vector<Label>{{"c", "s"}, {}, {"o", "c"}}) {
    const auto [next, r] = prm_step(a, u, l, rng);
    u = next;
    total += r;
    visited.push_back(a.name(u));
  }
  CHECK(visited == std::vector<std::string>{"q0", "q3", "q3", "q4"});
  CHECK(total == 1.0);
  CHECK_THROWS_AS(prm_step(a, u, Label{}, rng), std::logic_error);
}

TEST_CASE("negation") {
  const Prm a = load_case_prm("coffee_soda");
  const Prm n = negate(a);
  CHECK(write_prm(negate(n)) == write_prm(a));
  const auto& out = n.outcomes(state_named(n, "q1"), n.alphabet().mask_of({"o"}));
  REQUIRE(out.size() == 1);
  CHECK(out[0].reward == -1.0);
}

TEST_CASE("negated machine values are the reward-minimizing values") {
  std::vector<Prm> machines{load_case_prm("coffee_soda"), load_case_prm("two_doors")};
  std::mt19937_64 rng(8);
  for (int i = 0; i < 6; ++i)
    machines.push_back(random_prm(rng, 3 + i % 3));
  for (const auto& p : machines) {
    const auto worst = brute_force_min(p, 0.9);
    const auto neg = value_iteration(negate(p), 0.9);
    for (std::size_t u = 0; u < p.num_states(); ++u)
      CHECK(-neg[u] == doctest::Approx(worst[u]).epsilon(1e-9));
  }
}

TEST_CASE("PRM file validation") {
  const std::string head = "ap: a\nstates: u v\ninitial: u\nterminals: v\n";
  CHECK_NOTHROW(parse_prm(head + "u \"a\" v 1 0\nu \"!a\" u 1 0\n"));
  // Missing label !a.
  CHECK_THROWS_AS(parse_prm(head + "u \"a\" v 1 0\n"), PrmError);
  // Overlapping guards.
  CHECK_THROWS_AS(parse_prm(head + "u \"a\" v 1 0\nu \"true\" u 1 0\n"), PrmError);
  // Mass 0.9.
  CHECK_THROWS_AS(parse_prm(head + "u \"a\" v 0.9 0\nu \"!a\" u 1 0\n"), PrmError);
  // Terminal with an outgoing edge.
  CHECK_THROWS_AS(parse_prm(head + "u \"true\" v 1 0\nv \"true\" v 1 0\n"), PrmError);
  // Temporal guard, unknown state, undeclared proposition, bad number.
  CHECK_THROWS_AS(parse_prm(head + "u \"X a\" v 1 0\nu \"!X a\" u 1 0\n"), PrmError);
  CHECK_THROWS_AS(parse_prm(head + "u \"true\" w 1 0\n"), PrmError);
  CHECK_THROWS_AS(parse_prm(head + "u \"b\" v 1 0\nu \"!b\" u 1 0\n"), PrmError);
  CHECK_THROWS_AS(parse_prm(head + "u \"true\" v one 0\n"), PrmError);
  CHECK_THROWS_AS(parse_prm("states: u\ninitial: u\n"), PrmError);
}

TEST_CASE("PRM text round trip") {
  for (const auto& c : case_names()) {
    const Prm a = load_case_prm(c);
    const Prm b = parse_prm(write_prm(a));
    CHECK(write_prm(b) == write_prm(a));
    CHECK(b.num_states() == a.num_states());
  }
}

TEST_CASE("product structure") {
  for (const auto& c : case_names()) {
    const Prm a = load_case_prm(c);
    const auto d = compile_tlcd(load_case_tlcd(c));
    const double m = minimal_reward(a, 0.9);
    const auto b = compute_product(a, d, m);
    const Prm& p = b.prm;
    REQUIRE(p.num_states() == a.num_states() * d.num_states());
    CHECK(p.initial() == a.initial() * d.num_states() + d.initial());
    CHECK(b.minimal_reward == m);

    const Alphabet& ap = p.alphabet();
    for (Prm::State s = 0; s < p.num_states(); ++s) {
      const auto [u, q] = b.provenance[s];
      CHECK(s == u * d.num_states() + q);
      CHECK(b.base_state[s] == u);
      CHECK(b.sink_component[s] == d.is_rejecting_sink(q));
      CHECK(p.is_terminal(s) == a.is_terminal(u));
      if (p.is_terminal(s))
        continue;
      const Projection to_a(ap, a.alphabet()), to_d(ap, d.alphabet());
      for (LabelMask l = 0; l < ap.label_count(); ++l) {
        const auto& mine = p.outcomes(s, l);
        const auto& theirs = a.outcomes(u, to_a(l));
        const auto q2 = d.next(q, to_d(l));
        double mass = 0;
        REQUIRE(mine.size() == theirs.size());
        for (std::size_t i = 0; i < mine.size(); ++i) {
          mass += mine[i].prob;
          CHECK(b.provenance[mine[i].to] == std::pair<std::size_t, std::size_t>{theirs[i].to, q2});
          CHECK(mine[i].prob == theirs[i].prob);
          CHECK(mine[i].reward == (d.is_rejecting_sink(q2) ? m : theirs[i].reward));
        }
        CHECK(mass == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("product rewards follow the machine while the DFA avoids its sink") {
  const Prm a = load_case_prm("coffee_soda");
  const auto d = compile_tlcd(load_case_tlcd("coffee_soda"));
  const auto b = compute_product(a, d, minimal_reward(a, 0.9));
  const Alphabet& ap = b.prm.alphabet();
  const Projection to_a(ap, a.alphabet());
  std::mt19937_64 rng(12);
  int compared = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::mt19937_64 r1(trial), r2(trial);
    Prm::State x = b.prm.initial(), u = a.initial();
    std::size_t q = d.initial();
    for (int t = 0; t < 12 && !a.is_terminal(u); ++t) {
      const auto l = static_cast<LabelMask>(rng() % ap.label_count());
      q = d.next(q, Projection(ap, d.alphabet())(l));
      const auto [x2, rb] = prm_step(b.prm, x, l, r1);
      const auto [u2, ra] = prm_step(a, u, to_a(l), r2);
      CHECK(b.base_state[x2] == u2);
      CHECK(b.provenance[x2].second == q);
      if (!d.is_rejecting_sink(q)) {
        CHECK(rb == ra);
        ++compared;
      } else {
        CHECK(rb == b.minimal_reward);
      }
      x = x2;
      u = u2;
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("coffee-soda product fragment") {
  const Prm a = load_case_prm("coffee_soda");
  const auto cp = build_causal_prm(a, compile_tlcd(load_case_tlcd("coffee_soda")), 0.9);
  const Prm& b = cp.product.prm;
  const Alphabet& ap = b.alphabet();
  const auto x0 = b.initial();
  CHECK(b.name(x0) == "(q0,0)");

  // x0 -s-> x1 with reward 0, where x1 waits for f or forbids o.
  const auto& s_out = b.outcomes(x0, ap.mask_of({"s"}));
  REQUIRE(s_out.size() == 1);
  const auto x1 = s_out[0].to;
  CHECK(b.name(x1) == "(q3,1)");
  CHECK(s_out[0].reward == 0.0);

  // In B1 (before augmentation) o leads into the sink with reward m and f
  // keeps the robot in the no-office class with reward 0.
  const auto b1 = compute_product(a, compile_tlcd(load_case_tlcd("coffee_soda")), -3.0);
  const auto& o_out = b1.prm.outcomes(x1, ap.mask_of({"o"}));
  REQUIRE(o_out.size() == 1);
  CHECK(b1.sink_component[o_out[0].to]);
  CHECK(o_out[0].reward == -3.0);
  const auto& f_out = b1.prm.outcomes(x1, ap.mask_of({"f"}));
  REQUIRE(f_out.size() == 1);
  CHECK(f_out[0].to == x1);
  CHECK(f_out[0].reward == 0.0);

  CHECK(b.is_terminal(x1));
  CHECK(cp.v1[x1] == 0.0);
  CHECK(cp.v2[x1] == 0.0);
}

TEST_CASE("terminal augmentation follows the zero gate exactly") {
  for (const auto& c : case_names()) {
    const Prm a = load_case_prm(c);
    const auto d = compile_tlcd(load_case_tlcd(c));
    const auto cp = build_causal_prm(a, d, 0.9);
    const double m = minimal_reward(a, 0.9);
    const auto b1 = compute_product(a, d, m);
    const auto b2 = compute_product(negate(a), d, m);
    const auto v1 = value_iteration(b1.prm, 0.9), v2 = value_iteration(b2.prm, 0.9);
    std::vector<std::size_t> expected;
    for (Prm::State s = 0; s < b1.prm.num_states(); ++s) {
      CHECK(v1[s] == cp.v1[s]);
      CHECK(v2[s] == cp.v2[s]);
      const bool gate = std::max(std::abs(v1[s]), std::abs(v2[s])) < kTerminalTolerance;
      CHECK(cp.product.prm.is_terminal(s) == (b1.prm.is_terminal(s) || gate));
      if (gate && !b1.prm.is_terminal(s))
        expected.push_back(s);
    }
    CHECK(cp.added_terminals == expected);
  }
}

TEST_CASE("a state that can still earn reward stays live") {
  const Prm a = load_case_prm("coffee_soda");
  const auto cp = build_causal_prm(a, compile_tlcd(load_case_tlcd("coffee_soda")), 0.9);
  const auto& b = cp.product.prm;
  const auto q1 = state_named(b, "(q1,0)");
  CHECK_FALSE(b.is_terminal(q1));
  CHECK(cp.v1[q1] == doctest::Approx(1.0));
}

TEST_CASE("trivial TL-CD keeps the machine") {
  const Prm a = load_case_prm("coffee_soda");
  const auto cp = build_causal_prm(a, std::vector<CausalDfa>{}, 0.9);
  CHECK(cp.product.prm.num_states() == a.num_states());
  const auto va = value_iteration(a, 0.9), vn = value_iteration(negate(a), 0.9);
  for (Prm::State u = 0; u < a.num_states(); ++u) {
    const bool zero = std::abs(va[u]) < kTerminalTolerance && std::abs(vn[u]) < kTerminalTolerance;
    CHECK(cp.product.prm.is_terminal(u) == (a.is_terminal(u) || zero));
  }
}

TEST_CASE("sink values") {
  // Every step in the sink pays m until the machine terminates, so sink
  // values lie in [m/(1-g), m] and reach m/(1-g) when no terminal is ahead.
  for (const auto& c : case_names()) {
    const Prm a = load_case_prm(c);
    const auto d = compile_tlcd(load_case_tlcd(c));
    const double m = minimal_reward(a, 0.9);
    const auto b1 = compute_product(a, d, m);
    const auto v1 = value_iteration(b1.prm, 0.9);
    for (Prm::State s = 0; s < b1.prm.num_states(); ++s) {
      if (!b1.sink_component[s] || b1.prm.is_terminal(s))
        continue;
      CHECK(v1[s] <= m + 1e-9);
      CHECK(v1[s] >= m / 0.1 - 1e-9);
    }
  }
  const Prm never = parse_prm("ap: a\nstates: u\ninitial: u\nterminals:\nu \"true\" u 1 1\n");
  const CausalDfa dead(Alphabet({"a"}), 0, {1, 1, 1, 1}, {true, false});
  const auto bn = compute_product(never, dead, -3.0);
  const auto vn = value_iteration(bn.prm, 0.9);
  CHECK(vn[1] == doctest::Approx(-30.0).epsilon(1e-9));
}

TEST_CASE("optimal labels avoid the sink whenever they can") {
  for (const auto& c : case_names()) {
    const Prm a = load_case_prm(c);
    const auto d = compile_tlcd(load_case_tlcd(c));
    const auto b1 = compute_product(a, d, minimal_reward(a, 0.9));
    const auto v = value_iteration(b1.prm, 0.9);
    const auto& p = b1.prm;
    for (Prm::State s = 0; s < p.num_states(); ++s) {
      if (p.is_terminal(s) || b1.sink_component[s])
        continue;
      auto avoids = [&](LabelMask l) {
        for (const auto& o : p.outcomes(s, l))
          if (b1.sink_component[o.to])
            return false;
        return true;
      };
      bool any_safe = false;
      double best = -INFINITY;
      for (LabelMask l = 0; l < p.alphabet().label_count(); ++l) {
        any_safe = any_safe || avoids(l);
        best = std::max(best, label_value(p, s, l, v));
      }
      if (!any_safe)
        continue;
      for (LabelMask l = 0; l < p.alphabet().label_count(); ++l)
        if (label_value(p, s, l, v) >= best - 1e-9)
          CHECK(avoids(l));
    }
  }
}

TEST_CASE("chained products multiply the state count") {
  const Prm a = load_case_prm("coffee_soda");
  const auto d = compile_tlcd(load_case_tlcd("coffee_soda"));
  const auto r = compile_tlcd(load_case_tlcd("coffee_soda", "tlcd_redundant.txt"));
  CHECK(r.rejecting_sinks().empty());
  const auto one = build_causal_prm(a, d, 0.9);
  const auto two = build_causal_prm(a, std::vector<CausalDfa>{d, r}, 0.9);
  CHECK(two.product.prm.num_states() == one.product.prm.num_states() * r.num_states());
  for (Prm::State s = 0; s < two.product.prm.num_states(); ++s) {
    const auto inner = two.product.provenance[s].first;
    CHECK(two.product.base_state[s] == one.product.base_state[inner]);
    CHECK(two.product.sink_component[s] == one.product.sink_component[inner]);
  }
}
