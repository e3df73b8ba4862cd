#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace cprm;
using namespace cprm::testing;

namespace {

const Alphabet kSoda({"s", "o", "f"});

Formula f(const std::string& text) { return parse_formula(text, kSoda); }

bool holds(const std::string& text, std::vector<Label> trace) { return evaluate(f(text), trace); }

Formula random_formula(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 11);
  static const char* props[] = {"s", "o", "f"};
  auto atom = [&] { return Formula::atom(props[rng() % 3]); };
  switch (pick(rng)) {
  case 0: return atom();
  case 1: return Formula::negation(atom());
  case 2: return rng() % 2 ? Formula::top() : Formula::bottom();
  case 3: return Formula::negation(random_formula(rng, depth - 1));
  case 4: return Formula::conjunction({random_formula(rng, depth - 1), random_formula(rng, depth - 1)});
  case 5: return Formula::disjunction({random_formula(rng, depth - 1), random_formula(rng, depth - 1)});
  case 6: return Formula::implication(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
  case 7: return Formula::next(random_formula(rng, depth - 1));
  case 8: return Formula::globally(random_formula(rng, depth - 1));
  case 9: return Formula::until(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
  case 10: return Formula::weak_until(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
  default: return Formula::weak_next(random_formula(rng, depth - 1));
  }
}

std::vector<Label> random_trace(std::mt19937_64& rng, std::size_t max_len) {
  std::vector<Label> t(rng() % (max_len + 1));
  for (auto& l : t)
    l = kSoda.label_of(static_cast<LabelMask>(rng() % kSoda.label_count()));
  return t;
}

} // namespace

TEST_CASE("parser builds the expected trees") {
  const auto g = f("G(s -> (!o W f))");
  REQUIRE(g.op() == Op::Globally);
  REQUIRE(g[0].op() == Op::Implies);
  CHECK(g[0][0] == Formula::atom("s"));
  CHECK(g[0][1] == Formula::weak_until(Formula::negation(Formula::atom("o")), Formula::atom("f")));

  CHECK(f("true") == Formula::top());
  CHECK(f("false") == Formula::bottom());

  const Alphabet doors({"a", "b", "c", "d"});
  const auto h = parse_formula("G(d -> G !(a | b | c))", doors);
  REQUIRE(h.op() == Op::Globally);
  REQUIRE(h[0].op() == Op::Implies);
  REQUIRE(h[0][1].op() == Op::Globally);
  REQUIRE(h[0][1][0].op() == Op::Not);
  CHECK(h[0][1][0][0].op() == Op::Or);
}

TEST_CASE("parser precedence and associativity") {
  CHECK(f("s | o & f") == f("s | (o & f)"));
  CHECK(f("s -> o -> f") == f("s -> (o -> f)"));
  CHECK(f("!s U o & f") == f("((!s) U o) & f"));
  CHECK(f("X G s") == f("X (G s)"));
  CHECK(f("s U o W f") == f("s U (o W f)"));
}

TEST_CASE("parser errors carry positions and atom names") {
  CHECK_THROWS_AS(f("G(s -> "), ParseError);
  CHECK_THROWS_AS(f("s &"), ParseError);
  CHECK_THROWS_AS(f("(s"), ParseError);
  CHECK_THROWS_AS(f("s o"), ParseError);
  try {
    f("s & coffee");
    FAIL("expected an unknown atom");
  } catch (const UnknownAtomError& e) {
    CHECK(e.atom() == "coffee");
    CHECK(e.position() == 4);
  }
}

TEST_CASE("printing and re-parsing is the identity") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto g = random_formula(rng, 4);
    CHECK(parse_formula(g.to_string()) == g);
  }
}

TEST_CASE("TL-CD to formula") {
  const auto cd = parse_tlcd("ap: s o f\ns ~> !o W f\nf ~> G !o\n");
  CHECK(tlcd_to_formula(cd) == Formula::conjunction({f("G(s -> (!o W f))"), f("G(f -> G !o)")}));
  CHECK(tlcd_to_formula(parse_tlcd("ap: s o f\n# nothing\n")) == Formula::top());
  const auto doors = parse_tlcd("ap: a b\na ~> G !b\n");
  CHECK(tlcd_to_formula(doors) == parse_formula("G(a -> G !b)", doors.ap));
  CHECK_THROWS(parse_tlcd("ap: a\na ~> G !b\n"));
  CHECK_THROWS(parse_tlcd("a ~> b\n"));
}

TEST_CASE("finite-trace semantics examples") {
  CHECK(holds("G(s -> (!o W f))", {{"s"}}));
  CHECK_FALSE(holds("G(s -> (!o W f))", {{"s"}, {"o"}}));
  CHECK(holds("G(s -> (!o W f))", {}));
  CHECK(holds("G(s -> (!o W f))", {{"s"}, {"f"}, {"o"}}));
  CHECK_FALSE(holds("s U o", {{"s"}, {"s"}}));
  CHECK(holds("s U o", {{"s"}, {"o"}}));
  // X reads the suffix, which may be empty; literals of either sign fail there.
  CHECK_FALSE(holds("X s", {{"s"}}));
  CHECK_FALSE(holds("!X s", {{"s"}}));
  CHECK(holds("X true", {{"s"}}));
  CHECK_FALSE(holds("s | !s", {}));
  CHECK(holds("s | !s", {{"o"}}));
}

TEST_CASE("empty trace conventions") {
  CHECK(empty_accepts(to_nnf(f("G s"))));
  CHECK(empty_accepts(to_nnf(f("s W o"))));
  CHECK(empty_accepts(to_nnf(f("true"))));
  CHECK_FALSE(empty_accepts(to_nnf(f("s"))));
  CHECK_FALSE(empty_accepts(to_nnf(f("!s"))));
  CHECK_FALSE(empty_accepts(to_nnf(f("X s"))));
  CHECK_FALSE(empty_accepts(to_nnf(f("s U o"))));
  CHECK(empty_accepts(to_nnf(f("(!o W f) & G(s -> (!o W f))"))));

  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto g = random_formula(rng, 4);
    CHECK(empty_accepts(to_nnf(g)) == evaluate(g, {}));
  }
}

TEST_CASE("progression examples") {
  const auto g = to_nnf(f("G(s -> (!o W f))"));
  CHECK(progress(g, Label{"s"}) == simplify(Formula::conjunction({to_nnf(f("!o W f")), g})));
  CHECK(progress(f("s"), Label{"s"}) == Formula::top());
  CHECK(progress(f("s"), Label{}) == Formula::bottom());
  CHECK(progress(to_nnf(f("X (s & o)")), Label{"f"}) == to_nnf(f("o & s")));
  CHECK(progress(to_nnf(f("X (s & !s)")), Label{}) == Formula::bottom());
}

TEST_CASE("progression is sound on random inputs") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto g = to_nnf(random_formula(rng, 4));
    const auto l = kSoda.label_of(static_cast<LabelMask>(rng() % 8));
    const auto rest = random_trace(rng, 5);
    std::vector<Label> whole{l};
    whole.insert(whole.end(), rest.begin(), rest.end());
    CHECK(evaluate(g, whole) == evaluate(progress(g, l), rest));
  }
}

TEST_CASE("negation normal form preserves semantics") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto g = random_formula(rng, 4);
    const auto n = to_nnf(g);
    const auto t = random_trace(rng, 6);
    CHECK(evaluate(g, t) == evaluate(n, t));
    CHECK(evaluate(g, t) == evaluate(simplify(n), t));
  }
}

TEST_CASE("compiled DFA sizes") {
  CHECK(compile_to_dfa(Formula::top(), kSoda).num_states() == 1);
  CHECK(compile_to_dfa(Formula::top(), kSoda).accepting(0));

  // The flower pot obligation: start, after-f, sink.
  const auto pot = compile_to_dfa(f("G(f -> G !o)"), kSoda);
  CHECK(pot.num_states() == 3);
  CHECK(pot.rejecting_sinks().size() == 1);

  // The weak until obligation needs only start, pending and sink.
  const auto soda = compile_to_dfa(f("G(s -> (!o W f))"), kSoda);
  CHECK(soda.num_states() == 3);
  CHECK(soda.rejecting_sinks().size() == 1);

  const auto office = compile_tlcd(load_case_tlcd("office"));
  CHECK(office.rejecting_sinks().size() == 1);
}

TEST_CASE("state explosion guard") {
  const Alphabet ap({"a"});
  const auto g = parse_formula("G(a -> X X X X X X X X a)", ap);
  CHECK_THROWS_AS(compile_to_dfa(g, ap, 8), StateExplosionError);
  CHECK_NOTHROW(compile_to_dfa(g, ap, 10'000));
}

TEST_CASE("compiled DFAs agree with the semantics on random formulas") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 150; ++i) {
    const auto g = random_formula(rng, 3);
    const auto d = compile_to_dfa(g, kSoda);
    for (std::size_t n = 0; n <= 4; ++n)
      for_each_word(kSoda.label_count(), n, [&](const std::vector<LabelMask>& w) {
        REQUIRE(d.accepts(w) == evaluate(g, labels_of(kSoda, w)));
      });
  }
}
