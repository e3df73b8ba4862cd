// cprm: compile TL-CDs, build causal reward machines, train and evaluate.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cprm/harness.hpp"

using namespace cprm;

namespace {

std::string word_text(const LabelWord& w) {
  std::string out;
  for (const auto& l : w)
    out += format_label(l);
  return out.empty() ? "(empty word)" : out;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty())
    std::cout << text;
  else
    write_file(out, text);
}

std::string as_comments(const std::string& text) {
  std::istringstream in(text);
  std::string out;
  for (std::string line; std::getline(in, line);)
    out += line.empty() ? "#\n" : "# " + line + "\n";
  return out;
}

char arrow(Action a) {
  switch (a) {
  case Action::North: return '^';
  case Action::South: return 'v';
  case Action::East: return '>';
  case Action::West: return '<';
  }
  return '?';
}

std::string policy_grid(const Task& t, const Policy& p, Prm::State u) {
  const auto& g = t.world();
  std::string out;
  for (int y = g.height(); y-- > 0;) {
    for (int x = 0; x < g.width(); ++x) {
      const auto c = g.cell(x, y);
      if (g.is_wall(c))
        out += '#';
      else if (g.is_sink(c))
        out += 'x';
      else
        out += arrow(p[t.pair(c, u)]);
    }
    out += '\n';
  }
  return out;
}

int run_compile(const std::string& path, std::size_t max_states, bool dot, const std::string& out) {
  const auto dfa = compile_tlcd(parse_tlcd(read_file(path)), max_states);
  emit(dot ? write_dfa_dot(dfa) : write_dfa_text(dfa), out);
  return 0;
}

int run_product(const std::string& prm_path, const std::vector<std::string>& tlcd_paths,
                double gamma, const std::string& map_path, std::size_t max_len,
                std::size_t max_states, const std::string& out) {
  const Prm a = parse_prm(read_file(prm_path));
  std::vector<CausalDfa> dfas;
  std::vector<TlCd> cds;
  for (const auto& p : tlcd_paths) {
    cds.push_back(parse_tlcd(read_file(p)));
    dfas.push_back(compile_tlcd(cds.back(), max_states));
  }
  if (!map_path.empty()) {
    const Gridworld g = load_map(read_file(map_path));
    for (std::size_t i = 0; i < cds.size(); ++i) {
      const auto check = tlcd_holds(g, cds[i], max_len);
      if (!check.holds)
        std::cerr << "warning: " << tlcd_paths[i] << " does not hold on " << map_path
                  << "; attainable word " << word_text(*check.counterexample)
                  << " enters a rejecting sink\n";
    }
  }
  const auto b = build_causal_prm(a, dfas, gamma);
  const auto& prod = b.product;

  std::ostringstream report;
  report << "gamma " << format_double(gamma) << "\n";
  report << "minimal reward m = " << format_double(prod.minimal_reward) << "\n";
  report << "states " << prod.prm.num_states() << " (original " << a.num_states() << ")\n";
  report << "state  base  dfa  sink  v1  v2  terminal\n";
  for (std::size_t s = 0; s < prod.prm.num_states(); ++s)
    report << prod.prm.name(s) << "  " << a.name(prod.base_state[s]) << "  "
           << prod.provenance[s].second << "  " << (prod.sink_component[s] ? "yes" : "no") << "  "
           << format_double(b.v1[s]) << "  " << format_double(b.v2[s]) << "  "
           << (prod.prm.is_terminal(s) ? "yes" : "no") << "\n";
  report << "added terminals:";
  for (auto s : b.added_terminals)
    report << ' ' << prod.prm.name(s);
  report << (b.added_terminals.empty() ? " none\n" : "\n");

  if (out.empty()) {
    std::cout << write_prm(prod.prm) << as_comments(report.str());
  } else {
    write_file(out, write_prm(prod.prm));
    std::cout << report.str();
  }
  return 0;
}

ExperimentConfig configured(const std::string& path, const std::string& seeds,
                            const std::string& out, double gamma, bool gamma_set) {
  auto c = load_config(path);
  if (!seeds.empty())
    c.seeds = parse_seed_list(seeds);
  if (!out.empty())
    c.output = out;
  if (gamma_set)
    c.learn.gamma = gamma;
  c.validate();
  return c;
}

int run_train(const ExperimentConfig& c, unsigned threads) {
  const auto r = run_training(c, threads);
  for (const auto& f : r.files)
    if (f.extension() == ".json" || f.stem() == "causal" || f.stem() == "no_causal")
      std::cout << "wrote " << f.string() << "\n";
  std::cout << r.files.size() << " files in " << c.output.string() << "\n";
  return 0;
}

int run_eval(const ExperimentConfig& c) {
  const CaseStudy cs = load_case(c);
  const double gamma = c.learn.gamma;
  const Task ta(cs.world, cs.prm);
  const auto sa = exact_solve(ta, gamma);
  std::cout << "map " << cs.world.width() << "x" << cs.world.height() << ", PRM "
            << cs.prm.num_states() << " states, gamma " << format_double(gamma) << "\n";
  std::cout << "optimal value (original PRM): " << format_double(sa.initial_value(ta)) << "\n";
  std::cout << "reward per step of the epsilon-greedy optimal policy: "
            << format_double(reward_per_step(ta, sa.policy, c.learn.epsilon,
                                             c.learn.max_episode_steps))
            << "\n";
  std::cout << "greedy policy in machine state " << cs.prm.name(cs.prm.initial()) << ":\n"
            << policy_grid(ta, sa.policy, cs.prm.initial());
  if (!cs.tlcd)
    return 0;
  const auto b = build_causal_prm(cs.prm, cs.dfas(c.max_dfa_states), gamma);
  const Task tb(cs.world, b.product.prm);
  const auto sb = exact_solve(tb, gamma);
  const auto projected = project_policy(tb, b.product, sb, ta);
  const auto pv = evaluate_policy(ta, projected, gamma);
  std::cout << "causal product: " << b.product.prm.num_states() << " states, "
            << b.added_terminals.size() << " added terminals\n";
  std::cout << "optimal value (causal product): " << format_double(sb.initial_value(tb)) << "\n";
  std::cout << "projected policy value on original PRM: "
            << format_double(pv[ta.pair(cs.world.start(), cs.prm.initial())]) << "\n";
  return 0;
}

int run_check(const std::string& map_path, const std::string& tlcd_path, std::size_t max_len,
              bool strict) {
  const Gridworld g = load_map(read_file(map_path));
  const TlCd cd = parse_tlcd(read_file(tlcd_path));
  const auto r = tlcd_holds(g, cd, max_len, strict ? TlcdCheckMode::Strict : TlcdCheckMode::Prefix);
  if (r.holds) {
    std::cout << "holds for all attainable words up to length " << max_len << "\n";
    return 0;
  }
  std::cout << "violated by attainable word " << word_text(*r.counterexample) << "\n";
  return 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal reward machines: TL-CD compilation, products and QRM experiments"};
  app.require_subcommand(1);

  double gamma = 0.9;
  std::size_t max_states = kDefaultMaxDfaStates;
  std::string out, seeds;

  auto* compile = app.add_subcommand("compile", "Compile a TL-CD to its minimal causal DFA");
  std::string tlcd_path;
  bool dot = false;
  compile->add_option("tlcd", tlcd_path, "TL-CD file")->required()->check(CLI::ExistingFile);
  compile->add_option("--max-states", max_states, "Abort progression beyond this many states");
  compile->add_flag("--dot", dot, "Emit Graphviz instead of the text format");
  compile->add_option("--out", out, "Output file (default stdout)");

  auto* product = app.add_subcommand("product", "Build the causal PRM B from a PRM and TL-CDs");
  std::string prm_path, map_path;
  std::vector<std::string> tlcd_paths;
  std::size_t max_len = 8;
  product->add_option("prm", prm_path, "PRM file")->required()->check(CLI::ExistingFile);
  product->add_option("tlcd", tlcd_paths, "TL-CD files, multiplied in order")
      ->required()
      ->check(CLI::ExistingFile);
  product->add_option("--gamma", gamma, "Discount factor")->check(CLI::Range(0.0, 1.0));
  product->add_option("--map", map_path, "Warn if a TL-CD fails on this map")
      ->check(CLI::ExistingFile);
  product->add_option("--max-len", max_len, "Word length bound for the map check");
  product->add_option("--max-states", max_states, "Abort progression beyond this many states");
  product->add_option("--out", out, "Write B here; the report goes to stdout");

  auto* train = app.add_subcommand("train", "Run QRM with and without the causal product");
  std::string config_path;
  unsigned threads = 0;
  train->add_option("config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  auto* train_gamma = train->add_option("--gamma", gamma, "Override the discount factor");
  train->add_option("--seed-list", seeds, "Override seeds, e.g. 0-19 or 1,5,9");
  train->add_option("--out", out, "Override the output directory");
  train->add_option("--threads", threads, "Worker threads (default: hardware)");

  auto* eval = app.add_subcommand("eval", "Exact solution and policy report for a case study");
  eval->add_option("config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  auto* eval_gamma = eval->add_option("--gamma", gamma, "Override the discount factor");

  auto* check = app.add_subcommand("check", "Bounded check that a TL-CD holds on a map");
  bool strict = false;
  check->add_option("map", map_path, "Map file")->required()->check(CLI::ExistingFile);
  check->add_option("tlcd", tlcd_path, "TL-CD file")->required()->check(CLI::ExistingFile);
  check->add_option("--max-len", max_len, "Word length bound")->check(CLI::Range(0, 12));
  check->add_flag("--strict", strict, "Require full satisfaction, not just sink avoidance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compile)
      return run_compile(tlcd_path, max_states, dot, out);
    if (*product)
      return run_product(prm_path, tlcd_paths, gamma, map_path, max_len, max_states, out);
    if (*train)
      return run_train(configured(config_path, seeds, out, gamma, train_gamma->count() > 0),
                       threads);
    if (*eval)
      return run_eval(configured(config_path, "", "", gamma, eval_gamma->count() > 0));
    if (*check)
      return run_check(map_path, tlcd_path, max_len, strict);
  } catch (const std::exception& e) {
    std::cerr << "cprm: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
