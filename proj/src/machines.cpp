#include "cprm/machines.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

namespace cprm {

namespace {

constexpr std::size_t kNoGroup = static_cast<std::size_t>(-1);

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Whitespace split that keeps "quoted strings" as one token (quotes removed).
std::vector<std::string> tokenize(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '"') {
      const auto close = line.find('"', i + 1);
      if (close == std::string_view::npos)
        throw PrmError("line " + std::to_string(line_no) + ": unterminated guard string");
      out.emplace_back(line.substr(i + 1, close - i - 1));
      i = close + 1;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  double x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x))
    throw PrmError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return x;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;)
    out.push_back(w);
  return out;
}

} // namespace

Prm::Prm(Alphabet ap, std::vector<std::string> names, State initial, std::vector<bool> terminal,
         std::vector<std::vector<GuardGroup>> groups)
    : ap_(std::move(ap)), names_(std::move(names)), initial_(initial),
      terminal_(std::move(terminal)), groups_(std::move(groups)) {
  const std::size_t n = names_.size();
  if (n == 0)
    throw PrmError("a PRM needs at least one state");
  if (terminal_.size() != n || groups_.size() != n)
    throw PrmError("state tables have inconsistent sizes");
  if (initial_ >= n)
    throw PrmError("initial state out of range");

  const std::size_t labels = ap_.label_count();
  dispatch_.assign(n * labels, kNoGroup);
  for (State u = 0; u < n; ++u) {
    if (terminal_[u]) {
      if (!groups_[u].empty())
        throw PrmError("terminal state '" + names_[u] + "' has outgoing transitions");
      continue;
    }
    for (std::size_t g = 0; g < groups_[u].size(); ++g) {
      const auto& group = groups_[u][g];
      if (group.outcomes.empty())
        throw PrmError("state '" + names_[u] + "': guard '" + group.guard.to_string() +
                       "' has no outcomes");
      double mass = 0;
      for (const auto& o : group.outcomes) {
        if (o.to >= n)
          throw PrmError("state '" + names_[u] + "': target out of range");
        if (!(o.prob >= 0 && o.prob <= 1))
          throw PrmError("state '" + names_[u] + "': probability outside [0,1]");
        mass += o.prob;
      }
      if (std::abs(mass - 1) > kProbabilityTolerance)
        throw PrmError("state '" + names_[u] + "': probabilities under guard '" +
                       group.guard.to_string() + "' sum to " + format_double(mass));
      for (LabelMask l = 0; l < labels; ++l) {
        if (!satisfies(group.guard, l, ap_))
          continue;
        auto& slot = dispatch_[u * labels + l];
        if (slot != kNoGroup)
          throw PrmError("state '" + names_[u] + "': guards '" +
                         groups_[u][slot].guard.to_string() + "' and '" +
                         group.guard.to_string() + "' overlap on " + ap_.format(l));
        slot = g;
      }
    }
    for (LabelMask l = 0; l < labels; ++l)
      if (dispatch_[u * labels + l] == kNoGroup)
        throw PrmError("state '" + names_[u] + "': no guard matches " + ap_.format(l));
  }
}

std::size_t Prm::group_of(State u, LabelMask label) const {
  const std::size_t g = dispatch_[u * ap_.label_count() + label];
  if (g == kNoGroup)
    throw std::logic_error("state '" + names_[u] + "' is terminal");
  return g;
}

std::vector<double> Prm::rewards() const {
  std::vector<double> out;
  for (const auto& gs : groups_)
    for (const auto& g : gs)
      for (const auto& o : g.outcomes)
        out.push_back(o.reward);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Prm Prm::with_terminals(std::vector<bool> terminal) const {
  auto groups = groups_;
  for (State u = 0; u < groups.size(); ++u)
    if (terminal[u])
      groups[u].clear();
  return Prm(ap_, names_, initial_, std::move(terminal), std::move(groups));
}

Prm parse_prm(std::string_view text) {
  std::optional<Alphabet> ap;
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> index;
  std::optional<std::string> initial;
  std::vector<std::string> terminal_names;
  bool declared_states = false;

  struct Record {
    std::size_t from, to;
    Formula guard;
    double prob, reward;
  };
  std::vector<Record> records;

  auto state_id = [&](const std::string& name, std::size_t line_no) {
    auto it = index.find(name);
    if (it != index.end())
      return it->second;
    if (declared_states)
      throw PrmError("line " + std::to_string(line_no) + ": undeclared state '" + name + "'");
    index.emplace(name, names.size());
    names.push_back(name);
    return names.size() - 1;
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    ++line_no;
    std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    if (auto hash = raw.find('#'); hash != std::string_view::npos)
      raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty())
      continue;

    const auto colon = line.find(':');
    const auto quote = line.find('"');
    if (colon != std::string::npos && (quote == std::string::npos || colon < quote)) {
      const std::string key = trim(std::string_view(line).substr(0, colon));
      const auto values = split_words(std::string_view(line).substr(colon + 1));
      if (key == "ap") {
        ap = Alphabet(values);
      } else if (key == "states") {
        for (const auto& v : values)
          state_id(v, line_no);
        declared_states = true;
      } else if (key == "initial") {
        if (values.size() != 1)
          throw PrmError("line " + std::to_string(line_no) + ": expected one initial state");
        initial = values[0];
      } else if (key == "terminals") {
        terminal_names.insert(terminal_names.end(), values.begin(), values.end());
      } else {
        throw PrmError("line " + std::to_string(line_no) + ": unknown field '" + key + "'");
      }
      continue;
    }

    if (!ap)
      throw PrmError("line " + std::to_string(line_no) + ": 'ap:' must precede transitions");
    const auto tok = tokenize(line, line_no);
    if (tok.size() != 5)
      throw PrmError("line " + std::to_string(line_no) +
                     ": expected <from> \"<guard>\" <to> <prob> <reward>");
    Formula guard;
    try {
      guard = parse_formula(tok[1], *ap);
    } catch (const std::exception& e) {
      throw PrmError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!guard.is_propositional())
      throw PrmError("line " + std::to_string(line_no) + ": guard must be propositional");
    const std::size_t from = state_id(tok[0], line_no);
    const std::size_t to = state_id(tok[2], line_no);
    records.push_back({from, to, guard, parse_number(tok[3], line_no),
                       parse_number(tok[4], line_no)});
  }

  if (!ap)
    throw PrmError("missing 'ap:' field");
  if (!initial)
    throw PrmError("missing 'initial:' field");
  const std::size_t init = state_id(*initial, line_no);
  std::vector<bool> terminal(names.size(), false);
  for (const auto& t : terminal_names) {
    const auto id = state_id(t, line_no);
    terminal.resize(names.size(), false);
    terminal[id] = true;
  }
  terminal.resize(names.size(), false);

  std::vector<std::vector<GuardGroup>> groups(names.size());
  for (auto& r : records) {
    auto& gs = groups[r.from];
    auto it = std::find_if(gs.begin(), gs.end(),
                           [&](const GuardGroup& g) { return g.guard == r.guard; });
    if (it == gs.end()) {
      gs.push_back({r.guard, {}});
      it = std::prev(gs.end());
    }
    it->outcomes.push_back({r.to, r.prob, r.reward});
  }
  return Prm(*ap, std::move(names), init, std::move(terminal), std::move(groups));
}

std::string format_double(double x) {
  if (x == 0)
    return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string write_prm(const Prm& p) {
  std::ostringstream out;
  out << "ap:";
  for (const auto& a : p.alphabet().propositions())
    out << ' ' << a;
  out << "\nstates:";
  for (const auto& n : p.names())
    out << ' ' << n;
  out << "\ninitial: " << p.name(p.initial()) << "\nterminals:";
  for (std::size_t u = 0; u < p.num_states(); ++u)
    if (p.is_terminal(u))
      out << ' ' << p.name(u);
  out << '\n';
  for (std::size_t u = 0; u < p.num_states(); ++u)
    for (const auto& g : p.groups(u))
      for (const auto& o : g.outcomes)
        out << p.name(u) << " \"" << g.guard.to_string() << "\" " << p.name(o.to) << ' '
            << format_double(o.prob) << ' ' << format_double(o.reward) << '\n';
  return out.str();
}

std::pair<Prm::State, double> prm_step(const Prm& p, Prm::State u, LabelMask label,
                                       std::mt19937_64& rng) {
  const auto& outs = p.outcomes(u, label);
  if (outs.size() == 1)
    return {outs[0].to, outs[0].reward};
  double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (const auto& o : outs) {
    if (x < o.prob)
      return {o.to, o.reward};
    x -= o.prob;
  }
  return {outs.back().to, outs.back().reward};
}

std::pair<Prm::State, double> prm_step(const Prm& p, Prm::State u, const Label& label,
                                       std::mt19937_64& rng) {
  return prm_step(p, u, p.alphabet().mask_of(label), rng);
}

Prm negate(const Prm& p) {
  std::vector<std::vector<GuardGroup>> groups(p.num_states());
  for (std::size_t u = 0; u < p.num_states(); ++u) {
    groups[u] = p.groups(u);
    for (auto& g : groups[u])
      for (auto& o : g.outcomes)
        o.reward = o.reward == 0 ? 0.0 : -o.reward;
  }
  return Prm(p.alphabet(), p.names(), p.initial(), p.terminals(), std::move(groups));
}

namespace {

// Guard groups that at least one label enables; an unsatisfiable guard
// cannot be chosen by the max over labels.
std::vector<std::vector<std::size_t>> live_groups(const Prm& p) {
  std::vector<std::vector<std::size_t>> out(p.num_states());
  for (std::size_t u = 0; u < p.num_states(); ++u) {
    if (p.is_terminal(u))
      continue;
    std::vector<bool> used(p.groups(u).size(), false);
    for (LabelMask l = 0; l < p.alphabet().label_count(); ++l)
      used[p.group_of(u, l)] = true;
    for (std::size_t g = 0; g < used.size(); ++g)
      if (used[g])
        out[u].push_back(g);
  }
  return out;
}

double group_value(const GuardGroup& g, const std::vector<double>& v, double gamma) {
  double sum = 0;
  for (const auto& o : g.outcomes)
    sum += o.prob * (o.reward + gamma * v[o.to]);
  return sum;
}

} // namespace

ValueTable value_iteration(const Prm& p, double gamma, double tol) {
  if (!(gamma > 0 && gamma < 1))
    throw std::invalid_argument("gamma must lie in (0,1)");
  if (!(tol > 0))
    throw std::invalid_argument("tolerance must be positive");
  const auto live = live_groups(p);
  ValueTable vt;
  vt.gamma = gamma;
  vt.tolerance = tol;
  vt.values.assign(p.num_states(), 0.0);
  std::vector<double> next(p.num_states(), 0.0);
  for (;;) {
    double residual = 0;
    for (std::size_t u = 0; u < p.num_states(); ++u) {
      if (p.is_terminal(u))
        continue;
      double best = -std::numeric_limits<double>::infinity();
      for (auto g : live[u])
        best = std::max(best, group_value(p.groups(u)[g], vt.values, gamma));
      next[u] = best;
      residual = std::max(residual, std::abs(best - vt.values[u]));
    }
    vt.values.swap(next);
    ++vt.iterations;
    if (residual < tol)
      break;
  }
  return vt;
}

double label_value(const Prm& p, Prm::State u, LabelMask label, const ValueTable& v) {
  if (p.is_terminal(u))
    return 0;
  return group_value(p.groups(u)[p.group_of(u, label)], v.values, v.gamma);
}

double minimal_reward(const Prm& p, double gamma) {
  double max_abs = 0;
  for (double r : p.rewards())
    max_abs = std::max(max_abs, std::abs(r));
  const auto v = value_iteration(p, gamma);
  const double max_v = *std::max_element(v.values.begin(), v.values.end());
  return -1 - max_abs - max_v;
}

namespace {

ProductPrm product_impl(const Prm& p, const std::vector<std::size_t>& base,
                        const std::vector<bool>& inner_sink, const CausalDfa& d, double m) {
  const Alphabet ap = Alphabet::unite(p.alphabet(), d.alphabet());
  const Projection to_p(ap, p.alphabet()), to_d(ap, d.alphabet());
  const std::size_t nq = d.num_states();
  const std::size_t n = p.num_states() * nq;
  const std::size_t labels = ap.label_count();

  ProductPrm out;
  out.minimal_reward = m;
  out.provenance.resize(n);
  out.base_state.resize(n);
  out.sink_component.resize(n);
  std::vector<std::string> names(n);
  std::vector<bool> terminal(n);
  std::vector<std::vector<GuardGroup>> groups(n);

  for (std::size_t u = 0; u < p.num_states(); ++u)
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t x = u * nq + q;
      out.provenance[x] = {u, q};
      out.base_state[x] = base[u];
      out.sink_component[x] = inner_sink[u] || d.is_rejecting_sink(q);
      names[x] = "(" + p.name(u) + "," + std::to_string(q) + ")";
      terminal[x] = p.is_terminal(u);
      if (terminal[x])
        continue;

      // Labels with the same PRM group and DFA successor form one product guard.
      std::map<std::pair<std::size_t, std::size_t>, std::vector<bool>> split;
      for (LabelMask l = 0; l < labels; ++l) {
        auto& sel = split[{p.group_of(u, to_p(l)), d.next(q, to_d(l))}];
        sel.resize(labels, false);
        sel[l] = true;
      }
      for (const auto& [key, sel] : split) {
        const auto [g, q2] = key;
        GuardGroup group{guard_from_labels(sel, ap), {}};
        for (const auto& o : p.groups(u)[g].outcomes)
          group.outcomes.push_back(
              {o.to * nq + q2, o.prob, d.is_rejecting_sink(q2) ? m : o.reward});
        groups[x].push_back(std::move(group));
      }
    }

  out.prm = Prm(ap, std::move(names), p.initial() * nq + d.initial(), std::move(terminal),
                std::move(groups));
  return out;
}

} // namespace

ProductPrm compute_product(const Prm& p, const CausalDfa& d, double m) {
  std::vector<std::size_t> base(p.num_states());
  for (std::size_t u = 0; u < base.size(); ++u)
    base[u] = u;
  return product_impl(p, base, std::vector<bool>(p.num_states(), false), d, m);
}

ProductPrm compute_product(const ProductPrm& inner, const CausalDfa& d, double m) {
  return product_impl(inner.prm, inner.base_state, inner.sink_component, d, m);
}

CausalPrm build_causal_prm(const Prm& p, const std::vector<CausalDfa>& dfas, double gamma,
                           double tol) {
  const double m = minimal_reward(p, gamma);
  const Prm neg = negate(p);
  std::optional<ProductPrm> b1, b2;
  if (dfas.empty()) {
    const CausalDfa trivial(p.alphabet(), 0,
                            std::vector<CausalDfa::State>(p.alphabet().label_count(), 0), {true});
    b1 = compute_product(p, trivial, m);
    b2 = compute_product(neg, trivial, m);
  }
  for (const auto& d : dfas) {
    b1 = b1 ? compute_product(*b1, d, m) : compute_product(p, d, m);
    b2 = b2 ? compute_product(*b2, d, m) : compute_product(neg, d, m);
  }

  CausalPrm out;
  out.v1 = value_iteration(b1->prm, gamma);
  out.v2 = value_iteration(b2->prm, gamma);
  std::vector<bool> terminal = b1->prm.terminals();
  for (std::size_t x = 0; x < terminal.size(); ++x)
    if (!terminal[x] && std::abs(out.v1[x]) < tol && std::abs(out.v2[x]) < tol) {
      terminal[x] = true;
      out.added_terminals.push_back(x);
    }
  out.product = std::move(*b1);
  out.product.prm = out.product.prm.with_terminals(std::move(terminal));
  return out;
}

CausalPrm build_causal_prm(const Prm& p, const CausalDfa& d, double gamma, double tol) {
  return build_causal_prm(p, std::vector<CausalDfa>{d}, gamma, tol);
}

} // namespace cprm
