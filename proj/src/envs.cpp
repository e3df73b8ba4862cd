#include "cprm/envs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <sstream>

namespace cprm {

const char* action_name(Action a) {
  switch (a) {
  case Action::North: return "N";
  case Action::South: return "S";
  case Action::East: return "E";
  case Action::West: return "W";
  }
  return "?";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;)
    out.push_back(w);
  return out;
}

Action parse_dir(const std::string& s, std::size_t line) {
  if (s == "N") return Action::North;
  if (s == "S") return Action::South;
  if (s == "E") return Action::East;
  if (s == "W") return Action::West;
  throw MapError("line " + std::to_string(line) + ": bad direction '" + s + "'");
}

std::pair<int, int> delta(Action a) {
  switch (a) {
  case Action::North: return {0, 1};
  case Action::South: return {0, -1};
  case Action::East: return {1, 0};
  case Action::West: return {-1, 0};
  }
  return {0, 0};
}

Action opposite(Action a) {
  switch (a) {
  case Action::North: return Action::South;
  case Action::South: return Action::North;
  case Action::East: return Action::West;
  case Action::West: return Action::East;
  }
  return a;
}

std::pair<int, int> parse_xy(const std::string& s, std::size_t line) {
  const auto comma = s.find(',');
  int x = 0, y = 0;
  bool ok = comma != std::string::npos;
  if (ok) {
    auto r1 = std::from_chars(s.data(), s.data() + comma, x);
    auto r2 = std::from_chars(s.data() + comma + 1, s.data() + s.size(), y);
    ok = r1.ec == std::errc() && r1.ptr == s.data() + comma && r2.ec == std::errc() &&
         r2.ptr == s.data() + s.size();
  }
  if (!ok)
    throw MapError("line " + std::to_string(line) + ": expected x,y but got '" + s + "'");
  return {x, y};
}

bool valid_prop(const std::string& p) {
  if (p.empty() || p[0] < 'a' || p[0] > 'z')
    return false;
  return std::all_of(p.begin(), p.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

struct Stochastic {
  char trigger;
  std::vector<std::pair<char, double>> outcomes;
};

// `enter b -> {b:0.9, d:0.1}`
Stochastic parse_stochastic(const std::string& rest, std::size_t line) {
  const auto fail = [&](const std::string& why) {
    return MapError("line " + std::to_string(line) + ": stochastic: " + why);
  };
  std::string s = rest;
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return std::isspace(c); }), s.end());
  if (s.rfind("enter", 0) != 0)
    throw fail("expected 'enter <char> -> {...}'");
  const auto arrow = s.find("->");
  if (arrow != 6 || s.size() < arrow + 4 || s[arrow + 2] != '{' || s.back() != '}')
    throw fail("expected 'enter <char> -> {...}'");
  Stochastic out{s[5], {}};
  std::string body = s.substr(arrow + 3, s.size() - arrow - 4);
  std::size_t pos = 0;
  double total = 0;
  while (pos < body.size()) {
    auto comma = body.find(',', pos);
    if (comma == std::string::npos)
      comma = body.size();
    const std::string item = body.substr(pos, comma - pos);
    if (item.size() < 3 || item[1] != ':')
      throw fail("bad outcome '" + item + "'");
    double p = 0;
    auto [ptr, ec] = std::from_chars(item.data() + 2, item.data() + item.size(), p);
    if (ec != std::errc() || ptr != item.data() + item.size() || p < 0 || p > 1)
      throw fail("bad probability in '" + item + "'");
    out.outcomes.emplace_back(item[0], p);
    total += p;
    pos = comma + 1;
  }
  if (std::abs(total - 1) > 1e-9)
    throw fail("probabilities do not sum to 1");
  return out;
}

} // namespace

std::vector<std::string> Gridworld::propositions() const {
  std::set<std::string> all;
  for (const auto& l : labels_)
    all.insert(l.begin(), l.end());
  return {all.begin(), all.end()};
}

Gridworld::Cell Gridworld::step(Cell c, Action a, std::mt19937_64& rng) const {
  const auto& ms = transitions(c, a);
  if (ms.size() == 1)
    return ms[0].to;
  double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (const auto& m : ms) {
    if (x < m.prob)
      return m.to;
    x -= m.prob;
  }
  return ms.back().to;
}

std::vector<bool> Gridworld::reachable() const {
  std::vector<bool> seen(num_cells(), false);
  std::deque<Cell> work{start_};
  seen[start_] = true;
  while (!work.empty()) {
    const Cell c = work.front();
    work.pop_front();
    for (Action a : kActions)
      for (const auto& m : transitions(c, a))
        if (m.prob > 0 && !seen[m.to]) {
          seen[m.to] = true;
          work.push_back(m.to);
        }
  }
  return seen;
}

std::string Gridworld::render() const {
  std::string out;
  for (int y = height_ - 1; y >= 0; --y) {
    for (int x = 0; x < width_; ++x)
      out += cell(x, y) == start_ ? '@' : kind_[cell(x, y)];
    out += '\n';
  }
  return out;
}

Gridworld load_map(std::string_view text) {
  std::map<char, Label> legend;
  std::optional<std::pair<int, int>> start;
  std::string sink_chars;
  struct Directed {
    int x, y;
    Action dir;
    std::size_t line;
  };
  std::vector<Directed> oneways, conveyors;
  std::vector<Stochastic> stochastic;
  std::vector<std::string> rows;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    ++line_no;
    std::string raw(text.substr(pos, end - pos));
    pos = end + 1;
    if (!raw.empty() && raw.back() == '\r')
      raw.pop_back();
    const std::string line = trim(raw);
    if (line.empty() || line[0] == ';')
      continue;

    const auto colon = line.find(':');
    if (rows.empty() && colon != std::string::npos &&
        std::all_of(line.begin(), line.begin() + colon, [](char c) { return std::isalpha(c); })) {
      const std::string key = line.substr(0, colon);
      const std::string rest = line.substr(colon + 1);
      const auto args = words(rest);
      if (key == "legend") {
        for (const auto& item : args) {
          if (item.size() < 3 || item[1] != '=')
            throw MapError("line " + std::to_string(line_no) + ": bad legend entry '" + item +
                           "'");
          const char ch = item[0];
          if (ch == '#' || ch == '.' || ch == '@')
            throw MapError("line " + std::to_string(line_no) + ": reserved legend char");
          Label props;
          std::string_view list(item);
          list.remove_prefix(2);
          std::size_t p = 0;
          while (p <= list.size()) {
            auto plus = list.find('+', p);
            if (plus == std::string_view::npos)
              plus = list.size();
            std::string prop(list.substr(p, plus - p));
            if (!valid_prop(prop))
              throw MapError("line " + std::to_string(line_no) + ": bad proposition '" + prop +
                             "'");
            props.insert(prop);
            p = plus + 1;
          }
          legend[ch] = props;
        }
      } else if (key == "start") {
        if (args.size() != 1)
          throw MapError("line " + std::to_string(line_no) + ": expected 'start: x,y'");
        start = parse_xy(args[0], line_no);
      } else if (key == "sink") {
        for (const auto& a : args)
          sink_chars += a;
      } else if (key == "oneway" || key == "conveyor") {
        if (args.size() != 2)
          throw MapError("line " + std::to_string(line_no) + ": expected '" + key +
                         ": x,y DIR'");
        auto [x, y] = parse_xy(args[0], line_no);
        (key == "oneway" ? oneways : conveyors)
            .push_back({x, y, parse_dir(args[1], line_no), line_no});
      } else if (key == "stochastic") {
        stochastic.push_back(parse_stochastic(rest, line_no));
      } else {
        throw MapError("line " + std::to_string(line_no) + ": unknown header '" + key + "'");
      }
      continue;
    }
    rows.push_back(line);
  }

  if (rows.empty())
    throw MapError("map has no grid");
  if (!start)
    throw MapError("map has no 'start:' line");
  for (const auto& r : rows)
    if (r.size() != rows[0].size())
      throw MapError("ragged grid: rows have different widths");

  Gridworld g;
  g.width_ = static_cast<int>(rows[0].size());
  g.height_ = static_cast<int>(rows.size());
  const std::size_t n = g.num_cells();
  g.kind_.resize(n);
  g.sink_.assign(n, false);
  g.labels_.resize(n);
  std::map<char, std::vector<Gridworld::Cell>> by_char;
  for (int y = 0; y < g.height_; ++y)
    for (int x = 0; x < g.width_; ++x) {
      const char ch = rows[g.height_ - 1 - y][x];
      const auto c = g.cell(x, y);
      if (ch != '#' && ch != '.' && !legend.count(ch))
        throw MapError(std::string("unknown cell character '") + ch + "'");
      g.kind_[c] = ch;
      if (legend.count(ch))
        g.labels_[c] = legend[ch];
      g.sink_[c] = sink_chars.find(ch) != std::string::npos;
      by_char[ch].push_back(c);
    }
  for (char ch : sink_chars)
    if (!legend.count(ch))
      throw MapError(std::string("sink character '") + ch + "' is not in the legend");

  auto in_bounds = [&](int x, int y) { return x >= 0 && y >= 0 && x < g.width_ && y < g.height_; };
  auto [sx, sy] = *start;
  if (!in_bounds(sx, sy) || g.is_wall(g.cell(sx, sy)))
    throw MapError("start cell is outside the grid or a wall");
  g.start_ = g.cell(sx, sy);

  // blocked[c * 4 + a]: the edge leaving c in direction a cannot be crossed.
  std::vector<bool> blocked(n * kNumActions, false);
  for (const auto& d : oneways) {
    auto [dx, dy] = delta(d.dir);
    if (!in_bounds(d.x, d.y) || !in_bounds(d.x + dx, d.y + dy))
      throw MapError("line " + std::to_string(d.line) + ": one-way edge leaves the grid");
    blocked[g.cell(d.x + dx, d.y + dy) * kNumActions + static_cast<std::size_t>(opposite(d.dir))] =
        true;
  }
  std::vector<std::optional<Action>> forced(n);
  for (const auto& d : conveyors) {
    if (!in_bounds(d.x, d.y))
      throw MapError("line " + std::to_string(d.line) + ": conveyor outside the grid");
    forced[g.cell(d.x, d.y)] = d.dir;
  }
  std::map<char, std::vector<Move>> redirect;
  for (const auto& s : stochastic) {
    std::vector<Move> moves;
    for (auto [ch, p] : s.outcomes) {
      if (by_char[ch].size() != 1)
        throw MapError(std::string("stochastic target '") + ch + "' must occur exactly once");
      moves.push_back({by_char[ch][0], p});
    }
    redirect[s.trigger] = moves;
  }

  g.moves_.resize(n * kNumActions);
  for (Gridworld::Cell c = 0; c < n; ++c)
    for (Action a : kActions) {
      auto& out = g.moves_[c * kNumActions + static_cast<std::size_t>(a)];
      if (g.is_wall(c) || g.sink_[c]) {
        out = {{c, 1.0}};
        continue;
      }
      const Action dir = forced[c].value_or(a);
      auto [dx, dy] = delta(dir);
      const int x = g.x_of(c) + dx, y = g.y_of(c) + dy;
      Gridworld::Cell to = c;
      if (in_bounds(x, y) && !g.is_wall(g.cell(x, y)) &&
          !blocked[c * kNumActions + static_cast<std::size_t>(dir)])
        to = g.cell(x, y);
      auto it = redirect.find(g.kind_[to]);
      if (to != c && it != redirect.end())
        out = it->second;
      else
        out = {{to, 1.0}};
    }
  return g;
}

std::set<LabelWord> attainable_words(const Gridworld& g, std::size_t max_len) {
  if (max_len > 12)
    throw std::invalid_argument("attainable_words: max_len is capped at 12");
  std::set<LabelWord> out{LabelWord{}};
  std::map<LabelWord, std::set<Gridworld::Cell>> level{{LabelWord{}, {g.start()}}};
  for (std::size_t len = 0; len < max_len; ++len) {
    std::map<LabelWord, std::set<Gridworld::Cell>> next;
    for (const auto& [word, cells] : level)
      for (auto c : cells)
        for (Action a : kActions)
          for (const auto& m : g.transitions(c, a)) {
            if (m.prob <= 0)
              continue;
            LabelWord w = word;
            w.push_back(g.label(c, a, m.to));
            next[std::move(w)].insert(m.to);
          }
    for (const auto& [word, cells] : next)
      out.insert(word);
    level = std::move(next);
  }
  return out;
}

TlcdCheck tlcd_holds(const Gridworld& g, const TlCd& cd, std::size_t max_len, TlcdCheckMode mode) {
  const CausalDfa dfa = compile_tlcd(cd);
  const Alphabet& ap = dfa.alphabet();
  const std::size_t nq = dfa.num_states();

  struct Visit {
    std::size_t parent;
    std::size_t depth;
  };
  constexpr std::size_t kRoot = static_cast<std::size_t>(-1);
  std::vector<std::optional<Visit>> seen(g.num_cells() * nq);
  std::vector<LabelMask> cell_mask(g.num_cells());
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    cell_mask[c] = ap.project(g.label(c));

  auto bad = [&](std::size_t q) {
    return mode == TlcdCheckMode::Strict ? !dfa.accepting(q) : dfa.is_rejecting_sink(q);
  };
  auto witness = [&](std::size_t node) {
    LabelWord w;
    for (; seen[node]->parent != kRoot; node = seen[node]->parent)
      w.push_back(g.label(node / nq));
    std::reverse(w.begin(), w.end());
    return TlcdCheck{false, std::move(w)};
  };

  const std::size_t root = g.start() * nq + dfa.initial();
  seen[root] = Visit{kRoot, 0};
  if (bad(dfa.initial()))
    return witness(root);
  std::deque<std::size_t> work{root};
  while (!work.empty()) {
    const std::size_t node = work.front();
    work.pop_front();
    const std::size_t depth = seen[node]->depth;
    if (depth == max_len)
      continue;
    const auto c = node / nq;
    const auto q = node % nq;
    for (Action a : kActions)
      for (const auto& m : g.transitions(c, a)) {
        if (m.prob <= 0)
          continue;
        const auto q2 = dfa.next(q, cell_mask[m.to]);
        const std::size_t nxt = m.to * nq + q2;
        if (seen[nxt])
          continue;
        seen[nxt] = Visit{node, depth + 1};
        if (bad(q2))
          return witness(nxt);
        work.push_back(nxt);
      }
  }
  return {};
}

} // namespace cprm
