#include <algorithm>
#include <cctype>
#include <set>

#include "cprm/ltlf.hpp"

namespace cprm {

struct Formula::Node {
  Op op;
  std::string name;
  std::vector<Formula> children;
  std::string key;
};

namespace {

const char* op_token(Op op) {
  switch (op) {
  case Op::Not: return "!";
  case Op::And: return "&";
  case Op::Or: return "|";
  case Op::Implies: return "->";
  case Op::Next: return "X";
  case Op::WeakNext: return "N";
  case Op::Globally: return "G";
  case Op::Until: return "U";
  case Op::WeakUntil: return "W";
  default: return "";
  }
}

} // namespace

Formula Formula::make(Op op, std::string name, std::vector<Formula> children) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->name = std::move(name);
  node->children = std::move(children);
  switch (op) {
  case Op::True: node->key = "true"; break;
  case Op::False: node->key = "false"; break;
  case Op::Atom: node->key = node->name; break;
  default: {
    std::string k = "(";
    k += op_token(op);
    for (const auto& c : node->children) {
      k += ' ';
      k += c.key();
    }
    k += ')';
    node->key = std::move(k);
  }
  }
  return Formula(std::move(node));
}

Formula::Formula() : Formula(top()) {}

Formula Formula::top() {
  static const Formula t = make(Op::True, {}, {});
  return t;
}

Formula Formula::bottom() {
  static const Formula f = make(Op::False, {}, {});
  return f;
}

Formula Formula::atom(std::string name) { return make(Op::Atom, std::move(name), {}); }
Formula Formula::negation(Formula f) { return make(Op::Not, {}, {std::move(f)}); }

Formula Formula::conjunction(std::vector<Formula> operands) {
  if (operands.empty())
    return top();
  if (operands.size() == 1)
    return operands.front();
  return make(Op::And, {}, std::move(operands));
}

Formula Formula::disjunction(std::vector<Formula> operands) {
  if (operands.empty())
    return bottom();
  if (operands.size() == 1)
    return operands.front();
  return make(Op::Or, {}, std::move(operands));
}

Formula Formula::implication(Formula lhs, Formula rhs) {
  return make(Op::Implies, {}, {std::move(lhs), std::move(rhs)});
}
Formula Formula::next(Formula f) { return make(Op::Next, {}, {std::move(f)}); }
Formula Formula::weak_next(Formula f) { return make(Op::WeakNext, {}, {std::move(f)}); }
Formula Formula::globally(Formula f) { return make(Op::Globally, {}, {std::move(f)}); }
Formula Formula::until(Formula lhs, Formula rhs) {
  return make(Op::Until, {}, {std::move(lhs), std::move(rhs)});
}
Formula Formula::weak_until(Formula lhs, Formula rhs) {
  return make(Op::WeakUntil, {}, {std::move(lhs), std::move(rhs)});
}

Op Formula::op() const noexcept { return node_->op; }
const std::string& Formula::name() const noexcept { return node_->name; }
std::span<const Formula> Formula::children() const noexcept { return node_->children; }
const std::string& Formula::key() const noexcept { return node_->key; }

bool Formula::is_literal() const noexcept {
  return op() == Op::Atom || (op() == Op::Not && (*this)[0].op() == Op::Atom);
}

bool Formula::is_propositional() const noexcept {
  switch (op()) {
  case Op::Next:
  case Op::WeakNext:
  case Op::Globally:
  case Op::Until:
  case Op::WeakUntil: return false;
  default:
    return std::all_of(children().begin(), children().end(),
                       [](const Formula& c) { return c.is_propositional(); });
  }
}

namespace {

// Binding strength used by the printer; higher binds tighter.
int level(Op op) {
  switch (op) {
  case Op::Implies: return 0;
  case Op::Or: return 1;
  case Op::And: return 2;
  case Op::Until:
  case Op::WeakUntil: return 3;
  case Op::Not:
  case Op::Next:
  case Op::WeakNext:
  case Op::Globally: return 4;
  default: return 5;
  }
}

void print(const Formula& f, int context, std::string& out) {
  const int own = level(f.op());
  const bool parens = own < context;
  if (parens)
    out += '(';
  switch (f.op()) {
  case Op::True: out += "true"; break;
  case Op::False: out += "false"; break;
  case Op::Atom: out += f.name(); break;
  case Op::Not:
    out += '!';
    print(f[0], 4, out);
    break;
  case Op::Next:
  case Op::WeakNext:
  case Op::Globally:
    out += op_token(f.op());
    out += ' ';
    print(f[0], 4, out);
    break;
  case Op::And:
  case Op::Or: {
    const char* sep = f.op() == Op::And ? " & " : " | ";
    bool first = true;
    for (const auto& c : f.children()) {
      if (!first)
        out += sep;
      print(c, own + 1, out);
      first = false;
    }
    break;
  }
  case Op::Implies:
    print(f[0], 1, out);
    out += " -> ";
    print(f[1], 0, out);
    break;
  case Op::Until:
  case Op::WeakUntil:
    print(f[0], 4, out);
    out += ' ';
    out += op_token(f.op());
    out += ' ';
    print(f[1], 3, out);
    break;
  }
  if (parens)
    out += ')';
}

void collect_atoms(const Formula& f, std::set<std::string>& out) {
  if (f.op() == Op::Atom)
    out.insert(f.name());
  for (const auto& c : f.children())
    collect_atoms(c, out);
}

} // namespace

std::string Formula::to_string() const {
  std::string out;
  print(*this, 0, out);
  return out;
}

std::vector<std::string> atoms(const Formula& f) {
  std::set<std::string> s;
  collect_atoms(f, s);
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { End, LParen, RParen, Not, And, Or, Implies, Next, WeakNext, Globally, Until,
                 WeakUntil, True, False, Ident };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_])))
      ++i_;
    const std::size_t start = i_;
    if (i_ >= src_.size())
      return {Tok::End, {}, start};
    const char c = src_[i_];
    switch (c) {
    case '(': ++i_; return {Tok::LParen, "(", start};
    case ')': ++i_; return {Tok::RParen, ")", start};
    case '!': ++i_; return {Tok::Not, "!", start};
    case '&': ++i_; return {Tok::And, "&", start};
    case '|': ++i_; return {Tok::Or, "|", start};
    case '-':
      if (i_ + 1 < src_.size() && src_[i_ + 1] == '>') {
        i_ += 2;
        return {Tok::Implies, "->", start};
      }
      throw ParseError("expected '->'", start);
    case 'X': ++i_; return {Tok::Next, "X", start};
    case 'N': ++i_; return {Tok::WeakNext, "N", start};
    case 'G': ++i_; return {Tok::Globally, "G", start};
    case 'U': ++i_; return {Tok::Until, "U", start};
    case 'W': ++i_; return {Tok::WeakUntil, "W", start};
    default: break;
    }
    if (c >= 'a' && c <= 'z') {
      while (i_ < src_.size() &&
             ((src_[i_] >= 'a' && src_[i_] <= 'z') || (src_[i_] >= '0' && src_[i_] <= '9') ||
              src_[i_] == '_'))
        ++i_;
      std::string word(src_.substr(start, i_ - start));
      if (word == "true")
        return {Tok::True, word, start};
      if (word == "false")
        return {Tok::False, word, start};
      return {Tok::Ident, word, start};
    }
    throw ParseError(std::string("unexpected character '") + c + "'", start);
  }

private:
  std::string_view src_;
  std::size_t i_ = 0;
};

class Parser {
public:
  Parser(std::string_view src, const Alphabet* ap) : lexer_(src), ap_(ap) { advance(); }

  Formula parse() {
    Formula f = implication();
    if (cur_.kind != Tok::End)
      throw ParseError("unexpected '" + cur_.text + "'", cur_.pos);
    return f;
  }

private:
  void advance() { cur_ = lexer_.next(); }

  Formula implication() {
    Formula lhs = disjunction();
    if (cur_.kind == Tok::Implies) {
      advance();
      return Formula::implication(std::move(lhs), implication());
    }
    return lhs;
  }

  Formula disjunction() {
    std::vector<Formula> ops{conjunction()};
    while (cur_.kind == Tok::Or) {
      advance();
      ops.push_back(conjunction());
    }
    return Formula::disjunction(std::move(ops));
  }

  Formula conjunction() {
    std::vector<Formula> ops{until()};
    while (cur_.kind == Tok::And) {
      advance();
      ops.push_back(until());
    }
    return Formula::conjunction(std::move(ops));
  }

  Formula until() {
    Formula lhs = unary();
    if (cur_.kind == Tok::Until || cur_.kind == Tok::WeakUntil) {
      const bool strong = cur_.kind == Tok::Until;
      advance();
      Formula rhs = until();
      return strong ? Formula::until(std::move(lhs), std::move(rhs))
                    : Formula::weak_until(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula unary() {
    switch (cur_.kind) {
    case Tok::Not: advance(); return Formula::negation(unary());
    case Tok::Next: advance(); return Formula::next(unary());
    case Tok::WeakNext: advance(); return Formula::weak_next(unary());
    case Tok::Globally: advance(); return Formula::globally(unary());
    default: return primary();
    }
  }

  Formula primary() {
    const Token t = cur_;
    switch (t.kind) {
    case Tok::True: advance(); return Formula::top();
    case Tok::False: advance(); return Formula::bottom();
    case Tok::Ident:
      if (ap_ && !ap_->contains(t.text))
        throw UnknownAtomError(t.text, t.pos);
      advance();
      return Formula::atom(t.text);
    case Tok::LParen: {
      advance();
      Formula inner = implication();
      if (cur_.kind != Tok::RParen)
        throw ParseError("expected ')'", cur_.pos);
      advance();
      return inner;
    }
    case Tok::End: throw ParseError("unexpected end of input", t.pos);
    default: throw ParseError("unexpected '" + t.text + "'", t.pos);
    }
  }

  Lexer lexer_;
  const Alphabet* ap_;
  Token cur_{Tok::End, {}, 0};
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

} // namespace

Formula parse_formula(std::string_view text, const Alphabet& ap) { return Parser(text, &ap).parse(); }
Formula parse_formula(std::string_view text) { return Parser(text, nullptr).parse(); }

TlCd parse_tlcd(std::string_view text) {
  TlCd cd;
  bool have_header = false;
  std::size_t offset = 0;
  while (offset <= text.size()) {
    std::size_t eol = text.find('\n', offset);
    if (eol == std::string_view::npos)
      eol = text.size();
    std::string_view line = text.substr(offset, eol - offset);
    const std::size_t line_start = offset;
    offset = eol + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    const std::size_t lead = line.find_first_not_of(" \t\r");
    line = trim(line);
    if (line.empty())
      continue;
    const std::size_t base = line_start + lead;
    if (!have_header) {
      if (line.substr(0, 3) != "ap:")
        throw ParseError("expected 'ap:' header", base);
      std::vector<std::string> props;
      std::string_view rest = line.substr(3);
      std::size_t i = 0;
      while (i < rest.size()) {
        while (i < rest.size() && std::isspace(static_cast<unsigned char>(rest[i])))
          ++i;
        std::size_t j = i;
        while (j < rest.size() && !std::isspace(static_cast<unsigned char>(rest[j])))
          ++j;
        if (j > i) {
          std::string p(rest.substr(i, j - i));
          if (!(p[0] >= 'a' && p[0] <= 'z') || p == "true" || p == "false")
            throw ParseError("invalid proposition name '" + p + "'", base + 3 + i);
          props.push_back(std::move(p));
        }
        i = j;
      }
      cd.ap = Alphabet(std::move(props));
      have_header = true;
      continue;
    }
    const std::size_t arrow = line.find("~>");
    if (arrow == std::string_view::npos)
      throw ParseError("expected 'cause ~> effect'", base);
    auto parse_side = [&](std::string_view side, std::size_t side_offset) {
      try {
        return parse_formula(side, cd.ap);
      } catch (const UnknownAtomError& e) {
        throw UnknownAtomError(e.atom(), side_offset + e.position());
      } catch (const ParseError& e) {
        throw ParseError(std::string(e.what()).substr(std::string(e.what()).find(": ") + 2),
                         side_offset + e.position());
      }
    };
    cd.edges.emplace_back(parse_side(line.substr(0, arrow), base),
                          parse_side(line.substr(arrow + 2), base + arrow + 2));
  }
  if (!have_header)
    throw ParseError("missing 'ap:' header", 0);
  return cd;
}

Formula tlcd_to_formula(const TlCd& cd) {
  std::vector<Formula> conjuncts;
  conjuncts.reserve(cd.edges.size());
  for (const auto& [cause, effect] : cd.edges)
    conjuncts.push_back(Formula::globally(Formula::implication(cause, effect)));
  return Formula::conjunction(std::move(conjuncts));
}

} // namespace cprm
