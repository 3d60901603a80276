#include "btpk/logic.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "btpk/error.hpp"

namespace btpk {

// ---------------------------------------------------------------- AST

struct Formula::Node {
  FormulaKind kind;
  std::string name;
  std::size_t distance = 0;
  std::optional<Formula> lhs;
  std::optional<Formula> rhs;
};

namespace {

bool unary_kind(FormulaKind k) {
  switch (k) {
    case FormulaKind::Not:
    case FormulaKind::BoxR1:
    case FormulaKind::DiamondR1:
    case FormulaKind::BoxRho:
    case FormulaKind::DiamondRho:
    case FormulaKind::Yesterday:
      return true;
    default:
      return false;
  }
}

bool binary_kind(FormulaKind k) {
  return k == FormulaKind::And || k == FormulaKind::Or || k == FormulaKind::Implies;
}

}  // namespace

Formula Formula::atom(std::string name) {
  return Formula(std::make_shared<const Node>(Node{FormulaKind::Atom, std::move(name), 0, {}, {}}));
}

#define BTPK_UNARY(fn, K)                                                                \
  Formula Formula::fn(Formula f) {                                                       \
    return Formula(std::make_shared<const Node>(Node{K, {}, 0, std::move(f), {}}));      \
  }
BTPK_UNARY(negate, FormulaKind::Not)
BTPK_UNARY(box, FormulaKind::BoxR1)
BTPK_UNARY(diamond, FormulaKind::DiamondR1)
BTPK_UNARY(box_rho, FormulaKind::BoxRho)
BTPK_UNARY(diamond_rho, FormulaKind::DiamondRho)
BTPK_UNARY(yesterday, FormulaKind::Yesterday)
#undef BTPK_UNARY

#define BTPK_BINARY(fn, K)                                                                    \
  Formula Formula::fn(Formula a, Formula b) {                                                 \
    return Formula(std::make_shared<const Node>(Node{K, {}, 0, std::move(a), std::move(b)})); \
  }
BTPK_BINARY(conj, FormulaKind::And)
BTPK_BINARY(disj, FormulaKind::Or)
BTPK_BINARY(implies, FormulaKind::Implies)
#undef BTPK_BINARY

Formula Formula::dist(std::size_t n) {
  return Formula(std::make_shared<const Node>(Node{FormulaKind::DistConst, {}, n, {}, {}}));
}

FormulaKind Formula::kind() const { return node_->kind; }
const std::string& Formula::name() const { return node_->name; }
std::size_t Formula::distance() const { return node_->distance; }

const Formula& Formula::lhs() const {
  if (!node_->lhs) throw ContractError("formula node has no operand");
  return *node_->lhs;
}

const Formula& Formula::rhs() const {
  if (!node_->rhs) throw ContractError("formula node has no right operand");
  return *node_->rhs;
}

bool Formula::is_unary() const { return unary_kind(kind()); }
bool Formula::is_binary() const { return binary_kind(kind()); }

std::size_t Formula::depth() const {
  if (is_unary()) return 1 + lhs().depth();
  if (is_binary()) return 1 + std::max(lhs().depth(), rhs().depth());
  return 1;
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case FormulaKind::Atom: return a.name() == b.name();
    case FormulaKind::DistConst: return a.distance() == b.distance();
    default: break;
  }
  if (a.is_unary()) return a.lhs() == b.lhs();
  return a.lhs() == b.lhs() && a.rhs() == b.rhs();
}

// ---------------------------------------------------------------- parser

FormulaParseError::FormulaParseError(std::size_t offset, std::vector<std::string> expected,
                                     std::string found)
    : std::runtime_error([&] {
        std::string msg = "syntax error at byte " + std::to_string(offset) + ": found " + found +
                          ", expected one of:";
        for (const auto& e : expected) msg += " " + e;
        return msg;
      }()),
      offset_(offset),
      expected_(std::move(expected)) {}

namespace {

enum class Tok {
  End, Arrow, Or, And, Not, Box, Diamond, BoxRho, DiamondRho, Yesterday, Dist, Atom, LParen, RParen,
};

struct Token {
  Tok kind;
  std::size_t offset;
  std::string text;
};

const std::vector<std::string>& operand_start() {
  static const std::vector<std::string> v{"atom", "D<n>", "(", "!", "[]", "<>", "[p]", "<p>", "Y"};
  return v;
}

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + t.text + "'";
}

bool atom_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool arg_char(char c) { return atom_char(c) || c == '-' || c == '.'; }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ >= text_.size()) {
        out.push_back({Tok::End, pos_, ""});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  Token next() {
    const std::size_t start = pos_;
    const char c = text_[pos_];
    auto take = [&](Tok k, std::size_t len) {
      pos_ += len;
      return Token{k, start, std::string(text_.substr(start, len))};
    };
    auto at = [&](std::size_t i) { return pos_ + i < text_.size() ? text_[pos_ + i] : '\0'; };
    switch (c) {
      case '(': return take(Tok::LParen, 1);
      case ')': return take(Tok::RParen, 1);
      case '&': return take(Tok::And, 1);
      case '|': return take(Tok::Or, 1);
      case '!': return take(Tok::Not, 1);
      case 'Y': return take(Tok::Yesterday, 1);
      case '-':
        if (at(1) == '>') return take(Tok::Arrow, 2);
        throw FormulaParseError(start, {"->"}, "'-'");
      case '[':
        if (at(1) == ']') return take(Tok::Box, 2);
        if (at(1) == 'p' && at(2) == ']') return take(Tok::BoxRho, 3);
        throw FormulaParseError(start, {"[]", "[p]"}, "'['");
      case '<':
        if (at(1) == '>') return take(Tok::Diamond, 2);
        if (at(1) == 'p' && at(2) == '>') return take(Tok::DiamondRho, 3);
        throw FormulaParseError(start, {"<>", "<p>"}, "'<'");
      case 'D': {
        std::size_t len = 1;
        while (std::isdigit(static_cast<unsigned char>(at(len)))) ++len;
        if (len == 1) throw FormulaParseError(start + 1, {"digit"}, found_at(start + 1));
        return take(Tok::Dist, len);
      }
      default: break;
    }
    if (c >= 'a' && c <= 'z') {
      std::size_t len = 1;
      while (atom_char(at(len))) ++len;
      if (at(len) == '(') {
        std::size_t arg = len + 1;
        while (arg_char(at(arg))) ++arg;
        if (arg == len + 1) throw FormulaParseError(pos_ + arg, {"atom argument"}, found_at(pos_ + arg));
        if (at(arg) != ')') throw FormulaParseError(pos_ + arg, {")"}, found_at(pos_ + arg));
        len = arg + 1;
      }
      return take(Tok::Atom, len);
    }
    throw FormulaParseError(start, operand_start(), found_at(start));
  }

  std::string found_at(std::size_t i) const {
    if (i >= text_.size()) return "end of input";
    return "'" + std::string(1, text_[i]) + "'";
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula parse() {
    Formula f = implication();
    if (peek().kind != Tok::End) fail({"->", "|", "&", "end of input"});
    return f;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_++]; }
  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw FormulaParseError(peek().offset, std::move(expected), describe(peek()));
  }

  Formula implication() {
    Formula lhs = disjunction();
    if (peek().kind == Tok::Arrow) {
      take();
      return Formula::implies(std::move(lhs), implication());
    }
    return lhs;
  }

  Formula disjunction() {
    Formula f = conjunction();
    while (peek().kind == Tok::Or) {
      take();
      f = Formula::disj(std::move(f), conjunction());
    }
    return f;
  }

  Formula conjunction() {
    Formula f = unary();
    while (peek().kind == Tok::And) {
      take();
      f = Formula::conj(std::move(f), unary());
    }
    return f;
  }

  Formula unary() {
    switch (peek().kind) {
      case Tok::Not: take(); return Formula::negate(unary());
      case Tok::Box: take(); return Formula::box(unary());
      case Tok::Diamond: take(); return Formula::diamond(unary());
      case Tok::BoxRho: take(); return Formula::box_rho(unary());
      case Tok::DiamondRho: take(); return Formula::diamond_rho(unary());
      case Tok::Yesterday: take(); return Formula::yesterday(unary());
      default: return primary();
    }
  }

  Formula primary() {
    switch (peek().kind) {
      case Tok::Atom: return Formula::atom(take().text);
      case Tok::Dist: {
        const Token t = take();
        const std::string digits = t.text.substr(1);
        if (digits.size() > 18) throw FormulaParseError(t.offset + 1, {"smaller distance"}, "'" + digits + "'");
        return Formula::dist(std::stoull(digits));
      }
      case Tok::LParen: {
        take();
        Formula f = implication();
        if (peek().kind != Tok::RParen) fail({")", "->", "|", "&"});
        take();
        return f;
      }
      default: fail(operand_start());
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

int precedence(const Formula& f) {
  switch (f.kind()) {
    case FormulaKind::Implies: return 1;
    case FormulaKind::Or: return 2;
    case FormulaKind::And: return 3;
    case FormulaKind::Atom:
    case FormulaKind::DistConst: return 5;
    default: return 4;
  }
}

void print_into(const Formula& f, std::string& out);

void print_wrapped(const Formula& f, bool parens, std::string& out) {
  if (parens) out += '(';
  print_into(f, out);
  if (parens) out += ')';
}

void print_into(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case FormulaKind::Atom: out += f.name(); return;
    case FormulaKind::DistConst: out += "D" + std::to_string(f.distance()); return;
    default: break;
  }
  if (f.is_unary()) {
    switch (f.kind()) {
      case FormulaKind::Not: out += "!"; break;
      case FormulaKind::BoxR1: out += "[]"; break;
      case FormulaKind::DiamondR1: out += "<>"; break;
      case FormulaKind::BoxRho: out += "[p]"; break;
      case FormulaKind::DiamondRho: out += "<p>"; break;
      case FormulaKind::Yesterday: out += "Y"; break;
      default: break;
    }
    print_wrapped(f.lhs(), precedence(f.lhs()) < 4, out);
    return;
  }
  const int p = precedence(f);
  const bool right_assoc = f.kind() == FormulaKind::Implies;
  const int pl = precedence(f.lhs());
  const int pr = precedence(f.rhs());
  print_wrapped(f.lhs(), pl < p || (pl == p && right_assoc), out);
  out += f.kind() == FormulaKind::And ? " & " : f.kind() == FormulaKind::Or ? " | " : " -> ";
  print_wrapped(f.rhs(), pr < p || (pr == p && !right_assoc), out);
}

}  // namespace

Formula parse_formula(std::string_view text) {
  return Parser(Lexer(text).run()).parse();
}

std::string print_formula(const Formula& f) {
  std::string out;
  print_into(f, out);
  return out;
}

Formula substitute_atoms(const Formula& f, const std::map<std::string, Formula>& defs) {
  switch (f.kind()) {
    case FormulaKind::Atom: {
      auto it = defs.find(f.name());
      return it == defs.end() ? f : it->second;
    }
    case FormulaKind::DistConst: return f;
    case FormulaKind::Not: return Formula::negate(substitute_atoms(f.lhs(), defs));
    case FormulaKind::BoxR1: return Formula::box(substitute_atoms(f.lhs(), defs));
    case FormulaKind::DiamondR1: return Formula::diamond(substitute_atoms(f.lhs(), defs));
    case FormulaKind::BoxRho: return Formula::box_rho(substitute_atoms(f.lhs(), defs));
    case FormulaKind::DiamondRho: return Formula::diamond_rho(substitute_atoms(f.lhs(), defs));
    case FormulaKind::Yesterday: return Formula::yesterday(substitute_atoms(f.lhs(), defs));
    case FormulaKind::And:
      return Formula::conj(substitute_atoms(f.lhs(), defs), substitute_atoms(f.rhs(), defs));
    case FormulaKind::Or:
      return Formula::disj(substitute_atoms(f.lhs(), defs), substitute_atoms(f.rhs(), defs));
    case FormulaKind::Implies:
      return Formula::implies(substitute_atoms(f.lhs(), defs), substitute_atoms(f.rhs(), defs));
  }
  return f;
}

// ---------------------------------------------------------------- checker

ModelChecker::ModelChecker(const BtpkModel& model, bool memoize)
    : model_(model), memoize_(memoize) {
  const std::size_t n = model.states.size();
  r1_succ_.resize(n);
  rho_succ_.resize(n);
  parent_.resize(n);
  std::vector<std::size_t> parent_count(n, 0);
  for (const auto& [u, v] : model.r1) {
    if (u >= n || v >= n) throw ContractError("r1 edge references an unknown state");
    r1_succ_[u].push_back(v);
    parent_[v] = u;
    ++parent_count[v];
  }
  for (std::size_t v = 0; v < n; ++v)
    if (parent_count[v] != 1) parent_[v].reset();
  for (const auto& [u, v] : model.rho) {
    if (u >= n || v >= n) throw ContractError("rho edge references an unknown state");
    rho_succ_[u].push_back(v);
  }
}

bool ModelChecker::check(std::size_t state, const Formula& f) {
  if (state >= model_.states.size())
    throw ContractError("unknown state id " + std::to_string(state));
  if (memoize_) pinned_.push_back(f);
  return eval(state, f);
}

bool ModelChecker::eval(std::size_t s, const Formula& f) {
  const auto key = std::make_pair(f.node_id(), s);
  if (memoize_) {
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  bool r = false;
  switch (f.kind()) {
    case FormulaKind::Atom: {
      auto it = model_.pi.find(f.name());
      r = it != model_.pi.end() && it->second.contains(s);
      break;
    }
    case FormulaKind::Not: r = !eval(s, f.lhs()); break;
    case FormulaKind::And: r = eval(s, f.lhs()) && eval(s, f.rhs()); break;
    case FormulaKind::Or: r = eval(s, f.lhs()) || eval(s, f.rhs()); break;
    case FormulaKind::Implies: r = !eval(s, f.lhs()) || eval(s, f.rhs()); break;
    case FormulaKind::BoxR1:
      r = std::all_of(r1_succ_[s].begin(), r1_succ_[s].end(),
                      [&](std::size_t t) { return eval(t, f.lhs()); });
      break;
    case FormulaKind::DiamondR1:
      r = std::any_of(r1_succ_[s].begin(), r1_succ_[s].end(),
                      [&](std::size_t t) { return eval(t, f.lhs()); });
      break;
    case FormulaKind::BoxRho:
      r = std::all_of(rho_succ_[s].begin(), rho_succ_[s].end(),
                      [&](std::size_t t) { return eval(t, f.lhs()); });
      break;
    case FormulaKind::DiamondRho:
      r = std::any_of(rho_succ_[s].begin(), rho_succ_[s].end(),
                      [&](std::size_t t) { return eval(t, f.lhs()); });
      break;
    case FormulaKind::DistConst: r = model_.states[s].height == f.distance(); break;
    case FormulaKind::Yesterday: r = parent_[s].has_value() && eval(*parent_[s], f.lhs()); break;
  }
  if (memoize_) memo_.emplace(key, r);
  return r;
}

bool check(const BtpkModel& model, std::size_t state, const Formula& f) {
  return ModelChecker(model).check(state, f);
}

std::set<std::size_t> check_all(const BtpkModel& model, const Formula& f) {
  const std::size_t n = model.states.size();
  // Post-order list of distinct subformula nodes.
  std::vector<Formula> order;
  std::unordered_map<const void*, std::size_t> index;
  auto visit = [&](auto&& self, const Formula& g) -> void {
    if (index.contains(g.node_id())) return;
    if (g.is_unary()) self(self, g.lhs());
    if (g.is_binary()) {
      self(self, g.lhs());
      self(self, g.rhs());
    }
    index.emplace(g.node_id(), order.size());
    order.push_back(g);
  };
  visit(visit, f);

  std::vector<std::size_t> parents(n, 0), parent_of(n, 0);
  for (const auto& [u, v] : model.r1) {
    ++parents.at(v);
    parent_of[v] = u;
  }

  std::vector<std::vector<char>> sat(order.size(), std::vector<char>(n, 0));
  auto of = [&](const Formula& g) -> const std::vector<char>& { return sat[index.at(g.node_id())]; };
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Formula& g = order[i];
    auto& out = sat[i];
    switch (g.kind()) {
      case FormulaKind::Atom:
        if (auto it = model.pi.find(g.name()); it != model.pi.end())
          for (std::size_t s : it->second)
            if (s < n) out[s] = 1;
        break;
      case FormulaKind::DistConst:
        for (std::size_t s = 0; s < n; ++s) out[s] = model.states[s].height == g.distance();
        break;
      case FormulaKind::Not: {
        const auto& a = of(g.lhs());
        for (std::size_t s = 0; s < n; ++s) out[s] = !a[s];
        break;
      }
      case FormulaKind::And:
      case FormulaKind::Or:
      case FormulaKind::Implies: {
        const auto& a = of(g.lhs());
        const auto& b = of(g.rhs());
        for (std::size_t s = 0; s < n; ++s) {
          if (g.kind() == FormulaKind::And) out[s] = a[s] && b[s];
          else if (g.kind() == FormulaKind::Or) out[s] = a[s] || b[s];
          else out[s] = !a[s] || b[s];
        }
        break;
      }
      case FormulaKind::BoxR1:
      case FormulaKind::BoxRho: {
        const auto& a = of(g.lhs());
        std::fill(out.begin(), out.end(), 1);
        for (const auto& [u, v] : g.kind() == FormulaKind::BoxR1 ? model.r1 : model.rho)
          if (!a[v]) out[u] = 0;
        break;
      }
      case FormulaKind::DiamondR1:
      case FormulaKind::DiamondRho: {
        const auto& a = of(g.lhs());
        for (const auto& [u, v] : g.kind() == FormulaKind::DiamondR1 ? model.r1 : model.rho)
          if (a[v]) out[u] = 1;
        break;
      }
      case FormulaKind::Yesterday: {
        const auto& a = of(g.lhs());
        for (std::size_t s = 0; s < n; ++s) out[s] = parents[s] == 1 && a[parent_of[s]];
        break;
      }
    }
  }
  std::set<std::size_t> result;
  const auto& top = sat.back();
  for (std::size_t s = 0; s < n; ++s)
    if (top[s]) result.insert(s);
  return result;
}

// ---------------------------------------------------------------- recognition

namespace {

std::size_t path_state(const BtpkModel& m, std::size_t h, bool primed_path) {
  if (primed_path)
    if (auto s = m.state_at(h, true)) return *s;
  auto s = m.state_at(h, false);
  if (!s) throw ContractError("model has no trunk state at height " + std::to_string(h));
  return *s;
}

Formula build_path_formula(const BtpkModel& m, std::size_t first, std::size_t last,
                           std::string_view type, bool primed_path) {
  const Formula label = Formula::atom(atoms::label(type));
  const Formula begin = Formula::atom(std::string(atoms::kBegin));
  const Formula primed = Formula::atom(std::string(atoms::kPrimed));
  auto selector = [&](std::size_t h) {
    const bool on_primed = primed_path && m.state_at(h, true).has_value();
    return on_primed ? primed : Formula::negate(primed);
  };
  const Formula continues = Formula::conj(label, Formula::negate(begin));

  std::optional<Formula> tail;
  if (last < m.sequence_length())
    tail = Formula::diamond(Formula::conj(selector(last + 1), Formula::negate(continues)));
  for (std::size_t h = last; h >= first; --h) {
    Formula here = h == first ? Formula::conj(label, begin) : continues;
    Formula step = Formula::conj(selector(h), here);
    if (tail) step = Formula::conj(step, *tail);
    tail = Formula::diamond(step);
    if (h == 0) break;
  }
  return Formula::conj(Formula::dist(first - 1), *tail);
}

}  // namespace

RecognitionVerdict verify_recognition(const BtpkModel& model, const EntitySpan& entity,
                                      std::string_view type) {
  const std::size_t n = model.sequence_length();
  if (entity.start > entity.end || entity.end >= n)
    throw ContractError("entity span outside the model's height");
  const std::size_t first = entity.start + 1;
  const std::size_t last = entity.end + 1;
  RecognitionVerdict v;
  v.has_branch = model.has_branch();
  ModelChecker checker(model);
  v.trunk_formula = build_path_formula(model, first, last, type, false);
  v.trunk_anchor = path_state(model, first - 1, false);
  v.trunk_path = checker.check(v.trunk_anchor, v.trunk_formula);
  if (v.has_branch) {
    v.primed_formula = build_path_formula(model, first, last, type, true);
    v.primed_anchor = path_state(model, first - 1, true);
    v.primed_path = checker.check(v.primed_anchor, v.primed_formula);
  } else {
    v.primed_formula = v.trunk_formula;
    v.primed_anchor = v.trunk_anchor;
    v.primed_path = v.trunk_path;
  }
  return v;
}

}  // namespace btpk
