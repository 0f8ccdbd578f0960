#include "cfcheck/logic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace cfcheck {

std::string cmp_to_string(Cmp c) {
  switch (c) {
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
    case Cmp::Query: return "=?";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Construction helpers

namespace {
std::shared_ptr<StateFormula> make_state(StateFormula::Kind k) {
  auto f = std::make_shared<StateFormula>();
  f->kind = k;
  return f;
}
std::shared_ptr<PathFormula> make_path(PathFormula::Kind k) {
  auto f = std::make_shared<PathFormula>();
  f->kind = k;
  return f;
}
}  // namespace

StatePtr mk_true() { return make_state(StateFormula::Kind::True); }
StatePtr mk_atom(std::string name) {
  auto f = make_state(StateFormula::Kind::Atom);
  f->atom = std::move(name);
  return f;
}
StatePtr mk_not(StatePtr x) {
  auto f = make_state(StateFormula::Kind::Not);
  f->lhs = std::move(x);
  return f;
}
StatePtr mk_and(StatePtr l, StatePtr r) {
  auto f = make_state(StateFormula::Kind::And);
  f->lhs = std::move(l);
  f->rhs = std::move(r);
  return f;
}
StatePtr mk_or(StatePtr l, StatePtr r) {
  auto f = make_state(StateFormula::Kind::Or);
  f->lhs = std::move(l);
  f->rhs = std::move(r);
  return f;
}
StatePtr mk_implies(StatePtr l, StatePtr r) {
  auto f = make_state(StateFormula::Kind::Implies);
  f->lhs = std::move(l);
  f->rhs = std::move(r);
  return f;
}
StatePtr mk_prob(Cmp cmp, double threshold, PathPtr path) {
  auto f = make_state(StateFormula::Kind::Prob);
  f->cmp = cmp;
  f->threshold = threshold;
  f->path = std::move(path);
  return f;
}
StatePtr mk_reward(Cmp cmp, double threshold, int lo, int hi) {
  auto f = make_state(StateFormula::Kind::Reward);
  f->cmp = cmp;
  f->threshold = threshold;
  f->rew_lo = lo;
  f->rew_hi = hi;
  return f;
}
StatePtr mk_cf(InterventionSpec i, int offset, StatePtr inner) {
  auto f = make_state(StateFormula::Kind::Cf);
  f->i1 = std::move(i);
  f->offset = offset;
  f->inner = std::move(inner);
  return f;
}
StatePtr mk_delta(InterventionSpec i1, InterventionSpec i0, int offset,
                  StatePtr inner) {
  auto f = make_state(StateFormula::Kind::Delta);
  f->i1 = std::move(i1);
  f->i0 = std::move(i0);
  f->offset = offset;
  f->inner = std::move(inner);
  return f;
}
PathPtr mk_embed(StatePtr x) {
  auto f = make_path(PathFormula::Kind::Embed);
  f->state = std::move(x);
  return f;
}
PathPtr mk_pnot(PathPtr x) {
  auto f = make_path(PathFormula::Kind::Not);
  f->lhs = std::move(x);
  return f;
}
PathPtr mk_pand(PathPtr l, PathPtr r) {
  auto f = make_path(PathFormula::Kind::And);
  f->lhs = std::move(l);
  f->rhs = std::move(r);
  return f;
}
PathPtr mk_por(PathPtr l, PathPtr r) {
  auto f = make_path(PathFormula::Kind::Or);
  f->lhs = std::move(l);
  f->rhs = std::move(r);
  return f;
}
PathPtr mk_pimplies(PathPtr l, PathPtr r) {
  auto f = make_path(PathFormula::Kind::Implies);
  f->lhs = std::move(l);
  f->rhs = std::move(r);
  return f;
}
PathPtr mk_until(PathPtr l, int lo, int hi, PathPtr r) {
  auto f = make_path(PathFormula::Kind::Until);
  f->lhs = std::move(l);
  f->rhs = std::move(r);
  f->lo = lo;
  f->hi = hi;
  return f;
}
PathPtr mk_finally(int lo, int hi, PathPtr x) {
  auto f = make_path(PathFormula::Kind::Finally);
  f->lhs = std::move(x);
  f->lo = lo;
  f->hi = hi;
  return f;
}
PathPtr mk_globally(int lo, int hi, PathPtr x) {
  auto f = make_path(PathFormula::Kind::Globally);
  f->lhs = std::move(x);
  f->lo = lo;
  f->hi = hi;
  return f;
}
PathPtr mk_next(PathPtr x) {
  auto f = make_path(PathFormula::Kind::Next);
  f->lhs = std::move(x);
  return f;
}

// ---------------------------------------------------------------------------
// Structural equality

bool formula_equal(const StatePtr& a, const StatePtr& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  using K = StateFormula::Kind;
  switch (a->kind) {
    case K::True:
      return true;
    case K::Atom:
      return a->atom == b->atom;
    case K::Not:
      return formula_equal(a->lhs, b->lhs);
    case K::And:
    case K::Or:
    case K::Implies:
      return formula_equal(a->lhs, b->lhs) && formula_equal(a->rhs, b->rhs);
    case K::Prob:
      return a->cmp == b->cmp && a->threshold == b->threshold &&
             formula_equal(a->path, b->path);
    case K::Reward:
      return a->cmp == b->cmp && a->threshold == b->threshold &&
             a->rew_lo == b->rew_lo && a->rew_hi == b->rew_hi;
    case K::Cf:
      return a->i1 == b->i1 && a->offset == b->offset &&
             formula_equal(a->inner, b->inner);
    case K::Delta:
      return a->i1 == b->i1 && a->i0 == b->i0 && a->offset == b->offset &&
             formula_equal(a->inner, b->inner);
  }
  return false;
}

bool formula_equal(const PathPtr& a, const PathPtr& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  using K = PathFormula::Kind;
  switch (a->kind) {
    case K::Embed:
      return formula_equal(a->state, b->state);
    case K::Not:
    case K::Next:
      return formula_equal(a->lhs, b->lhs);
    case K::And:
    case K::Or:
    case K::Implies:
      return formula_equal(a->lhs, b->lhs) && formula_equal(a->rhs, b->rhs);
    case K::Until:
      return a->lo == b->lo && a->hi == b->hi &&
             formula_equal(a->lhs, b->lhs) && formula_equal(a->rhs, b->rhs);
    case K::Finally:
    case K::Globally:
      return a->lo == b->lo && a->hi == b->hi &&
             formula_equal(a->lhs, b->lhs);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
  End, Ident, Number, String, LParen, RParen, LBrack, RBrack, Comma, Dot,
  At, Amp, Pipe, Bang, Arrow, Minus, Lt, Le, Gt, Ge, EqQ, LArrow,
};

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::String: return "quoted atom";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrack: return "'['";
    case Tok::RBrack: return "']'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::At: return "'@'";
    case Tok::Amp: return "'&'";
    case Tok::Pipe: return "'|'";
    case Tok::Bang: return "'!'";
    case Tok::Arrow: return "'->'";
    case Tok::Minus: return "'-'";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::EqQ: return "'=?'";
    case Tok::LArrow: return "'<-'";
  }
  return "?";
}

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto push = [&](Tok k, std::size_t at, std::string s = {}) {
    out.push_back({k, std::move(s), at});
  };
  while (i < n) {
    const char c = text[i];
    const std::size_t at = i;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    switch (c) {
      case '(': push(Tok::LParen, at); ++i; continue;
      case ')': push(Tok::RParen, at); ++i; continue;
      case '[': push(Tok::LBrack, at); ++i; continue;
      case ']': push(Tok::RBrack, at); ++i; continue;
      case ',': push(Tok::Comma, at); ++i; continue;
      case '.': push(Tok::Dot, at); ++i; continue;
      case '@': push(Tok::At, at); ++i; continue;
      case '&': push(Tok::Amp, at); ++i; continue;
      case '|': push(Tok::Pipe, at); ++i; continue;
      case '!': push(Tok::Bang, at); ++i; continue;
      default: break;
    }
    if (c == '-') {
      if (i + 1 < n && text[i + 1] == '>') {
        push(Tok::Arrow, at);
        i += 2;
      } else {
        push(Tok::Minus, at);
        ++i;
      }
      continue;
    }
    if (c == '<') {
      if (i + 1 < n && text[i + 1] == '-') {
        push(Tok::LArrow, at);
        i += 2;
      } else if (i + 1 < n && text[i + 1] == '=') {
        push(Tok::Le, at);
        i += 2;
      } else {
        push(Tok::Lt, at);
        ++i;
      }
      continue;
    }
    if (c == '>') {
      if (i + 1 < n && text[i + 1] == '=') {
        push(Tok::Ge, at);
        i += 2;
      } else {
        push(Tok::Gt, at);
        ++i;
      }
      continue;
    }
    if (c == '=') {
      if (i + 1 < n && text[i + 1] == '?') {
        push(Tok::EqQ, at);
        i += 2;
        continue;
      }
      throw ParseError("unexpected '='", at, {"'=?'"});
    }
    if (c == '"') {
      std::size_t j = i + 1;
      while (j < n && text[j] != '"') ++j;
      if (j >= n)
        throw ParseError("unterminated quoted atom", at, {"closing '\"'"});
      push(Tok::String, at, std::string(text.substr(i + 1, j - i - 1)));
      i = j + 1;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      if (j < n && text[j] == '.' && j + 1 < n &&
          std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
        ++j;
        while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      }
      if (j < n && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < n && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < n && std::isdigit(static_cast<unsigned char>(text[k]))) {
          ++k;
          while (k < n && std::isdigit(static_cast<unsigned char>(text[k])))
            ++k;
          j = k;
        }
      }
      push(Tok::Number, at, std::string(text.substr(i, j - i)));
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                       text[j] == '_'))
        ++j;
      push(Tok::Ident, at, std::string(text.substr(i, j - i)));
      i = j;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", at, {});
  }
  push(Tok::End, n);
  return out;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(lex(text)) {}

  StatePtr parse() {
    StatePtr f = state_implies();
    expect(Tok::End);
    return f;
  }

 private:
  const Token& peek(int ahead = 0) const {
    const std::size_t i = pos_ + static_cast<std::size_t>(ahead);
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }
  const Token& advance() { return tokens_[pos_++]; }
  bool check(Tok k) const { return peek().kind == k; }
  bool check_ident(std::string_view s) const {
    return peek().kind == Tok::Ident && peek().text == s;
  }
  bool accept(Tok k) {
    if (!check(k)) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::Ident || t.kind == Tok::Number
                          ? "'" + t.text + "'"
                          : tok_name(t.kind);
    std::string msg = "syntax error at byte " + std::to_string(t.offset) +
                      ": unexpected " + got;
    throw ParseError(msg, t.offset, std::move(expected));
  }
  Token expect(Tok k, const char* what = nullptr) {
    if (!check(k)) fail({what ? what : tok_name(k)});
    return advance();
  }

  double number() {
    const Token t = expect(Tok::Number, "number");
    double value = 0.0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(),
                                   value);
    if (ec != std::errc{}) fail({"number"});
    (void)p;
    return value;
  }

  int natural() {
    const Token& t = peek();
    const double v = number();
    if (v < 0 || v != std::floor(v) || v > 1e9)
      throw ParseError("expected a nonnegative integer", t.offset,
                       {"nonnegative integer"});
    return static_cast<int>(v);
  }

  int integer() {
    const bool neg = accept(Tok::Minus);
    const int v = natural();
    return neg ? -v : v;
  }

  std::pair<int, int> interval() {
    expect(Tok::LBrack);
    const std::size_t at = peek().offset;
    const int lo = natural();
    expect(Tok::Comma);
    const int hi = natural();
    expect(Tok::RBrack);
    if (lo > hi)
      throw ParseError("interval bounds violate a <= b", at,
                       {"a <= b"});
    return {lo, hi};
  }

  Cmp comparison() {
    if (accept(Tok::Lt)) return Cmp::Lt;
    if (accept(Tok::Le)) return Cmp::Le;
    if (accept(Tok::Gt)) return Cmp::Gt;
    if (accept(Tok::Ge)) return Cmp::Ge;
    if (accept(Tok::EqQ)) return Cmp::Query;
    fail({"'<'", "'<='", "'>'", "'>='", "'=?'"});
  }

  StatePtr prob_op() {
    expect(Tok::Ident);  // P, checked by caller
    const Cmp cmp = comparison();
    double threshold = 0.0;
    if (cmp != Cmp::Query) {
      const std::size_t at = peek().offset;
      threshold = number();
      if (threshold < 0.0 || threshold > 1.0)
        throw ParseError("probability threshold outside [0,1]", at,
                         {"p in [0,1]"});
    }
    expect(Tok::LBrack);
    PathPtr path = path_formula();
    expect(Tok::RBrack);
    return mk_prob(cmp, threshold, std::move(path));
  }

  StatePtr reward_op() {
    expect(Tok::Ident);  // R
    const Cmp cmp = comparison();
    double threshold = 0.0;
    if (cmp != Cmp::Query) {
      const bool neg = accept(Tok::Minus);
      threshold = number();
      if (neg) threshold = -threshold;
    }
    expect(Tok::LBrack);
    if (!check_ident("C")) fail({"'C'"});
    advance();
    auto [lo, hi] = interval();
    expect(Tok::RBrack);
    return mk_reward(cmp, threshold, lo, hi);
  }

  StatePtr prob_or_reward() {
    if (check_ident("P")) return prob_op();
    if (check_ident("R")) return reward_op();
    fail({"'P'", "'R'"});
  }

  // One comma-separated group of an intervention list.
  struct IGroup {
    bool is_empty;
    std::string name;
  };

  IGroup igroup() {
    if (check_ident("empty")) {
      advance();
      return {true, {}};
    }
    if (check_ident("pi")) {
      advance();
      expect(Tok::LArrow);
      const Token t = expect(Tok::Ident, "policy name");
      return {false, t.text};
    }
    fail({"'empty'", "'pi'"});
  }

  InterventionSpec ilist() {
    InterventionSpec spec;
    IGroup g = igroup();
    if (g.is_empty) return spec;
    spec.policy_names.push_back(std::move(g.name));
    while (check(Tok::Comma)) {
      advance();
      g = igroup();
      if (g.is_empty) fail({"'pi'"});
      spec.policy_names.push_back(std::move(g.name));
    }
    return spec;
  }

  StatePtr cf_op() {
    expect(Tok::LBrack);
    InterventionSpec spec = ilist();
    expect(Tok::RBrack);
    expect(Tok::At);
    const int t = integer();
    expect(Tok::Dot);
    return mk_cf(std::move(spec), t, prob_or_reward());
  }

  StatePtr delta_op() {
    expect(Tok::Ident);  // D
    expect(Tok::LBrack);
    // Both lists share the ',' separator. Groups are collected first; an
    // 'empty' group must stand alone, otherwise the final group forms I0.
    std::vector<IGroup> groups{igroup()};
    while (accept(Tok::Comma)) groups.push_back(igroup());
    if (groups.size() < 2) fail({"','"});
    InterventionSpec i1, i0;
    if (groups.front().is_empty) {
      for (std::size_t k = 1; k < groups.size(); ++k) {
        if (groups[k].is_empty && groups.size() != 2) fail({"'pi'"});
        if (!groups[k].is_empty) i0.policy_names.push_back(groups[k].name);
      }
    } else {
      for (std::size_t k = 0; k + 1 < groups.size(); ++k) {
        if (groups[k].is_empty) fail({"'pi'"});
        i1.policy_names.push_back(groups[k].name);
      }
      if (!groups.back().is_empty)
        i0.policy_names.push_back(groups.back().name);
    }
    expect(Tok::RBrack);
    expect(Tok::At);
    const int t = integer();
    expect(Tok::Dot);
    return mk_delta(std::move(i1), std::move(i0), t, prob_or_reward());
  }

  StatePtr state_primary() {
    if (check_ident("true")) {
      advance();
      return mk_true();
    }
    if (check(Tok::String)) return mk_atom(advance().text);
    if (accept(Tok::LParen)) {
      StatePtr f = state_implies();
      expect(Tok::RParen);
      return f;
    }
    if (check_ident("P")) return prob_op();
    if (check_ident("R")) return reward_op();
    if (check_ident("D") && peek(1).kind == Tok::LBrack) return delta_op();
    if (check(Tok::LBrack)) return cf_op();
    fail({"'true'", "quoted atom", "'('", "'P'", "'R'", "'D'", "'['", "'!'"});
  }

  StatePtr state_unary() {
    if (accept(Tok::Bang)) return mk_not(state_unary());
    return state_primary();
  }

  StatePtr state_and() {
    StatePtr f = state_unary();
    while (accept(Tok::Amp)) f = mk_and(std::move(f), state_unary());
    return f;
  }

  StatePtr state_or() {
    StatePtr f = state_and();
    while (accept(Tok::Pipe)) f = mk_or(std::move(f), state_and());
    return f;
  }

  StatePtr state_implies() {
    StatePtr f = state_or();
    if (accept(Tok::Arrow)) f = mk_implies(std::move(f), state_implies());
    return f;
  }

  PathPtr path_primary() {
    if (accept(Tok::LParen)) {
      PathPtr f = path_formula();
      expect(Tok::RParen);
      return f;
    }
    // Any state-formula primary embeds as a path formula.
    return mk_embed(state_primary());
  }

  PathPtr path_unary() {
    if (accept(Tok::Bang)) return mk_pnot(path_unary());
    if (check_ident("F")) {
      advance();
      auto [lo, hi] = interval();
      return mk_finally(lo, hi, path_unary());
    }
    if (check_ident("G")) {
      advance();
      auto [lo, hi] = interval();
      return mk_globally(lo, hi, path_unary());
    }
    if (check_ident("X")) {
      advance();
      return mk_next(path_unary());
    }
    return path_primary();
  }

  PathPtr path_and() {
    PathPtr f = path_unary();
    while (accept(Tok::Amp)) f = mk_pand(std::move(f), path_unary());
    return f;
  }

  PathPtr path_or() {
    PathPtr f = path_and();
    while (accept(Tok::Pipe)) f = mk_por(std::move(f), path_and());
    return f;
  }

  PathPtr path_implies() {
    PathPtr f = path_or();
    if (accept(Tok::Arrow)) f = mk_pimplies(std::move(f), path_implies());
    return f;
  }

  PathPtr path_formula() {
    PathPtr f = path_implies();
    if (check_ident("U")) {
      advance();
      auto [lo, hi] = interval();
      f = mk_until(std::move(f), lo, hi, path_formula());  // right-assoc
    }
    return f;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

StatePtr parse_formula(std::string_view text) { return Parser(text).parse(); }

ParseResult try_parse(std::string_view text) noexcept {
  try {
    return {parse_formula(text), {}, 0};
  } catch (const ParseError& e) {
    return {nullptr, e.what(), e.offset};
  } catch (const std::exception& e) {
    return {nullptr, e.what(), 0};
  }
}

// ---------------------------------------------------------------------------
// Pretty printer

namespace {

std::string format_number(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return ec == std::errc{} ? std::string(buf, p) : std::to_string(x);
}

std::string ilist_string(const InterventionSpec& spec) {
  if (spec.empty()) return "empty";
  std::string out;
  for (std::size_t i = 0; i < spec.policy_names.size(); ++i) {
    if (i) out += ",";
    out += "pi<-" + spec.policy_names[i];
  }
  return out;
}

std::string print_state(const StateFormula& f, int min_prec);
std::string print_path(const PathFormula& f, int min_prec);

std::string wrap(std::string s, bool parens) {
  return parens ? "(" + std::move(s) + ")" : std::move(s);
}

std::string print_state(const StateFormula& f, int min_prec) {
  using K = StateFormula::Kind;
  switch (f.kind) {
    case K::True:
      return "true";
    case K::Atom:
      return "\"" + f.atom + "\"";
    case K::Not:
      return "!" + print_state(*f.lhs, 4);
    case K::And:
      return wrap(print_state(*f.lhs, 3) + " & " + print_state(*f.rhs, 4),
                  min_prec > 3);
    case K::Or:
      return wrap(print_state(*f.lhs, 2) + " | " + print_state(*f.rhs, 3),
                  min_prec > 2);
    case K::Implies:
      return wrap(print_state(*f.lhs, 2) + " -> " + print_state(*f.rhs, 1),
                  min_prec > 1);
    case K::Prob: {
      std::string bound = f.cmp == Cmp::Query
                              ? "=?"
                              : cmp_to_string(f.cmp) + format_number(f.threshold);
      return "P" + bound + "[" + print_path(*f.path, 0) + "]";
    }
    case K::Reward: {
      std::string bound = f.cmp == Cmp::Query
                              ? "=?"
                              : cmp_to_string(f.cmp) + format_number(f.threshold);
      return "R" + bound + "[C[" + std::to_string(f.rew_lo) + "," +
             std::to_string(f.rew_hi) + "]]";
    }
    case K::Cf:
      return "[" + ilist_string(f.i1) + "]@" + std::to_string(f.offset) +
             "." + print_state(*f.inner, 4);
    case K::Delta:
      return "D[" + ilist_string(f.i1) + "," + ilist_string(f.i0) + "]@" +
             std::to_string(f.offset) + "." + print_state(*f.inner, 4);
  }
  return "?";
}

std::string print_path(const PathFormula& f, int min_prec) {
  using K = PathFormula::Kind;
  switch (f.kind) {
    case K::Embed: {
      using SK = StateFormula::Kind;
      const SK k = f.state->kind;
      const bool primary = k == SK::True || k == SK::Atom || k == SK::Prob ||
                           k == SK::Reward || k == SK::Cf || k == SK::Delta;
      return wrap(print_state(*f.state, 0), !primary);
    }
    case K::Not:
      return "!" + print_path(*f.lhs, 4);
    case K::And:
      return wrap(print_path(*f.lhs, 3) + " & " + print_path(*f.rhs, 4),
                  min_prec > 3);
    case K::Or:
      return wrap(print_path(*f.lhs, 2) + " | " + print_path(*f.rhs, 3),
                  min_prec > 2);
    case K::Implies:
      return wrap(print_path(*f.lhs, 2) + " -> " + print_path(*f.rhs, 1),
                  min_prec > 1);
    case K::Until:
      return wrap(print_path(*f.lhs, 1) + " U[" + std::to_string(f.lo) + "," +
                      std::to_string(f.hi) + "] " + print_path(*f.rhs, 0),
                  min_prec > 0);
    case K::Finally:
      return "F[" + std::to_string(f.lo) + "," + std::to_string(f.hi) + "]" +
             print_path(*f.lhs, 4);
    case K::Globally:
      return "G[" + std::to_string(f.lo) + "," + std::to_string(f.hi) + "]" +
             print_path(*f.lhs, 4);
    case K::Next:
      return "X " + print_path(*f.lhs, 4);
  }
  return "?";
}

}  // namespace

std::string pretty_print(const StatePtr& f) { return print_state(*f, 0); }
std::string pretty_print(const PathPtr& f) { return print_path(*f, 0); }

// ---------------------------------------------------------------------------
// Horizons

int formula_horizon(const StatePtr& f) {
  using K = StateFormula::Kind;
  switch (f->kind) {
    case K::True:
    case K::Atom:
      return 0;
    case K::Not:
      return formula_horizon(f->lhs);
    case K::And:
    case K::Or:
    case K::Implies:
      return std::max(formula_horizon(f->lhs), formula_horizon(f->rhs));
    case K::Prob:
    case K::Reward:
      return 0;  // nested probabilistic nodes spawn fresh rollouts
    case K::Cf:
    case K::Delta:
      return std::max(f->offset, 0);
  }
  return 0;
}

int formula_horizon(const PathPtr& f) {
  using K = PathFormula::Kind;
  switch (f->kind) {
    case K::Embed:
      return formula_horizon(f->state);
    case K::Not:
      return formula_horizon(f->lhs);
    case K::And:
    case K::Or:
    case K::Implies:
      return std::max(formula_horizon(f->lhs), formula_horizon(f->rhs));
    case K::Until:
      return f->hi +
             std::max(formula_horizon(f->lhs), formula_horizon(f->rhs));
    case K::Finally:
    case K::Globally:
      return f->hi + formula_horizon(f->lhs);
    case K::Next:
      return 1 + formula_horizon(f->lhs);
  }
  return 0;
}

namespace {
int scm_horizon_path(const PathPtr& f);

int scm_horizon_state(const StatePtr& f) {
  using K = StateFormula::Kind;
  switch (f->kind) {
    case K::True:
    case K::Atom:
      return 1;
    case K::Not:
      return scm_horizon_state(f->lhs);
    case K::And:
    case K::Or:
    case K::Implies:
      return std::max(scm_horizon_state(f->lhs), scm_horizon_state(f->rhs));
    case K::Prob:
      return std::max(formula_horizon(f->path) + 1, scm_horizon_path(f->path));
    case K::Reward:
      return f->rew_hi + 1;
    case K::Cf:
    case K::Delta:
      return scm_horizon_state(f->inner);
  }
  return 1;
}

int scm_horizon_path(const PathPtr& f) {
  using K = PathFormula::Kind;
  switch (f->kind) {
    case K::Embed:
      return scm_horizon_state(f->state);
    case K::Not:
    case K::Next:
      return scm_horizon_path(f->lhs);
    case K::And:
    case K::Or:
    case K::Implies:
    case K::Until:
      return std::max(scm_horizon_path(f->lhs), scm_horizon_path(f->rhs));
    case K::Finally:
    case K::Globally:
      return scm_horizon_path(f->lhs);
  }
  return 1;
}
}  // namespace

int required_scm_horizon(const StatePtr& f) { return scm_horizon_state(f); }

// ---------------------------------------------------------------------------
// Finite-path semantics

namespace {

bool eval_at(const StateOracle& oracle, const Path& tau, int pos,
             const PathFormula& f) {
  using K = PathFormula::Kind;
  switch (f.kind) {
    case K::Embed:
      return oracle(tau.prefix(pos), *f.state);
    case K::Not:
      return !eval_at(oracle, tau, pos, *f.lhs);
    case K::And:
      return eval_at(oracle, tau, pos, *f.lhs) &&
             eval_at(oracle, tau, pos, *f.rhs);
    case K::Or:
      return eval_at(oracle, tau, pos, *f.lhs) ||
             eval_at(oracle, tau, pos, *f.rhs);
    case K::Implies:
      return !eval_at(oracle, tau, pos, *f.lhs) ||
             eval_at(oracle, tau, pos, *f.rhs);
    case K::Until:
      for (int t1 = f.lo; t1 <= f.hi; ++t1) {
        if (!eval_at(oracle, tau, pos + t1, *f.rhs)) continue;
        bool guard = true;
        for (int t2 = 0; t2 < t1 && guard; ++t2)
          guard = eval_at(oracle, tau, pos + t2, *f.lhs);
        if (guard) return true;
      }
      return false;
    case K::Finally:
      for (int t1 = f.lo; t1 <= f.hi; ++t1)
        if (eval_at(oracle, tau, pos + t1, *f.lhs)) return true;
      return false;
    case K::Globally:
      for (int t1 = f.lo; t1 <= f.hi; ++t1)
        if (!eval_at(oracle, tau, pos + t1, *f.lhs)) return false;
      return true;
    case K::Next:
      return eval_at(oracle, tau, pos + 1, *f.lhs);
  }
  return false;
}

}  // namespace

bool eval_path_formula(const StateOracle& oracle, const Path& tau, int pos,
                       const PathPtr& phi) {
  if (pos < 1) throw Error("path position must be >= 1");
  if (pos + formula_horizon(phi) > tau.length())
    throw HorizonError("path too short for the formula horizon");
  return eval_at(oracle, tau, pos, *phi);
}

bool eval_propositional(const Mdp& mdp, const Path& prefix,
                        const StateFormula& f) {
  using K = StateFormula::Kind;
  switch (f.kind) {
    case K::True:
      return true;
    case K::Atom:
      return mdp.has_label(prefix.state_at(0), f.atom);
    case K::Not:
      return !eval_propositional(mdp, prefix, *f.lhs);
    case K::And:
      return eval_propositional(mdp, prefix, *f.lhs) &&
             eval_propositional(mdp, prefix, *f.rhs);
    case K::Or:
      return eval_propositional(mdp, prefix, *f.lhs) ||
             eval_propositional(mdp, prefix, *f.rhs);
    case K::Implies:
      return !eval_propositional(mdp, prefix, *f.lhs) ||
             eval_propositional(mdp, prefix, *f.rhs);
    default:
      throw Error("probabilistic operator in a propositional context");
  }
}

}  // namespace cfcheck
