/* Copyright 2026 The OilSense Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "oilsense/error.hpp"
#include "oilsense/logic.hpp"

namespace oilsense::logic {
namespace {

enum class Tok { kIdent, kArrow, kAmp, kBang, kLParen, kRParen, kComma, kDot, kAt, kLBracket, kRBracket, kNumber, kEnd };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
};

std::string TokName(Tok t) {
  switch (t) {
    case Tok::kIdent: return "identifier";
    case Tok::kArrow: return "'<-'";
    case Tok::kAmp: return "'&'";
    case Tok::kBang: return "'!'";
    case Tok::kLParen: return "'('";
    case Tok::kRParen: return "')'";
    case Tok::kComma: return "','";
    case Tok::kDot: return "'.'";
    case Tok::kAt: return "'@'";
    case Tok::kLBracket: return "'['";
    case Tok::kRBracket: return "']'";
    case Tok::kNumber: return "number";
    case Tok::kEnd: return "end of input";
  }
  return "?";
}

[[noreturn]] void Fail(int line, int col, const std::string& msg) {
  ThrowData(std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

std::vector<Token> Lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    const int l = line, cl = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::kIdent, std::string(src.substr(i, j - i)), l, cl});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || ((c == '-' || c == '+' || c == '.') && i + 1 < src.size() &&
                                                        (std::isdigit(static_cast<unsigned char>(src[i + 1])) || src[i + 1] == '.'))) {
      // '.' followed by a digit is a number only inside a parameter list;
      // the parser rejects it elsewhere.
      std::size_t j = i;
      if (src[j] == '-' || src[j] == '+') ++j;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '-' || src[k] == '+')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      if (c == '.' && (out.empty() || (out.back().kind != Tok::kLBracket && out.back().kind != Tok::kComma))) {
        out.push_back({Tok::kDot, ".", l, cl});
        advance(1);
        continue;
      }
      out.push_back({Tok::kNumber, std::string(src.substr(i, j - i)), l, cl});
      advance(j - i);
      continue;
    }
    Tok kind;
    std::size_t len = 1;
    switch (c) {
      case '<':
        if (i + 1 < src.size() && src[i + 1] == '-') {
          kind = Tok::kArrow;
          len = 2;
          break;
        }
        Fail(l, cl, "unexpected '<' (did you mean '<-'?)");
      case '&': kind = Tok::kAmp; break;
      case '!': kind = Tok::kBang; break;
      case '(': kind = Tok::kLParen; break;
      case ')': kind = Tok::kRParen; break;
      case ',': kind = Tok::kComma; break;
      case '.': kind = Tok::kDot; break;
      case '@': kind = Tok::kAt; break;
      case '[': kind = Tok::kLBracket; break;
      case ']': kind = Tok::kRBracket; break;
      default: Fail(l, cl, std::string("unexpected character '") + c + "'");
    }
    out.push_back({kind, std::string(src.substr(i, len)), l, cl});
    advance(len);
  }
  out.push_back({Tok::kEnd, "", line, col});
  return out;
}

bool IsVariable(const std::string& s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])); }

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  std::vector<ParsedRule> ParseAll() {
    std::vector<ParsedRule> rules;
    while (Peek().kind != Tok::kEnd) rules.push_back(ParseRule());
    return rules;
  }

 private:
  const Token& Peek() const { return toks_[pos_]; }

  const Token& Expect(Tok kind, const char* what) {
    const Token& t = Peek();
    if (t.kind != kind) Fail(t.line, t.col, std::string("expected ") + what + ", found " + Describe(t));
    ++pos_;
    return t;
  }

  static std::string Describe(const Token& t) {
    return t.kind == Tok::kEnd ? TokName(t.kind) : TokName(t.kind) + " '" + t.text + "'";
  }

  struct Located {
    Atom atom;
    int line;
    int col;
  };

  Located ParseAtom() {
    Located out{{}, Peek().line, Peek().col};
    if (Peek().kind == Tok::kBang) {
      out.atom.negated = true;
      ++pos_;
    }
    out.atom.name = Expect(Tok::kIdent, "a predicate name").text;
    Expect(Tok::kLParen, "'('");
    for (;;) {
      const Token& v = Expect(Tok::kIdent, "a variable");
      if (!IsVariable(v.text)) Fail(v.line, v.col, "variable '" + v.text + "' must start with an upper-case letter");
      out.atom.args.push_back(v.text);
      if (Peek().kind != Tok::kComma) break;
      ++pos_;
    }
    Expect(Tok::kRParen, "')'");
    if (out.atom.args.size() > 2) Fail(out.line, out.col, "atoms take one or two arguments");
    return out;
  }

  double ParseNumber() {
    const Token& t = Expect(Tok::kNumber, "a number");
    double v = 0.0;
    const char* first = t.text.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) Fail(t.line, t.col, "malformed number '" + t.text + "'");
    return v;
  }

  ParsedRule ParseRule() {
    ParsedRule pr;
    const Located head = ParseAtom();
    if (head.atom.negated) Fail(head.line, head.col, "rule head cannot be negated");
    if (head.atom.arity() != 1) Fail(head.line, head.col, "rule head must be unary");
    if (LookupPredicate(head.atom.name)) {
      Fail(head.line, head.col, "'" + head.atom.name + "' is a body predicate and cannot be a rule head");
    }
    pr.rule.head = head.atom;
    Expect(Tok::kArrow, "'<-'");
    for (;;) {
      const Located a = ParseAtom();
      const auto pred = LookupPredicate(a.atom.name);
      if (!pred) Fail(a.line, a.col, "unknown predicate '" + a.atom.name + "'");
      if (PredicateArity(*pred) != a.atom.arity()) {
        Fail(a.line, a.col, "predicate '" + a.atom.name + "' takes " + std::to_string(PredicateArity(*pred)) +
                                " argument(s), got " + std::to_string(a.atom.arity()));
      }
      pr.rule.body.push_back(a.atom);
      if (pr.rule.body.size() > kMaxBodyAtoms) Fail(a.line, a.col, "rule body exceeds 16 atoms");
      if (Peek().kind != Tok::kAmp) break;
      ++pos_;
    }
    if (Peek().kind == Tok::kAt) {
      const Token at = Peek();
      ++pos_;
      Expect(Tok::kLBracket, "'['");
      std::vector<double> flat{ParseNumber()};
      while (Peek().kind == Tok::kComma) {
        ++pos_;
        flat.push_back(ParseNumber());
      }
      Expect(Tok::kRBracket, "']'");
      if (flat.size() != pr.rule.body.size() + 1) {
        Fail(at.line, at.col, "parameter list needs " + std::to_string(pr.rule.body.size() + 1) +
                                  " values ([b1..bn, c]), got " + std::to_string(flat.size()));
      }
      pr.params = RuleParams::Unflatten(flat);
    }
    Expect(Tok::kDot, "'.'");
    const auto vars = pr.rule.Variables();
    if (std::find(vars.begin(), vars.end(), pr.rule.head.args[0]) == vars.end()) {
      Fail(head.line, head.col, "head variable '" + pr.rule.head.args[0] + "' does not appear in the body");
    }
    return pr;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

void AppendNumber(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

std::string PrintAtom(const Atom& a) {
  std::string s = a.negated ? "!" : "";
  s += a.name + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ",";
    s += a.args[i];
  }
  return s + ")";
}

}  // namespace

std::optional<Predicate> LookupPredicate(std::string_view name) {
  if (name == "SuspectedArea") return Predicate::kSuspectedArea;
  if (name == "Ground") return Predicate::kGround;
  if (name == "OilStorageDevice") return Predicate::kOilStorageDevice;
  if (name == "On") return Predicate::kOn;
  if (name == "Around") return Predicate::kAround;
  return std::nullopt;
}

std::string_view PredicateName(Predicate p) {
  switch (p) {
    case Predicate::kSuspectedArea: return "SuspectedArea";
    case Predicate::kGround: return "Ground";
    case Predicate::kOilStorageDevice: return "OilStorageDevice";
    case Predicate::kOn: return "On";
    case Predicate::kAround: return "Around";
  }
  return "";
}

int PredicateArity(Predicate p) { return p == Predicate::kOn || p == Predicate::kAround ? 2 : 1; }

std::vector<std::string> RuleAST::Variables() const {
  std::vector<std::string> vars;
  for (const Atom& a : body) {
    for (const std::string& v : a.args) {
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
  }
  return vars;
}

std::vector<double> RuleParams::Flatten() const {
  std::vector<double> flat = weights;
  flat.push_back(bias);
  return flat;
}

RuleParams RuleParams::Unflatten(std::span<const double> flat) {
  if (flat.size() < 2) ThrowData("rule parameters need at least [b1, c]");
  return {std::vector<double>(flat.begin(), flat.end() - 1), flat.back()};
}

std::vector<ParsedRule> ParseRules(std::string_view text) { return Parser(Lex(text)).ParseAll(); }

std::string PrintRule(const ParsedRule& r) {
  std::string s = PrintAtom(r.rule.head) + " <- ";
  for (std::size_t i = 0; i < r.rule.body.size(); ++i) {
    if (i) s += " & ";
    s += PrintAtom(r.rule.body[i]);
  }
  if (r.params) {
    s += " @ [";
    const auto flat = r.params->Flatten();
    for (std::size_t i = 0; i < flat.size(); ++i) {
      if (i) s += ", ";
      AppendNumber(s, flat[i]);
    }
    s += "]";
  }
  return s + ".";
}

std::string PrintRules(std::span<const ParsedRule> rules) {
  std::string out;
  for (const ParsedRule& r : rules) out += PrintRule(r) + "\n";
  return out;
}

}  // namespace oilsense::logic
