#include "termgnn/lang/parser.hpp"

#include <cctype>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "termgnn/util/overloaded.hpp"

namespace termgnn::lang {

ParseError::ParseError(Kind kind, int line, int column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column) {}

namespace {

enum class Tok {
  Ident,
  Int,
  Def,
  While,
  If,
  Else,
  Pass,
  LParen,
  RParen,
  Comma,
  Colon,
  Plus,
  Minus,
  Star,
  Gt,
  Lt,
  Ge,
  Le,
  EqEq,
  Ne,
  Assign,
  PlusAssign,
  MinusAssign,
  StarAssign,
  Newline,
  Indent,
  Dedent,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::uint64_t magnitude = 0;  // integer literals; may be 2^63 before negation
  int line = 0;
  int column = 0;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::Newline: return "end of line";
    case Tok::Indent: return "indent";
    case Tok::Dedent: return "dedent";
    case Tok::End: return "end of input";
    default: return "'" + t.text + "'";
  }
}

[[noreturn]] void syntax_error(int line, int column, const std::string& what) {
  throw ParseError(ParseError::Kind::Syntax, line, column, what);
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::size_t pos = 0;
    int line = 0;
    while (pos < src_.size()) {
      std::size_t eol = src_.find('\n', pos);
      if (eol == std::string_view::npos) eol = src_.size();
      ++line;
      lex_line(src_.substr(pos, eol - pos), line);
      pos = eol + 1;
    }
    int last = line + 1;
    while (indents_.size() > 1) {
      indents_.pop_back();
      out_.push_back({Tok::Dedent, "", 0, last, 1});
    }
    out_.push_back({Tok::End, "", 0, last, 1});
    return std::move(out_);
  }

 private:
  void lex_line(std::string_view text, int line) {
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    int indent = 0;
    std::size_t i = 0;
    for (; i < text.size() && (text[i] == ' ' || text[i] == '\t'); ++i) {
      indent = text[i] == '\t' ? (indent / 8 + 1) * 8 : indent + 1;
    }
    if (i == text.size() || text[i] == '#') return;  // blank or comment-only

    if (indent > indents_.back()) {
      indents_.push_back(indent);
      out_.push_back({Tok::Indent, "", 0, line, indent + 1});
    } else {
      while (indent < indents_.back()) {
        indents_.pop_back();
        out_.push_back({Tok::Dedent, "", 0, line, indent + 1});
      }
      if (indent != indents_.back()) syntax_error(line, indent + 1, "inconsistent dedent");
    }

    while (i < text.size()) {
      char c = text[i];
      int col = static_cast<int>(i) + 1;
      if (c == ' ' || c == '\t') {
        ++i;
        continue;
      }
      if (c == '#') break;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
        std::string word(text.substr(i, j - i));
        out_.push_back({keyword(word), word, 0, line, col});
        i = j;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t j = i;
        std::uint64_t v = 0;
        constexpr std::uint64_t kLimit = std::uint64_t{1} << 63;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
          std::uint64_t d = static_cast<std::uint64_t>(text[j] - '0');
          if (v > (kLimit - d) / 10) syntax_error(line, col, "integer literal out of range");
          v = v * 10 + d;
          ++j;
        }
        out_.push_back({Tok::Int, std::string(text.substr(i, j - i)), v, line, col});
        i = j;
        continue;
      }
      auto two = text.substr(i, 2);
      Tok kind;
      std::size_t len = 2;
      if (two == ">=") kind = Tok::Ge;
      else if (two == "<=") kind = Tok::Le;
      else if (two == "==") kind = Tok::EqEq;
      else if (two == "!=") kind = Tok::Ne;
      else if (two == "+=") kind = Tok::PlusAssign;
      else if (two == "-=") kind = Tok::MinusAssign;
      else if (two == "*=") kind = Tok::StarAssign;
      else {
        len = 1;
        switch (c) {
          case '(': kind = Tok::LParen; break;
          case ')': kind = Tok::RParen; break;
          case ',': kind = Tok::Comma; break;
          case ':': kind = Tok::Colon; break;
          case '+': kind = Tok::Plus; break;
          case '-': kind = Tok::Minus; break;
          case '*': kind = Tok::Star; break;
          case '>': kind = Tok::Gt; break;
          case '<': kind = Tok::Lt; break;
          case '=': kind = Tok::Assign; break;
          default: syntax_error(line, col, std::string("unexpected character '") + c + "'");
        }
      }
      out_.push_back({kind, std::string(text.substr(i, len)), 0, line, col});
      i += len;
    }
    out_.push_back({Tok::Newline, "", 0, line, static_cast<int>(text.size()) + 1});
  }

  static Tok keyword(const std::string& w) {
    if (w == "def") return Tok::Def;
    if (w == "while") return Tok::While;
    if (w == "if") return Tok::If;
    if (w == "else") return Tok::Else;
    if (w == "pass") return Tok::Pass;
    return Tok::Ident;
  }

  std::string_view src_;
  std::vector<int> indents_{0};
  std::vector<Token> out_;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program program() {
    Program p;
    expect(Tok::Def, "'def'");
    p.name = expect(Tok::Ident, "program name").text;
    expect(Tok::LParen, "'('");
    std::set<std::string> seen;
    if (peek().kind != Tok::RParen) {
      while (true) {
        const Token& t = expect(Tok::Ident, "parameter name");
        if (!seen.insert(t.text).second) {
          throw ParseError(ParseError::Kind::DuplicateParameter, t.line, t.column,
                           "duplicate parameter '" + t.text + "'");
        }
        p.params.push_back(t.text);
        if (peek().kind != Tok::Comma) break;
        advance();
      }
    }
    expect(Tok::RParen, "')'");
    expect(Tok::Colon, "':'");
    expect_line_end();
    if (peek().kind == Tok::Indent) p.body = block();
    if (peek().kind != Tok::End) syntax_error(peek().line, peek().column, "unexpected " + describe(peek()));
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      syntax_error(peek().line, peek().column, std::string("expected ") + what + ", found " + describe(peek()));
    }
    return advance();
  }

  void expect_line_end() {
    if (peek().kind == Tok::End) return;
    expect(Tok::Newline, "end of line");
  }

  Block block() {
    expect(Tok::Indent, "indented block");
    Block out;
    while (peek().kind != Tok::Dedent && peek().kind != Tok::End) {
      if (auto s = statement()) out.push_back(std::move(*s));
    }
    if (peek().kind == Tok::Dedent) advance();
    return out;
  }

  Block suite() {
    expect(Tok::Colon, "':'");
    expect_line_end();
    if (peek().kind != Tok::Indent) syntax_error(peek().line, peek().column, "expected an indented block");
    return block();
  }

  std::optional<Stmt> statement() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Pass:
        advance();
        expect_line_end();
        return std::nullopt;
      case Tok::While: {
        advance();
        Expr g = guard();
        Block body = suite();
        Stmt s = Stmt::loop(std::move(g), std::move(body));
        s.line = t.line;
        s.column = t.column;
        return s;
      }
      case Tok::If: {
        advance();
        Expr g = guard();
        Block then_body = suite();
        Block else_body;
        if (peek().kind == Tok::Else) {
          advance();
          else_body = suite();
        }
        Stmt s = Stmt::branch(std::move(g), std::move(then_body), std::move(else_body));
        s.line = t.line;
        s.column = t.column;
        return s;
      }
      case Tok::Ident: {
        Token target = advance();
        AssignOp op;
        switch (peek().kind) {
          case Tok::Assign: op = AssignOp::Set; break;
          case Tok::PlusAssign: op = AssignOp::Add; break;
          case Tok::MinusAssign: op = AssignOp::Sub; break;
          case Tok::StarAssign: op = AssignOp::Mul; break;
          default:
            syntax_error(peek().line, peek().column, "expected assignment operator, found " + describe(peek()));
        }
        advance();
        Expr rhs = arith();
        expect_line_end();
        Stmt s = Stmt::assign(target.text, op, std::move(rhs));
        s.line = target.line;
        s.column = target.column;
        return s;
      }
      default: syntax_error(t.line, t.column, "expected statement, found " + describe(t));
    }
  }

  Expr guard() {
    Expr lhs = arith();
    BinOp op;
    switch (peek().kind) {
      case Tok::Gt: op = BinOp::Gt; break;
      case Tok::Lt: op = BinOp::Lt; break;
      case Tok::Ge: op = BinOp::Ge; break;
      case Tok::Le: op = BinOp::Le; break;
      case Tok::EqEq: op = BinOp::Eq; break;
      case Tok::Ne: op = BinOp::Ne; break;
      default: syntax_error(peek().line, peek().column, "expected comparison, found " + describe(peek()));
    }
    advance();
    Expr rhs = arith();
    return Expr::binary(op, std::move(lhs), std::move(rhs));
  }

  Expr arith() {
    Expr lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      BinOp op = advance().kind == Tok::Plus ? BinOp::Add : BinOp::Sub;
      lhs = Expr::binary(op, std::move(lhs), term());
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = unary();
    while (peek().kind == Tok::Star) {
      advance();
      lhs = Expr::binary(BinOp::Mul, std::move(lhs), unary());
    }
    return lhs;
  }

  Expr unary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Minus: {
        advance();
        if (peek().kind == Tok::Int) {
          // wraps for 2^63, giving INT64_MIN
          std::uint64_t m = advance().magnitude;
          return Expr::constant(static_cast<std::int64_t>(std::uint64_t{0} - m));
        }
        Expr inner = unary();
        if (auto* c = std::get_if<Expr::Const>(&inner.node)) {
          return Expr::constant(static_cast<std::int64_t>(std::uint64_t{0} - static_cast<std::uint64_t>(c->value)));
        }
        return Expr::binary(BinOp::Sub, Expr::constant(0), std::move(inner));
      }
      case Tok::Int: {
        advance();
        if (t.magnitude > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
          syntax_error(t.line, t.column, "integer literal out of range");
        }
        return Expr::constant(static_cast<std::int64_t>(t.magnitude));
      }
      case Tok::Ident: advance(); return Expr::var(t.text);
      case Tok::LParen: {
        advance();
        Expr e = arith();
        expect(Tok::RParen, "')'");
        return e;
      }
      default: syntax_error(t.line, t.column, "expected expression, found " + describe(t));
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

class DefinitionChecker {
 public:
  explicit DefinitionChecker(const Program& p) : defined_(p.params.begin(), p.params.end()) {}

  void block(const Block& b) {
    for (const auto& s : b) stmt(s);
  }

 private:
  void reads(const Expr& e, const Stmt& at) {
    std::vector<std::string> names;
    collect_reads(e, names);
    for (const auto& n : names) require(n, at);
  }

  void require(const std::string& name, const Stmt& at) {
    if (!defined_.contains(name)) {
      throw ParseError(ParseError::Kind::UseBeforeAssign, at.line, at.column,
                       "variable '" + name + "' read before assignment");
    }
  }

  void stmt(const Stmt& s) {
    std::visit(Overloaded{
                   [&](const Stmt::Assign& a) {
                     reads(a.rhs, s);
                     if (a.op != AssignOp::Set) require(a.target, s);
                     defined_.insert(a.target);
                   },
                   [&](const Stmt::While& w) {
                     reads(w.guard, s);
                     block(w.body);
                   },
                   [&](const Stmt::If& i) {
                     reads(i.guard, s);
                     block(i.then_body);
                     block(i.else_body);
                   },
               },
               s.node);
  }

  std::set<std::string> defined_;
};

}  // namespace

Program parse(std::string_view source) {
  Parser parser(Lexer(source).run());
  Program p = parser.program();
  DefinitionChecker(p).block(p.body);
  assign_node_ids(p);
  return p;
}

}  // namespace termgnn::lang
