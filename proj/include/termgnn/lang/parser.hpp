#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "termgnn/lang/ast.hpp"

namespace termgnn::lang {

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, DuplicateParameter, UseBeforeAssign };

  ParseError(Kind kind, int line, int column, const std::string& message);

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

/// Parses MiniImp source. The grammar is indentation based:
///
///   program := 'def' IDENT '(' [IDENT {',' IDENT}] ')' ':' NEWLINE [block]
///   block   := INDENT stmt {stmt} DEDENT
///   stmt    := IDENT ('=' | '+=' | '-=' | '*=') arith NEWLINE
///            | 'while' guard ':' NEWLINE block
///            | 'if' guard ':' NEWLINE block ['else' ':' NEWLINE block]
///            | 'pass' NEWLINE
///   guard   := arith ('>' | '<' | '>=' | '<=' | '==' | '!=') arith
///   arith   := term {('+' | '-') term}
///   term    := unary {'*' unary}
///   unary   := '-' unary | INT | IDENT | '(' arith ')'
///
/// '#' starts a comment. Node ids are assigned in pre-order.
Program parse(std::string_view source);

}  // namespace termgnn::lang
