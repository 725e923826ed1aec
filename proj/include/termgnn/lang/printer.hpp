#pragma once

#include <string>

#include "termgnn/lang/ast.hpp"

namespace termgnn::lang {

/// Canonical rendering: four-space indentation, one statement per line,
/// minimal parentheses. Empty loop and branch bodies print as `pass`; an
/// empty program prints its header line only.
std::string pretty_print(const Program& p);

std::string to_source(const Expr& e);

/// Single-line text of a statement without its body (e.g. "while a > b:").
std::string statement_text(const Stmt& s);

}  // namespace termgnn::lang
