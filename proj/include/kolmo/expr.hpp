#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "kolmo/error.hpp"
#include "kolmo/numeric.hpp"

namespace kolmo {

// Arithmetic expression over the variables t, x1..xd.
//
// Grammar (whitespace-insensitive, deterministic recursive descent):
//   expr    := term (('+'|'-') term)*            left-associative
//   term    := unary (('*'|'/') unary)*          left-associative
//   unary   := '-' unary | power
//   power   := atom ('^' int_literal)*           exponent: integer literal only
//   atom    := number | 't' | 'x'<index> | func '(' args ')' | '(' expr ')'
//   func    := sin | cos | exp | tanh | abs (unary) | min | max (binary)
//
// Precedence: ^  >  unary -  >  * /  >  + -.
class Expr {
public:
    Expr() = default;

    // Parses `source`; variable indices must not exceed `dim`. Throws
    // ParseError with the byte offset of the offending token.
    static Expr parse(std::string_view source, int dim);

    static Expr constant(double v);

    // Pure evaluation. Throws EvalError on division by zero or any
    // non-finite intermediate, pointing at the responsible node.
    double eval(double t, const Vector& x) const;

    // Prints a fully parenthesized form that re-parses to an expression
    // with identical evaluation order.
    std::string to_string() const;

    int dim() const { return dim_; }
    bool valid() const { return root_ != nullptr; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    int dim_ = 0;
};

} // namespace kolmo
