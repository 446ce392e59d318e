#include "kolmo/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <utility>

namespace kolmo {

namespace {

enum class Op {
    num,
    var_t,
    var_x,   // index in `ival`
    neg,
    add,
    sub,
    mul,
    divide,
    pow_int, // exponent in `ival`
    f_sin,
    f_cos,
    f_exp,
    f_tanh,
    f_abs,
    f_min,
    f_max,
};

} // namespace

struct Expr::Node {
    Op op;
    double value = 0.0;
    int ival = 0;
    std::size_t offset = 0; // byte offset in the source, for diagnostics
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_node(Op op, std::size_t off, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->offset = off;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

// Integer power by repeated squaring; k >= 0.
double pow_uint(double base, unsigned k) {
    double result = 1.0;
    while (k) {
        if (k & 1u) result *= base;
        base *= base;
        k >>= 1u;
    }
    return result;
}

class Parser {
public:
    Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

    NodePtr parse() {
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view src_;
    int dim_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < src_.size() && src_[pos_] == c;
    }

    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            skip_ws();
            const std::size_t off = pos_;
            if (accept('+'))
                lhs = make_node(Op::add, off, lhs, parse_term());
            else if (accept('-'))
                lhs = make_node(Op::sub, off, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            skip_ws();
            const std::size_t off = pos_;
            if (accept('*'))
                lhs = make_node(Op::mul, off, lhs, parse_unary());
            else if (accept('/'))
                lhs = make_node(Op::divide, off, lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary() {
        skip_ws();
        const std::size_t off = pos_;
        if (accept('-'))
            return make_node(Op::neg, off, parse_unary());
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        while (peek('^')) {
            const std::size_t off = pos_;
            ++pos_; // consume '^'
            auto n = make_node(Op::pow_int, off, base);
            const_cast<Expr::Node*>(n.get())->ival = parse_int_literal();
            base = n;
        }
        return base;
    }

    int parse_int_literal() {
        skip_ws();
        const std::size_t off = pos_;
        bool negative = false;
        if (pos_ < src_.size() && src_[pos_] == '-') {
            negative = true;
            ++pos_;
        }
        if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
            throw ParseError("exponent must be an integer literal", off);
        long v = 0;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            v = v * 10 + (src_[pos_] - '0');
            if (v > 1000000)
                throw ParseError("exponent too large", off);
            ++pos_;
        }
        return negative ? static_cast<int>(-v) : static_cast<int>(v);
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size())
            throw ParseError("unexpected end of input", pos_);
        const std::size_t off = pos_;
        const char c = src_[pos_];

        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)))
            return parse_identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", off);
    }

    NodePtr parse_number() {
        const std::size_t off = pos_;
        std::size_t end = pos_;
        while (end < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.'))
            ++end;
        // optional exponent part, e.g. 1.5e-3
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
            std::size_t e = end + 1;
            if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
            if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
                ++e;
                while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) ++e;
                end = e;
            }
        }
        const std::string text(src_.substr(off, end - off));
        char* parse_end = nullptr;
        const double v = std::strtod(text.c_str(), &parse_end);
        if (parse_end != text.c_str() + text.size())
            throw ParseError("malformed number '" + text + "'", off);
        pos_ = end;
        auto n = make_node(Op::num, off);
        const_cast<Expr::Node*>(n.get())->value = v;
        return n;
    }

    NodePtr parse_identifier() {
        const std::size_t off = pos_;
        std::size_t end = pos_;
        while (end < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
            ++end;
        const std::string name(src_.substr(off, end - off));
        pos_ = end;

        if (name == "t")
            return make_node(Op::var_t, off);

        if (name.size() >= 2 && name[0] == 'x') {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
            if (digits) {
                const int idx = std::atoi(name.c_str() + 1);
                if (idx < 1 || idx > dim_)
                    throw ParseError("unknown identifier '" + name + "' (dimension is " +
                                         std::to_string(dim_) + ")",
                                     off);
                auto n = make_node(Op::var_x, off);
                const_cast<Expr::Node*>(n.get())->ival = idx - 1;
                return n;
            }
        }

        Op op;
        bool binary = false;
        if (name == "sin") op = Op::f_sin;
        else if (name == "cos") op = Op::f_cos;
        else if (name == "exp") op = Op::f_exp;
        else if (name == "tanh") op = Op::f_tanh;
        else if (name == "abs") op = Op::f_abs;
        else if (name == "min") { op = Op::f_min; binary = true; }
        else if (name == "max") { op = Op::f_max; binary = true; }
        else throw ParseError("unknown identifier '" + name + "'", off);

        expect('(');
        NodePtr a = parse_expr();
        NodePtr b;
        if (binary) {
            if (!accept(','))
                throw ParseError(name + " takes two arguments", pos_);
            b = parse_expr();
        } else if (peek(',')) {
            throw ParseError(name + " takes one argument", pos_);
        }
        expect(')');
        return make_node(op, off, a, b);
    }
};

double eval_node(const Expr::Node& n, double t, const Vector& x) {
    auto check = [&n](double v) {
        if (!std::isfinite(v))
            throw EvalError("non-finite value", n.offset);
        return v;
    };
    switch (n.op) {
        case Op::num: return n.value;
        case Op::var_t: return t;
        case Op::var_x: return x[n.ival];
        case Op::neg: return -eval_node(*n.a, t, x);
        case Op::add: return check(eval_node(*n.a, t, x) + eval_node(*n.b, t, x));
        case Op::sub: return check(eval_node(*n.a, t, x) - eval_node(*n.b, t, x));
        case Op::mul: return check(eval_node(*n.a, t, x) * eval_node(*n.b, t, x));
        case Op::divide: {
            const double num = eval_node(*n.a, t, x);
            const double den = eval_node(*n.b, t, x);
            if (den == 0.0)
                throw EvalError("division by zero", n.offset);
            return check(num / den);
        }
        case Op::pow_int: {
            const double base = eval_node(*n.a, t, x);
            if (n.ival >= 0) return check(pow_uint(base, static_cast<unsigned>(n.ival)));
            const double p = pow_uint(base, static_cast<unsigned>(-n.ival));
            if (p == 0.0)
                throw EvalError("division by zero in negative power", n.offset);
            return check(1.0 / p);
        }
        case Op::f_sin: return std::sin(eval_node(*n.a, t, x));
        case Op::f_cos: return std::cos(eval_node(*n.a, t, x));
        case Op::f_exp: return check(std::exp(eval_node(*n.a, t, x)));
        case Op::f_tanh: return std::tanh(eval_node(*n.a, t, x));
        case Op::f_abs: return std::abs(eval_node(*n.a, t, x));
        case Op::f_min: {
            const double a = eval_node(*n.a, t, x);
            const double b = eval_node(*n.b, t, x);
            return a < b ? a : b;
        }
        case Op::f_max: {
            const double a = eval_node(*n.a, t, x);
            const double b = eval_node(*n.b, t, x);
            return a > b ? a : b;
        }
    }
    throw EvalError("corrupt expression node", n.offset);
}

void print_node(const Expr::Node& n, std::string& out) {
    auto fn = [&](const char* name) {
        out += name;
        out += '(';
        print_node(*n.a, out);
        if (n.b) {
            out += ',';
            print_node(*n.b, out);
        }
        out += ')';
    };
    switch (n.op) {
        case Op::num: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", n.value);
            out += buf;
            return;
        }
        case Op::var_t: out += 't'; return;
        case Op::var_x: out += 'x' + std::to_string(n.ival + 1); return;
        case Op::neg:
            out += "(-";
            print_node(*n.a, out);
            out += ')';
            return;
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::divide: {
            const char sym = n.op == Op::add ? '+' : n.op == Op::sub ? '-' : n.op == Op::mul ? '*' : '/';
            out += '(';
            print_node(*n.a, out);
            out += sym;
            print_node(*n.b, out);
            out += ')';
            return;
        }
        case Op::pow_int:
            out += '(';
            print_node(*n.a, out);
            out += '^';
            out += std::to_string(n.ival);
            out += ')';
            return;
        case Op::f_sin: fn("sin"); return;
        case Op::f_cos: fn("cos"); return;
        case Op::f_exp: fn("exp"); return;
        case Op::f_tanh: fn("tanh"); return;
        case Op::f_abs: fn("abs"); return;
        case Op::f_min: fn("min"); return;
        case Op::f_max: fn("max"); return;
    }
}

} // namespace

Expr Expr::parse(std::string_view source, int dim) {
    if (dim < 1)
        throw Error("expression dimension must be >= 1");
    Parser p(source, dim);
    Expr e;
    e.root_ = p.parse();
    e.dim_ = dim;
    return e;
}

Expr Expr::constant(double v) {
    Expr e;
    auto n = std::make_shared<Node>();
    n->op = Op::num;
    n->value = v;
    e.root_ = n;
    e.dim_ = 1;
    return e;
}

double Expr::eval(double t, const Vector& x) const {
    if (!root_)
        throw Error("evaluating empty expression");
    return eval_node(*root_, t, x);
}

std::string Expr::to_string() const {
    if (!root_) return "";
    std::string out;
    print_node(*root_, out);
    return out;
}

} // namespace kolmo
