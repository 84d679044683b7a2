#include "vishape/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "vishape/error.hpp"

namespace vishape {
namespace detail {

enum class Op {
    Const, VarX, VarY,
    Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Exp,
    Bump,    // args: ax, ay; constants cx, cy, r
    BumpRad, // k-th derivative of the radial profile w.r.t. s = |(a)-(c)|^2/r^2
};

struct ExprNode {
    Op op;
    double value = 0.0; // Const
    ExprPtr a, b;       // operands
    double cx = 0.0, cy = 0.0, r = 1.0;
    int rad_order = 0; // BumpRad

    explicit ExprNode(Op o) : op(o) {}
};

namespace {

ExprPtr make_const(double v) {
    auto n = std::make_shared<ExprNode>(Op::Const);
    n->value = v;
    return n;
}

bool is_const(const ExprPtr& e, double v) {
    return e->op == Op::Const && e->value == v;
}

ExprPtr make_binary(Op op, ExprPtr a, ExprPtr b) {
    // Constant folding and unit/zero simplification keep derivative trees small.
    if (a->op == Op::Const && b->op == Op::Const) {
        switch (op) {
            case Op::Add: return make_const(a->value + b->value);
            case Op::Sub: return make_const(a->value - b->value);
            case Op::Mul: return make_const(a->value * b->value);
            case Op::Div: return make_const(a->value / b->value);
            case Op::Pow: return make_const(std::pow(a->value, b->value));
            default: break;
        }
    }
    switch (op) {
        case Op::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case Op::Sub:
            if (is_const(b, 0.0)) return a;
            break;
        case Op::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case Op::Div:
            if (is_const(a, 0.0)) return make_const(0.0);
            if (is_const(b, 1.0)) return a;
            break;
        case Op::Pow:
            if (is_const(b, 1.0)) return a;
            if (is_const(b, 0.0)) return make_const(1.0);
            break;
        default:
            break;
    }
    auto n = std::make_shared<ExprNode>(op);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

ExprPtr make_unary(Op op, ExprPtr a) {
    if (a->op == Op::Const) {
        switch (op) {
            case Op::Neg: return make_const(-a->value);
            case Op::Sin: return make_const(std::sin(a->value));
            case Op::Cos: return make_const(std::cos(a->value));
            case Op::Exp: return make_const(std::exp(a->value));
            default: break;
        }
    }
    auto n = std::make_shared<ExprNode>(op);
    n->a = std::move(a);
    return n;
}

// Radial profile f(s) = exp(1 - 1/(1-s)) on [0,1) and its s-derivatives.
double bump_radial(double s, int order) {
    if (s >= 1.0 - 1e-12) return 0.0;
    const double q = 1.0 / (1.0 - s);
    const double f = std::exp(1.0 - q);
    const double h = -q * q;        // f'/f
    const double h1 = -2.0 * q * q * q;
    const double h2 = -6.0 * q * q * q * q;
    switch (order) {
        case 0: return f;
        case 1: return f * h;
        case 2: return f * (h * h + h1);
        case 3: return f * (h * h * h + 3.0 * h * h1 + h2);
        default:
            throw InputError("mollifier derivative order > 3 not supported");
    }
}

double eval_node(const ExprNode& n, double x, double y) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::VarX: return x;
        case Op::VarY: return y;
        case Op::Add: return eval_node(*n.a, x, y) + eval_node(*n.b, x, y);
        case Op::Sub: return eval_node(*n.a, x, y) - eval_node(*n.b, x, y);
        case Op::Mul: return eval_node(*n.a, x, y) * eval_node(*n.b, x, y);
        case Op::Div: return eval_node(*n.a, x, y) / eval_node(*n.b, x, y);
        case Op::Pow: return std::pow(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
        case Op::Neg: return -eval_node(*n.a, x, y);
        case Op::Sin: return std::sin(eval_node(*n.a, x, y));
        case Op::Cos: return std::cos(eval_node(*n.a, x, y));
        case Op::Exp: return std::exp(eval_node(*n.a, x, y));
        case Op::Bump:
        case Op::BumpRad: {
            const double ax = eval_node(*n.a, x, y);
            const double ay = eval_node(*n.b, x, y);
            const double dx = ax - n.cx, dy = ay - n.cy;
            const double s = (dx * dx + dy * dy) / (n.r * n.r);
            return bump_radial(s, n.op == Op::Bump ? 0 : n.rad_order);
        }
    }
    return 0.0;
}

ExprPtr diff_node(const ExprPtr& n, int var);

ExprPtr diff_bump(const ExprPtr& n, int var, int order) {
    // d/dv f(s) = f'(s) * ds/dv, ds/dv = (2(ax-cx) ax' + 2(ay-cy) ay')/r^2.
    auto rad = std::make_shared<ExprNode>(Op::BumpRad);
    rad->a = n->a;
    rad->b = n->b;
    rad->cx = n->cx;
    rad->cy = n->cy;
    rad->r = n->r;
    rad->rad_order = order + 1;
    ExprPtr dax = diff_node(n->a, var);
    ExprPtr day = diff_node(n->b, var);
    ExprPtr sx = make_binary(Op::Mul, make_binary(Op::Sub, n->a, make_const(n->cx)), dax);
    ExprPtr sy = make_binary(Op::Mul, make_binary(Op::Sub, n->b, make_const(n->cy)), day);
    ExprPtr ds = make_binary(Op::Mul, make_const(2.0 / (n->r * n->r)),
                             make_binary(Op::Add, sx, sy));
    return make_binary(Op::Mul, ExprPtr(rad), ds);
}

ExprPtr diff_node(const ExprPtr& n, int var) {
    switch (n->op) {
        case Op::Const: return make_const(0.0);
        case Op::VarX: return make_const(var == 0 ? 1.0 : 0.0);
        case Op::VarY: return make_const(var == 1 ? 1.0 : 0.0);
        case Op::Add: return make_binary(Op::Add, diff_node(n->a, var), diff_node(n->b, var));
        case Op::Sub: return make_binary(Op::Sub, diff_node(n->a, var), diff_node(n->b, var));
        case Op::Mul:
            return make_binary(Op::Add,
                               make_binary(Op::Mul, diff_node(n->a, var), n->b),
                               make_binary(Op::Mul, n->a, diff_node(n->b, var)));
        case Op::Div:
            // (a/b)' = a'/b - a b'/b^2
            return make_binary(Op::Sub,
                               make_binary(Op::Div, diff_node(n->a, var), n->b),
                               make_binary(Op::Div, make_binary(Op::Mul, n->a, diff_node(n->b, var)),
                                           make_binary(Op::Mul, n->b, n->b)));
        case Op::Pow: {
            if (n->b->op != Op::Const)
                throw InputError("differentiation requires a constant exponent");
            const double c = n->b->value;
            return make_binary(Op::Mul, make_const(c),
                               make_binary(Op::Mul,
                                           make_binary(Op::Pow, n->a, make_const(c - 1.0)),
                                           diff_node(n->a, var)));
        }
        case Op::Neg: return make_unary(Op::Neg, diff_node(n->a, var));
        case Op::Sin:
            return make_binary(Op::Mul, make_unary(Op::Cos, n->a), diff_node(n->a, var));
        case Op::Cos:
            return make_binary(Op::Mul, make_unary(Op::Neg, make_unary(Op::Sin, n->a)),
                               diff_node(n->a, var));
        case Op::Exp:
            return make_binary(Op::Mul, make_unary(Op::Exp, n->a), diff_node(n->a, var));
        case Op::Bump: return diff_bump(n, var, 0);
        case Op::BumpRad: return diff_bump(n, var, n->rad_order);
    }
    return make_const(0.0);
}

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    ExprPtr run() {
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("syntax error at offset " + std::to_string(pos_), int(pos_));
        return e;
    }

private:
    const std::string& text_;
    size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c))
            throw ParseError(std::string("syntax error at offset ") + std::to_string(pos_) +
                                 ": expected '" + c + "'",
                             int(pos_));
    }

    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        for (;;) {
            if (accept('+'))
                e = make_binary(Op::Add, e, parse_term());
            else if (accept('-'))
                e = make_binary(Op::Sub, e, parse_term());
            else
                return e;
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        for (;;) {
            if (accept('*'))
                e = make_binary(Op::Mul, e, parse_factor());
            else if (accept('/'))
                e = make_binary(Op::Div, e, parse_factor());
            else
                return e;
        }
    }

    ExprPtr parse_factor() {
        ExprPtr base = parse_unary();
        if (accept('^')) return make_binary(Op::Pow, base, parse_factor());
        return base;
    }

    ExprPtr parse_unary() {
        if (accept('-')) return make_unary(Op::Neg, parse_factor());
        if (accept('+')) return parse_factor();
        return parse_primary();
    }

    ExprPtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("syntax error at offset " + std::to_string(pos_) + ": unexpected end of input",
                             int(pos_));
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        if (accept('(')) {
            ExprPtr e = parse_expr();
            expect(')');
            return e;
        }
        throw ParseError("syntax error at offset " + std::to_string(pos_), int(pos_));
    }

    ExprPtr parse_number() {
        size_t end = pos_;
        const char* begin = text_.c_str() + pos_;
        char* stop = nullptr;
        const double v = std::strtod(begin, &stop);
        if (stop == begin)
            throw ParseError("syntax error at offset " + std::to_string(pos_) + ": bad number", int(pos_));
        end = pos_ + size_t(stop - begin);
        pos_ = end;
        return make_const(v);
    }

    ExprPtr parse_identifier() {
        const size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name = text_.substr(start, pos_ - start);
        if (name == "x") {
            return std::make_shared<ExprNode>(Op::VarX);
        }
        if (name == "y") {
            return std::make_shared<ExprNode>(Op::VarY);
        }
        if (name == "pi") return make_const(3.14159265358979323846);
        if (name == "sin" || name == "cos" || name == "exp") {
            expect('(');
            ExprPtr arg = parse_expr();
            expect(')');
            const Op op = name == "sin" ? Op::Sin : name == "cos" ? Op::Cos : Op::Exp;
            return make_unary(op, arg);
        }
        if (name == "bump") {
            expect('(');
            ExprPtr ax = parse_expr();
            expect(',');
            ExprPtr ay = parse_expr();
            expect(',');
            ExprPtr cx = parse_expr();
            expect(',');
            ExprPtr cy = parse_expr();
            expect(',');
            ExprPtr r = parse_expr();
            expect(')');
            if (cx->op != Op::Const || cy->op != Op::Const || r->op != Op::Const)
                throw ParseError("syntax error at offset " + std::to_string(start) +
                                     ": bump center and radius must be constants",
                                 int(start));
            if (r->value <= 0.0)
                throw ParseError("syntax error at offset " + std::to_string(start) +
                                     ": bump radius must be positive",
                                 int(start));
            auto n = std::make_shared<ExprNode>(Op::Bump);
            n->a = ax;
            n->b = ay;
            n->cx = cx->value;
            n->cy = cy->value;
            n->r = r->value;
            return n;
        }
        throw ParseError("unknown identifier '" + name + "' at offset " + std::to_string(start),
                         int(start));
    }
};

} // namespace
} // namespace detail

Expression Expression::parse(const std::string& text) {
    detail::Parser p(text);
    Expression e;
    e.root_ = p.run();
    e.source_ = text;
    return e;
}

Expression Expression::constant(double v) {
    Expression e;
    e.root_ = detail::make_const(v);
    e.source_ = std::to_string(v);
    return e;
}

double Expression::eval(double x, double y) const {
    if (!root_) throw InputError("evaluating an empty expression");
    return detail::eval_node(*root_, x, y);
}

Expression Expression::dx() const {
    if (!root_) throw InputError("differentiating an empty expression");
    Expression e;
    e.root_ = detail::diff_node(root_, 0);
    e.source_ = "d/dx(" + source_ + ")";
    return e;
}

Expression Expression::dy() const {
    if (!root_) throw InputError("differentiating an empty expression");
    Expression e;
    e.root_ = detail::diff_node(root_, 1);
    e.source_ = "d/dy(" + source_ + ")";
    return e;
}

} // namespace vishape
