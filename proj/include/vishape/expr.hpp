#ifndef VISHAPE_EXPR_HPP
#define VISHAPE_EXPR_HPP

#include <memory>
#include <stdexcept>
#include <string>

#include "vishape/geometry.hpp"

namespace vishape {

namespace detail {
struct ExprNode;
}
using ExprPtr = std::shared_ptr<const detail::ExprNode>;

// Scalar expression in the variables x, y.
//
// Grammar: + - * / ^ (right-assoc), parentheses, numeric literals,
// functions sin, cos, exp, and the compact-support mollifier
// bump(ax, ay, cx, cy, r) which is 1 at (cx,cy) and vanishes with all
// derivatives on the circle of radius r.
class Expression {
public:
    Expression() = default;

    static Expression parse(const std::string& text);
    static Expression constant(double v);

    double eval(double x, double y) const;
    double eval(const Vec2& p) const { return eval(p.x, p.y); }

    // Symbolic partial derivatives.
    Expression dx() const;
    Expression dy() const;

    bool empty() const { return root_ == nullptr; }
    const std::string& source() const { return source_; }

private:
    explicit Expression(ExprPtr root, std::string source = {})
        : root_(std::move(root)), source_(std::move(source)) {}
    ExprPtr root_;
    std::string source_;
};

// Parse failure; offset is the byte position in the source text.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, int offset_)
        : std::runtime_error(what), offset(offset_) {}
    int offset;
};

} // namespace vishape

#endif
