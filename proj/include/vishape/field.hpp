#ifndef VISHAPE_FIELD_HPP
#define VISHAPE_FIELD_HPP

#include <string>
#include <vector>

#include "vishape/expr.hpp"
#include "vishape/geometry.hpp"

namespace vishape {

// C^1 perturbation field on the hold-all box with declared compact support.
// Value and Jacobian come from symbolic expressions; the constructor checks
// the Jacobian against central differences and, when the support box is a
// strict subset of the hold-all, that the field vanishes on its boundary.
class VectorField {
public:
    VectorField() = default;
    VectorField(Expression comp_x, Expression comp_y, Box2 support, Box2 hold_all);

    static VectorField parse(const std::string& x_expr, const std::string& y_expr,
                             Box2 support, Box2 hold_all);
    static VectorField zero(Box2 hold_all);

    Vec2 value(const Vec2& p) const;
    Mat2 jacobian(const Vec2& p) const;
    double divergence(const Vec2& p) const;

    // Same expressions scaled by a constant factor.
    VectorField scaled(double factor) const;

    const Box2& support() const { return support_; }
    const Box2& hold_all() const { return hold_all_; }
    bool is_zero() const;

private:
    Expression fx_, fy_;
    Expression dfx_dx_, dfx_dy_, dfy_dx_, dfy_dy_;
    Box2 support_;
    Box2 hold_all_;
    double scale_ = 1.0;

    void validate() const;
};

// Named perturbation fields used by configs and direction catalogs.
// Kinds: "translation-x", "translation-y", "rotation", "normal-square".
VectorField named_field(const std::string& kind, Vec2 center, double radius, Box2 hold_all);

// +/- x and y translation bumps on a grid of centers; used for descent and
// optimality scans.
std::vector<VectorField> bump_direction_catalog(Box2 region, int nx, int ny, double radius,
                                                Box2 hold_all);

} // namespace vishape

#endif
