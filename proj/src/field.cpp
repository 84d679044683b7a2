#include "vishape/field.hpp"

#include <cmath>

#include "vishape/error.hpp"
#include "vishape/io.hpp"

namespace vishape {

VectorField::VectorField(Expression comp_x, Expression comp_y, Box2 support, Box2 hold_all)
    : fx_(std::move(comp_x)),
      fy_(std::move(comp_y)),
      support_(support),
      hold_all_(hold_all) {
    dfx_dx_ = fx_.dx();
    dfx_dy_ = fx_.dy();
    dfy_dx_ = fy_.dx();
    dfy_dy_ = fy_.dy();
    validate();
}

VectorField VectorField::parse(const std::string& x_expr, const std::string& y_expr,
                               Box2 support, Box2 hold_all) {
    return VectorField(Expression::parse(x_expr), Expression::parse(y_expr), support, hold_all);
}

VectorField VectorField::zero(Box2 hold_all) {
    return VectorField(Expression::constant(0.0), Expression::constant(0.0), hold_all, hold_all);
}

Vec2 VectorField::value(const Vec2& p) const {
    return Vec2{fx_.eval(p), fy_.eval(p)} * scale_;
}

Mat2 VectorField::jacobian(const Vec2& p) const {
    return Mat2{{dfx_dx_.eval(p), dfx_dy_.eval(p), dfy_dx_.eval(p), dfy_dy_.eval(p)}} * scale_;
}

double VectorField::divergence(const Vec2& p) const {
    return (dfx_dx_.eval(p) + dfy_dy_.eval(p)) * scale_;
}

VectorField VectorField::scaled(double factor) const {
    VectorField f = *this;
    f.scale_ *= factor;
    return f;
}

bool VectorField::is_zero() const {
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j) {
            const Vec2 p{support_.x0 + support_.width() * i / 4.0,
                         support_.y0 + support_.height() * j / 4.0};
            if (value(p).norm() != 0.0) return false;
        }
    return true;
}

void VectorField::validate() const {
    // Jacobian vs. central differences on a sample grid.
    const double h = 1e-6 * std::max(support_.width(), support_.height());
    const int n = 7;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            const Vec2 p{support_.x0 + support_.width() * i / n,
                         support_.y0 + support_.height() * j / n};
            const Vec2 vxp = value({p.x + h, p.y}), vxm = value({p.x - h, p.y});
            const Vec2 vyp = value({p.x, p.y + h}), vym = value({p.x, p.y - h});
            const Mat2 fd{{(vxp.x - vxm.x) / (2 * h), (vyp.x - vym.x) / (2 * h),
                           (vxp.y - vxm.y) / (2 * h), (vyp.y - vym.y) / (2 * h)}};
            const Mat2 J = jacobian(p);
            const double scale = 1.0 + J.max_abs();
            if ((J - fd).max_abs() > 1e-5 * scale)
                throw InputError("vector field: symbolic Jacobian disagrees with finite differences at (" +
                                 format_float(p.x) + "," + format_float(p.y) + ")");
        }
    }
    if (!hold_all_.contains({support_.x0, support_.y0}) ||
        !hold_all_.contains({support_.x1, support_.y1}))
        throw InputError("vector field: support box not contained in the hold-all box");

    const bool strict = support_.x0 > hold_all_.x0 + 1e-12 || support_.x1 < hold_all_.x1 - 1e-12 ||
                        support_.y0 > hold_all_.y0 + 1e-12 || support_.y1 < hold_all_.y1 - 1e-12;
    if (!strict) return;
    // Compact support: the field and its Jacobian must vanish on the support boundary.
    double worst = 0.0;
    const int m = 16;
    for (int k = 0; k <= m; ++k) {
        const double tx = support_.x0 + support_.width() * k / m;
        const double ty = support_.y0 + support_.height() * k / m;
        for (const Vec2& p : {Vec2{tx, support_.y0}, Vec2{tx, support_.y1},
                              Vec2{support_.x0, ty}, Vec2{support_.x1, ty}}) {
            worst = std::max(worst, value(p).norm());
            worst = std::max(worst, jacobian(p).max_abs());
        }
    }
    if (worst > 1e-8)
        throw InputError("vector field: declared compact support but field does not vanish on the support boundary");
}

VectorField named_field(const std::string& kind, Vec2 center, double radius, Box2 hold_all) {
    const std::string c = "," + format_float(center.x) + "," + format_float(center.y) + "," +
                          format_float(radius) + ")";
    const std::string b = "bump(x,y" + c;
    Box2 support{center.x - radius, center.x + radius, center.y - radius, center.y + radius};
    if (kind == "translation-x") return VectorField::parse(b, "0", support, hold_all);
    if (kind == "translation-y") return VectorField::parse("0", b, support, hold_all);
    if (kind == "rotation")
        return VectorField::parse("-(y-" + format_float(center.y) + ")*" + b,
                                  "(x-" + format_float(center.x) + ")*" + b, support, hold_all);
    if (kind == "normal-square") {
        // Pushes the right edge of the unit square outward, mollified around `center`.
        return VectorField::parse(b, "0", support, hold_all);
    }
    throw InputError("unknown named field kind '" + kind + "'");
}

std::vector<VectorField> bump_direction_catalog(Box2 region, int nx, int ny, double radius,
                                                Box2 hold_all) {
    std::vector<VectorField> fields;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec2 c{region.x0 + region.width() * (i + 0.5) / nx,
                         region.y0 + region.height() * (j + 0.5) / ny};
            for (const char* kind : {"translation-x", "translation-y"}) {
                VectorField f = named_field(kind, c, radius, hold_all);
                fields.push_back(f);
                fields.push_back(f.scaled(-1.0));
            }
        }
    }
    return fields;
}

} // namespace vishape
