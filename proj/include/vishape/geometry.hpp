#ifndef VISHAPE_GEOMETRY_HPP
#define VISHAPE_GEOMETRY_HPP

#include <array>
#include <cmath>

namespace vishape {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// 2x2 matrix, row-major: a[0]=m00, a[1]=m01, a[2]=m10, a[3]=m11.
struct Mat2 {
    std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};

    static Mat2 identity() { return Mat2{{1.0, 0.0, 0.0, 1.0}}; }
    static Mat2 zero() { return Mat2{}; }

    double& operator()(int i, int j) { return a[2 * i + j]; }
    double operator()(int i, int j) const { return a[2 * i + j]; }

    Mat2 operator+(const Mat2& o) const {
        return Mat2{{a[0] + o.a[0], a[1] + o.a[1], a[2] + o.a[2], a[3] + o.a[3]}};
    }
    Mat2 operator-(const Mat2& o) const {
        return Mat2{{a[0] - o.a[0], a[1] - o.a[1], a[2] - o.a[2], a[3] - o.a[3]}};
    }
    Mat2 operator*(double s) const {
        return Mat2{{a[0] * s, a[1] * s, a[2] * s, a[3] * s}};
    }
    Mat2 operator*(const Mat2& o) const {
        return Mat2{{a[0] * o.a[0] + a[1] * o.a[2], a[0] * o.a[1] + a[1] * o.a[3],
                     a[2] * o.a[0] + a[3] * o.a[2], a[2] * o.a[1] + a[3] * o.a[3]}};
    }
    Vec2 operator*(const Vec2& v) const {
        return {a[0] * v.x + a[1] * v.y, a[2] * v.x + a[3] * v.y};
    }

    double det() const { return a[0] * a[3] - a[1] * a[2]; }
    double trace() const { return a[0] + a[3]; }
    Mat2 transpose() const { return Mat2{{a[0], a[2], a[1], a[3]}}; }
    Mat2 inverse() const {
        const double d = det();
        return Mat2{{a[3] / d, -a[1] / d, -a[2] / d, a[0] / d}};
    }
    Mat2 sym() const {
        const double off = 0.5 * (a[1] + a[2]);
        return Mat2{{a[0], off, off, a[3]}};
    }
    double max_abs() const {
        return std::max(std::max(std::fabs(a[0]), std::fabs(a[1])),
                        std::max(std::fabs(a[2]), std::fabs(a[3])));
    }
    // Frobenius inner product A:B.
    double ddot(const Mat2& o) const {
        return a[0] * o.a[0] + a[1] * o.a[1] + a[2] * o.a[2] + a[3] * o.a[3];
    }
    // Smallest eigenvalue of the symmetric part.
    double min_eig_sym() const {
        const Mat2 s = sym();
        const double m = 0.5 * (s.a[0] + s.a[3]);
        const double d = 0.5 * (s.a[0] - s.a[3]);
        return m - std::sqrt(d * d + s.a[1] * s.a[1]);
    }
};

inline Mat2 operator*(double s, const Mat2& m) { return m * s; }

// Outer product u v^T.
inline Mat2 outer(const Vec2& u, const Vec2& v) {
    return Mat2{{u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y}};
}

// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Box2 {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

    bool contains(const Vec2& p, double pad = 0.0) const {
        return p.x >= x0 - pad && p.x <= x1 + pad && p.y >= y0 - pad && p.y <= y1 + pad;
    }
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

} // namespace vishape

#endif
