#include "vishape/flow.hpp"

#include <cmath>

#include "vishape/error.hpp"
#include "vishape/io.hpp"

namespace vishape {

namespace {

struct State {
    Vec2 p;
    Mat2 J;
};

State derivative(const VectorField& X, const State& s) {
    return State{X.value(s.p), X.jacobian(s.p) * s.J};
}

State axpy(const State& s, double a, const State& d) {
    State r;
    r.p = s.p + d.p * a;
    r.J = s.J + d.J * a;
    return r;
}

} // namespace

FlowSample integrate_flow(const VectorField& X, double t, const Vec2& x0) {
    if (t == 0.0) return FlowSample{x0, Mat2::identity()};
    const int steps = std::max(16, static_cast<int>(std::ceil(std::fabs(t) / 1e-3)));
    const double h = t / steps;
    State s{x0, Mat2::identity()};
    for (int k = 0; k < steps; ++k) {
        const State k1 = derivative(X, s);
        const State k2 = derivative(X, axpy(s, 0.5 * h, k1));
        const State k3 = derivative(X, axpy(s, 0.5 * h, k2));
        const State k4 = derivative(X, axpy(s, h, k3));
        s.p = s.p + (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p) * (h / 6.0);
        s.J = s.J + (k1.J + 2.0 * k2.J + 2.0 * k3.J + k4.J) * (h / 6.0);
        if (!X.hold_all().contains(s.p, 1e-12))
            throw SolverError("flow trajectory left the hold-all box at (" + format_float(s.p.x) +
                              "," + format_float(s.p.y) + ")");
    }
    return FlowSample{s.p, s.J};
}

PullbackCoefficients pullback_coeffs(const VectorField& X, double t,
                                     const std::vector<Vec2>& points) {
    PullbackCoefficients out;
    out.A.reserve(points.size());
    out.xi.reserve(points.size());
    out.inv_jacobian.reserve(points.size());
    out.mapped.reserve(points.size());
    for (const Vec2& p : points) {
        const FlowSample s = integrate_flow(X, t, p);
        const double xi = s.jacobian.det();
        if (xi <= 0.5)
            throw SolverError("pullback outside validity regime: det(dPhi) = " + format_float(xi) +
                              " <= 1/2 at (" + format_float(p.x) + "," + format_float(p.y) + ")");
        const Mat2 inv = s.jacobian.inverse();
        out.A.push_back((xi * (inv * inv.transpose())).sym());
        out.xi.push_back(xi);
        out.inv_jacobian.push_back(inv);
        out.mapped.push_back(s.point);
    }
    return out;
}

Mat2 pullback_a_prime(const VectorField& X, const Vec2& p) {
    const Mat2 dX = X.jacobian(p);
    const double div = dX.trace();
    Mat2 A = Mat2::identity() * div - dX - dX.transpose();
    return A.sym();
}

double pullback_xi_prime(const VectorField& X, const Vec2& p) { return X.divergence(p); }

FirstOrderCoefficients first_order_coeffs(const VectorField& X, const std::vector<Vec2>& points) {
    FirstOrderCoefficients out;
    out.a_prime.reserve(points.size());
    out.xi_prime.reserve(points.size());
    for (const Vec2& p : points) {
        out.a_prime.push_back(pullback_a_prime(X, p));
        out.xi_prime.push_back(pullback_xi_prime(X, p));
    }
    return out;
}

double compute_validity_time(const VectorField& X, double limit) {
    const Box2 box = X.support();
    std::vector<Vec2> grid;
    const int n = 12;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            grid.push_back({box.x0 + box.width() * i / n, box.y0 + box.height() * j / n});

    auto valid = [&](double t) {
        for (const Vec2& p : grid) {
            const FlowSample s = integrate_flow(X, t, p);
            const double xi = s.jacobian.det();
            if (xi < 0.5) return false;
            const Mat2 inv = s.jacobian.inverse();
            const Mat2 A = (xi * (inv * inv.transpose())).sym();
            if (A.min_eig_sym() < 0.5) return false;
        }
        return true;
    };

    if (valid(limit)) return limit;
    double lo = 0.0, hi = limit;
    for (int it = 0; it < 24; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (valid(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

FlowRateReport verify_flow_rates(const VectorField& X, const std::vector<double>& t_sequence) {
    const Box2 box = X.support();
    std::vector<Vec2> grid;
    const int n = 10;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            grid.push_back({box.x0 + box.width() * i / n, box.y0 + box.height() * j / n});

    FlowRateReport report;
    for (double t : t_sequence) {
        if (t <= 0.0) throw InputError("verify_flow_rates: t values must be positive");
        FlowRateRow row{t, 0.0, 0.0, 0.0};
        for (const Vec2& p : grid) {
            const FlowSample s = integrate_flow(X, t, p);
            const Mat2 dX = X.jacobian(p);
            const double xi = s.jacobian.det();
            const Mat2 inv = s.jacobian.inverse();
            const Mat2 A = (xi * (inv * inv.transpose())).sym();

            row.e_jacobian = std::max(row.e_jacobian,
                                      ((s.jacobian - Mat2::identity()) * (1.0 / t) - dX).max_abs());
            row.e_determinant =
                std::max(row.e_determinant, std::fabs((xi - 1.0) / t - dX.trace()));
            row.e_pullback = std::max(
                row.e_pullback,
                ((A - Mat2::identity()) * (1.0 / t) - pullback_a_prime(X, p)).max_abs());
        }
        report.rows.push_back(row);
    }

    std::vector<double> ts, e1, e2, e3;
    for (const auto& r : report.rows) {
        ts.push_back(r.t);
        e1.push_back(r.e_jacobian);
        e2.push_back(r.e_determinant);
        e3.push_back(r.e_pullback);
    }
    report.slope_jacobian = fit_loglog_slope(ts, e1);
    report.slope_determinant = fit_loglog_slope(ts, e2);
    report.slope_pullback = fit_loglog_slope(ts, e3);
    return report;
}

std::optional<double> fit_loglog_slope(const std::vector<double>& t, const std::vector<double>& e) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < t.size() && i < e.size(); ++i) {
        if (t[i] > 0.0 && e[i] > 0.0) {
            lx.push_back(std::log(t[i]));
            ly.push_back(std::log(e[i]));
        }
    }
    if (lx.size() < 2) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(lx.size());
    for (size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::fabs(denom) < 1e-30) return std::nullopt;
    return (n * sxy - sx * sy) / denom;
}

} // namespace vishape
