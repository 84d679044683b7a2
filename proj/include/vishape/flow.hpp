#ifndef VISHAPE_FLOW_HPP
#define VISHAPE_FLOW_HPP

#include <optional>
#include <vector>

#include "vishape/field.hpp"
#include "vishape/geometry.hpp"

namespace vishape {

// Point image and Jacobian of the flow at one parameter value.
struct FlowSample {
    Vec2 point;
    Mat2 jacobian; // of the flow map, not of the field
};

// Deterministic fixed-step 4th order integration of the flow ODE together
// with its variational system. Step count: ceil(|t|/1e-3), at least 16.
FlowSample integrate_flow(const VectorField& X, double t, const Vec2& x0);

// Flow map at a frozen parameter value; cheap to copy, pure evaluations.
class FlowMap {
public:
    FlowMap(const VectorField& X, double t) : field_(&X), t_(t) {}

    Vec2 operator()(const Vec2& p) const { return integrate_flow(*field_, t_, p).point; }
    FlowSample sample(const Vec2& p) const { return integrate_flow(*field_, t_, p); }
    double t() const { return t_; }

private:
    const VectorField* field_;
    double t_;
};

// Transport factors of the perturbed bilinear forms:
//   xi = det(dPhi_t), A = xi * dPhi_t^{-1} dPhi_t^{-T} (symmetrised).
struct PullbackCoefficients {
    std::vector<Mat2> A;
    std::vector<double> xi;
    std::vector<Mat2> inv_jacobian; // dPhi_t^{-1}, needed by the strain pullback
    std::vector<Vec2> mapped;       // Phi_t(p) for data transported by composition
};

PullbackCoefficients pullback_coeffs(const VectorField& X, double t, const std::vector<Vec2>& points);

// First-order expansions at t = 0:
//   dA/dt(0) = div(X) I - dX - dX^T,  dxi/dt(0) = div(X).
Mat2 pullback_a_prime(const VectorField& X, const Vec2& p);
double pullback_xi_prime(const VectorField& X, const Vec2& p);

struct FirstOrderCoefficients {
    std::vector<Mat2> a_prime;
    std::vector<double> xi_prime;
};
FirstOrderCoefficients first_order_coeffs(const VectorField& X, const std::vector<Vec2>& points);

// Largest parameter (up to limit) for which xi >= 1/2 and A >= 1/2 I hold on a
// sample grid of the support box; found by bisection, possibly conservative.
double compute_validity_time(const VectorField& X, double limit = 1.0);

// Sup-norm first-order remainders of the flow expansion over a sample grid:
//   e1 = |(dPhi_t - I)/t - dX|, e2 = |(xi - 1)/t - div X|, e3 = |(A - I)/t - A'(0)|.
struct FlowRateRow {
    double t;
    double e_jacobian;
    double e_determinant;
    double e_pullback;
};

struct FlowRateReport {
    std::vector<FlowRateRow> rows;
    // Log-log slopes; absent when fewer than two usable points.
    std::optional<double> slope_jacobian, slope_determinant, slope_pullback;
};

FlowRateReport verify_flow_rates(const VectorField& X, const std::vector<double>& t_sequence);

// Least-squares slope of log(e) vs log(t); ignores zero errors. Returns
// nullopt when fewer than two usable points remain.
std::optional<double> fit_loglog_slope(const std::vector<double>& t, const std::vector<double>& e);

} // namespace vishape

#endif
