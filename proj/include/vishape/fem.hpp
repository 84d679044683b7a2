#ifndef VISHAPE_FEM_HPP
#define VISHAPE_FEM_HPP

#include <functional>
#include <utility>
#include <vector>

#include "vishape/field.hpp"
#include "vishape/flow.hpp"
#include "vishape/mesh.hpp"
#include "vishape/sparse.hpp"

namespace vishape {

// Three-point rules with weight |T|/3: Vertex pairs naturally with nodal
// obstacle constraints, Midpoint is exact for quadratics.
enum class Quadrature { Vertex, Midpoint };

// One quadrature point with its reference and transported positions.
struct DensityPoint {
    int elem = 0;
    int local = 0;
    Quadrature rule = Quadrature::Vertex;
    Vec2 x;        // position on the mesh
    Vec2 x_mapped; // Phi_t(x); equals x without transport
};

// Transport factors evaluated at all six canonical points per element
// (3 vertices, 3 edge midpoints). Empty vectors mean the identity transport.
struct TransportData {
    double t = 0.0;
    std::vector<Mat2> A;        // 6 per element
    std::vector<double> xi;     // 6 per element
    std::vector<Mat2> inv_jac;  // dPhi_t^{-1}, 6 per element
    std::vector<Vec2> mapped;   // Phi_t(x), 6 per element

    bool identity() const { return A.empty(); }
    int index(int elem, Quadrature rule, int local) const {
        return 6 * elem + (rule == Quadrature::Midpoint ? 3 : 0) + local;
    }
    Mat2 a_at(int elem, Quadrature rule, int local) const {
        return identity() ? Mat2::identity() : A[index(elem, rule, local)];
    }
    double xi_at(int elem, Quadrature rule, int local) const {
        return identity() ? 1.0 : xi[index(elem, rule, local)];
    }
    Mat2 inv_jac_at(int elem, Quadrature rule, int local) const {
        return identity() ? Mat2::identity() : inv_jac[index(elem, rule, local)];
    }
};

Vec2 quad_point(const Mesh& mesh, int elem, Quadrature rule, int local);
// P1 value of a nodal field at a canonical quadrature point.
double p1_value(const Mesh& mesh, const NodalField& f, int elem, Quadrature rule, int local);

TransportData identity_transport();
TransportData pullback_transport(const Mesh& mesh, const VectorField& X, double t);
// First-order data at the same canonical points: A'(0), xi'(0), dX.
struct FirstOrderTransport {
    std::vector<Mat2> a_prime;   // 6 per element
    std::vector<double> xi_prime;
    std::vector<Mat2> grad_x;    // dX
    int index(int elem, Quadrature rule, int local) const {
        return 6 * elem + (rule == Quadrature::Midpoint ? 3 : 0) + local;
    }
};
FirstOrderTransport first_order_transport(const Mesh& mesh, const VectorField& X);

// Pointwise density w(x, y) with its y-derivative. For shape calculus either
// wdot (the transport derivative of the x-slot, bound to one direction X) or
// xgrad (the spatial gradient, combined with any X on demand) may be set.
using DensityFn = std::function<double(const DensityPoint&, double)>;
struct SemilinearDensity {
    DensityFn w;
    DensityFn dyw;
    DensityFn wdot;                                          // may be empty
    std::function<Vec2(const DensityPoint&, double)> xgrad;  // may be empty
};

// Density from hold-all analytic callables; transported problems feed the
// mapped position through x_mapped.
SemilinearDensity analytic_density(std::function<double(const Vec2&, double)> w,
                                   std::function<double(const Vec2&, double)> dyw,
                                   std::function<Vec2(const Vec2&, double)> xgrad = nullptr);

// Stiffness+mass form: sum_T int_T A grad(phi_i).grad(phi_j) + xi lambda phi_i phi_j.
SparseSymmetric assemble_bilinear(const Mesh& mesh, const TransportData& td, double lambda,
                                  Quadrature mass_quad = Quadrature::Midpoint);

// Semilinear vector b_i = int xi w(x, u + shift) phi_i and its Newton matrix
// W_ij = int xi dyw(x, u + shift) phi_i phi_j. shift may be null.
std::pair<std::vector<double>, SparseSymmetric> assemble_semilinear(
    const Mesh& mesh, const SemilinearDensity& density, const NodalField& state,
    const NodalField* shift, const TransportData& td, Quadrature quad = Quadrature::Vertex);

// Scalar load int xi f(Phi_t(x)) phi_i.
std::vector<double> assemble_load(const Mesh& mesh,
                                  const std::function<double(const Vec2&)>& f,
                                  const TransportData& td,
                                  Quadrature quad = Quadrature::Midpoint);
std::vector<double> assemble_load_vec(const Mesh& mesh,
                                      const std::function<Vec2(const Vec2&)>& f,
                                      const TransportData& td,
                                      Quadrature quad = Quadrature::Midpoint);

// ---- elasticity --------------------------------------------------------

// C^2 convex spline: 0 for s<=0, value 1 at s=1, linear growth past 1+delta.
struct ConvexRampSpline {
    double delta = 0.2;
    double value(double s) const;
    double d1(double s) const;
    double d2(double s) const;
};

// C^2 convex ramp with zero value/slope for s<=0 and unit slope past s1.
struct SmoothedRamp {
    double s1 = 0.5;
    double value(double s) const;
    double d1(double s) const;
    double d2(double s) const;
};

// Damage-dependent stiffness scale c(s) = c1(s) + c2(s), c1 convex,
// c2 concave, c >= eta > 0 on the sampled range.
struct Degradation {
    double eta = 1e-3;
    double concave_scale = 0.0; // weight of c2 = -scale * ramp
    ConvexRampSpline q;
    SmoothedRamp ramp;

    double c1(double s) const { return eta + (1.0 - eta) * q.value(s); }
    double dc1(double s) const { return (1.0 - eta) * q.d1(s); }
    double ddc1(double s) const { return (1.0 - eta) * q.d2(s); }
    double c2(double s) const { return -concave_scale * ramp.value(s); }
    double dc2(double s) const { return -concave_scale * ramp.d1(s); }
    double ddc2(double s) const { return -concave_scale * ramp.d2(s); }
    double c(double s) const { return c1(s) + c2(s); }

    void validate() const; // sampled: c >= eta, c1 convex, c2 concave
};

// Damage potential g = g1 + g2 with g1 = beta * ramp (convex),
// g2 = -concave_scale * ramp (concave).
struct DamagePotential {
    double beta = 0.5;
    double concave_scale = 0.0;
    SmoothedRamp ramp;

    double g1(double s) const { return beta * ramp.value(s); }
    double dg1(double s) const { return beta * ramp.d1(s); }
    double ddg1(double s) const { return beta * ramp.d2(s); }
    double g2(double s) const { return -concave_scale * ramp.value(s); }
    double dg2(double s) const { return -concave_scale * ramp.d1(s); }
    double ddg2(double s) const { return -concave_scale * ramp.d2(s); }
    double g(double s) const { return g1(s) + g2(s); }
};

// Isotropic plane-strain stiffness scaled by the degradation function.
struct ElasticityTensor {
    double lambda_e = 1.0;
    double mu_e = 1.0;
    Degradation degradation;

    Mat2 stress(const Mat2& strain) const {
        return 2.0 * mu_e * strain.sym() + Mat2::identity() * (lambda_e * strain.trace());
    }
    // C e : e for a symmetric strain e.
    double energy_density(const Mat2& strain) const {
        const Mat2 e = strain.sym();
        return 2.0 * mu_e * e.ddot(e) + lambda_e * e.trace() * e.trace();
    }
};

// Vector P1 matrix of int xi c(chi) C eps_t(u) : eps_t(phi) with
// eps_t(u) = sym(grad(u) dPhi_t^{-1}); dofs interleaved (2i, 2i+1). The
// quadrature rule controls where c(chi) is sampled.
SparseSymmetric assemble_elasticity(const Mesh& mesh, const ElasticityTensor& tensor,
                                    const NodalField& chi, const TransportData& td,
                                    Quadrature quad = Quadrature::Midpoint);

// Vector mass int xi phi_i . phi_j, interleaved dofs.
SparseSymmetric assemble_vector_mass(const Mesh& mesh, const TransportData& td);

} // namespace vishape

#endif
