#ifndef VISHAPE_CONES_HPP
#define VISHAPE_CONES_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "vishape/vi.hpp"

namespace vishape {

enum class ConeKind : std::int8_t { Free = 0, Inequality = 1, Equality = 2 };

// Nodal description of the shifted cone for the sensitivity problem:
// equality nodes carry z_i = bound_i, inequality nodes z_i <= bound_i.
struct DiscreteCone {
    std::vector<ConeKind> kind;
    std::vector<double> bound;

    int count(ConeKind k) const;
    // Max violation of z against the cone (0 when z belongs to it).
    double violation(const std::vector<double>& z) const;
};

// Node classification from the converged solution: strongly active nodes
// (gap ~ 0, multiplier > mu_tol) become equalities, biactive nodes keep the
// inequality, inactive nodes are free. The multiplier carries the kernel
// constraint: with mu_i > 0 the sign structure forces z_i = bound_i there.
DiscreteCone tangent_kern_cone(const ObstacleProblem& problem, const VISolution& solution,
                               const NodalField& psidot, std::optional<double> mu_tol = {});

// Linear VI over a cone: z in cone, (Q z - rhs) . (phi - z) >= 0 for phi in
// the cone. PDAS on the inequality nodes, equality nodes eliminated.
struct ConeVIInfo {
    NodalField multiplier;
    double res_stationarity = 0.0;
    double res_feasibility = 0.0;
    double res_sign = 0.0;
    double res_complementarity = 0.0;
    int iterations = 0;
};
std::vector<double> solve_cone_vi(const SparseSymmetric& Q, const std::vector<double>& rhs,
                                  const DiscreteCone& cone, const Mesh& mesh, double tol,
                                  ConeVIInfo* info = nullptr,
                                  const std::vector<char>* initial_active = nullptr);

// Right side of the sensitivity VI at a solved state: the negative transport
// derivative of the operator, -<A'(u), phi>. Needs density.wdot.
std::vector<double> material_derivative_rhs(const ObstacleProblem& problem, const VISolution& sol,
                                            const VectorField& X);

// Newton matrix at the solution: bilinear part + int dyw(x,u) phi phi.
SparseSymmetric material_derivative_matrix(const ObstacleProblem& problem, const VISolution& sol);

// Obstacle transport derivative: grad(psi).X for a static obstacle.
NodalField static_obstacle_rate(const ObstacleProblem& problem, const VectorField& X);

// Solves the sensitivity VI over the shifted tangent/kernel cone.
NodalField solve_material_derivative(const ObstacleProblem& problem, const VISolution& sol,
                                     const VectorField& X, const NodalField& psidot, double tol,
                                     ConeVIInfo* info = nullptr);

// Finite-difference validation: solves transported problems and compares
// (u^t - u)/t against the computed material derivative in H1.
struct MaterialRateRow {
    double t;
    double error_h1;
    double quotient_norm;
};
struct MaterialRateReport {
    std::vector<MaterialRateRow> rows;
    bool monotone_decreasing = true;
    NodalField mat_deriv;
    NodalField quotient_smallest_t; // (u^t - u)/t at the smallest t
    std::optional<double> slope;
};
MaterialRateReport fd_material_oracle(const ObstacleProblem& problem, const VectorField& X,
                                      std::vector<double> t_sequence, double tol);

// u' = udot - (recovered grad u) . X, nodewise.
NodalField state_shape_derivative(const Mesh& mesh, const NodalField& udot, const NodalField& u,
                                  const VectorField& X);

// Boundary functional of the static-obstacle shape derivative system:
//   -int_Gamma [ grad_G(u).grad_G(phi) + (lambda u + w(x,u)) phi ] (X.n) ds,
// edge-midpoint quadrature, tangential gradients from edge differences.
double boundary_form_value(const ObstacleProblem& problem, const NodalField& u,
                           const VectorField& X, const NodalField& phi);

} // namespace vishape

#endif
