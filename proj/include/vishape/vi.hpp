#ifndef VISHAPE_VI_HPP
#define VISHAPE_VI_HPP

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "vishape/fem.hpp"
#include "vishape/mesh.hpp"

namespace vishape {

constexpr double kUnconstrained = std::numeric_limits<double>::infinity();

// Discrete upper-obstacle problem for the operator
//   <A(u), z> = int A grad(u).grad(z) + xi lambda u z + xi w(x,u) z - f z
// over the nodal set { u_i <= obstacle_i }; pure Neumann boundary.
struct ObstacleProblem {
    const Mesh* mesh = nullptr;
    double lambda = 1.0;
    SemilinearDensity density;
    std::vector<double> obstacle; // +infinity entries are unconstrained
    TransportData transport;
    Quadrature mass_quad = Quadrature::Midpoint;
    Quadrature semilinear_quad = Quadrature::Vertex;

    // Hold-all data used by transported solves and shape calculus.
    std::function<double(const Vec2&)> obstacle_fn;       // psi on D (static obstacle)
    std::function<Vec2(const Vec2&)> obstacle_grad;       // grad psi on D
    std::function<double(const Vec2&)> load_fn;           // f on D, optional
    std::function<Vec2(const Vec2&)> load_grad;           // grad f on D
    bool static_obstacle = false;

    // Knobs of the sensitivity cone: the multiplier threshold separating
    // strongly active from biactive nodes (default: the solution's active
    // tolerance), and the strict-complementarity shortcut that turns
    // biactive nodes into equalities for comparison runs.
    std::optional<double> cone_mu_tol;
    bool strict_complementarity_cone = false;

    void check() const;
};

struct VISolution {
    NodalField state;      // u
    NodalField multiplier; // mu >= 0, supported on the active set
    std::vector<int> active;
    std::vector<int> strongly_active; // active with mu_i > tol_active
    std::vector<int> biactive;        // active with mu_i <= tol_active
    double tol_active = 0.0;

    double res_stationarity = 0.0;
    double res_feasibility = 0.0;
    double res_sign = 0.0;
    double res_complementarity = 0.0;
    int iterations = 0;
};

// Primal-dual active set iteration around a Newton linearisation of w.
// Simultaneous active-set update, fixed node order; finite termination on
// linear problems.
VISolution solve_obstacle_semilinear(const ObstacleProblem& problem, double tol,
                                     const std::vector<double>* warm_start = nullptr);

// Assembles the pullback data A(t), xi(t), transported density and obstacle,
// then solves. t = 0 reproduces solve_obstacle_semilinear exactly.
VISolution solve_transported(const ObstacleProblem& problem, const VectorField& X, double t,
                             double tol);

// Full enumeration of active sets; the KKT-consistent candidate is the unique
// solution. Only for problems with at most 14 constrained nodes.
VISolution brute_force_vi(const ObstacleProblem& problem, double tol = 1e-10);

// Residual of the assembled operator at u (stationarity part, no multiplier).
std::vector<double> operator_residual(const ObstacleProblem& problem, const NodalField& u);

// Dirichlet-zero minimisation of the transported p-Laplace energy
//   (1/p) int xi (|B grad u|^2 + eps^2)^(p/2) - xi (f o Phi_t) u,
// B = dPhi_t^{-T}, by damped Newton; energy decreases monotonically.
NodalField solve_p_laplace(const Mesh& mesh, double p,
                           const std::function<double(const Vec2&)>& f, const VectorField& X,
                           double t, double tol);

double p_laplace_energy(const Mesh& mesh, double p,
                        const std::function<double(const Vec2&)>& f, const VectorField& X,
                        double t, const NodalField& u);

} // namespace vishape

#endif
