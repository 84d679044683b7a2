#ifndef VISHAPE_DAMAGE_HPP
#define VISHAPE_DAMAGE_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vishape/cones.hpp"
#include "vishape/fem.hpp"
#include "vishape/vi.hpp"

namespace vishape {

// Analytic hold-all data with the gradients the sensitivity chain needs.
struct ScalarFun {
    std::function<double(const Vec2&)> value;
    std::function<Vec2(const Vec2&)> gradient;
};
struct VecFun {
    std::function<Vec2(const Vec2&)> value;
    std::function<Mat2(const Vec2&)> jacobian;
};

ScalarFun scalar_fun_expr(const std::string& expr);
VecFun vec_fun_expr(const std::string& x_expr, const std::string& y_expr);

// Time-discrete brittle damage model: per step, the damage phase field
// solves an upper-obstacle VI against the previous step, then displacement
// solves elasticity with the degraded stiffness.
struct DamageModelSpec {
    const Mesh* mesh = nullptr;
    double tau = 0.1;
    int steps = 1; // N
    ElasticityTensor tensor;
    DamagePotential potential;
    std::vector<VecFun> loads;     // index k = 0..N
    std::vector<VecFun> dirichlet; // index k = 0..N
    VecFun u0, v0;
    ScalarFun chi0;
    double vi_tol = 1e-10;

    void check() const;
    DamageModelSpec with_mesh(const Mesh& m) const;
};

struct DamageStepDiagnostics {
    double chi_min = 0.0, chi_max = 0.0;
    double monotonicity_violation = 0.0; // max(0, chi^k - chi^{k-1})
    double dissipation_slack = 0.0;      // work - energy increment - dissipation
    double dissipation_scale = 1.0;
    double complementarity = 0.0;
};

struct DamageTrajectory {
    std::vector<VectorNodalField> u; // 0..N
    VectorNodalField u_before_start; // u^{-1} = u^0 + tau v^0
    std::vector<NodalField> chi;     // 0..N
    std::vector<VISolution> chi_solutions;          // index k-1 for step k
    std::vector<DamageStepDiagnostics> diagnostics; // index k-1 for step k
    bool max_principle_ok = true;
    bool dissipation_ok = true;
};

// Runs the scheme; X/t describe the transported perturbed run (pass t = 0
// for the nominal one).
DamageTrajectory run_damage(const DamageModelSpec& spec, const VectorField* X = nullptr,
                            double t = 0.0);

struct SensitivityTrajectory {
    std::vector<VectorNodalField> udot; // 0..N
    VectorNodalField udot_before_start;
    std::vector<NodalField> chidot; // 0..N
    std::vector<ConeVIInfo> cone_info; // index k-1 for step k
};

// Material derivatives along X through the chained scheme: per step the
// damage rate solves the cone VI with the previous rates feeding the data,
// then the displacement rate solves the linearised elasticity system.
SensitivityTrajectory sensitivity_chain(const DamageModelSpec& spec,
                                        const DamageTrajectory& traj, const VectorField& X);

struct CostSpec {
    double lambda_u = 0.0;
    double lambda_chi = 0.0;
    std::vector<VecFun> u_ref;      // index k = 0..N
    std::vector<ScalarFun> chi_ref; // index k = 0..N
};

// Tracking cost over the trajectory; td transports the quadrature for the
// perturbed-domain value.
double damage_cost(const DamageModelSpec& spec, const DamageTrajectory& traj,
                   const CostSpec& cost, const TransportData& td = TransportData{});

// Volume form of the cost's one-sided shape derivative along X.
double eulerian_semiderivative(const DamageModelSpec& spec, const DamageTrajectory& traj,
                               const SensitivityTrajectory& sens, const CostSpec& cost,
                               const VectorField& X);

struct OptimalityScan {
    double min_dj = 0.0;
    int argmin = -1;
    std::vector<double> dj; // one per catalog direction
};
OptimalityScan optimality_residual(const DamageModelSpec& spec, const CostSpec& cost,
                                   const std::vector<VectorField>& catalog);

struct DescentResult {
    std::vector<Mesh> meshes;      // iterates, starting mesh first
    std::vector<double> j_values;  // cost per accepted mesh
    double final_min_dj = 0.0;
    int iterations = 0;
};
// Picks the catalog direction with the most negative derivative, deforms the
// mesh along its flow with backtracking on the cost, stops at approximate
// stationarity.
DescentResult shape_descent(const DamageModelSpec& spec, const CostSpec& cost,
                            const std::vector<VectorField>& catalog, int max_iterations,
                            double initial_step, double tol_opt);

} // namespace vishape

#endif
