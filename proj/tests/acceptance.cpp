// Acceptance suite: one criterion per case, each printing a PASS/FAIL line.
// Usage: acceptance_tests [criterion-number]; without arguments every
// criterion runs. Exit code 0 iff everything requested passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "vishape/commands.hpp"
#include "vishape/cones.hpp"
#include "vishape/damage.hpp"
#include "vishape/demos.hpp"
#include "vishape/io.hpp"
#include "vishape/rates.hpp"

using namespace vishape;

namespace {

const Box2 kD{-0.5, 1.5, -0.5, 1.5};

struct Criterion {
    int number;
    std::string name;
    std::function<bool(std::string&)> run;
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const auto start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

ObstacleProblem random_problem(const Mesh& mesh, test_support::Rng& rng, bool semilinear) {
    ObstacleProblem p;
    p.mesh = &mesh;
    p.lambda = rng.uniform(0.5, 2.0);
    const double a = semilinear ? rng.uniform(0.0, 2.0) : 0.0;
    const double b = rng.uniform(0.1, 1.0);
    const double c0 = rng.uniform(-3.0, 3.0);
    const double c1 = rng.uniform(-3.0, 3.0);
    const double c2 = rng.uniform(-3.0, 3.0);
    p.density = analytic_density(
        [a, b, c0, c1, c2](const Vec2& x, double y) {
            return a * y * y * y + b * y + c0 + c1 * x.x + c2 * x.y;
        },
        [a, b](const Vec2&, double y) { return 3.0 * a * y * y + b; },
        [c1, c2](const Vec2&, double) { return Vec2{c1, c2}; });
    p.obstacle.resize(mesh.num_vertices());
    for (double& v : p.obstacle) v = rng.uniform(-0.3, 0.6);
    return p;
}

// 1. Complementarity residuals on randomized semilinear problems.
bool criterion_complementarity(std::string& detail) {
    const double t0 = now_seconds();
    test_support::Rng rng(2024);
    double worst = 0.0;
    for (int half = 0; half < 2; ++half) {
        const Mesh mesh = unit_square_mesh(half == 0 ? 8 : 16);
        for (int inst = 0; inst < 25; ++inst) {
            const ObstacleProblem p = random_problem(mesh, rng, true);
            const VISolution sol = solve_obstacle_semilinear(p, 1e-8);
            worst = std::max({worst, sol.res_feasibility, sol.res_sign, sol.res_complementarity,
                              sol.res_stationarity});
        }
    }
    const double dt = now_seconds() - t0;
    detail = "worst residual " + format_float(worst) + ", " + format_float(dt) + " s";
    return worst <= 1e-8 && dt < 30.0;
}

// 2. Active-set enumeration oracle on problems with <= 14 constrained nodes.
bool criterion_oracle(std::string& detail) {
    test_support::Rng rng(4711);
    const Mesh m2 = unit_square_mesh(2); // 9 nodes
    const Mesh m3 = unit_square_mesh(3); // 16 nodes, 14 constrained below
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const bool big = inst % 5 == 4;
        const Mesh& mesh = big ? m3 : m2;
        ObstacleProblem p = random_problem(mesh, rng, inst % 2 == 0);
        if (big) {
            int free1 = rng.uniform_int(0, 7);
            int free2 = 8 + rng.uniform_int(0, 7);
            p.obstacle[free1] = kUnconstrained;
            p.obstacle[free2] = kUnconstrained;
        }
        const VISolution fast = solve_obstacle_semilinear(p, 1e-11);
        const VISolution slow = brute_force_vi(p);
        for (int i = 0; i < mesh.num_vertices(); ++i)
            worst = std::max(worst, std::fabs(fast.state[i] - slow.state[i]));
    }
    detail = "max |u_pdas - u_enum| = " + format_float(worst) + " over 50 instances";
    return worst <= 1e-9;
}

// 3. Lipschitz sensitivity rate of the shipped semilinear demo.
bool criterion_lipschitz(std::string& detail) {
    const double t0 = now_seconds();
    const Config cfg = Config::parse(find_demo("semilinear-lipschitz").config);
    const Mesh mesh = mesh_from_config(cfg);
    const ObstacleProblem p = problem_from_config(cfg, mesh);
    const VectorField X = field_from_config(cfg, mesh.hold_all);
    const RateReport rep =
        rate_sweep_obstacle(p, X, dyadic_t_sequence(3, 9), 1e-10, 1.0);
    const double dt = now_seconds() - t0;
    detail = "H1 slope " + format_float(rep.slope) + ", " + format_float(dt) + " s";
    return rep.slope_defined && rep.slope >= 0.9 && dt < 60.0;
}

// 4. p-Laplace rates for p in {1.5, 3, 4} plus the Lipschitz case p = 2.
bool criterion_p_laplace(std::string& detail) {
    const double t0 = now_seconds();
    const Config cfg = Config::parse(find_demo("p-laplace-rates").config);
    const Mesh mesh = mesh_from_config(cfg);
    const VectorField X = field_from_config(cfg, mesh.hold_all);
    const Expression f = Expression::parse(cfg.get_string("problem.f_expr"));
    auto fv = [&f](const Vec2& x) { return f.eval(x); };

    bool ok = true;
    detail.clear();
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
        const double e_energy = 1.0 / p;
        const double e_operator = 1.0 / (p - 1.0);
        const double asserted = (p < 2.0) ? e_energy : e_operator;
        const RateReport rep =
            rate_sweep_p_laplace(mesh, p, fv, X, dyadic_t_sequence(3, 9), 1e-9, asserted);
        ok = ok && rep.pass;
        detail += "p=" + format_float(p) + " slope=" + format_float(rep.slope) +
                  " (energy " + format_float(e_energy) + ", operator " + format_float(e_operator) +
                  ", asserted " + format_float(asserted) + "); ";
    }
    const double dt = now_seconds() - t0;
    detail += format_float(dt) + " s";
    return ok && dt < 120.0;
}

// 5. Material derivative vs. transported difference quotients.
bool criterion_material_derivative(std::string& detail) {
    const Config cfg = Config::parse(find_demo("material-derivative").config);
    const Mesh mesh = mesh_from_config(cfg);
    const ObstacleProblem p = problem_from_config(cfg, mesh);
    const VectorField X = field_from_config(cfg, mesh.hold_all);

    const MaterialRateReport rep = fd_material_oracle(p, X, {1e-1, 1e-2, 1e-3}, 1e-10);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    const DiscreteCone cone = tangent_kern_cone(p, sol, static_obstacle_rate(p, X));
    const double violation = cone.violation(rep.quotient_smallest_t.values);
    const double final_err = rep.rows.back().error_h1;
    detail = "errors";
    for (const auto& r : rep.rows) detail += " " + format_float(r.error_h1);
    detail += ", cone violation " + format_float(violation);
    return rep.monotone_decreasing && final_err <= 5e-3 && violation <= 1e-6;
}

// 6. Flow expansion rates and the closed-form linear flow.
bool criterion_flow(std::string& detail) {
    const VectorField bump =
        VectorField::parse("bump(x,y,0.5,0.5,0.35)", "0.5*bump(x,y,0.5,0.5,0.35)",
                           Box2{0.1, 0.9, 0.1, 0.9}, kD);
    const FlowRateReport rep =
        verify_flow_rates(bump, {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128});
    const bool slopes_ok = rep.slope_jacobian && *rep.slope_jacobian >= 0.9 &&
                           rep.slope_determinant && *rep.slope_determinant >= 0.9 &&
                           rep.slope_pullback && *rep.slope_pullback >= 0.9;

    const Box2 big{-6.0, 6.0, -6.0, 6.0};
    const VectorField lin = VectorField::parse("x", "0", big, big);
    const FlowSample s = integrate_flow(lin, 0.2, {1.0, 1.0});
    const double closed_err =
        std::max({std::fabs(s.point.x - std::exp(0.2)), std::fabs(s.point.y - 1.0),
                  std::fabs(s.jacobian(0, 0) - std::exp(0.2)), std::fabs(s.jacobian(1, 1) - 1.0),
                  std::fabs(s.jacobian.det() - std::exp(0.2))});
    detail = "slopes " + format_float(rep.slope_jacobian.value_or(-1)) + " " +
             format_float(rep.slope_determinant.value_or(-1)) + " " +
             format_float(rep.slope_pullback.value_or(-1)) + ", closed-form error " +
             format_float(closed_err);
    return slopes_ok && closed_err <= 1e-9;
}

// 7. Vanishing shape derivative for tangential fields under refinement.
bool criterion_zero_shape_derivative(std::string& detail) {
    const Config cfg = Config::parse(find_demo("static-shape-derivative").config);
    Mesh mesh = mesh_from_config(cfg);
    const VectorField X = field_from_config(cfg, mesh.hold_all);

    std::vector<double> norms;
    for (int level = 0; level <= 3; ++level) {
        const ObstacleProblem p = problem_from_config(cfg, mesh);
        const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
        const NodalField udot =
            solve_material_derivative(p, sol, X, static_obstacle_rate(p, X), 1e-10);
        const NodalField uprime = state_shape_derivative(mesh, udot, sol.state, X);
        norms.push_back(l2_norm(mesh, uprime));
        if (level < 3) mesh = refine_uniform(mesh);
    }
    bool ok = true;
    detail = "norms";
    for (double n : norms) detail += " " + format_float(n);
    for (size_t i = 0; i + 1 < norms.size(); ++i)
        if (norms[i] < 1.7 * norms[i + 1]) ok = false;
    return ok;
}

// 8. Positive 1-homogeneity of the damage cost derivative.
bool criterion_homogeneity(std::string& detail) {
    const Config cfg = Config::parse(find_demo("damage-dj").config);
    const Mesh mesh = mesh_from_config(cfg);
    const DamageModelSpec spec = damage_from_config(cfg, mesh);
    const CostSpec cost = cost_from_config(cfg, spec.steps);
    const VectorField X = field_from_config(cfg, mesh.hold_all);

    const DamageTrajectory traj = run_damage(spec);
    const SensitivityTrajectory sens = sensitivity_chain(spec, traj, X);
    const double dJ = eulerian_semiderivative(spec, traj, sens, cost, X);
    double worst = 0.0;
    for (double lam : {0.5, 2.0, 10.0}) {
        const VectorField Xs = X.scaled(lam);
        const SensitivityTrajectory ss = sensitivity_chain(spec, traj, Xs);
        const double dJs = eulerian_semiderivative(spec, traj, ss, cost, Xs);
        worst = std::max(worst, std::fabs(dJs - lam * dJ) / std::fabs(lam * dJ));
    }
    detail = "dJ = " + format_float(dJ) + ", worst relative homogeneity error " +
             format_float(worst);
    return worst <= 1e-8;
}

// 9. Eulerian semi-derivative vs. transported finite differences.
bool criterion_dj_fd(std::string& detail) {
    const double t0 = now_seconds();
    const Config cfg = Config::parse(find_demo("damage-dj").config);
    const Mesh mesh = mesh_from_config(cfg);
    const DamageModelSpec spec = damage_from_config(cfg, mesh);
    const CostSpec cost = cost_from_config(cfg, spec.steps);
    const VectorField X = field_from_config(cfg, mesh.hold_all);

    const DamageTrajectory traj = run_damage(spec);
    const SensitivityTrajectory sens = sensitivity_chain(spec, traj, X);
    const double dJ = eulerian_semiderivative(spec, traj, sens, cost, X);
    const double J0 = damage_cost(spec, traj, cost);

    const double t = 1e-3;
    const DamageTrajectory pert = run_damage(spec, &X, t);
    const TransportData td = pullback_transport(mesh, X, t);
    const double Jt = damage_cost(spec, pert, cost, td);
    const double quotient = (Jt - J0) / t;
    const double err = std::fabs(dJ - quotient);
    const double dt = now_seconds() - t0;
    detail = "dJ = " + format_float(dJ) + ", quotient " + format_float(quotient) + ", error " +
             format_float(err) + ", " + format_float(dt) + " s";
    return err <= 1e-2 * (1.0 + std::fabs(dJ)) && dt < 300.0;
}

// 10. Damage maximum principle and energy-dissipation on shipped runs.
bool criterion_damage_invariants(std::string& detail) {
    bool ok = true;
    detail.clear();
    for (const char* name : {"damage-run", "damage-dj", "shape-descent"}) {
        const Config cfg = Config::parse(find_demo(name).config);
        const Mesh mesh = mesh_from_config(cfg);
        const DamageModelSpec spec = damage_from_config(cfg, mesh);
        const DamageTrajectory traj = run_damage(spec);
        double worst_mono = 0.0, worst_slack = 0.0;
        for (int k = 1; k <= spec.steps; ++k) {
            const DamageStepDiagnostics& d = traj.diagnostics[k - 1];
            worst_mono = std::max({worst_mono, d.monotonicity_violation, -d.chi_min,
                                   d.chi_max - 1.0});
            worst_slack = std::min(worst_slack, d.dissipation_slack / d.dissipation_scale);
        }
        ok = ok && traj.max_principle_ok && traj.dissipation_ok;
        detail += std::string(name) + ": range/monotone violation " + format_float(worst_mono) +
                  ", dissipation slack " + format_float(worst_slack) + "; ";
    }
    return ok;
}

// 11. Byte-identical outputs across repeated runs.
bool criterion_determinism(std::string& detail) {
    namespace fs = std::filesystem;
    bool ok = true;
    detail.clear();
    for (const char* name : {"solve-vi", "semilinear-lipschitz"}) {
        const DemoEntry& demo = find_demo(name);
        const Config cfg = Config::parse(demo.config);
        const std::string dir_a = "/tmp/vishape_accept_a_" + demo.name;
        const std::string dir_b = "/tmp/vishape_accept_b_" + demo.name;
        fs::remove_all(dir_a);
        fs::remove_all(dir_b);
        run_command(demo.command, cfg, dir_a);
        run_command(demo.command, cfg, dir_b);
        for (const auto& entry : fs::directory_iterator(dir_a)) {
            const std::string file = entry.path().filename().string();
            const std::string a = read_text_file((fs::path(dir_a) / file).string());
            const std::string b = read_text_file((fs::path(dir_b) / file).string());
            if (a != b) {
                ok = false;
                detail += file + " differs; ";
            }
        }
        detail += std::string(name) + " checked; ";
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "complementarity residuals on randomized problems", criterion_complementarity},
        {2, "active-set enumeration oracle agreement", criterion_oracle},
        {3, "Lipschitz sensitivity rate (semilinear demo)", criterion_lipschitz},
        {4, "p-Laplace sensitivity rates", criterion_p_laplace},
        {5, "material derivative vs. difference quotients", criterion_material_derivative},
        {6, "flow expansion rates and closed form", criterion_flow},
        {7, "vanishing shape derivative under refinement", criterion_zero_shape_derivative},
        {8, "positive 1-homogeneity of dJ", criterion_homogeneity},
        {9, "Eulerian semi-derivative vs. finite differences", criterion_dj_fd},
        {10, "damage maximum principle and dissipation", criterion_damage_invariants},
        {11, "deterministic outputs", criterion_determinism},
    };

    int requested = 0;
    if (argc > 1) requested = std::atoi(argv[1]);

    bool all_ok = true;
    for (const Criterion& c : criteria) {
        if (requested != 0 && c.number != requested) continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %2d [%s]: %s (%s)\n", c.number, ok ? "PASS" : "FAIL",
                    c.name.c_str(), detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
