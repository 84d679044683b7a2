#include "vishape/commands.hpp"

#include <cmath>
#include <filesystem>

#include "json.hpp"
#include "vishape/cones.hpp"
#include "vishape/error.hpp"
#include "vishape/io.hpp"
#include "vishape/rates.hpp"

namespace vishape {

using nlohmann::ordered_json;

Mesh mesh_from_config(const Config& cfg) {
    const std::string kind = cfg.get_string("mesh.kind", "square");
    const int n = cfg.get_int("mesh.n");
    if (n < 1) throw ConfigError("config key 'mesh.n': must be >= 1");
    if (kind == "square") {
        const auto hb = cfg.get_list("mesh.holdall", {-0.5, 1.5, -0.5, 1.5});
        if (hb.size() != 4) throw ConfigError("config key 'mesh.holdall': expected 4 entries");
        return unit_square_mesh(n, Box2{hb[0], hb[1], hb[2], hb[3]});
    }
    if (kind == "disk") {
        const auto hb = cfg.get_list("mesh.holdall", {-1.5, 1.5, -1.5, 1.5});
        if (hb.size() != 4) throw ConfigError("config key 'mesh.holdall': expected 4 entries");
        return unit_disk_mesh(n, Box2{hb[0], hb[1], hb[2], hb[3]});
    }
    throw ConfigError("config key 'mesh.kind': unknown kind '" + kind + "'");
}

VectorField field_from_config(const Config& cfg, const Box2& hold_all) {
    const std::string xe = cfg.get_string("field.x_expr");
    const std::string ye = cfg.get_string("field.y_expr");
    const auto sup = cfg.get_list("field.support",
                                  {hold_all.x0, hold_all.x1, hold_all.y0, hold_all.y1});
    if (sup.size() != 4) throw ConfigError("config key 'field.support': expected 4 entries");
    try {
        return VectorField::parse(xe, ye, Box2{sup[0], sup[1], sup[2], sup[3]}, hold_all);
    } catch (const ParseError& e) {
        throw ConfigError(std::string("field expression: ") + e.what());
    } catch (const InputError& e) {
        throw ConfigError(std::string("field: ") + e.what());
    }
}

namespace {

Expression parse_cfg_expr(const Config& cfg, const std::string& key) {
    try {
        return Expression::parse(cfg.get_string(key));
    } catch (const ParseError& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

} // namespace

ObstacleProblem problem_from_config(const Config& cfg, const Mesh& mesh) {
    ObstacleProblem p;
    p.mesh = &mesh;
    p.lambda = cfg.get_double("problem.lambda");
    if (p.lambda <= 0.0) throw ConfigError("config key 'problem.lambda': must be positive");

    const std::string density = cfg.get_string("problem.density", "cubic");
    const double a = cfg.get_double("problem.a", 0.0);
    const double b = cfg.get_double("problem.b", 0.0);
    if (a < 0.0 || b < 0.0)
        throw ConfigError("density coefficients a and b must be nonnegative (monotone density)");

    std::function<double(const Vec2&)> f_val;
    std::function<Vec2(const Vec2&)> f_grad;
    if (cfg.has("problem.f_expr")) {
        const Expression f = parse_cfg_expr(cfg, "problem.f_expr");
        const Expression fx = f.dx(), fy = f.dy();
        f_val = [f](const Vec2& x) { return f.eval(x); };
        f_grad = [fx, fy](const Vec2& x) { return Vec2{fx.eval(x), fy.eval(x)}; };
    }

    if (density == "cubic") {
        p.density = analytic_density(
            [a, b, f_val](const Vec2& x, double y) {
                return a * y * y * y + b * y - (f_val ? f_val(x) : 0.0);
            },
            [a, b](const Vec2&, double y) { return 3.0 * a * y * y + b; },
            [f_grad](const Vec2& x, double) {
                return f_grad ? f_grad(x) * (-1.0) : Vec2{0.0, 0.0};
            });
    } else if (density == "linear") {
        p.density = analytic_density(
            [b, f_val](const Vec2& x, double y) { return b * y - (f_val ? f_val(x) : 0.0); },
            [b](const Vec2&, double) { return b; },
            [f_grad](const Vec2& x, double) {
                return f_grad ? f_grad(x) * (-1.0) : Vec2{0.0, 0.0};
            });
    } else {
        throw ConfigError("config key 'problem.density': unknown density '" + density + "'");
    }

    const std::string obstacle = cfg.get_string("problem.obstacle", "none");
    p.obstacle.assign(mesh.num_vertices(), kUnconstrained);
    if (obstacle == "none") {
        p.static_obstacle = true;
        // unconstrained problem; obstacle stays +infinity
    } else if (obstacle == "const") {
        const double c = cfg.get_double("problem.psi_const");
        for (double& v : p.obstacle) v = c;
        p.obstacle_fn = [c](const Vec2&) { return c; };
        p.obstacle_grad = [](const Vec2&) { return Vec2{0.0, 0.0}; };
        p.static_obstacle = true;
    } else if (obstacle == "expr") {
        const Expression psi = parse_cfg_expr(cfg, "problem.psi_expr");
        const Expression px = psi.dx(), py = psi.dy();
        for (int i = 0; i < mesh.num_vertices(); ++i) p.obstacle[i] = psi.eval(mesh.vertices[i]);
        p.obstacle_fn = [psi](const Vec2& x) { return psi.eval(x); };
        p.obstacle_grad = [px, py](const Vec2& x) { return Vec2{px.eval(x), py.eval(x)}; };
        p.static_obstacle = true;
    } else {
        throw ConfigError("config key 'problem.obstacle': unknown mode '" + obstacle + "'");
    }
    // active-set classification knobs of the sensitivity cone
    if (cfg.has("problem.cone_mu_tol")) p.cone_mu_tol = cfg.get_double("problem.cone_mu_tol");
    p.strict_complementarity_cone = cfg.get_int("problem.strict_cone", 0) != 0;
    return p;
}

namespace {

std::vector<VecFun> vec_schedule(const VecFun& base, int steps, double tau,
                                 const std::string& kind) {
    std::vector<VecFun> out;
    for (int k = 0; k <= steps; ++k) {
        const double s = (kind == "ramp") ? k * tau : 1.0;
        VecFun f;
        const VecFun b = base;
        f.value = [b, s](const Vec2& x) { return b.value(x) * s; };
        f.jacobian = [b, s](const Vec2& x) { return b.jacobian(x) * s; };
        out.push_back(f);
    }
    return out;
}

} // namespace

DamageModelSpec damage_from_config(const Config& cfg, const Mesh& mesh) {
    DamageModelSpec spec;
    spec.mesh = &mesh;
    spec.tau = cfg.get_double("damage.tau");
    spec.steps = cfg.get_int("damage.steps");
    if (spec.tau <= 0.0) throw ConfigError("config key 'damage.tau': must be positive");
    if (spec.steps < 0) throw ConfigError("config key 'damage.steps': must be >= 0");
    spec.tensor.lambda_e = cfg.get_double("damage.lambda_e", 1.0);
    spec.tensor.mu_e = cfg.get_double("damage.mu_e", 1.0);
    if (spec.tensor.mu_e <= 0.0) throw ConfigError("config key 'damage.mu_e': must be positive");
    if (spec.tensor.lambda_e < 0.0)
        throw ConfigError("config key 'damage.lambda_e': must be nonnegative");
    spec.tensor.degradation.eta = cfg.get_double("damage.eta", 1e-3);
    spec.tensor.degradation.concave_scale = cfg.get_double("damage.concave_scale", 0.0);
    spec.potential.beta = cfg.get_double("damage.beta", 0.0);
    spec.potential.concave_scale = cfg.get_double("damage.g_concave_scale", 0.0);
    spec.vi_tol = cfg.get_double("damage.tol", 1e-10);

    const std::string scale = cfg.get_string("damage.dirichlet_scale", "ramp");
    if (scale != "ramp" && scale != "constant")
        throw ConfigError("config key 'damage.dirichlet_scale': expected ramp or constant");
    try {
        const VecFun d = vec_fun_expr(cfg.get_string("damage.dirichlet_x"),
                                      cfg.get_string("damage.dirichlet_y"));
        const VecFun l =
            vec_fun_expr(cfg.get_string("damage.load_x", "0"), cfg.get_string("damage.load_y", "0"));
        spec.dirichlet = vec_schedule(d, spec.steps, spec.tau, scale);
        spec.loads = vec_schedule(l, spec.steps, spec.tau,
                                  cfg.get_string("damage.load_scale", "constant"));
        spec.u0 = vec_fun_expr(cfg.get_string("damage.u0_x", "0"), cfg.get_string("damage.u0_y", "0"));
        spec.v0 = vec_fun_expr(cfg.get_string("damage.v0_x", "0"), cfg.get_string("damage.v0_y", "0"));
        spec.chi0 = scalar_fun_expr(cfg.get_string("damage.chi0", "1"));
    } catch (const ParseError& e) {
        throw ConfigError(std::string("damage data expression: ") + e.what());
    }
    return spec;
}

CostSpec cost_from_config(const Config& cfg, int steps) {
    CostSpec cost;
    cost.lambda_u = cfg.get_double("cost.lambda_u", 0.0);
    cost.lambda_chi = cfg.get_double("cost.lambda_chi", 0.0);
    if (cost.lambda_u < 0.0 || cost.lambda_chi < 0.0)
        throw ConfigError("cost weights must be nonnegative");
    try {
        const VecFun ur =
            vec_fun_expr(cfg.get_string("cost.u_ref_x", "0"), cfg.get_string("cost.u_ref_y", "0"));
        const ScalarFun cr = scalar_fun_expr(cfg.get_string("cost.chi_ref", "0"));
        for (int k = 0; k <= steps; ++k) {
            cost.u_ref.push_back(ur);
            cost.chi_ref.push_back(cr);
        }
    } catch (const ParseError& e) {
        throw ConfigError(std::string("cost expression: ") + e.what());
    }
    return cost;
}

std::vector<VectorField> catalog_from_config(const Config& cfg, const Box2& hold_all) {
    const auto region = cfg.get_list("catalog.region", {0.3, 0.7, 0.3, 0.7});
    if (region.size() != 4) throw ConfigError("config key 'catalog.region': expected 4 entries");
    const int nx = cfg.get_int("catalog.nx", 2);
    const int ny = cfg.get_int("catalog.ny", 2);
    const double radius = cfg.get_double("catalog.radius", 0.18);
    if (nx < 1 || ny < 1 || radius <= 0.0) throw ConfigError("catalog grid must be positive");
    return bump_direction_catalog(Box2{region[0], region[1], region[2], region[3]}, nx, ny, radius,
                                  hold_all);
}

// ---- command implementations ---------------------------------------------

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::string cmd_solve_vi(const Config& cfg, const std::string& out) {
    const Mesh mesh = mesh_from_config(cfg);
    const ObstacleProblem p = problem_from_config(cfg, mesh);
    const double tol = cfg.get_double("problem.tol", 1e-10);
    const VISolution sol = solve_obstacle_semilinear(p, tol);

    write_text_file(join(out, "solution.csv"), export_field_csv(mesh, sol.state));
    write_text_file(join(out, "multiplier.csv"), export_field_csv(mesh, sol.multiplier));
    ordered_json j;
    j["feasibility"] = sol.res_feasibility;
    j["sign"] = sol.res_sign;
    j["complementarity"] = sol.res_complementarity;
    j["stationarity"] = sol.res_stationarity;
    j["iterations"] = sol.iterations;
    j["active_count"] = sol.active.size();
    j["strongly_active_count"] = sol.strongly_active.size();
    write_text_file(join(out, "residuals.json"), j.dump(2) + "\n");
    return "solve-vi: " + std::to_string(sol.active.size()) + " active nodes, residual " +
           format_float(sol.res_stationarity);
}

std::string cmd_rate_sweep(const Config& cfg, const std::string& out) {
    const Mesh mesh = mesh_from_config(cfg);
    const ObstacleProblem p = problem_from_config(cfg, mesh);
    const VectorField X = field_from_config(cfg, mesh.hold_all);
    const double tol = cfg.get_double("problem.tol", 1e-10);
    std::vector<double> ts;
    if (cfg.has("sweep.t_list")) {
        ts = cfg.get_list("sweep.t_list");
    } else {
        ts = dyadic_t_sequence(cfg.get_int("sweep.t_first_exp", 3),
                               cfg.get_int("sweep.t_last_exp", 9));
    }
    const double exponent = cfg.get_double("sweep.exponent", 1.0);
    const RateReport rep = rate_sweep_obstacle(p, X, ts, tol, exponent);
    write_text_file(join(out, "rates.csv"), rep.csv());
    write_text_file(join(out, "summary.json"), rep.json() + "\n");
    return "rate-sweep: slope " + format_float(rep.slope) + (rep.pass ? " pass" : " FAIL");
}

std::string cmd_p_laplace_rates(const Config& cfg, const std::string& out) {
    const Mesh mesh = mesh_from_config(cfg);
    const VectorField X = field_from_config(cfg, mesh.hold_all);
    const double tol = cfg.get_double("problem.tol", 1e-9);
    const Expression f = parse_cfg_expr(cfg, "problem.f_expr");
    auto fv = [f](const Vec2& x) { return f.eval(x); };
    std::vector<double> ps = cfg.get_list("problem.p_list", {1.5, 2.0, 3.0, 4.0});
    std::vector<double> ts;
    if (cfg.has("sweep.t_list")) {
        ts = cfg.get_list("sweep.t_list");
    } else {
        ts = dyadic_t_sequence(cfg.get_int("sweep.t_first_exp", 3),
                               cfg.get_int("sweep.t_last_exp", 9));
    }

    ordered_json summary = ordered_json::array();
    bool all_pass = true;
    for (size_t i = 0; i < ps.size(); ++i) {
        const double p = ps[i];
        const double e_energy = 1.0 / p;
        const double e_operator = 1.0 / (p - 1.0);
        // p = 2 is Lipschitz; below 2 only the energy route is asserted,
        // above 2 the sharper operator exponent binds.
        const double asserted = (p < 2.0) ? e_energy : e_operator;
        const RateReport rep = rate_sweep_p_laplace(mesh, p, fv, X, ts, tol, asserted);
        write_text_file(join(out, "rates_p" + std::to_string(i) + ".csv"), rep.csv());
        ordered_json j;
        j["p"] = p;
        j["slope"] = rep.slope;
        j["exponent_energy"] = e_energy;
        j["exponent_operator"] = e_operator;
        j["exponent_asserted"] = asserted;
        j["pass"] = rep.pass;
        summary.push_back(j);
        all_pass = all_pass && rep.pass;
    }
    ordered_json top;
    top["results"] = summary;
    top["pass"] = all_pass;
    write_text_file(join(out, "summary.json"), top.dump(2) + "\n");
    return std::string("p-laplace-rates: ") + (all_pass ? "pass" : "FAIL");
}

std::string cmd_material_derivative(const Config& cfg, const std::string& out) {
    const Mesh mesh = mesh_from_config(cfg);
    const ObstacleProblem p = problem_from_config(cfg, mesh);
    const VectorField X = field_from_config(cfg, mesh.hold_all);
    const double tol = cfg.get_double("problem.tol", 1e-10);
    const std::vector<double> ts = cfg.get_list("material.t_list", {0.1, 0.01, 0.001});
    const double cone_tol = cfg.get_double("material.cone_tol", 1e-6);

    const MaterialRateReport rep = fd_material_oracle(p, X, ts, tol);
    CsvTable table;
    table.header = "t,error_h1,quotient_norm";
    for (const auto& row : rep.rows) table.rows.push_back({row.t, row.error_h1, row.quotient_norm});
    write_text_file(join(out, "material_rates.csv"), table.to_string());

    const VISolution sol = solve_obstacle_semilinear(p, tol);
    const NodalField psidot = static_obstacle_rate(p, X);
    const DiscreteCone cone = tangent_kern_cone(p, sol, psidot);
    const double violation = cone.violation(rep.quotient_smallest_t.values);

    ordered_json j;
    j["final_error_h1"] = rep.rows.empty() ? 0.0 : rep.rows.back().error_h1;
    j["monotone_decreasing"] = rep.monotone_decreasing;
    j["cone_violation"] = violation;
    j["cone_tol"] = cone_tol;
    j["pass"] = rep.monotone_decreasing && violation <= cone_tol;
    write_text_file(join(out, "summary.json"), j.dump(2) + "\n");
    return "material-derivative: final error " +
           format_float(rep.rows.empty() ? 0.0 : rep.rows.back().error_h1);
}

std::string cmd_shape_derivative(const Config& cfg, const std::string& out) {
    Mesh mesh = mesh_from_config(cfg);
    const VectorField X = field_from_config(cfg, mesh.hold_all);
    const double tol = cfg.get_double("problem.tol", 1e-10);
    const int levels = cfg.get_int("refine.levels", 3);

    CsvTable table;
    table.header = "level,h,uprime_l2,ratio";
    std::vector<Mesh> meshes;
    meshes.push_back(mesh);
    for (int l = 0; l < levels; ++l) meshes.push_back(refine_uniform(meshes.back()));

    double prev = 0.0;
    std::vector<double> norms;
    double bform = 0.0;
    for (int l = 0; l <= levels; ++l) {
        const Mesh& m = meshes[l];
        const ObstacleProblem p = problem_from_config(cfg, m);
        const VISolution sol = solve_obstacle_semilinear(p, tol);
        const NodalField psidot = static_obstacle_rate(p, X);
        const NodalField udot = solve_material_derivative(p, sol, X, psidot, tol);
        const NodalField uprime = state_shape_derivative(m, udot, sol.state, X);
        const double nrm = l2_norm(m, uprime);
        norms.push_back(nrm);
        const double h = 1.0 / std::sqrt(double(m.num_triangles()) / 2.0);
        table.rows.push_back({double(l), h, nrm, l == 0 ? 0.0 : prev / nrm});
        prev = nrm;
        if (l == 0) bform = boundary_form_value(p, sol.state, X, sol.state);
    }
    write_text_file(join(out, "shape_derivative.csv"), table.to_string());
    ordered_json j;
    j["norms"] = norms;
    bool decreasing = true;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < norms.size(); ++i) {
        if (norms[i + 1] >= norms[i]) decreasing = false;
        worst_ratio = std::min(worst_ratio, norms[i] / norms[i + 1]);
    }
    j["decreasing"] = decreasing;
    j["worst_ratio"] = worst_ratio;
    j["boundary_form_diag"] = bform;
    write_text_file(join(out, "summary.json"), j.dump(2) + "\n");
    return "shape-derivative: worst refinement ratio " + format_float(worst_ratio);
}

std::string export_vector_field_csv(const Mesh& mesh, const VectorNodalField& u) {
    std::string out = "node,x,y,ux,uy\n";
    for (int i = 0; i < mesh.num_vertices(); ++i)
        out += std::to_string(i) + "," + format_float(mesh.vertices[i].x) + "," +
               format_float(mesh.vertices[i].y) + "," + format_float(u.values[2 * i]) + "," +
               format_float(u.values[2 * i + 1]) + "\n";
    return out;
}

std::string cmd_damage_run(const Config& cfg, const std::string& out) {
    const Mesh mesh = mesh_from_config(cfg);
    const DamageModelSpec spec = damage_from_config(cfg, mesh);
    const CostSpec cost = cost_from_config(cfg, spec.steps);
    const DamageTrajectory traj = run_damage(spec);

    for (int k = 0; k <= spec.steps; ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "chi_%03d.csv", k);
        write_text_file(join(out, name), export_field_csv(mesh, traj.chi[k]));
        std::snprintf(name, sizeof(name), "u_%03d.csv", k);
        write_text_file(join(out, name), export_vector_field_csv(mesh, traj.u[k]));
    }
    const double J = damage_cost(spec, traj, cost);

    ordered_json j;
    j["J"] = J;
    if (cfg.has("catalog.nx") || cfg.has("catalog.region")) {
        const auto catalog = catalog_from_config(cfg, mesh.hold_all);
        const OptimalityScan scan = optimality_residual(spec, cost, catalog);
        j["dJ_catalog"] = scan.dj;
        j["min_dJ"] = scan.min_dj;
    } else {
        j["dJ_catalog"] = ordered_json::array();
    }
    j["max_principle_ok"] = traj.max_principle_ok;
    j["dissipation_ok"] = traj.dissipation_ok;
    double worst_slack = 0.0;
    for (const auto& d : traj.diagnostics)
        worst_slack = std::min(worst_slack, d.dissipation_slack / d.dissipation_scale);
    j["worst_dissipation_slack"] = worst_slack;
    write_text_file(join(out, "summary.json"), j.dump(2) + "\n");
    return "damage-run: J = " + format_float(J) +
           (traj.max_principle_ok && traj.dissipation_ok ? ", diagnostics ok" : ", DIAGNOSTIC FAIL");
}

std::string cmd_damage_dj(const Config& cfg, const std::string& out) {
    const Mesh mesh = mesh_from_config(cfg);
    const DamageModelSpec spec = damage_from_config(cfg, mesh);
    const CostSpec cost = cost_from_config(cfg, spec.steps);
    const VectorField X = field_from_config(cfg, mesh.hold_all);

    const DamageTrajectory traj = run_damage(spec);
    const SensitivityTrajectory sens = sensitivity_chain(spec, traj, X);
    const double J0 = damage_cost(spec, traj, cost);
    const double dJ = eulerian_semiderivative(spec, traj, sens, cost, X);

    ordered_json fd_rows = ordered_json::array();
    bool pass = true;
    for (double t : cfg.get_list("fd.t_list", {0.01, 0.001})) {
        const DamageTrajectory pert = run_damage(spec, &X, t);
        TransportData td = pullback_transport(mesh, X, t);
        const double Jt = damage_cost(spec, pert, cost, td);
        const double quotient = (Jt - J0) / t;
        ordered_json row;
        row["t"] = t;
        row["quotient"] = quotient;
        row["abs_error"] = std::fabs(quotient - dJ);
        fd_rows.push_back(row);
    }
    ordered_json hom_rows = ordered_json::array();
    for (double lam : cfg.get_list("fd.homogeneity", {0.5, 2.0, 10.0})) {
        const VectorField Xs = X.scaled(lam);
        const SensitivityTrajectory sens_s = sensitivity_chain(spec, traj, Xs);
        const double dJs = eulerian_semiderivative(spec, traj, sens_s, cost, Xs);
        const double rel = std::fabs(dJs - lam * dJ) / std::max(1e-300, std::fabs(lam * dJ));
        ordered_json row;
        row["lambda"] = lam;
        row["dJ"] = dJs;
        row["rel_error"] = rel;
        hom_rows.push_back(row);
        pass = pass && rel <= 1e-8;
    }
    ordered_json j;
    j["J"] = J0;
    j["dJ"] = dJ;
    j["fd"] = fd_rows;
    j["homogeneity"] = hom_rows;
    j["homogeneity_pass"] = pass;
    write_text_file(join(out, "dj.json"), j.dump(2) + "\n");
    return "damage-dj: dJ = " + format_float(dJ);
}

std::string cmd_shape_descent(const Config& cfg, const std::string& out) {
    const Mesh mesh = mesh_from_config(cfg);
    const DamageModelSpec spec = damage_from_config(cfg, mesh);
    const CostSpec cost = cost_from_config(cfg, spec.steps);
    const auto catalog = catalog_from_config(cfg, mesh.hold_all);
    const int max_it = cfg.get_int("descent.max_iterations", 12);
    const double step = cfg.get_double("descent.step", 0.08);
    const double tol_opt = cfg.get_double("descent.tol_opt", 1e-4);

    const DescentResult res = shape_descent(spec, cost, catalog, max_it, step, tol_opt);

    CsvTable table;
    table.header = "iteration,J";
    for (size_t i = 0; i < res.j_values.size(); ++i)
        table.rows.push_back({double(i), res.j_values[i]});
    write_text_file(join(out, "descent.csv"), table.to_string());
    write_text_file(join(out, "final_mesh.txt"), export_mesh_text(res.meshes.back()));
    ordered_json j;
    j["iterations"] = res.iterations;
    j["J_initial"] = res.j_values.front();
    j["J_final"] = res.j_values.back();
    j["final_min_dJ"] = res.final_min_dj;
    bool monotone = true;
    for (size_t i = 0; i + 1 < res.j_values.size(); ++i)
        if (res.j_values[i + 1] >= res.j_values[i]) monotone = false;
    j["monotone_decrease"] = monotone;
    write_text_file(join(out, "summary.json"), j.dump(2) + "\n");
    return "shape-descent: J " + format_float(res.j_values.front()) + " -> " +
           format_float(res.j_values.back()) + " in " + std::to_string(res.iterations) +
           " accepted steps";
}

} // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {
        "solve-vi",      "rate-sweep",          "p-laplace-rates", "material-derivative",
        "shape-derivative", "damage-run",       "damage-dj",       "shape-descent"};
    return names;
}

std::string run_command(const std::string& command, const Config& cfg, const std::string& out) {
    ensure_dir(out);
    if (command == "solve-vi") return cmd_solve_vi(cfg, out);
    if (command == "rate-sweep") return cmd_rate_sweep(cfg, out);
    if (command == "p-laplace-rates") return cmd_p_laplace_rates(cfg, out);
    if (command == "material-derivative") return cmd_material_derivative(cfg, out);
    if (command == "shape-derivative") return cmd_shape_derivative(cfg, out);
    if (command == "damage-run") return cmd_damage_run(cfg, out);
    if (command == "damage-dj") return cmd_damage_dj(cfg, out);
    if (command == "shape-descent") return cmd_shape_descent(cfg, out);
    throw ConfigError("unknown command '" + command + "'");
}

} // namespace vishape
