#include "vishape/damage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "vishape/error.hpp"
#include "vishape/io.hpp"

namespace vishape {

ScalarFun scalar_fun_expr(const std::string& expr) {
    const Expression e = Expression::parse(expr);
    const Expression ex = e.dx();
    const Expression ey = e.dy();
    ScalarFun f;
    f.value = [e](const Vec2& p) { return e.eval(p); };
    f.gradient = [ex, ey](const Vec2& p) { return Vec2{ex.eval(p), ey.eval(p)}; };
    return f;
}

VecFun vec_fun_expr(const std::string& x_expr, const std::string& y_expr) {
    const Expression fx = Expression::parse(x_expr);
    const Expression fy = Expression::parse(y_expr);
    const Expression fxx = fx.dx(), fxy = fx.dy(), fyx = fy.dx(), fyy = fy.dy();
    VecFun f;
    f.value = [fx, fy](const Vec2& p) { return Vec2{fx.eval(p), fy.eval(p)}; };
    f.jacobian = [fxx, fxy, fyx, fyy](const Vec2& p) {
        return Mat2{{fxx.eval(p), fxy.eval(p), fyx.eval(p), fyy.eval(p)}};
    };
    return f;
}

void DamageModelSpec::check() const {
    if (!mesh) throw InputError("damage spec: no mesh");
    if (tau <= 0.0) throw InputError("damage spec: tau must be positive");
    if (steps < 0) throw InputError("damage spec: negative step count");
    if (loads.size() < size_t(steps + 1) || dirichlet.size() < size_t(steps + 1))
        throw InputError("damage spec: loads and dirichlet schedules need N+1 entries");
    if (!u0.value || !v0.value || !chi0.value) throw InputError("damage spec: initial data missing");
    tensor.degradation.validate();
    for (int i = 0; i < mesh->num_vertices(); ++i) {
        const double c0 = chi0.value(mesh->vertices[i]);
        if (c0 < -1e-12 || c0 > 1.0 + 1e-12)
            throw InputError("damage spec: initial damage outside [0,1] at node " + std::to_string(i));
    }
}

DamageModelSpec DamageModelSpec::with_mesh(const Mesh& m) const {
    DamageModelSpec s = *this;
    s.mesh = &m;
    return s;
}

namespace {

// The damage module samples the degradation factor with the vertex rule in
// every form; this keeps the discrete energy-dissipation identity exact.
constexpr Quadrature kDamageQuad = Quadrature::Vertex;

struct StepContext {
    const DamageModelSpec* spec;
    const VectorField* X; // null for the nominal run
    double t = 0.0;
    TransportData td;
    std::vector<Vec2> node_pos; // Phi_t(x_i) per node
    SparseSymmetric vec_mass;
    std::vector<char> bnd_mask;            // pinned dofs (both components)
    std::vector<int> dirichlet_dofs;
};

StepContext make_context(const DamageModelSpec& spec, const VectorField* X, double t) {
    StepContext ctx;
    ctx.spec = &spec;
    ctx.X = X;
    ctx.t = t;
    const Mesh& mesh = *spec.mesh;
    if (X && t != 0.0)
        ctx.td = pullback_transport(mesh, *X, t);
    ctx.node_pos.resize(mesh.num_vertices());
    for (int i = 0; i < mesh.num_vertices(); ++i)
        ctx.node_pos[i] =
            (X && t != 0.0) ? integrate_flow(*X, t, mesh.vertices[i]).point : mesh.vertices[i];
    ctx.vec_mass = assemble_vector_mass(mesh, ctx.td);
    ctx.bnd_mask.assign(2 * mesh.num_vertices(), 0);
    for (int i : mesh.boundary_nodes) {
        ctx.bnd_mask[2 * i] = 1;
        ctx.bnd_mask[2 * i + 1] = 1;
        ctx.dirichlet_dofs.push_back(2 * i);
        ctx.dirichlet_dofs.push_back(2 * i + 1);
    }
    return ctx;
}

NodalField nodal_scalar(const Mesh& mesh, const StepContext& ctx, const ScalarFun& f) {
    NodalField out(mesh, 0.0);
    for (int i = 0; i < mesh.num_vertices(); ++i) out[i] = f.value(ctx.node_pos[i]);
    return out;
}

VectorNodalField nodal_vector(const Mesh& mesh, const StepContext& ctx, const VecFun& f) {
    VectorNodalField out(mesh, 0.0);
    for (int i = 0; i < mesh.num_vertices(); ++i) out.set(i, f.value(ctx.node_pos[i]));
    return out;
}

// Strain energy density C eps_t(u) : eps_t(u) at the vertex-rule quadrature
// points of every element (no degradation factor).
std::vector<double> strain_energy_density(const Mesh& mesh, const ElasticityTensor& tensor,
                                          const VectorNodalField& u, const TransportData& td) {
    std::vector<double> e(3 * mesh.num_triangles(), 0.0);
    for (int el = 0; el < mesh.num_triangles(); ++el) {
        const Mat2 J = element_jacobian(mesh, u, el);
        for (int q = 0; q < 3; ++q) {
            const Mat2 eps = (J * td.inv_jac_at(el, kDamageQuad, q)).sym();
            e[3 * el + q] = tensor.energy_density(eps);
        }
    }
    return e;
}

// Obstacle problem of the damage step: lambda = 1/tau, obstacle chi^{k-1},
// density from the convex splitting of the driving force.
ObstacleProblem damage_step_problem(const StepContext& ctx, const NodalField& chi_prev,
                                    const std::vector<double>& strain_prev) {
    const DamageModelSpec& spec = *ctx.spec;
    const Mesh& mesh = *spec.mesh;
    ObstacleProblem p;
    p.mesh = &mesh;
    p.lambda = 1.0 / spec.tau;
    p.transport = ctx.td;
    // vertex rule for the mass too: the time-difference pairing then cancels
    // nodally against the -chi^{k-1}/tau part of the density
    p.mass_quad = kDamageQuad;
    p.semilinear_quad = kDamageQuad;
    p.obstacle = chi_prev.values;

    const Degradation deg = spec.tensor.degradation;
    const DamagePotential pot = spec.potential;
    const double tau = spec.tau;
    const NodalField prev = chi_prev;
    const std::vector<double> ev = strain_prev;
    const Mesh* mp = &mesh;
    p.density.w = [deg, pot, tau, prev, ev, mp](const DensityPoint& dp, double y) {
        const double cp = p1_value(*mp, prev, dp.elem, dp.rule, dp.local);
        const double e = ev[3 * dp.elem + dp.local];
        return -cp / tau + 0.5 * (deg.dc1(y) + deg.dc2(cp)) * e + pot.dg1(y) + pot.dg2(cp);
    };
    p.density.dyw = [deg, pot, ev, mp](const DensityPoint& dp, double y) {
        (void)mp;
        return 0.5 * deg.ddc1(y) * ev[3 * dp.elem + dp.local] + pot.ddg1(y);
    };
    return p;
}

// Elasticity system of the step: (1/tau^2) M + K(chi^k), Dirichlet d^k.
VectorNodalField solve_displacement(const StepContext& ctx, int k, const NodalField& chi,
                                    const VectorNodalField& u_prev,
                                    const VectorNodalField& u_prev2) {
    const DamageModelSpec& spec = *ctx.spec;
    const Mesh& mesh = *spec.mesh;
    const double tau = spec.tau;
    const SparseSymmetric K = assemble_elasticity(mesh, spec.tensor, chi, ctx.td, kDamageQuad);
    const SparseSymmetric Afull = SparseSymmetric::add(K, ctx.vec_mass, 1.0, 1.0 / (tau * tau));

    std::vector<double> rhs =
        assemble_load_vec(mesh, [&](const Vec2& x) { return spec.loads[k].value(x); }, ctx.td);
    std::vector<double> uhist(2 * mesh.num_vertices());
    for (size_t i = 0; i < uhist.size(); ++i)
        uhist[i] = 2.0 * u_prev.values[i] - u_prev2.values[i];
    const std::vector<double> mterm = ctx.vec_mass.apply(uhist);
    for (size_t i = 0; i < rhs.size(); ++i) rhs[i] += mterm[i] / (tau * tau);

    std::vector<double> pin(2 * mesh.num_vertices(), 0.0);
    for (int i : mesh.boundary_nodes) {
        const Vec2 d = spec.dirichlet[k].value(ctx.node_pos[i]);
        pin[2 * i] = d.x;
        pin[2 * i + 1] = d.y;
    }
    VectorNodalField u(mesh, 0.0);
    u.values = Afull.solve_pinned(ctx.bnd_mask, pin, rhs);
    return u;
}

double vertex_rule_sum(const Mesh& mesh, const TransportData& td,
                       const std::function<double(int, int)>& f) {
    double s = 0.0;
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const double w = mesh.area(e) / 3.0;
        for (int q = 0; q < 3; ++q) s += w * td.xi_at(e, Quadrature::Vertex, q) * f(e, q);
    }
    return s;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<double> minus(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

// Discrete free energy: kinetic + degraded elastic + gradient + potential,
// with quadrature matching the assembled forms.
double step_energy(const StepContext& ctx, const NodalField& chi, const VectorNodalField& u,
                   const VectorNodalField& u_prev, const SparseSymmetric& K_chi) {
    const DamageModelSpec& spec = *ctx.spec;
    const Mesh& mesh = *spec.mesh;
    const double tau = spec.tau;
    std::vector<double> v(minus(u.values, u_prev.values));
    for (double& x : v) x /= tau;
    const double kinetic = 0.5 * dot(v, ctx.vec_mass.apply(v));
    const double elastic = 0.5 * dot(u.values, K_chi.apply(u.values));
    // gradient part: exact stiffness, xi-weighted through the transport
    double grad = 0.0;
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const Vec2 g = element_gradient(mesh, chi, e);
        const double w = mesh.area(e) / 3.0;
        for (int q = 0; q < 3; ++q) {
            const Mat2 A = ctx.td.a_at(e, Quadrature::Midpoint, q);
            grad += 0.5 * w * (A * g).dot(g);
        }
    }
    const DamagePotential pot = spec.potential;
    const NodalField* cp = &chi;
    const Mesh* mp = &mesh;
    const double potential = vertex_rule_sum(
        mesh, ctx.td, [&pot, cp, mp](int e, int q) {
            return pot.g(p1_value(*mp, *cp, e, Quadrature::Vertex, q));
        });
    return kinetic + elastic + grad + potential;
}

} // namespace

DamageTrajectory run_damage(const DamageModelSpec& spec, const VectorField* X, double t) {
    spec.check();
    const Mesh& mesh = *spec.mesh;
    StepContext ctx = make_context(spec, X, t);

    DamageTrajectory traj;
    traj.chi.push_back(nodal_scalar(mesh, ctx, spec.chi0));
    traj.u.push_back(nodal_vector(mesh, ctx, spec.u0));
    const VectorNodalField v0 = nodal_vector(mesh, ctx, spec.v0);
    traj.u_before_start = VectorNodalField(mesh, 0.0);
    for (int i = 0; i < 2 * mesh.num_vertices(); ++i)
        traj.u_before_start.values[i] = traj.u[0].values[i] + spec.tau * v0.values[i];

    for (int k = 1; k <= spec.steps; ++k) {
        const NodalField& chi_prev = traj.chi[k - 1];
        const VectorNodalField& u_prev = traj.u[k - 1];
        const VectorNodalField& u_prev2 = (k == 1) ? traj.u_before_start : traj.u[k - 2];

        const std::vector<double> strain_prev =
            strain_energy_density(mesh, spec.tensor, u_prev, ctx.td);
        const ObstacleProblem chi_problem = damage_step_problem(ctx, chi_prev, strain_prev);
        VISolution chi_sol;
        try {
            chi_sol = solve_obstacle_semilinear(chi_problem, spec.vi_tol, &chi_prev.values);
        } catch (const SolverError& e) {
            throw SolverError("damage step " + std::to_string(k) + ": " + e.what());
        }
        const VectorNodalField u = solve_displacement(ctx, k, chi_sol.state, u_prev, u_prev2);

        // diagnostics: maximum principle, monotonicity, energy-dissipation
        DamageStepDiagnostics diag;
        diag.chi_min = *std::min_element(chi_sol.state.values.begin(), chi_sol.state.values.end());
        diag.chi_max = *std::max_element(chi_sol.state.values.begin(), chi_sol.state.values.end());
        diag.monotonicity_violation = std::max(0.0, chi_sol.res_feasibility);
        diag.complementarity =
            std::max(std::max(chi_sol.res_complementarity, chi_sol.res_stationarity),
                     std::max(chi_sol.res_feasibility, chi_sol.res_sign));

        {
            const SparseSymmetric K_new =
                assemble_elasticity(mesh, spec.tensor, chi_sol.state, ctx.td, kDamageQuad);
            const SparseSymmetric K_old =
                assemble_elasticity(mesh, spec.tensor, chi_prev, ctx.td, kDamageQuad);
            const double E_new = step_energy(ctx, chi_sol.state, u, u_prev, K_new);
            const double E_old = step_energy(ctx, chi_prev, u_prev, u_prev2, K_old);

            // dissipation tau ||dchi/tau||^2 with the mass-rule quadrature
            const SparseSymmetric mass_full =
                assemble_bilinear(mesh, ctx.td, 1.0, kDamageQuad);
            const SparseSymmetric stiff = assemble_bilinear(mesh, ctx.td, 0.0);
            const SparseSymmetric mass = SparseSymmetric::add(mass_full, stiff, 1.0, -1.0);
            const std::vector<double> dchi = minus(chi_sol.state.values, chi_prev.values);
            const double dissip = dot(dchi, mass.apply(dchi)) / spec.tau;

            // external work terms tested with du - dd
            std::vector<double> dd(2 * mesh.num_vertices(), 0.0);
            for (int i : mesh.boundary_nodes) {
                const Vec2 dk = spec.dirichlet[k].value(ctx.node_pos[i]);
                const Vec2 dk1 = spec.dirichlet[k - 1].value(ctx.node_pos[i]);
                dd[2 * i] = dk.x - dk1.x;
                dd[2 * i + 1] = dk.y - dk1.y;
            }
            const std::vector<double> du = minus(u.values, u_prev.values);
            const std::vector<double> load = assemble_load_vec(
                mesh, [&](const Vec2& x) { return spec.loads[k].value(x); }, ctx.td);
            const double work_load = dot(load, minus(du, dd));
            const double work_elastic = dot(K_new.apply(u.values), dd);
            const std::vector<double> dv = minus(du, minus(u_prev.values, u_prev2.values));
            const double work_inertia = dot(ctx.vec_mass.apply(dv), dd) / (spec.tau * spec.tau);
            const double work = work_load + work_elastic + work_inertia;

            diag.dissipation_slack = work - (E_new - E_old + dissip);
            diag.dissipation_scale = std::fabs(E_new) + std::fabs(E_old) + std::fabs(dissip) +
                                     std::fabs(work) + 1.0;
            if (diag.dissipation_slack < -1e-8 * diag.dissipation_scale)
                traj.dissipation_ok = false;
        }
        if (diag.chi_min < -1e-10 || diag.chi_max > 1.0 + 1e-10 ||
            diag.monotonicity_violation > 1e-10)
            traj.max_principle_ok = false;

        traj.chi.push_back(chi_sol.state);
        traj.u.push_back(u);
        traj.chi_solutions.push_back(std::move(chi_sol));
        traj.diagnostics.push_back(diag);
    }
    return traj;
}

// ---- sensitivity chain -------------------------------------------------

namespace {

// Rate of the strain energy density: 2 C eps(u) : epsdot_X(udot) per
// vertex-rule quadrature point, with epsdot_X(udot) = eps(udot) - sym(du dX).
std::vector<double> strain_energy_rate(const Mesh& mesh, const ElasticityTensor& tensor,
                                       const VectorNodalField& u, const VectorNodalField& udot,
                                       const FirstOrderTransport& fo) {
    std::vector<double> r(3 * mesh.num_triangles(), 0.0);
    for (int el = 0; el < mesh.num_triangles(); ++el) {
        const Mat2 Ju = element_jacobian(mesh, u, el);
        const Mat2 Jud = element_jacobian(mesh, udot, el);
        for (int q = 0; q < 3; ++q) {
            const Mat2 dX = fo.grad_x[fo.index(el, kDamageQuad, q)];
            const Mat2 epsdot = (Jud - Ju * dX).sym();
            r[3 * el + q] = 2.0 * tensor.stress(Ju.sym()).ddot(epsdot);
        }
    }
    return r;
}

} // namespace

SensitivityTrajectory sensitivity_chain(const DamageModelSpec& spec, const DamageTrajectory& traj,
                                        const VectorField& X) {
    spec.check();
    if (traj.chi_solutions.size() != size_t(spec.steps))
        throw InputError("sensitivity_chain: trajectory does not match the spec");
    const Mesh& mesh = *spec.mesh;
    const StepContext ctx = make_context(spec, nullptr, 0.0);
    const FirstOrderTransport fo = first_order_transport(mesh, X);
    const double tau = spec.tau;

    SensitivityTrajectory sens;
    // seeds from the hold-all initial data
    {
        NodalField chidot0(mesh, 0.0);
        VectorNodalField udot0(mesh, 0.0), vdot0(mesh, 0.0);
        for (int i = 0; i < mesh.num_vertices(); ++i) {
            const Vec2 x = mesh.vertices[i];
            const Vec2 Xi = X.value(x);
            chidot0[i] = spec.chi0.gradient(x).dot(Xi);
            udot0.set(i, spec.u0.jacobian(x) * Xi);
            vdot0.set(i, spec.v0.jacobian(x) * Xi);
        }
        sens.chidot.push_back(chidot0);
        sens.udot.push_back(udot0);
        sens.udot_before_start = VectorNodalField(mesh, 0.0);
        for (int i = 0; i < 2 * mesh.num_vertices(); ++i)
            sens.udot_before_start.values[i] = udot0.values[i] + tau * vdot0.values[i];
    }

    for (int k = 1; k <= spec.steps; ++k) {
        const NodalField& chi_prev = traj.chi[k - 1];
        const NodalField& chi_k = traj.chi[k];
        const VectorNodalField& u_prev = traj.u[k - 1];
        const VectorNodalField& u_k = traj.u[k];
        const VectorNodalField& u_prev2 = (k == 1) ? traj.u_before_start : traj.u[k - 2];
        const NodalField& chidot_prev = sens.chidot[k - 1];
        const VectorNodalField& udot_prev = sens.udot[k - 1];
        const VectorNodalField& udot_prev2 =
            (k == 1) ? sens.udot_before_start : sens.udot[k - 2];
        const VISolution& chi_sol = traj.chi_solutions[k - 1];

        const std::vector<double> strain_prev =
            strain_energy_density(mesh, spec.tensor, u_prev, ctx.td);
        const std::vector<double> strain_rate =
            strain_energy_rate(mesh, spec.tensor, u_prev, udot_prev, fo);

        // transported density derivative per the chain data
        ObstacleProblem chi_problem = damage_step_problem(ctx, chi_prev, strain_prev);
        {
            const Degradation deg = spec.tensor.degradation;
            const DamagePotential pot = spec.potential;
            const NodalField cprev = chi_prev;
            const NodalField cdot = chidot_prev;
            const std::vector<double> ev = strain_prev;
            const std::vector<double> er = strain_rate;
            const Mesh* mp = &mesh;
            chi_problem.density.wdot = [deg, pot, tau, cprev, cdot, ev, er, mp](
                                           const DensityPoint& dp, double y) {
                const double cp = p1_value(*mp, cprev, dp.elem, dp.rule, dp.local);
                const double cd = p1_value(*mp, cdot, dp.elem, dp.rule, dp.local);
                const double e = ev[3 * dp.elem + dp.local];
                const double edot = er[3 * dp.elem + dp.local];
                return -cd / tau + 0.5 * deg.ddc2(cp) * cd * e +
                       0.5 * (deg.dc1(y) + deg.dc2(cp)) * edot + pot.ddg2(cp) * cd;
            };
        }

        ConeVIInfo info;
        NodalField chidot_k =
            solve_material_derivative(chi_problem, chi_sol, X, chidot_prev, spec.vi_tol, &info);

        // displacement rate: (1/tau^2) M + K(chi^k) against the collected
        // first-order terms of the transported equilibrium equation.
        const SparseSymmetric K = assemble_elasticity(mesh, spec.tensor, chi_k, ctx.td, kDamageQuad);
        const SparseSymmetric Afull =
            SparseSymmetric::add(K, ctx.vec_mass, 1.0, 1.0 / (tau * tau));

        std::vector<double> rhs(2 * mesh.num_vertices(), 0.0);
        {
            // inertial history of the rates
            std::vector<double> hist(2 * mesh.num_vertices());
            for (size_t i = 0; i < hist.size(); ++i)
                hist[i] = 2.0 * udot_prev.values[i] - udot_prev2.values[i];
            const std::vector<double> m1 = ctx.vec_mass.apply(hist);
            for (size_t i = 0; i < rhs.size(); ++i) rhs[i] += m1[i] / (tau * tau);

            const Degradation& deg = spec.tensor.degradation;
            for (int el = 0; el < mesh.num_triangles(); ++el) {
                const auto& tri = mesh.triangles[el];
                const double w = mesh.area(el) / 3.0;
                const Mat2 Ju = element_jacobian(mesh, u_k, el);
                const Mat2 stress = spec.tensor.stress(Ju.sym()); // C eps(u^k), no degradation
                for (int q = 0; q < 3; ++q) {
                    const double chi_q = p1_value(mesh, chi_k, el, kDamageQuad, q);
                    const double chidot_q = p1_value(mesh, chidot_k, el, kDamageQuad, q);
                    const double cq = deg.c(chi_q);
                    const double dcq = deg.dc1(chi_q) + deg.dc2(chi_q);
                    const Mat2 dX = fo.grad_x[fo.index(el, kDamageQuad, q)];
                    const double xip = fo.xi_prime[fo.index(el, kDamageQuad, q)];
                    // (a) - c'(chi) chidot C eps(u^k) : eps(phi)
                    // (b) + c(chi) C sym(du dX) : eps(phi)
                    // (c) + c(chi) C eps(u^k) : (dphi dX)
                    // (d) - xi' c(chi) C eps(u^k) : eps(phi)
                    const Mat2 sym_dudX = (Ju * dX).sym();
                    const Mat2 coeff_eps_phi = stress * (-dcq * chidot_q - xip * cq) +
                                               spec.tensor.stress(sym_dudX) * cq;
                    const Mat2 coeff_dphi = (stress * dX.transpose()) * cq; // S : (G dX) = (S dX^T) : G
                    for (int v = 0; v < 3; ++v) {
                        const Vec2 g = mesh.hat_gradient(el, v);
                        // test gradients: component x -> G = e_x (x) g
                        const Vec2 row0{coeff_eps_phi(0, 0) + coeff_dphi(0, 0),
                                        coeff_eps_phi(0, 1) + coeff_dphi(0, 1)};
                        const Vec2 row1{coeff_eps_phi(1, 0) + coeff_dphi(1, 0),
                                        coeff_eps_phi(1, 1) + coeff_dphi(1, 1)};
                        rhs[2 * tri[v]] += w * row0.dot(g);
                        rhs[2 * tri[v] + 1] += w * row1.dot(g);
                    }
                }
                // inertial xi'-term: - xi' (u^k - 2u^{k-1} + u^{k-2})/tau^2 . phi
                // and load terms: + xi' l^k . phi + (dl X) . phi, midpoint rule
                for (int q = 0; q < 3; ++q) {
                    const Vec2 x = quad_point(mesh, el, Quadrature::Midpoint, q);
                    const double xip = fo.xi_prime[fo.index(el, Quadrature::Midpoint, q)];
                    const Vec2 lk = spec.loads[k].value(x);
                    const Vec2 ldot = spec.loads[k].jacobian(x) * X.value(x);
                    Vec2 acc{0.0, 0.0};
                    for (int v = 0; v < 3; ++v) {
                        const int node = tri[v];
                        double bwv = (v == q || v == (q + 1) % 3) ? 0.5 : 0.0;
                        if (bwv == 0.0) continue;
                        acc += Vec2{u_k.values[2 * node] - 2.0 * u_prev.values[2 * node] +
                                        u_prev2.values[2 * node],
                                    u_k.values[2 * node + 1] - 2.0 * u_prev.values[2 * node + 1] +
                                        u_prev2.values[2 * node + 1]} *
                               bwv;
                    }
                    const Vec2 total = (lk * xip + ldot) - acc * (xip / (tau * tau));
                    for (int v = 0; v < 3; ++v) {
                        double bwv = (v == q || v == (q + 1) % 3) ? 0.5 : 0.0;
                        if (bwv == 0.0) continue;
                        rhs[2 * tri[v]] += w * total.x * bwv;
                        rhs[2 * tri[v] + 1] += w * total.y * bwv;
                    }
                }
            }
        }

        std::vector<double> pin(2 * mesh.num_vertices(), 0.0);
        for (int i : mesh.boundary_nodes) {
            const Vec2 x = mesh.vertices[i];
            const Vec2 dd = spec.dirichlet[k].jacobian(x) * X.value(x);
            pin[2 * i] = dd.x;
            pin[2 * i + 1] = dd.y;
        }
        VectorNodalField udot_k(mesh, 0.0);
        udot_k.values = Afull.solve_pinned(ctx.bnd_mask, pin, rhs);

        sens.chidot.push_back(std::move(chidot_k));
        sens.udot.push_back(std::move(udot_k));
        sens.cone_info.push_back(std::move(info));
    }
    return sens;
}

// ---- cost and its shape derivative --------------------------------------

double damage_cost(const DamageModelSpec& spec, const DamageTrajectory& traj, const CostSpec& cost,
                   const TransportData& td) {
    spec.check();
    if (cost.u_ref.size() < size_t(spec.steps + 1) || cost.chi_ref.size() < size_t(spec.steps + 1))
        throw InputError("cost: reference schedules need N+1 entries");
    const Mesh& mesh = *spec.mesh;
    double J = 0.0;
    for (int k = 1; k <= spec.steps; ++k) {
        for (int e = 0; e < mesh.num_triangles(); ++e) {
            const auto& tri = mesh.triangles[e];
            const double w = mesh.area(e) / 3.0;
            for (int q = 0; q < 3; ++q) {
                Vec2 x = quad_point(mesh, e, Quadrature::Midpoint, q);
                if (!td.identity()) x = td.mapped[td.index(e, Quadrature::Midpoint, q)];
                const double xi = td.xi_at(e, Quadrature::Midpoint, q);
                Vec2 uq{0.0, 0.0};
                double cq = 0.0;
                for (int v = 0; v < 3; ++v) {
                    const double bwv = (v == q || v == (q + 1) % 3) ? 0.5 : 0.0;
                    if (bwv == 0.0) continue;
                    uq += traj.u[k].at(tri[v]) * bwv;
                    cq += traj.chi[k][tri[v]] * bwv;
                }
                const Vec2 du = uq - cost.u_ref[k].value(x);
                const double dc = cq - cost.chi_ref[k].value(x);
                J += w * xi * (0.5 * cost.lambda_u * du.dot(du) + 0.5 * cost.lambda_chi * dc * dc);
            }
        }
    }
    return J;
}

double eulerian_semiderivative(const DamageModelSpec& spec, const DamageTrajectory& traj,
                               const SensitivityTrajectory& sens, const CostSpec& cost,
                               const VectorField& X) {
    spec.check();
    const Mesh& mesh = *spec.mesh;
    double dJ = 0.0;
    for (int k = 1; k <= spec.steps; ++k) {
        for (int e = 0; e < mesh.num_triangles(); ++e) {
            const auto& tri = mesh.triangles[e];
            const double w = mesh.area(e) / 3.0;
            for (int q = 0; q < 3; ++q) {
                const Vec2 x = quad_point(mesh, e, Quadrature::Midpoint, q);
                const double xip = pullback_xi_prime(X, x);
                const Vec2 Xq = X.value(x);
                Vec2 uq{0.0, 0.0}, udq{0.0, 0.0};
                double cq = 0.0, cdq = 0.0;
                for (int v = 0; v < 3; ++v) {
                    const double bwv = (v == q || v == (q + 1) % 3) ? 0.5 : 0.0;
                    if (bwv == 0.0) continue;
                    uq += traj.u[k].at(tri[v]) * bwv;
                    udq += sens.udot[k].at(tri[v]) * bwv;
                    cq += traj.chi[k][tri[v]] * bwv;
                    cdq += sens.chidot[k][tri[v]] * bwv;
                }
                const Vec2 du = uq - cost.u_ref[k].value(x);
                const double dc = cq - cost.chi_ref[k].value(x);
                const Vec2 ur_dot = cost.u_ref[k].jacobian(x) * Xq;
                const Vec2 cr_grad = cost.chi_ref[k].gradient(x);
                dJ += w * (0.5 * cost.lambda_u * xip * du.dot(du) +
                           0.5 * cost.lambda_chi * xip * dc * dc +
                           cost.lambda_u * du.dot(udq - ur_dot) +
                           cost.lambda_chi * dc * (cdq - cr_grad.dot(Xq)));
            }
        }
    }
    return dJ;
}

OptimalityScan optimality_residual(const DamageModelSpec& spec, const CostSpec& cost,
                                   const std::vector<VectorField>& catalog) {
    const DamageTrajectory traj = run_damage(spec);
    OptimalityScan scan;
    scan.dj.assign(catalog.size(), 0.0);

    int threads = 1;
    if (const char* env = std::getenv("VISHAPE_THREADS")) threads = std::max(1, std::atoi(env));
    threads = std::min(threads, std::max(1, static_cast<int>(catalog.size())));

    auto work = [&](size_t idx) {
        const SensitivityTrajectory sens = sensitivity_chain(spec, traj, catalog[idx]);
        scan.dj[idx] = eulerian_semiderivative(spec, traj, sens, cost, catalog[idx]);
    };
    if (threads <= 1) {
        for (size_t i = 0; i < catalog.size(); ++i) work(i);
    } else {
        std::vector<std::thread> pool;
        for (int tix = 0; tix < threads; ++tix)
            pool.emplace_back([&, tix]() {
                for (size_t i = tix; i < catalog.size(); i += threads) work(i);
            });
        for (auto& th : pool) th.join();
    }
    scan.min_dj = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < catalog.size(); ++i) {
        if (scan.dj[i] < scan.min_dj) {
            scan.min_dj = scan.dj[i];
            scan.argmin = static_cast<int>(i);
        }
    }
    return scan;
}

DescentResult shape_descent(const DamageModelSpec& spec, const CostSpec& cost,
                            const std::vector<VectorField>& catalog, int max_iterations,
                            double initial_step, double tol_opt) {
    DescentResult result;
    result.meshes.push_back(*spec.mesh);

    for (int it = 0; it < max_iterations + 1; ++it) {
        const Mesh& current = result.meshes.back();
        const DamageModelSpec cur_spec = spec.with_mesh(current);
        if (result.j_values.size() < result.meshes.size()) {
            const DamageTrajectory traj = run_damage(cur_spec);
            result.j_values.push_back(damage_cost(cur_spec, traj, cost));
        }
        const OptimalityScan scan = optimality_residual(cur_spec, cost, catalog);
        result.final_min_dj = scan.min_dj;
        if (scan.min_dj >= -tol_opt || it == max_iterations) break;

        const VectorField& dir = catalog[scan.argmin];
        double step = initial_step;
        bool accepted = false;
        for (int half = 0; half < 20 && !accepted; ++half) {
            try {
                const FlowMap flow(dir, step);
                Mesh trial = deform(current, [&](const Vec2& p) { return flow(p); });
                const DamageModelSpec trial_spec = spec.with_mesh(trial);
                const DamageTrajectory traj = run_damage(trial_spec);
                const double Jt = damage_cost(trial_spec, traj, cost);
                if (Jt < result.j_values.back()) {
                    result.meshes.push_back(std::move(trial));
                    result.j_values.push_back(Jt);
                    result.iterations++;
                    accepted = true;
                    break;
                }
            } catch (const InputError&) {
                // inverted element: halve the step
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return result;
}

} // namespace vishape
