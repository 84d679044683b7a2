#include "vishape/cones.hpp"

#include <algorithm>
#include <cmath>

#include "vishape/error.hpp"
#include "vishape/flow.hpp"
#include "vishape/io.hpp"

namespace vishape {

int DiscreteCone::count(ConeKind k) const {
    int c = 0;
    for (ConeKind x : kind)
        if (x == k) ++c;
    return c;
}

double DiscreteCone::violation(const std::vector<double>& z) const {
    double worst = 0.0;
    for (size_t i = 0; i < kind.size(); ++i) {
        if (kind[i] == ConeKind::Equality)
            worst = std::max(worst, std::fabs(z[i] - bound[i]));
        else if (kind[i] == ConeKind::Inequality)
            worst = std::max(worst, z[i] - bound[i]);
    }
    return worst;
}

DiscreteCone tangent_kern_cone(const ObstacleProblem& problem, const VISolution& solution,
                               const NodalField& psidot, std::optional<double> mu_tol) {
    const int n = problem.mesh->num_vertices();
    check_field(*problem.mesh, psidot);
    if (solution.state.size() != n) throw InputError("tangent_kern_cone: solution size mismatch");
    if (solution.res_feasibility > 10 * solution.tol_active ||
        solution.res_sign > 10 * solution.tol_active)
        throw InputError("tangent_kern_cone: solution violates its own invariants");

    const double tol = mu_tol ? *mu_tol : problem.cone_mu_tol.value_or(solution.tol_active);
    DiscreteCone cone;
    cone.kind.assign(n, ConeKind::Free);
    cone.bound.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (problem.obstacle[i] == kUnconstrained) continue;
        const double gap = problem.obstacle[i] - solution.state[i];
        if (gap <= solution.tol_active) {
            const bool strong = solution.multiplier[i] > tol;
            cone.kind[i] = (strong || problem.strict_complementarity_cone) ? ConeKind::Equality
                                                                           : ConeKind::Inequality;
            cone.bound[i] = psidot[i];
        }
    }
    return cone;
}

std::vector<double> solve_cone_vi(const SparseSymmetric& Q, const std::vector<double>& rhs,
                                  const DiscreteCone& cone, const Mesh& mesh, double tol,
                                  ConeVIInfo* info, const std::vector<char>* initial_active) {
    const int n = Q.size();
    if (static_cast<int>(cone.kind.size()) != n || static_cast<int>(rhs.size()) != n)
        throw InputError("solve_cone_vi: size mismatch");

    std::vector<char> active(n, 0); // equality nodes + active inequality nodes
    for (int i = 0; i < n; ++i)
        if (cone.kind[i] == ConeKind::Equality) active[i] = 1;
    if (initial_active)
        for (int i = 0; i < n; ++i)
            if (cone.kind[i] == ConeKind::Inequality && (*initial_active)[i]) active[i] = 1;

    std::vector<double> pin(n, 0.0);
    for (int i = 0; i < n; ++i)
        if (cone.kind[i] != ConeKind::Free) pin[i] = cone.bound[i];

    std::vector<double> z;
    std::vector<double> residual;
    for (int outer = 1; outer <= 200; ++outer) {
        z = Q.solve_pinned(active, pin, rhs);
        residual = Q.apply(z);
        for (int i = 0; i < n; ++i) residual[i] -= rhs[i];
        std::vector<char> next = active;
        for (int i = 0; i < n; ++i) {
            if (cone.kind[i] != ConeKind::Inequality) continue;
            const double mu = active[i] ? -residual[i] : 0.0;
            next[i] = (mu + (z[i] - cone.bound[i]) > 0.0) ? 1 : 0;
        }
        if (next == active) {
            if (info) {
                info->multiplier = NodalField(mesh, 0.0);
                for (int i = 0; i < n; ++i)
                    if (active[i] && cone.kind[i] == ConeKind::Inequality)
                        info->multiplier[i] = -residual[i];
                info->iterations = outer;
                info->res_stationarity = info->res_feasibility = info->res_sign =
                    info->res_complementarity = 0.0;
                for (int i = 0; i < n; ++i) {
                    if (cone.kind[i] == ConeKind::Inequality) {
                        const double gap = cone.bound[i] - z[i];
                        info->res_feasibility = std::max(info->res_feasibility, -gap);
                        info->res_sign = std::max(info->res_sign, -info->multiplier[i]);
                        info->res_complementarity =
                            std::max(info->res_complementarity, std::fabs(info->multiplier[i] * gap));
                        info->res_stationarity =
                            std::max(info->res_stationarity, std::fabs(residual[i] + info->multiplier[i]));
                    } else if (cone.kind[i] == ConeKind::Free) {
                        info->res_stationarity = std::max(info->res_stationarity, std::fabs(residual[i]));
                    }
                }
            }
            // tolerance is only used to reject an unconverged linear solve
            double free_res = 0.0;
            for (int i = 0; i < n; ++i)
                if (!active[i]) free_res = std::max(free_res, std::fabs(residual[i]));
            if (free_res > std::max(tol, 1e-9))
                throw SolverError("solve_cone_vi: linear residual " + format_float(free_res));
            return z;
        }
        active = next;
    }
    throw SolverError("solve_cone_vi: active set did not settle in 200 iterations");
}

SparseSymmetric material_derivative_matrix(const ObstacleProblem& p, const VISolution& sol) {
    const SparseSymmetric K =
        assemble_bilinear(*p.mesh, identity_transport(), p.lambda, p.mass_quad);
    auto [b, W] = assemble_semilinear(*p.mesh, p.density, sol.state, nullptr, identity_transport(),
                                      p.semilinear_quad);
    return SparseSymmetric::add(K, W);
}

std::vector<double> material_derivative_rhs(const ObstacleProblem& p, const VISolution& sol,
                                            const VectorField& X) {
    if (!p.density.wdot && !p.density.xgrad)
        throw InputError("material derivative: density has neither wdot nor xgrad");
    auto wdot_at = [&p, &X](const DensityPoint& dp, double y) {
        if (p.density.wdot) return p.density.wdot(dp, y);
        return p.density.xgrad(dp, y).dot(X.value(dp.x));
    };
    const Mesh& mesh = *p.mesh;
    const int n = mesh.num_vertices();
    const FirstOrderTransport fo = first_order_transport(mesh, X);
    std::vector<double> rhs(n, 0.0);

    // -int A'(0) grad(u) . grad(phi): gradients elementwise, A' at midpoints.
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        const Vec2 gu = element_gradient(mesh, sol.state, e);
        const double w = mesh.area(e) / 3.0;
        for (int q = 0; q < 3; ++q) {
            const Mat2& Ap = fo.a_prime[fo.index(e, Quadrature::Midpoint, q)];
            const Vec2 Agu = Ap * gu;
            for (int v = 0; v < 3; ++v)
                rhs[tri[v]] -= w * Agu.dot(mesh.hat_gradient(e, v));
        }
        // -int xi'(0) lambda u phi with the mass rule of the bilinear form
        for (int q = 0; q < 3; ++q) {
            const double uq = p1_value(mesh, sol.state, e, p.mass_quad, q);
            const double xip = fo.xi_prime[fo.index(e, p.mass_quad, q)];
            const double val = xip * p.lambda * uq;
            double bw[3] = {0.0, 0.0, 0.0};
            if (p.mass_quad == Quadrature::Vertex) {
                bw[q] = 1.0;
            } else {
                bw[q] = 0.5;
                bw[(q + 1) % 3] = 0.5;
            }
            for (int v = 0; v < 3; ++v)
                if (bw[v] != 0.0) rhs[tri[v]] -= w * val * bw[v];
        }
        // -int (xi'(0) w(x,u) + wdot(x,u)) phi with the semilinear rule
        for (int q = 0; q < 3; ++q) {
            const Vec2 x = quad_point(mesh, e, p.semilinear_quad, q);
            const DensityPoint dp{e, q, p.semilinear_quad, x, x};
            const double uq = p1_value(mesh, sol.state, e, p.semilinear_quad, q);
            const double xip = fo.xi_prime[fo.index(e, p.semilinear_quad, q)];
            const double val = xip * p.density.w(dp, uq) + wdot_at(dp, uq);
            double bw[3] = {0.0, 0.0, 0.0};
            if (p.semilinear_quad == Quadrature::Vertex) {
                bw[q] = 1.0;
            } else {
                bw[q] = 0.5;
                bw[(q + 1) % 3] = 0.5;
            }
            for (int v = 0; v < 3; ++v)
                if (bw[v] != 0.0) rhs[tri[v]] -= w * val * bw[v];
        }
        // separate load: + int (xi'(0) f + grad f . X) phi
        if (p.load_fn) {
            if (!p.load_grad)
                throw InputError("material derivative: load_fn given without load_grad");
            for (int q = 0; q < 3; ++q) {
                const Vec2 x = quad_point(mesh, e, Quadrature::Midpoint, q);
                const double xip = fo.xi_prime[fo.index(e, Quadrature::Midpoint, q)];
                const double val = xip * p.load_fn(x) + p.load_grad(x).dot(X.value(x));
                double bw[3] = {0.0, 0.0, 0.0};
                bw[q] = 0.5;
                bw[(q + 1) % 3] = 0.5;
                for (int v = 0; v < 3; ++v)
                    if (bw[v] != 0.0) rhs[tri[v]] += w * val * bw[v];
            }
        }
    }
    return rhs;
}

NodalField static_obstacle_rate(const ObstacleProblem& p, const VectorField& X) {
    NodalField psidot(*p.mesh, 0.0);
    if (!p.static_obstacle) return psidot; // dynamic obstacles supply their own rate
    if (p.obstacle_grad) {
        for (int i = 0; i < p.mesh->num_vertices(); ++i) {
            const Vec2 x = p.mesh->vertices[i];
            psidot[i] = p.obstacle_grad(x).dot(X.value(x));
        }
    }
    return psidot;
}

NodalField solve_material_derivative(const ObstacleProblem& p, const VISolution& sol,
                                     const VectorField& X, const NodalField& psidot, double tol,
                                     ConeVIInfo* info) {
    const DiscreteCone cone = tangent_kern_cone(p, sol, psidot);
    const SparseSymmetric Q = material_derivative_matrix(p, sol);
    const std::vector<double> rhs = material_derivative_rhs(p, sol, X);
    NodalField udot(*p.mesh, 0.0);
    udot.values = solve_cone_vi(Q, rhs, cone, *p.mesh, tol, info);
    return udot;
}

MaterialRateReport fd_material_oracle(const ObstacleProblem& p, const VectorField& X,
                                      std::vector<double> t_sequence, double tol) {
    std::sort(t_sequence.begin(), t_sequence.end(), std::greater<double>());
    const VISolution base = solve_obstacle_semilinear(p, tol);
    const NodalField psidot = static_obstacle_rate(p, X);
    MaterialRateReport rep;
    rep.mat_deriv = solve_material_derivative(p, base, X, psidot, tol);

    double prev = kUnconstrained;
    for (double t : t_sequence) {
        const VISolution pert = solve_transported(p, X, t, tol);
        NodalField quotient(*p.mesh, 0.0);
        for (int i = 0; i < p.mesh->num_vertices(); ++i)
            quotient[i] = (pert.state[i] - base.state[i]) / t;
        NodalField diff(*p.mesh, 0.0);
        for (int i = 0; i < p.mesh->num_vertices(); ++i)
            diff[i] = quotient[i] - rep.mat_deriv[i];
        MaterialRateRow row{t, h1_norm(*p.mesh, diff), h1_norm(*p.mesh, quotient)};
        rep.rows.push_back(row);
        if (row.error_h1 > prev) rep.monotone_decreasing = false;
        prev = row.error_h1;
        rep.quotient_smallest_t = quotient;
    }
    std::vector<double> ts, es;
    for (const auto& r : rep.rows) {
        ts.push_back(r.t);
        es.push_back(r.error_h1);
    }
    rep.slope = fit_loglog_slope(ts, es);
    return rep;
}

NodalField state_shape_derivative(const Mesh& mesh, const NodalField& udot, const NodalField& u,
                                  const VectorField& X) {
    check_field(mesh, udot);
    check_field(mesh, u);
    const std::vector<Vec2> grad = recovered_gradient(mesh, u);
    NodalField out(mesh, 0.0);
    for (int i = 0; i < mesh.num_vertices(); ++i)
        out[i] = udot[i] - grad[i].dot(X.value(mesh.vertices[i]));
    return out;
}

double boundary_form_value(const ObstacleProblem& p, const NodalField& u, const VectorField& X,
                           const NodalField& phi) {
    if (!p.static_obstacle)
        throw InputError("boundary_form_value: only available in static-obstacle mode");
    const Mesh& mesh = *p.mesh;
    check_field(mesh, u);
    check_field(mesh, phi);
    double value = 0.0;
    for (const auto& edge : mesh.boundary_edges) {
        const Vec2 pa = mesh.vertices[edge.a];
        const Vec2 pb = mesh.vertices[edge.b];
        const Vec2 d = pb - pa;
        const double len = d.norm();
        const Vec2 normal{d.y / len, -d.x / len}; // boundary is oriented counter-clockwise
        const Vec2 mid = (pa + pb) * 0.5;
        const double du = (u[edge.b] - u[edge.a]) / len;
        const double dphi = (phi[edge.b] - phi[edge.a]) / len;
        const double um = 0.5 * (u[edge.a] + u[edge.b]);
        const double phim = 0.5 * (phi[edge.a] + phi[edge.b]);
        const DensityPoint dp{0, 0, Quadrature::Midpoint, mid, mid};
        const double wm = p.density.w(dp, um);
        const double xn = X.value(mid).dot(normal);
        value -= len * (du * dphi + (p.lambda * um + wm) * phim) * xn;
    }
    return value;
}

} // namespace vishape
