#include "vishape/vi.hpp"

#include <algorithm>
#include <cmath>

#include "vishape/error.hpp"
#include "vishape/io.hpp"

namespace vishape {

void ObstacleProblem::check() const {
    if (!mesh) throw InputError("obstacle problem: no mesh");
    if (lambda <= 0.0) throw InputError("obstacle problem: lambda must be positive");
    if (obstacle.size() != size_t(mesh->num_vertices()))
        throw InputError("obstacle problem: obstacle size mismatch");
    for (double v : obstacle)
        if (std::isnan(v) || v == -kUnconstrained)
            throw InputError("obstacle problem: obstacle must be finite or +infinity");
    if (!density.w || !density.dyw) throw InputError("obstacle problem: density incomplete");
}

namespace {

struct AssembledOperator {
    SparseSymmetric stiffness; // bilinear part
    std::vector<double> load;  // assembled f
};

AssembledOperator assemble_operator(const ObstacleProblem& p) {
    AssembledOperator op;
    op.stiffness = assemble_bilinear(*p.mesh, p.transport, p.lambda, p.mass_quad);
    if (p.load_fn)
        op.load = assemble_load(*p.mesh, p.load_fn, p.transport);
    else
        op.load.assign(p.mesh->num_vertices(), 0.0);
    return op;
}

// F(u) = K u + b(u) - f and the Newton matrix K + W(u).
std::vector<double> residual_at(const ObstacleProblem& p, const AssembledOperator& op,
                                const NodalField& u, SparseSymmetric* jacobian) {
    auto [b, W] = assemble_semilinear(*p.mesh, p.density, u, nullptr, p.transport,
                                      p.semilinear_quad);
    std::vector<double> r = op.stiffness.apply(u.values);
    for (size_t i = 0; i < r.size(); ++i) r[i] += b[i] - op.load[i];
    if (jacobian) *jacobian = SparseSymmetric::add(op.stiffness, W);
    return r;
}

double min_dyw_sample(const ObstacleProblem& p, const NodalField& u) {
    double worst = 0.0;
    for (int e = 0; e < p.mesh->num_triangles(); ++e) {
        for (int q = 0; q < 3; ++q) {
            const Vec2 x = quad_point(*p.mesh, e, p.semilinear_quad, q);
            DensityPoint dp{e, q, p.semilinear_quad, x, x};
            if (!p.transport.identity())
                dp.x_mapped = p.transport.mapped[p.transport.index(e, p.semilinear_quad, q)];
            const double y = p1_value(*p.mesh, u, e, p.semilinear_quad, q);
            worst = std::min(worst, p.density.dyw(dp, y));
        }
    }
    return worst;
}

// Newton solve of F(u) = 0 on the free nodes with u pinned on `mask`.
void newton_on_free(const ObstacleProblem& p, const AssembledOperator& op, NodalField& u,
                    const std::vector<char>& mask, const std::vector<double>& pin_values,
                    double ntol, int max_iter) {
    for (int i = 0; i < u.size(); ++i)
        if (mask[i]) u[i] = pin_values[i];
    std::vector<double> zero(u.size(), 0.0);
    for (int it = 0; it < max_iter; ++it) {
        SparseSymmetric J;
        std::vector<double> r = residual_at(p, op, u, &J);
        double rn = 0.0;
        for (int i = 0; i < u.size(); ++i)
            if (!mask[i]) rn = std::max(rn, std::fabs(r[i]));
        if (rn <= ntol) return;
        for (double& v : r) v = -v;
        const std::vector<double> delta = J.solve_pinned(mask, zero, r);
        // Plain Newton is fine for the mildly nonlinear densities; halve on
        // residual growth as a safeguard.
        double step = 1.0;
        NodalField trial = u;
        for (int half = 0; half < 30; ++half) {
            for (int i = 0; i < u.size(); ++i) trial[i] = u[i] + step * delta[i];
            const std::vector<double> rt = residual_at(p, op, trial, nullptr);
            double rtn = 0.0;
            for (int i = 0; i < u.size(); ++i)
                if (!mask[i]) rtn = std::max(rtn, std::fabs(rt[i]));
            if (rtn < rn || rtn <= ntol) break;
            step *= 0.5;
        }
        u = trial;
    }
    SparseSymmetric J;
    std::vector<double> r = residual_at(p, op, u, &J);
    double rn = 0.0;
    for (int i = 0; i < u.size(); ++i)
        if (!mask[i]) rn = std::max(rn, std::fabs(r[i]));
    if (rn > ntol)
        throw SolverError("obstacle solver: inner Newton did not converge, residual " +
                          format_float(rn));
}

VISolution finalize_solution(const ObstacleProblem& p, const AssembledOperator& op, NodalField u,
                             const std::vector<char>& active_mask, int iterations) {
    VISolution sol;
    sol.state = u;
    sol.multiplier = NodalField(*p.mesh, 0.0);
    const std::vector<double> r = residual_at(p, op, u, nullptr);
    const int n = u.size();
    for (int i = 0; i < n; ++i)
        if (active_mask[i]) sol.multiplier[i] = -r[i];

    double mu_max = 0.0;
    for (int i = 0; i < n; ++i) mu_max = std::max(mu_max, std::fabs(sol.multiplier[i]));
    sol.tol_active = 1e-8 * (1.0 + mu_max);

    for (int i = 0; i < n; ++i) {
        if (p.obstacle[i] == kUnconstrained) continue;
        const double gap = p.obstacle[i] - u[i];
        sol.res_feasibility = std::max(sol.res_feasibility, -gap);
        sol.res_sign = std::max(sol.res_sign, -sol.multiplier[i]);
        sol.res_complementarity = std::max(sol.res_complementarity,
                                           std::fabs(sol.multiplier[i] * gap));
        if (gap <= sol.tol_active) {
            sol.active.push_back(i);
            if (sol.multiplier[i] > sol.tol_active)
                sol.strongly_active.push_back(i);
            else
                sol.biactive.push_back(i);
        }
    }
    sol.res_feasibility = std::max(sol.res_feasibility, 0.0);
    sol.res_sign = std::max(sol.res_sign, 0.0);
    for (int i = 0; i < n; ++i)
        sol.res_stationarity = std::max(sol.res_stationarity, std::fabs(r[i] + sol.multiplier[i]));
    sol.iterations = iterations;
    return sol;
}

} // namespace

VISolution solve_obstacle_semilinear(const ObstacleProblem& p, double tol,
                                     const std::vector<double>* warm_start) {
    p.check();
    if (tol <= 0.0) throw InputError("obstacle solver: tol must be positive");
    const AssembledOperator op = assemble_operator(p);
    const int n = p.mesh->num_vertices();
    const double ntol = std::min(tol * 0.05, 1e-10);
    const int max_outer = 200;

    NodalField u(*p.mesh, 0.0);
    if (warm_start) {
        if (warm_start->size() != size_t(n)) throw InputError("obstacle solver: bad warm start");
        u.values = *warm_start;
    }
    {
        const double bad = min_dyw_sample(p, u);
        if (bad < -1e-12)
            throw SolverError("obstacle solver: non-monotone density, dyw = " + format_float(bad));
    }

    std::vector<char> active(n, 0);
    for (int i = 0; i < n; ++i)
        if (p.obstacle[i] != kUnconstrained && u[i] >= p.obstacle[i]) active[i] = 1;

    std::vector<double> pin(n, 0.0);
    for (int i = 0; i < n; ++i) pin[i] = (p.obstacle[i] == kUnconstrained) ? 0.0 : p.obstacle[i];

    for (int outer = 1; outer <= max_outer; ++outer) {
        newton_on_free(p, op, u, active, pin, ntol, 50);
        const std::vector<double> r = residual_at(p, op, u, nullptr);
        std::vector<char> next(n, 0);
        for (int i = 0; i < n; ++i) {
            if (p.obstacle[i] == kUnconstrained) continue;
            const double mu = active[i] ? -r[i] : 0.0;
            if (mu + (u[i] - p.obstacle[i]) > 0.0) next[i] = 1;
        }
        if (next == active) return finalize_solution(p, op, u, active, outer);
        active = next;
    }
    const std::vector<double> r = residual_at(p, op, u, nullptr);
    double rn = 0.0;
    for (double v : r) rn = std::max(rn, std::fabs(v));
    throw SolverError("obstacle solver: active set did not settle in 200 iterations, residual " +
                      format_float(rn));
}

VISolution solve_transported(const ObstacleProblem& problem, const VectorField& X, double t,
                             double tol) {
    if (t == 0.0) return solve_obstacle_semilinear(problem, tol);
    ObstacleProblem p = problem;
    p.transport = pullback_transport(*problem.mesh, X, t);
    bool constrained = false;
    for (double v : problem.obstacle)
        if (v != kUnconstrained) constrained = true;
    if (constrained) {
        if (!problem.obstacle_fn)
            throw InputError("solve_transported: constrained problem needs a hold-all obstacle function");
        for (int i = 0; i < problem.mesh->num_vertices(); ++i) {
            const Vec2 xi = integrate_flow(X, t, problem.mesh->vertices[i]).point;
            p.obstacle[i] = problem.obstacle_fn(xi);
        }
    }
    return solve_obstacle_semilinear(p, tol);
}

std::vector<double> operator_residual(const ObstacleProblem& p, const NodalField& u) {
    p.check();
    check_field(*p.mesh, u);
    const AssembledOperator op = assemble_operator(p);
    return residual_at(p, op, u, nullptr);
}

VISolution brute_force_vi(const ObstacleProblem& p, double tol) {
    p.check();
    const AssembledOperator op = assemble_operator(p);
    const int n = p.mesh->num_vertices();
    std::vector<int> constrained;
    for (int i = 0; i < n; ++i)
        if (p.obstacle[i] != kUnconstrained) constrained.push_back(i);
    const int m = static_cast<int>(constrained.size());
    if (m > 14) throw InputError("brute_force_vi: more than 14 constrained nodes");

    std::vector<double> pin(n, 0.0);
    for (int i = 0; i < n; ++i) pin[i] = (p.obstacle[i] == kUnconstrained) ? 0.0 : p.obstacle[i];

    for (long mask = 0; mask < (1L << m); ++mask) {
        std::vector<char> active(n, 0);
        for (int k = 0; k < m; ++k)
            if (mask & (1L << k)) active[constrained[k]] = 1;
        NodalField u(*p.mesh, 0.0);
        try {
            newton_on_free(p, op, u, active, pin, 1e-12, 60);
        } catch (const SolverError&) {
            continue;
        }
        const std::vector<double> r = residual_at(p, op, u, nullptr);
        bool ok = true;
        for (int k = 0; k < m && ok; ++k) {
            const int i = constrained[k];
            if (active[i]) {
                if (-r[i] < -tol) ok = false; // multiplier sign
            } else {
                if (u[i] > p.obstacle[i] + tol) ok = false; // feasibility
            }
        }
        if (ok) return finalize_solution(p, op, u, active, static_cast<int>(mask) + 1);
    }
    throw SolverError("brute_force_vi: no KKT-consistent active set found");
}

// ---- p-Laplace --------------------------------------------------------------

namespace {

constexpr double kPLaplaceEps = 1e-8;

struct PLaplaceData {
    std::vector<Mat2> B;      // dPhi_t^{-T} per element quad point (midpoint)
    std::vector<double> xi;   // det per quad point
    std::vector<double> fval; // f(Phi_t(x_q))
};

PLaplaceData p_laplace_data(const Mesh& mesh, const std::function<double(const Vec2&)>& f,
                            const VectorField& X, double t) {
    PLaplaceData d;
    const int nt = mesh.num_triangles();
    d.B.reserve(3 * nt);
    d.xi.reserve(3 * nt);
    d.fval.reserve(3 * nt);
    for (int e = 0; e < nt; ++e) {
        for (int q = 0; q < 3; ++q) {
            const Vec2 x = quad_point(mesh, e, Quadrature::Midpoint, q);
            if (t == 0.0) {
                d.B.push_back(Mat2::identity());
                d.xi.push_back(1.0);
                d.fval.push_back(f(x));
            } else {
                const FlowSample s = integrate_flow(X, t, x);
                d.B.push_back(s.jacobian.inverse().transpose());
                d.xi.push_back(s.jacobian.det());
                d.fval.push_back(f(s.point));
            }
        }
    }
    return d;
}

double energy_of(const Mesh& mesh, double p, const PLaplaceData& d, const NodalField& u) {
    double E = 0.0;
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const Vec2 g = element_gradient(mesh, u, e);
        const double w = mesh.area(e) / 3.0;
        for (int q = 0; q < 3; ++q) {
            const Vec2 Bg = d.B[3 * e + q] * g;
            const double s = Bg.dot(Bg) + kPLaplaceEps * kPLaplaceEps;
            const double uq = p1_value(mesh, u, e, Quadrature::Midpoint, q);
            E += w * d.xi[3 * e + q] * (std::pow(s, 0.5 * p) / p - d.fval[3 * e + q] * uq);
        }
    }
    return E;
}

} // namespace

double p_laplace_energy(const Mesh& mesh, double p, const std::function<double(const Vec2&)>& f,
                        const VectorField& X, double t, const NodalField& u) {
    check_field(mesh, u);
    return energy_of(mesh, p, p_laplace_data(mesh, f, X, t), u);
}

NodalField solve_p_laplace(const Mesh& mesh, double p, const std::function<double(const Vec2&)>& f,
                           const VectorField& X, double t, double tol) {
    if (!(p > 1.0 && p <= 8.0)) throw InputError("solve_p_laplace: p must lie in (1, 8]");
    const PLaplaceData data = p_laplace_data(mesh, f, X, t);
    const int n = mesh.num_vertices();
    std::vector<char> pinned(n, 0);
    for (int i : mesh.boundary_nodes) pinned[i] = 1;
    const std::vector<double> zero(n, 0.0);

    auto gradient = [&](const NodalField& u, SparseSymmetric* H) {
        std::vector<double> g(n, 0.0);
        std::vector<Triplet> trips;
        for (int e = 0; e < mesh.num_triangles(); ++e) {
            const auto& tri = mesh.triangles[e];
            const Vec2 gu = element_gradient(mesh, u, e);
            const double w = mesh.area(e) / 3.0;
            for (int q = 0; q < 3; ++q) {
                const Mat2& B = data.B[3 * e + q];
                const double xi = data.xi[3 * e + q];
                const Vec2 Bg = B * gu;
                const double s = Bg.dot(Bg) + kPLaplaceEps * kPLaplaceEps;
                const double a = std::pow(s, 0.5 * p - 1.0);
                Vec2 Bphi[3];
                for (int v = 0; v < 3; ++v) Bphi[v] = B * mesh.hat_gradient(e, v);
                double bw[3];
                bw[0] = bw[1] = bw[2] = 0.0;
                bw[q] = 0.5;
                bw[(q + 1) % 3] = 0.5;
                for (int v = 0; v < 3; ++v) {
                    g[tri[v]] += w * xi * (a * Bg.dot(Bphi[v]) - data.fval[3 * e + q] * bw[v]);
                }
                if (H) {
                    const double a2 = (p - 2.0) * std::pow(s, 0.5 * p - 2.0);
                    for (int vi = 0; vi < 3; ++vi)
                        for (int vj = 0; vj < 3; ++vj)
                            trips.push_back({tri[vi], tri[vj],
                                             w * xi * (a * Bphi[vi].dot(Bphi[vj]) +
                                                       a2 * Bg.dot(Bphi[vi]) * Bg.dot(Bphi[vj]))});
                }
            }
        }
        if (H) *H = SparseSymmetric::from_triplets(n, std::move(trips));
        return g;
    };

    // Start from the p = 2 solve: same system with a = 1.
    NodalField u(mesh, 0.0);
    {
        std::vector<Triplet> trips;
        std::vector<double> rhs(n, 0.0);
        for (int e = 0; e < mesh.num_triangles(); ++e) {
            const auto& tri = mesh.triangles[e];
            const double w = mesh.area(e) / 3.0;
            for (int q = 0; q < 3; ++q) {
                const Mat2& B = data.B[3 * e + q];
                const double xi = data.xi[3 * e + q];
                Vec2 Bphi[3];
                for (int v = 0; v < 3; ++v) Bphi[v] = B * mesh.hat_gradient(e, v);
                for (int vi = 0; vi < 3; ++vi) {
                    for (int vj = 0; vj < 3; ++vj)
                        trips.push_back({tri[vi], tri[vj], w * xi * Bphi[vi].dot(Bphi[vj])});
                }
                double bw[3];
                bw[0] = bw[1] = bw[2] = 0.0;
                bw[q] = 0.5;
                bw[(q + 1) % 3] = 0.5;
                for (int v = 0; v < 3; ++v) rhs[tri[v]] += w * xi * data.fval[3 * e + q] * bw[v];
            }
        }
        const SparseSymmetric K = SparseSymmetric::from_triplets(n, std::move(trips));
        u.values = K.solve_pinned(pinned, zero, rhs);
    }
    if (p == 2.0) return u;

    double fmax = 0.0;
    for (double v : gradient(NodalField(mesh, 0.0), nullptr)) fmax = std::max(fmax, std::fabs(v));
    const double gtol = tol * (1.0 + fmax);

    double E = energy_of(mesh, p, data, u);
    for (int it = 0; it < 100; ++it) {
        SparseSymmetric H;
        const std::vector<double> g = gradient(u, &H);
        double gn = 0.0;
        for (int i = 0; i < n; ++i)
            if (!pinned[i]) gn = std::max(gn, std::fabs(g[i]));
        if (gn <= gtol) return u;

        std::vector<double> neg(n, 0.0);
        for (int i = 0; i < n; ++i) neg[i] = -g[i];
        const std::vector<double> delta = H.solve_pinned(pinned, zero, neg);
        double slope = 0.0;
        for (int i = 0; i < n; ++i) slope += g[i] * delta[i];

        double step = 1.0;
        bool accepted = false;
        const double roundoff = 1e-14 * (1.0 + std::fabs(E));
        for (int half = 0; half < 50; ++half) {
            NodalField trial = u;
            for (int i = 0; i < n; ++i) trial[i] = u[i] + step * delta[i];
            const double Et = energy_of(mesh, p, data, trial);
            if (Et <= E + 1e-4 * step * slope + roundoff) {
                u = trial;
                E = Et;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) throw SolverError("solve_p_laplace: line search failed");
    }
    throw SolverError("solve_p_laplace: Newton did not converge in 100 iterations");
}

} // namespace vishape
