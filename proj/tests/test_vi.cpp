#include "doctest.h"

#include <cmath>

#include "test_support.hpp"
#include "vishape/cones.hpp"
#include "vishape/error.hpp"
#include "vishape/vi.hpp"

using namespace vishape;

namespace {

const Box2 kD{-0.5, 1.5, -0.5, 1.5};

// w(x,y) = a y^3 + b y + c with monotone a, b >= 0.
SemilinearDensity poly_density(double a, double b, double c) {
    return analytic_density(
        [a, b, c](const Vec2&, double y) { return a * y * y * y + b * y + c; },
        [a, b](const Vec2&, double y) { return 3.0 * a * y * y + b; },
        [](const Vec2&, double) { return Vec2{0.0, 0.0}; });
}

ObstacleProblem constant_density_problem(const Mesh& mesh, double lambda, double b, double c,
                                         double psi) {
    ObstacleProblem p;
    p.mesh = &mesh;
    p.lambda = lambda;
    p.density = poly_density(0.0, b, c);
    p.obstacle.assign(mesh.num_vertices(), psi);
    p.obstacle_fn = [psi](const Vec2&) { return psi; };
    p.obstacle_grad = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    p.static_obstacle = true;
    return p;
}

ObstacleProblem random_problem(const Mesh& mesh, test_support::Rng& rng, bool semilinear,
                               double psi_lo = -0.3, double psi_hi = 0.6) {
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
    for (double& v : p.obstacle) v = rng.uniform(psi_lo, psi_hi);
    return p;
}

} // namespace

TEST_SUITE_BEGIN("vi");

TEST_CASE("unconstrained problem reduces to a Newton solve") {
    const Mesh m = unit_square_mesh(4);
    ObstacleProblem p;
    p.mesh = &m;
    p.lambda = 1.0;
    p.density = poly_density(0.0, 0.0, 0.0);
    p.obstacle.assign(m.num_vertices(), kUnconstrained);
    p.load_fn = [](const Vec2& x) { return std::sin(x.x); };
    p.load_grad = [](const Vec2& x) { return Vec2{std::cos(x.x), 0.0}; };
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    CHECK(sol.active.empty());
    for (int i = 0; i < m.num_vertices(); ++i) CHECK(sol.multiplier[i] == 0.0);
    CHECK(sol.res_stationarity <= 1e-10);
}

TEST_CASE("fully active constant problem: u = 0, multiplier = lumped mass") {
    // w(x,y) = y - 1 with lambda = 1 and psi = 0: the unconstrained state is
    // positive, the constrained solution sits on the obstacle everywhere and
    // mu_i = int phi_i.
    const Mesh m = unit_square_mesh(3);
    const ObstacleProblem p = constant_density_problem(m, 1.0, 1.0, -1.0, 0.0);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    CHECK(int(sol.active.size()) == m.num_vertices());
    CHECK(int(sol.strongly_active.size()) == m.num_vertices());
    double total = 0.0;
    for (int i = 0; i < m.num_vertices(); ++i) {
        CHECK(sol.state[i] == 0.0);
        CHECK(sol.multiplier[i] > 0.0);
        total += sol.multiplier[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12)); // sums to the area
}

TEST_CASE("interior constant solution with inactive constraint") {
    // w(x,y) = y + 1, lambda = 1: stationarity 2u + 1 = 0 gives u = -1/2 < 0.
    const Mesh m = unit_square_mesh(3);
    const ObstacleProblem p = constant_density_problem(m, 1.0, 1.0, 1.0, 0.0);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    CHECK(sol.active.empty());
    for (int i = 0; i < m.num_vertices(); ++i) {
        CHECK(sol.state[i] == doctest::Approx(-0.5).epsilon(1e-10));
        CHECK(sol.multiplier[i] == 0.0);
    }
}

TEST_CASE("solver invariants hold on random problems") {
    test_support::Rng rng(101);
    const Mesh m = unit_square_mesh(5);
    for (int inst = 0; inst < 5; ++inst) {
        const ObstacleProblem p = random_problem(m, rng, true);
        const VISolution sol = solve_obstacle_semilinear(p, 1e-9);
        CHECK(sol.res_feasibility <= 1e-9);
        CHECK(sol.res_sign <= 1e-9);
        CHECK(sol.res_complementarity <= 1e-9);
        CHECK(sol.res_stationarity <= 1e-9);
    }
}

TEST_CASE("non-monotone density is rejected") {
    const Mesh m = unit_square_mesh(2);
    ObstacleProblem p;
    p.mesh = &m;
    p.lambda = 1.0;
    p.density = analytic_density([](const Vec2&, double y) { return -2.0 * y; },
                                 [](const Vec2&, double) { return -2.0; });
    p.obstacle.assign(m.num_vertices(), 0.5);
    CHECK_THROWS_AS(solve_obstacle_semilinear(p, 1e-9), SolverError);
}

TEST_CASE("brute force oracle agrees with the active-set solver") {
    test_support::Rng rng(202);
    const Mesh m2 = unit_square_mesh(2); // 9 nodes, all constrained
    for (int inst = 0; inst < 8; ++inst) {
        const ObstacleProblem p = random_problem(m2, rng, inst % 2 == 1);
        const VISolution fast = solve_obstacle_semilinear(p, 1e-11);
        const VISolution slow = brute_force_vi(p);
        for (int i = 0; i < m2.num_vertices(); ++i)
            CHECK(std::fabs(fast.state[i] - slow.state[i]) <= 1e-9);
    }
    // 16 nodes, 14 constrained (the enumeration cap)
    const Mesh m3 = unit_square_mesh(3);
    for (int inst = 0; inst < 2; ++inst) {
        ObstacleProblem p = random_problem(m3, rng, true);
        p.obstacle[rng.uniform_int(0, 7)] = kUnconstrained;
        p.obstacle[8 + rng.uniform_int(0, 7)] = kUnconstrained;
        const VISolution fast = solve_obstacle_semilinear(p, 1e-11);
        const VISolution slow = brute_force_vi(p);
        for (int i = 0; i < m3.num_vertices(); ++i)
            CHECK(std::fabs(fast.state[i] - slow.state[i]) <= 1e-9);
    }
    // cap enforced
    const Mesh m4 = unit_square_mesh(4);
    const ObstacleProblem big = random_problem(m4, rng, false);
    CHECK_THROWS_AS(brute_force_vi(big), InputError);
}

TEST_CASE("brute force: fully active and unconstrained corner cases") {
    const Mesh m = unit_square_mesh(1);
    const ObstacleProblem active = constant_density_problem(m, 1.0, 1.0, -1.0, 0.0);
    const VISolution sa = brute_force_vi(active);
    CHECK(int(sa.active.size()) == m.num_vertices());

    const ObstacleProblem inactive = constant_density_problem(m, 1.0, 1.0, 1.0, 0.0);
    const VISolution si = brute_force_vi(inactive);
    CHECK(si.active.empty());
    for (int i = 0; i < m.num_vertices(); ++i)
        CHECK(si.state[i] == doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("transported solve at t = 0 is bitwise identical") {
    const Mesh m = unit_square_mesh(4);
    test_support::Rng rng(33);
    ObstacleProblem p = random_problem(m, rng, true);
    p.obstacle_fn = [](const Vec2&) { return 0.2; };
    p.obstacle_grad = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    for (double& v : p.obstacle) v = 0.2;
    p.static_obstacle = true;
    const VectorField X =
        VectorField::parse("bump(x,y,0.5,0.5,0.3)", "0", Box2{0.2, 0.8, 0.2, 0.8}, kD);
    const VISolution a = solve_obstacle_semilinear(p, 1e-10);
    const VISolution b = solve_transported(p, X, 0.0, 1e-10);
    for (int i = 0; i < m.num_vertices(); ++i) {
        CHECK(a.state[i] == b.state[i]);
        CHECK(a.multiplier[i] == b.multiplier[i]);
    }
}

TEST_CASE("interior reparametrisation: transported state composes with the flow") {
    // X . n = 0 on the boundary: the domain and its solution are unchanged,
    // so u^t = u o Phi_t up to discretisation error.
    const Mesh m = unit_square_mesh(8);
    ObstacleProblem p = constant_density_problem(m, 1.0, 1.0, -1.0, 0.1);
    p.density = analytic_density(
        [](const Vec2& x, double y) { return y - 4.0 * std::exp(-6.0 * ((x.x - 0.4) * (x.x - 0.4) +
                                                                        (x.y - 0.5) * (x.y - 0.5))); },
        [](const Vec2&, double) { return 1.0; });
    const VectorField X = VectorField::parse("0.5*bump(x,y,0.5,0.5,0.3)",
                                             "0.2*bump(x,y,0.5,0.5,0.3)", Box2{0.2, 0.8, 0.2, 0.8},
                                             kD);
    const double t = 0.1;
    const VISolution base = solve_obstacle_semilinear(p, 1e-10);
    const VISolution pert = solve_transported(p, X, t, 1e-10);
    double worst = 0.0;
    for (int i = 0; i < m.num_vertices(); ++i) {
        // u o Phi_t at the node, from the P1 interpolant of the base solution
        const Vec2 y = integrate_flow(X, t, m.vertices[i]).point;
        // nearest-element evaluation via brute-force barycentric search
        double val = 0.0;
        bool found = false;
        for (int e = 0; e < m.num_triangles() && !found; ++e) {
            const auto& tri = m.triangles[e];
            const Vec2 p0 = m.vertices[tri[0]], p1 = m.vertices[tri[1]], p2 = m.vertices[tri[2]];
            const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
            const double l1 = ((y.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (y.y - p0.y)) / det;
            const double l2 = ((p1.x - p0.x) * (y.y - p0.y) - (y.x - p0.x) * (p1.y - p0.y)) / det;
            const double l0 = 1.0 - l1 - l2;
            if (l0 >= -1e-10 && l1 >= -1e-10 && l2 >= -1e-10) {
                val = l0 * base.state[tri[0]] + l1 * base.state[tri[1]] + l2 * base.state[tri[2]];
                found = true;
            }
        }
        REQUIRE(found);
        worst = std::max(worst, std::fabs(pert.state[i] - val));
    }
    CHECK(worst <= 0.02); // discretisation-level agreement
}

TEST_CASE("transported solve agrees with the solve on the deformed mesh") {
    // change of variables: pulling the perturbed-domain problem back to the
    // reference mesh matches re-meshing by the flow, up to quadrature error
    const Mesh m = unit_square_mesh(8);
    const Expression fe = Expression::parse("6*bump(x,y,0.4,0.45,0.25)");
    ObstacleProblem p;
    p.mesh = &m;
    p.lambda = 1.0;
    p.density = analytic_density(
        [fe](const Vec2& x, double y) { return y * y * y + y - fe.eval(x); },
        [](const Vec2&, double y) { return 3.0 * y * y + 1.0; });
    p.obstacle.assign(m.num_vertices(), 0.1);
    p.obstacle_fn = [](const Vec2&) { return 0.1; };
    p.obstacle_grad = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    p.static_obstacle = true;

    const VectorField X = VectorField::parse(
        "0.5*bump(x,y,0.5,0.5,0.3)", "0.2*bump(x,y,0.5,0.5,0.3)", Box2{0.2, 0.8, 0.2, 0.8},
        m.hold_all);
    const double t = 0.15;
    const VISolution transported = solve_transported(p, X, t, 1e-11);

    const FlowMap flow(X, t);
    const Mesh md = deform(m, [&](const Vec2& q) { return flow(q); });
    ObstacleProblem pd = p;
    pd.mesh = &md;
    pd.obstacle.assign(md.num_vertices(), 0.1);
    const VISolution direct = solve_obstacle_semilinear(pd, 1e-11);

    // node i of the deformed mesh is Phi_t of node i: coefficients pair up
    double worst = 0.0;
    for (int i = 0; i < m.num_vertices(); ++i)
        worst = std::max(worst, std::fabs(transported.state[i] - direct.state[i]));
    CHECK(worst <= 5e-3); // within the discretisation error
    CHECK(worst > 0.0);   // the two routes are genuinely different discretisations
}

TEST_CASE("energy minimality against feasible perturbations") {
    // the solver state attains lower energy than feasible perturbations
    const Mesh m = unit_square_mesh(4);
    test_support::Rng rng(404);
    const ObstacleProblem p = random_problem(m, rng, true);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);

    // discrete energy with the solver quadrature; W = antiderivative of w
    auto energy = [&](const NodalField& v) {
        const SparseSymmetric K = assemble_bilinear(m, identity_transport(), p.lambda);
        double E = 0.0;
        const auto Kv = K.apply(v.values);
        for (int i = 0; i < m.num_vertices(); ++i) E += 0.5 * v[i] * Kv[i];
        for (int e = 0; e < m.num_triangles(); ++e) {
            const double w = m.area(e) / 3.0;
            for (int q = 0; q < 3; ++q) {
                const Vec2 x = quad_point(m, e, Quadrature::Vertex, q);
                const double y = p1_value(m, v, e, Quadrature::Vertex, q);
                // density is a y^3 + b y + c0 + c1 x + c2 y2 -> W closed form
                const DensityPoint dp{e, q, Quadrature::Vertex, x, x};
                // numeric antiderivative via Simpson on [0, y] is robust here
                const int nseg = 24;
                double W = 0.0;
                for (int s = 0; s < nseg; ++s) {
                    const double y0 = y * s / nseg, y1 = y * (s + 1) / nseg;
                    const double ym = 0.5 * (y0 + y1);
                    W += (y1 - y0) / 6.0 *
                         (p.density.w(dp, y0) + 4.0 * p.density.w(dp, ym) + p.density.w(dp, y1));
                }
                E += w * W;
            }
        }
        return E;
    };

    const double Esol = energy(sol.state);
    for (int trial = 0; trial < 100; ++trial) {
        NodalField v(m);
        for (int i = 0; i < m.num_vertices(); ++i) {
            const double room = p.obstacle[i] - sol.state[i];
            v[i] = sol.state[i] + std::min(room, rng.uniform(-0.4, 0.4));
            v[i] = std::min(v[i], p.obstacle[i]);
        }
        CHECK(energy(v) >= Esol - 1e-10);
    }
}

TEST_CASE("quadratic growth away from the minimiser") {
    // E(v) - E(u) >= alpha/2 ||v-u||^2 with alpha = min(1, lambda) for the
    // linear density (exact quadratic energy)
    const Mesh m = unit_square_mesh(3);
    const double lambda = 0.8;
    ObstacleProblem p = constant_density_problem(m, lambda, 0.5, -2.0, 0.1);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-11);
    const SparseSymmetric K = assemble_bilinear(m, identity_transport(), lambda);
    auto [b0, W0] = assemble_semilinear(m, p.density, NodalField(m, 0.0), nullptr,
                                        identity_transport());
    const SparseSymmetric M = W0; // mass-like matrix times dyw = 0.5

    auto energy = [&](const std::vector<double>& v) {
        double E = 0.0;
        const auto Kv = K.apply(v);
        const auto Mv = M.apply(v);
        for (int i = 0; i < m.num_vertices(); ++i)
            E += 0.5 * v[i] * Kv[i] + 0.5 * v[i] * Mv[i] + b0[i] * v[i];
        return E;
    };
    // subtract the linear part twice counted: b0 already includes w(0) = -2
    // (const) plus 0.5*y from M; the quadratic form is exact by construction.
    const double alpha = std::min(1.0, lambda);
    test_support::Rng rng(77);
    const double Eu = energy(sol.state.values);
    for (int s = 0; s < 40; ++s) {
        NodalField v(m);
        for (int i = 0; i < m.num_vertices(); ++i)
            v[i] = p.obstacle[i] - std::fabs(rng.uniform(-1.0, 1.0));
        NodalField d(m);
        for (int i = 0; i < m.num_vertices(); ++i) d[i] = v[i] - sol.state[i];
        const double gap = energy(v.values) - Eu;
        const double n = h1_norm(m, d);
        CHECK(gap >= 0.5 * alpha * n * n - 1e-9);
    }
}

TEST_CASE("monotone dependence on the obstacle") {
    // vertex-rule mass keeps the Jacobian an M-matrix, which gives the
    // discrete comparison principle
    const Mesh m = unit_square_mesh(4);
    test_support::Rng rng(505);
    for (int inst = 0; inst < 4; ++inst) {
        ObstacleProblem p = random_problem(m, rng, true);
        p.mass_quad = Quadrature::Vertex;
        ObstacleProblem larger = p;
        for (int i = 0; i < m.num_vertices(); ++i)
            larger.obstacle[i] = p.obstacle[i] + std::fabs(rng.uniform(0.0, 0.5));
        const VISolution a = solve_obstacle_semilinear(p, 1e-10);
        const VISolution b = solve_obstacle_semilinear(larger, 1e-10);
        for (int i = 0; i < m.num_vertices(); ++i) CHECK(b.state[i] >= a.state[i] - 1e-9);
    }
}

TEST_CASE("solver works on the mapped disk geometry") {
    const Mesh disk = unit_disk_mesh(10);
    const Expression fe = Expression::parse("4*bump(x,y,0.2,0.1,0.5)");
    ObstacleProblem p;
    p.mesh = &disk;
    p.lambda = 1.0;
    p.density = analytic_density(
        [fe](const Vec2& x, double y) { return y * y * y + y - fe.eval(x); },
        [](const Vec2&, double y) { return 3.0 * y * y + 1.0; },
        [fe](const Vec2& x, double) {
            // gradient by symbolic differentiation of the source expression
            static const Expression fx = Expression::parse("4*bump(x,y,0.2,0.1,0.5)").dx();
            static const Expression fy = Expression::parse("4*bump(x,y,0.2,0.1,0.5)").dy();
            return Vec2{-fx.eval(x), -fy.eval(x)};
        });
    p.obstacle.assign(disk.num_vertices(), 0.1);
    p.obstacle_fn = [](const Vec2&) { return 0.1; };
    p.obstacle_grad = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    p.static_obstacle = true;

    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    CHECK(sol.res_stationarity <= 1e-10);
    CHECK(!sol.active.empty());

    const VectorField X = VectorField::parse("0.5*bump(x,y,0.3,0.2,0.4)", "0",
                                             Box2{-0.1, 0.7, -0.2, 0.6}, disk.hold_all);
    const NodalField udot = solve_material_derivative(p, sol, X, static_obstacle_rate(p, X), 1e-10);
    CHECK(h1_norm(disk, udot) > 0.0);
}

TEST_CASE("p-laplace basics") {
    const Mesh m = unit_square_mesh(6);
    const VectorField X = VectorField::zero(kD);
    auto fzero = [](const Vec2&) { return 0.0; };
    const NodalField u0 = solve_p_laplace(m, 3.0, fzero, X, 0.0, 1e-10);
    for (int i = 0; i < m.num_vertices(); ++i) CHECK(u0[i] == doctest::Approx(0.0));

    auto f = [](const Vec2& x) { return 4.0 * std::sin(3.14159265358979 * x.x) * x.y; };
    // p = 2 coincides with the linear Poisson solve
    const NodalField u2 = solve_p_laplace(m, 2.0, f, X, 0.0, 1e-12);
    std::vector<Triplet> trips;
    std::vector<double> rhs(m.num_vertices(), 0.0);
    const SparseSymmetric S = assemble_bilinear(m, identity_transport(), 0.0);
    const auto load = assemble_load(m, f, identity_transport());
    std::vector<char> pinned(m.num_vertices(), 0);
    for (int i : m.boundary_nodes) pinned[i] = 1;
    const auto ref = S.solve_pinned(pinned, std::vector<double>(m.num_vertices(), 0.0), load);
    for (int i = 0; i < m.num_vertices(); ++i)
        CHECK(u2[i] == doctest::Approx(ref[i]).epsilon(1e-9));

    // p = 4 energy sits below the p = 4 energy of the p = 2 solution
    const NodalField u4 = solve_p_laplace(m, 4.0, f, X, 0.0, 1e-10);
    const double E4 = p_laplace_energy(m, 4.0, f, X, 0.0, u4);
    const double E4_of_u2 = p_laplace_energy(m, 4.0, f, X, 0.0, u2);
    CHECK(E4 < E4_of_u2);

    CHECK_THROWS_AS(solve_p_laplace(m, 1.0, f, X, 0.0, 1e-10), InputError);
    CHECK_THROWS_AS(solve_p_laplace(m, 9.0, f, X, 0.0, 1e-10), InputError);
}

TEST_SUITE_END();
