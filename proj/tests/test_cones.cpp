#include "doctest.h"

#include <cmath>

#include "test_support.hpp"
#include "vishape/cones.hpp"
#include "vishape/error.hpp"

using namespace vishape;

namespace {

const Box2 kD{-0.5, 1.5, -0.5, 1.5};

ObstacleProblem demo_problem(const Mesh& mesh, double psi_const = 0.1) {
    ObstacleProblem p;
    p.mesh = &mesh;
    p.lambda = 1.0;
    const Expression f = Expression::parse("6*bump(x,y,0.4,0.45,0.25)");
    const Expression fx = f.dx(), fy = f.dy();
    p.density = analytic_density(
        [f](const Vec2& x, double y) { return y * y * y + y - f.eval(x); },
        [](const Vec2&, double y) { return 3.0 * y * y + 1.0; },
        [fx, fy](const Vec2& x, double) { return Vec2{-fx.eval(x), -fy.eval(x)}; });
    p.obstacle.assign(mesh.num_vertices(), psi_const);
    p.obstacle_fn = [psi_const](const Vec2&) { return psi_const; };
    p.obstacle_grad = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    p.static_obstacle = true;
    return p;
}

VectorField interior_bump(double ax = 1.0, double ay = 0.3) {
    const std::string b = "bump(x,y,0.55,0.5,0.4)";
    return VectorField::parse(std::to_string(ax) + "*" + b, std::to_string(ay) + "*" + b,
                              Box2{0.15, 0.95, 0.1, 0.9}, kD);
}

} // namespace

TEST_SUITE_BEGIN("cones");

TEST_CASE("cone classification from the active structure") {
    const Mesh m = unit_square_mesh(4);
    // fully strongly active: w = y - 1, psi = 0
    ObstacleProblem p;
    p.mesh = &m;
    p.lambda = 1.0;
    p.density = analytic_density([](const Vec2&, double y) { return y - 1.0; },
                                 [](const Vec2&, double) { return 1.0; },
                                 [](const Vec2&, double) { return Vec2{0.0, 0.0}; });
    p.obstacle.assign(m.num_vertices(), 0.0);
    p.static_obstacle = true;
    p.obstacle_fn = [](const Vec2&) { return 0.0; };
    p.obstacle_grad = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    NodalField psidot(m, 0.3);
    const DiscreteCone cone = tangent_kern_cone(p, sol, psidot);
    CHECK(cone.count(ConeKind::Equality) == m.num_vertices());
    CHECK(cone.count(ConeKind::Free) == 0);

    // membership test
    std::vector<double> z(m.num_vertices(), 0.3);
    CHECK(cone.violation(z) == 0.0);
    z[3] = 0.4;
    CHECK(cone.violation(z) == doctest::Approx(0.1));

    // empty active set: whole space
    ObstacleProblem q = p;
    q.obstacle.assign(m.num_vertices(), 5.0);
    const VISolution sol2 = solve_obstacle_semilinear(q, 1e-10);
    const DiscreteCone cone2 = tangent_kern_cone(q, sol2, psidot);
    CHECK(cone2.count(ConeKind::Free) == m.num_vertices());
}

TEST_CASE("strict-complementarity shortcut turns biactive nodes into equalities") {
    const Mesh m = unit_square_mesh(4);
    ObstacleProblem p = demo_problem(m);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    REQUIRE(!sol.active.empty());
    NodalField psidot(m, 0.0);
    // force a biactive classification by a huge multiplier threshold
    p.cone_mu_tol = 1e9;
    const DiscreteCone conservative = tangent_kern_cone(p, sol, psidot);
    CHECK(conservative.count(ConeKind::Inequality) == int(sol.active.size()));
    p.strict_complementarity_cone = true;
    const DiscreteCone linearised = tangent_kern_cone(p, sol, psidot);
    CHECK(linearised.count(ConeKind::Equality) == int(sol.active.size()));
}

TEST_CASE("zero field gives a zero material derivative") {
    const Mesh m = unit_square_mesh(6);
    const ObstacleProblem p = demo_problem(m);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    const VectorField X = VectorField::zero(kD);
    const NodalField psidot = static_obstacle_rate(p, X);
    const NodalField udot = solve_material_derivative(p, sol, X, psidot, 1e-10);
    for (int i = 0; i < m.num_vertices(); ++i) CHECK(std::fabs(udot[i]) <= 1e-12);
}

TEST_CASE("single-point cone pins the rate to the obstacle rate") {
    // fully strongly active solution with a sloped static obstacle:
    // udot = psidot = grad(psi) . X at every node
    const Mesh m = unit_square_mesh(3);
    ObstacleProblem p;
    p.mesh = &m;
    p.lambda = 1.0;
    p.density = analytic_density([](const Vec2&, double y) { return y - 9.0; },
                                 [](const Vec2&, double) { return 1.0; },
                                 [](const Vec2&, double) { return Vec2{0.0, 0.0}; });
    p.obstacle.resize(m.num_vertices());
    for (int i = 0; i < m.num_vertices(); ++i) p.obstacle[i] = 0.2 * m.vertices[i].x;
    p.obstacle_fn = [](const Vec2& x) { return 0.2 * x.x; };
    p.obstacle_grad = [](const Vec2&) { return Vec2{0.2, 0.0}; };
    p.static_obstacle = true;

    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    REQUIRE(int(sol.strongly_active.size()) == m.num_vertices());
    const VectorField X = interior_bump();
    const NodalField psidot = static_obstacle_rate(p, X);
    const NodalField udot = solve_material_derivative(p, sol, X, psidot, 1e-10);
    for (int i = 0; i < m.num_vertices(); ++i)
        CHECK(udot[i] == doctest::Approx(psidot[i]).epsilon(1e-12));
}

TEST_CASE("unconstrained rate matches the finite-difference quotient") {
    const Mesh m = unit_square_mesh(8);
    ObstacleProblem p = demo_problem(m, 50.0); // obstacle far away: empty active set
    const VISolution sol = solve_obstacle_semilinear(p, 1e-11);
    REQUIRE(sol.active.empty());
    const VectorField X = interior_bump();
    const NodalField psidot = static_obstacle_rate(p, X);
    const NodalField udot = solve_material_derivative(p, sol, X, psidot, 1e-11);

    const double t = 1e-4;
    const VISolution pert = solve_transported(p, X, t, 1e-11);
    NodalField diff(m, 0.0);
    for (int i = 0; i < m.num_vertices(); ++i)
        diff[i] = (pert.state[i] - sol.state[i]) / t - udot[i];
    CHECK(h1_norm(m, diff) <= 1e-3);
}

TEST_CASE("finite-difference oracle: decreasing errors and scaling in X") {
    const Mesh m = unit_square_mesh(8);
    const ObstacleProblem p = demo_problem(m);
    const VectorField X = interior_bump(0.5, 0.15);

    MaterialRateReport rep = fd_material_oracle(p, X, {1e-1, 1e-2, 1e-3}, 1e-10);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.monotone_decreasing);
    CHECK(rep.rows.back().error_h1 < rep.rows.front().error_h1);

    // zero field: all quotients vanish
    const MaterialRateReport zero =
        fd_material_oracle(p, VectorField::zero(kD), {1e-1, 1e-2}, 1e-10);
    for (const auto& row : zero.rows) CHECK(row.quotient_norm <= 1e-12);

    // doubling X doubles the rate (positive 1-homogeneity of the data)
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    const NodalField psidot = static_obstacle_rate(p, X);
    const NodalField udot1 = solve_material_derivative(p, sol, X, psidot, 1e-10);
    const VectorField X2 = X.scaled(2.0);
    const NodalField psidot2 = static_obstacle_rate(p, X2);
    const NodalField udot2 = solve_material_derivative(p, sol, X2, psidot2, 1e-10);
    for (int i = 0; i < m.num_vertices(); ++i)
        CHECK(udot2[i] == doctest::Approx(2.0 * udot1[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("quotient at small t lies in the discrete cone") {
    const Mesh m = unit_square_mesh(8);
    const ObstacleProblem p = demo_problem(m);
    const VectorField X = interior_bump(0.5, 0.15);
    const MaterialRateReport rep = fd_material_oracle(p, X, {1e-2, 1e-3}, 1e-10);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    const DiscreteCone cone = tangent_kern_cone(p, sol, static_obstacle_rate(p, X));
    CHECK(cone.violation(rep.quotient_smallest_t.values) <= 1e-6);
}

TEST_CASE("sensitivity right side agrees with the tensor-contraction route") {
    // Independent algebra: with A'(0) = div(X) I - dX - dX^T and
    // xi'(0) = div(X), the right side pairs as
    //   int [ -(grad u . grad phi + (lambda u + w) phi) I
    //         + grad phi (x) grad u + grad u (x) grad phi ] : dX
    //       - (grad_x w . X) phi
    // (same quadrature split as the assembled route).
    const Mesh m = unit_square_mesh(7);
    const ObstacleProblem p = demo_problem(m);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    const VectorField X = interior_bump(0.8, 0.35);
    const std::vector<double> assembled = material_derivative_rhs(p, sol, X);

    std::vector<double> tensor_route(m.num_vertices(), 0.0);
    for (int e = 0; e < m.num_triangles(); ++e) {
        const auto& tri = m.triangles[e];
        const Vec2 gu = element_gradient(m, sol.state, e);
        const double w = m.area(e) / 3.0;
        // gradient parts at midpoints
        for (int q = 0; q < 3; ++q) {
            const Vec2 x = quad_point(m, e, Quadrature::Midpoint, q);
            const Mat2 dX = X.jacobian(x);
            for (int v = 0; v < 3; ++v) {
                const Vec2 gphi = m.hat_gradient(e, v);
                const Mat2 L1 = outer(gphi, gu) + outer(gu, gphi) -
                                Mat2::identity() * gu.dot(gphi);
                tensor_route[tri[v]] += w * L1.ddot(dX);
            }
        }
        // mass part of the I-term at the mass rule
        for (int q = 0; q < 3; ++q) {
            const Vec2 x = quad_point(m, e, p.mass_quad, q);
            const double div = X.jacobian(x).trace();
            const double uq = p1_value(m, sol.state, e, p.mass_quad, q);
            double bw[3] = {0.0, 0.0, 0.0};
            bw[q] = 0.5;
            bw[(q + 1) % 3] = 0.5;
            for (int v = 0; v < 3; ++v)
                tensor_route[tri[v]] -= w * div * p.lambda * uq * bw[v];
        }
        // density parts at the semilinear rule
        for (int q = 0; q < 3; ++q) {
            const Vec2 x = quad_point(m, e, p.semilinear_quad, q);
            const DensityPoint dp{e, q, p.semilinear_quad, x, x};
            const double uq = p1_value(m, sol.state, e, p.semilinear_quad, q);
            const double div = X.jacobian(x).trace();
            const double val =
                div * p.density.w(dp, uq) + p.density.xgrad(dp, uq).dot(X.value(x));
            tensor_route[tri[q]] -= w * val;
        }
    }
    for (int i = 0; i < m.num_vertices(); ++i)
        CHECK(assembled[i] == doctest::Approx(tensor_route[i]).epsilon(1e-11).scale(1.0));
}

TEST_CASE("uniqueness from random initial active sets") {
    const Mesh m = unit_square_mesh(6);
    const ObstacleProblem p = demo_problem(m);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    const VectorField X = interior_bump();
    const NodalField psidot = static_obstacle_rate(p, X);
    const DiscreteCone cone = tangent_kern_cone(p, sol, psidot);
    const SparseSymmetric Q = material_derivative_matrix(p, sol);
    const std::vector<double> rhs = material_derivative_rhs(p, sol, X);

    const std::vector<double> ref = solve_cone_vi(Q, rhs, cone, m, 1e-10);
    test_support::Rng rng(808);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<char> start(m.num_vertices(), 0);
        for (int i = 0; i < m.num_vertices(); ++i)
            if (cone.kind[i] == ConeKind::Inequality) start[i] = rng.uniform_int(0, 1);
        const std::vector<double> z = solve_cone_vi(Q, rhs, cone, m, 1e-10, nullptr, &start);
        for (int i = 0; i < m.num_vertices(); ++i) CHECK(std::fabs(z[i] - ref[i]) <= 1e-10);
    }
}

TEST_CASE("rate solution satisfies the cone complementarity system") {
    const Mesh m = unit_square_mesh(8);
    const ObstacleProblem p = demo_problem(m);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    const VectorField X = interior_bump();
    ConeVIInfo info;
    const NodalField udot =
        solve_material_derivative(p, sol, X, static_obstacle_rate(p, X), 1e-10, &info);
    CHECK(info.res_feasibility <= 1e-9);
    CHECK(info.res_sign <= 1e-9);
    CHECK(info.res_complementarity <= 1e-9);
    CHECK(info.res_stationarity <= 1e-9);
}

TEST_CASE("translation by fields supported on inactive nodes") {
    const Mesh m = unit_square_mesh(6);
    const ObstacleProblem p = demo_problem(m);
    const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
    REQUIRE(!sol.active.empty());

    test_support::Rng rng(909);
    const std::vector<double> resid = operator_residual(p, sol.state);
    NodalField psidot(m, 0.0);
    const DiscreteCone cone = tangent_kern_cone(p, sol, psidot);
    for (int trial = 0; trial < 5; ++trial) {
        // zeta vanishing on the active set
        std::vector<double> zeta(m.num_vertices(), 0.0);
        std::vector<char> is_active(m.num_vertices(), 0);
        for (int i : sol.active) is_active[i] = 1;
        for (int i = 0; i < m.num_vertices(); ++i)
            if (!is_active[i]) zeta[i] = rng.uniform(-1.0, 1.0);
        // pairing with the operator residual vanishes (stationarity holds there)
        double pairing = 0.0;
        for (int i = 0; i < m.num_vertices(); ++i) pairing += resid[i] * zeta[i];
        CHECK(std::fabs(pairing) <= 1e-8);
        // +/- zeta lie in the homogeneous cone
        CHECK(cone.violation(zeta) <= 1e-12);
        for (double& v : zeta) v = -v;
        CHECK(cone.violation(zeta) <= 1e-12);
    }
}

TEST_CASE("exact biactive touching keeps the inequality") {
    // obstacle placed exactly on the unconstrained solution at one node:
    // active with zero multiplier, classified biactive, cone keeps z <= bound
    const Mesh m = unit_square_mesh(4);
    ObstacleProblem free_p = demo_problem(m, 1e6);
    const VISolution unconstrained = solve_obstacle_semilinear(free_p, 1e-11);

    ObstacleProblem p = demo_problem(m, 1e6);
    const int node = 12;
    p.obstacle[node] = unconstrained.state[node];
    const VISolution sol = solve_obstacle_semilinear(p, 1e-11);
    CHECK(std::fabs(sol.state[node] - unconstrained.state[node]) <= 1e-9);
    REQUIRE(sol.active.size() == 1);
    CHECK(sol.biactive.size() == 1);
    CHECK(sol.strongly_active.empty());

    NodalField psidot(m, 0.25);
    const DiscreteCone cone = tangent_kern_cone(p, sol, psidot);
    CHECK(cone.kind[node] == ConeKind::Inequality);
    CHECK(cone.bound[node] == doctest::Approx(0.25));
}

TEST_CASE("state shape derivative basics") {
    const Mesh m = unit_square_mesh(5);
    const VectorField X = interior_bump();
    NodalField u(m, 2.5); // constant state: recovered gradient vanishes
    NodalField udot(m);
    test_support::Rng rng(111);
    for (int i = 0; i < m.num_vertices(); ++i) udot[i] = rng.uniform(-1.0, 1.0);
    const NodalField uprime = state_shape_derivative(m, udot, u, X);
    for (int i = 0; i < m.num_vertices(); ++i)
        CHECK(uprime[i] == doctest::Approx(udot[i]).epsilon(1e-12));

    const NodalField zero = state_shape_derivative(m, NodalField(m, 0.0), u, VectorField::zero(kD));
    for (int i = 0; i < m.num_vertices(); ++i) CHECK(zero[i] == 0.0);
}

TEST_CASE("boundary form values") {
    const Mesh m = unit_square_mesh(4);
    ObstacleProblem p = demo_problem(m);

    // X . n = 0 everywhere: the form vanishes
    const VectorField interior = interior_bump();
    NodalField u(m, 0.0), phi(m, 1.0);
    // interior bump has support [0.15,0.95]x[0.1,0.9]... touches no boundary edge midpoint?
    // use a field supported strictly inside instead
    const VectorField strict =
        VectorField::parse("bump(x,y,0.5,0.5,0.3)", "0", Box2{0.2, 0.8, 0.2, 0.8}, kD);
    CHECK(boundary_form_value(p, u, strict, phi) == doctest::Approx(0.0));

    // constant u = c, w = 0, phi = d: value is -lambda c d int (X.n)
    ObstacleProblem q = p;
    q.lambda = 1.3;
    q.density = analytic_density([](const Vec2&, double) { return 0.0; },
                                 [](const Vec2&, double) { return 0.0; });
    const VectorField lin = VectorField::parse("x", "0", kD, kD);
    NodalField uc(m, 2.0), phid(m, 0.5);
    // int_bdry (X.n) ds for X = (x, 0) on the unit square: right edge gives 1
    const double expected = -1.3 * 2.0 * 0.5 * 1.0;
    const double got = boundary_form_value(q, uc, lin, phid);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));

    // sign flip in X flips the value
    const double flipped = boundary_form_value(q, uc, lin.scaled(-1.0), phid);
    CHECK(flipped == doctest::Approx(-expected).epsilon(1e-12));

    // dynamic-obstacle mode refuses
    ObstacleProblem dyn = p;
    dyn.static_obstacle = false;
    CHECK_THROWS_AS(boundary_form_value(dyn, u, strict, phi), InputError);
}

TEST_CASE("tangential fields give vanishing shape derivative under refinement") {
    // shortened two-level version of the refinement study
    Mesh m = unit_square_mesh(8);
    const VectorField X =
        VectorField::parse("bump(x,y,0.5,0.5,0.32)", "-0.5*bump(x,y,0.5,0.5,0.32)",
                           Box2{0.18, 0.82, 0.18, 0.82}, kD);
    std::vector<double> norms;
    for (int level = 0; level < 2; ++level) {
        const ObstacleProblem p = demo_problem(m);
        const VISolution sol = solve_obstacle_semilinear(p, 1e-10);
        const NodalField udot =
            solve_material_derivative(p, sol, X, static_obstacle_rate(p, X), 1e-10);
        const NodalField uprime = state_shape_derivative(m, udot, sol.state, X);
        norms.push_back(l2_norm(m, uprime));
        if (level == 0) m = refine_uniform(m);
    }
    CHECK(norms[1] < norms[0] / 1.7);
}

TEST_SUITE_END();
