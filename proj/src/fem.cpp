#include "vishape/fem.hpp"

#include <cmath>

#include "vishape/error.hpp"
#include "vishape/io.hpp"

namespace vishape {

Vec2 quad_point(const Mesh& mesh, int elem, Quadrature rule, int local) {
    const auto& tri = mesh.triangles[elem];
    if (rule == Quadrature::Vertex) return mesh.vertices[tri[local]];
    return (mesh.vertices[tri[local]] + mesh.vertices[tri[(local + 1) % 3]]) * 0.5;
}

double p1_value(const Mesh& mesh, const NodalField& f, int elem, Quadrature rule, int local) {
    const auto& tri = mesh.triangles[elem];
    if (rule == Quadrature::Vertex) return f[tri[local]];
    return 0.5 * (f[tri[local]] + f[tri[(local + 1) % 3]]);
}

namespace {

// Barycentric weights of the canonical quadrature points.
inline void basis_weights(Quadrature rule, int local, double* w) {
    w[0] = w[1] = w[2] = 0.0;
    if (rule == Quadrature::Vertex) {
        w[local] = 1.0;
    } else {
        w[local] = 0.5;
        w[(local + 1) % 3] = 0.5;
    }
}

} // namespace

TransportData identity_transport() { return TransportData{}; }

TransportData pullback_transport(const Mesh& mesh, const VectorField& X, double t) {
    TransportData td;
    td.t = t;
    if (t == 0.0) return td;
    std::vector<Vec2> pts;
    pts.reserve(6 * mesh.num_triangles());
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        for (int l = 0; l < 3; ++l) pts.push_back(quad_point(mesh, e, Quadrature::Vertex, l));
        for (int l = 0; l < 3; ++l) pts.push_back(quad_point(mesh, e, Quadrature::Midpoint, l));
    }
    PullbackCoefficients pc = pullback_coeffs(X, t, pts);
    td.A = std::move(pc.A);
    td.xi = std::move(pc.xi);
    td.inv_jac = std::move(pc.inv_jacobian);
    td.mapped = std::move(pc.mapped);
    return td;
}

FirstOrderTransport first_order_transport(const Mesh& mesh, const VectorField& X) {
    FirstOrderTransport fo;
    fo.a_prime.reserve(6 * mesh.num_triangles());
    fo.xi_prime.reserve(6 * mesh.num_triangles());
    fo.grad_x.reserve(6 * mesh.num_triangles());
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        for (Quadrature rule : {Quadrature::Vertex, Quadrature::Midpoint}) {
            for (int l = 0; l < 3; ++l) {
                const Vec2 p = quad_point(mesh, e, rule, l);
                fo.a_prime.push_back(pullback_a_prime(X, p));
                fo.xi_prime.push_back(pullback_xi_prime(X, p));
                fo.grad_x.push_back(X.jacobian(p));
            }
        }
    }
    return fo;
}

SemilinearDensity analytic_density(std::function<double(const Vec2&, double)> w,
                                   std::function<double(const Vec2&, double)> dyw,
                                   std::function<Vec2(const Vec2&, double)> xgrad) {
    SemilinearDensity d;
    d.w = [w](const DensityPoint& p, double y) { return w(p.x_mapped, y); };
    d.dyw = [dyw](const DensityPoint& p, double y) { return dyw(p.x_mapped, y); };
    if (xgrad)
        d.xgrad = [xgrad](const DensityPoint& p, double y) { return xgrad(p.x_mapped, y); };
    return d;
}

SparseSymmetric assemble_bilinear(const Mesh& mesh, const TransportData& td, double lambda,
                                  Quadrature mass_quad) {
    if (lambda < 0.0) throw InputError("assemble_bilinear: lambda must be nonnegative");
    std::vector<Triplet> trips;
    trips.reserve(mesh.num_triangles() * 18);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        const double w = mesh.area(e) / 3.0;
        // Stiffness with A at midpoints (exact for the smooth pullback factors).
        for (int q = 0; q < 3; ++q) {
            const Mat2 A = td.a_at(e, Quadrature::Midpoint, q);
            if (A.min_eig_sym() <= 0.0)
                throw SolverError("assemble_bilinear: coefficient matrix not positive definite");
            for (int i = 0; i < 3; ++i) {
                const Vec2 Agi = A * mesh.hat_gradient(e, i);
                for (int j = 0; j < 3; ++j)
                    trips.push_back({tri[i], tri[j], w * Agi.dot(mesh.hat_gradient(e, j))});
            }
        }
        if (lambda != 0.0) {
            for (int q = 0; q < 3; ++q) {
                const double f = w * lambda * td.xi_at(e, mass_quad, q);
                double bw[3];
                basis_weights(mass_quad, q, bw);
                for (int i = 0; i < 3; ++i) {
                    if (bw[i] == 0.0) continue;
                    for (int j = 0; j < 3; ++j) {
                        if (bw[j] == 0.0) continue;
                        trips.push_back({tri[i], tri[j], f * bw[i] * bw[j]});
                    }
                }
            }
        }
    }
    return SparseSymmetric::from_triplets(mesh.num_vertices(), std::move(trips));
}

std::pair<std::vector<double>, SparseSymmetric> assemble_semilinear(
    const Mesh& mesh, const SemilinearDensity& density, const NodalField& state,
    const NodalField* shift, const TransportData& td, Quadrature quad) {
    std::vector<double> b(mesh.num_vertices(), 0.0);
    std::vector<Triplet> trips;
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        const double w = mesh.area(e) / 3.0;
        for (int q = 0; q < 3; ++q) {
            const Vec2 x = quad_point(mesh, e, quad, q);
            DensityPoint dp{e, q, quad, x, x};
            if (!td.identity()) dp.x_mapped = td.mapped[td.index(e, quad, q)];
            double y = p1_value(mesh, state, e, quad, q);
            if (shift) y += p1_value(mesh, *shift, e, quad, q);
            const double xi = td.xi_at(e, quad, q);
            const double wval = density.w(dp, y);
            const double dval = density.dyw(dp, y);
            if (!std::isfinite(wval) || !std::isfinite(dval))
                throw SolverError("assemble_semilinear: non-finite density value");
            double bw[3];
            basis_weights(quad, q, bw);
            for (int i = 0; i < 3; ++i) {
                if (bw[i] == 0.0) continue;
                b[tri[i]] += w * xi * wval * bw[i];
                for (int j = 0; j < 3; ++j) {
                    if (bw[j] == 0.0) continue;
                    trips.push_back({tri[i], tri[j], w * xi * dval * bw[i] * bw[j]});
                }
            }
        }
    }
    return {std::move(b), SparseSymmetric::from_triplets(mesh.num_vertices(), std::move(trips))};
}

std::vector<double> assemble_load(const Mesh& mesh, const std::function<double(const Vec2&)>& f,
                                  const TransportData& td, Quadrature quad) {
    std::vector<double> b(mesh.num_vertices(), 0.0);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        const double w = mesh.area(e) / 3.0;
        for (int q = 0; q < 3; ++q) {
            Vec2 x = quad_point(mesh, e, quad, q);
            if (!td.identity()) x = td.mapped[td.index(e, quad, q)];
            const double v = w * td.xi_at(e, quad, q) * f(x);
            double bw[3];
            basis_weights(quad, q, bw);
            for (int i = 0; i < 3; ++i)
                if (bw[i] != 0.0) b[tri[i]] += v * bw[i];
        }
    }
    return b;
}

std::vector<double> assemble_load_vec(const Mesh& mesh, const std::function<Vec2(const Vec2&)>& f,
                                      const TransportData& td, Quadrature quad) {
    std::vector<double> b(2 * mesh.num_vertices(), 0.0);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        const double w = mesh.area(e) / 3.0;
        for (int q = 0; q < 3; ++q) {
            Vec2 x = quad_point(mesh, e, quad, q);
            if (!td.identity()) x = td.mapped[td.index(e, quad, q)];
            const Vec2 v = f(x) * (w * td.xi_at(e, quad, q));
            double bw[3];
            basis_weights(quad, q, bw);
            for (int i = 0; i < 3; ++i) {
                if (bw[i] == 0.0) continue;
                b[2 * tri[i]] += v.x * bw[i];
                b[2 * tri[i] + 1] += v.y * bw[i];
            }
        }
    }
    return b;
}

// ---- degradation splines ---------------------------------------------------

double ConvexRampSpline::value(double s) const {
    const double D = 1.0 + delta;
    const double c = 1.0 / (D / 6.0 - 1.0 / 12.0);
    if (s <= 0.0) return 0.0;
    if (s <= D) return c * (D * s * s * s / 6.0 - s * s * s * s / 12.0);
    const double qD = c * D * D * D * D / 12.0;
    const double q1D = c * D * D * D / 6.0;
    return qD + q1D * (s - D);
}

double ConvexRampSpline::d1(double s) const {
    const double D = 1.0 + delta;
    const double c = 1.0 / (D / 6.0 - 1.0 / 12.0);
    if (s <= 0.0) return 0.0;
    if (s <= D) return c * (D * s * s / 2.0 - s * s * s / 3.0);
    return c * D * D * D / 6.0;
}

double ConvexRampSpline::d2(double s) const {
    const double D = 1.0 + delta;
    const double c = 1.0 / (D / 6.0 - 1.0 / 12.0);
    if (s <= 0.0 || s >= D) return 0.0;
    return c * s * (D - s);
}

double SmoothedRamp::value(double s) const {
    const double c = 6.0 / (s1 * s1 * s1);
    if (s <= 0.0) return 0.0;
    if (s <= s1) return c * (s1 * s * s * s / 6.0 - s * s * s * s / 12.0);
    return 0.5 * s1 + (s - s1);
}

double SmoothedRamp::d1(double s) const {
    const double c = 6.0 / (s1 * s1 * s1);
    if (s <= 0.0) return 0.0;
    if (s <= s1) return c * (s1 * s * s / 2.0 - s * s * s / 3.0);
    return 1.0;
}

double SmoothedRamp::d2(double s) const {
    const double c = 6.0 / (s1 * s1 * s1);
    if (s <= 0.0 || s >= s1) return 0.0;
    return c * s * (s1 - s);
}

void Degradation::validate() const {
    const double h = 1e-3;
    for (int k = -40; k <= 80; ++k) {
        const double s = k / 40.0;
        if (c(s) < eta - 1e-12)
            throw InputError("degradation: stiffness scale drops below eta at s=" + format_float(s));
        if (ddc1(s) < -1e-12) throw InputError("degradation: c1 is not convex");
        if (ddc2(s) > 1e-12) throw InputError("degradation: c2 is not concave");
        // second differences agree with the stored second derivatives
        const double d2c = (c1(s + h) - 2.0 * c1(s) + c1(s - h)) / (h * h);
        if (d2c < -1e-6) throw InputError("degradation: sampled c1 curvature negative");
    }
}

SparseSymmetric assemble_elasticity(const Mesh& mesh, const ElasticityTensor& tensor,
                                    const NodalField& chi, const TransportData& td,
                                    Quadrature quad) {
    check_field(mesh, chi);
    const Degradation& deg = tensor.degradation;
    std::vector<Triplet> trips;
    trips.reserve(mesh.num_triangles() * 36);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        const double w = mesh.area(e) / 3.0;
        for (int q = 0; q < 3; ++q) {
            const double cq = deg.c(p1_value(mesh, chi, e, quad, q));
            if (cq < deg.eta - 1e-12)
                throw SolverError("assemble_elasticity: degraded stiffness below eta");
            const double f = w * td.xi_at(e, quad, q) * cq;
            const Mat2 invJ = td.inv_jac_at(e, quad, q);
            // eps_t of the 6 local basis fields (component c, vertex v).
            Mat2 eps[6];
            for (int v = 0; v < 3; ++v) {
                const Vec2 g = mesh.hat_gradient(e, v);
                const Mat2 gx{{g.x, g.y, 0.0, 0.0}}; // e_x outer grad
                const Mat2 gy{{0.0, 0.0, g.x, g.y}};
                eps[2 * v] = (gx * invJ).sym();
                eps[2 * v + 1] = (gy * invJ).sym();
            }
            for (int a = 0; a < 6; ++a) {
                const int dof_a = 2 * tri[a / 2] + (a % 2);
                const Mat2 sa = tensor.stress(eps[a]);
                for (int b = 0; b < 6; ++b) {
                    const int dof_b = 2 * tri[b / 2] + (b % 2);
                    trips.push_back({dof_a, dof_b, f * sa.ddot(eps[b])});
                }
            }
        }
    }
    return SparseSymmetric::from_triplets(2 * mesh.num_vertices(), std::move(trips));
}

SparseSymmetric assemble_vector_mass(const Mesh& mesh, const TransportData& td) {
    std::vector<Triplet> trips;
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& tri = mesh.triangles[e];
        const double w = mesh.area(e) / 3.0;
        for (int q = 0; q < 3; ++q) {
            const double f = w * td.xi_at(e, Quadrature::Midpoint, q);
            double bw[3];
            basis_weights(Quadrature::Midpoint, q, bw);
            for (int i = 0; i < 3; ++i) {
                if (bw[i] == 0.0) continue;
                for (int j = 0; j < 3; ++j) {
                    if (bw[j] == 0.0) continue;
                    for (int c = 0; c < 2; ++c)
                        trips.push_back({2 * tri[i] + c, 2 * tri[j] + c, f * bw[i] * bw[j]});
                }
            }
        }
    }
    return SparseSymmetric::from_triplets(2 * mesh.num_vertices(), std::move(trips));
}

} // namespace vishape
