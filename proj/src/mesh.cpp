#include "vishape/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "vishape/error.hpp"
#include "vishape/io.hpp"

namespace vishape {

namespace {

std::atomic<std::uint64_t> g_mesh_counter{1};

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

} // namespace

Mesh::Mesh(std::vector<Vec2> verts, std::vector<std::array<int, 3>> tris,
           std::vector<BoundaryEdge> bedges, Box2 hold_all_box)
    : vertices(std::move(verts)),
      triangles(std::move(tris)),
      boundary_edges(std::move(bedges)),
      hold_all(hold_all_box),
      id_(g_mesh_counter.fetch_add(1)) {
    build_derived();
    validate();
}

void Mesh::build_derived() {
    const int nt = num_triangles();
    areas_.resize(nt);
    hat_grads_.resize(3 * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = triangles[t];
        const Vec2& p0 = vertices[tri[0]];
        const Vec2& p1 = vertices[tri[1]];
        const Vec2& p2 = vertices[tri[2]];
        const double a = signed_area(p0, p1, p2);
        areas_[t] = a;
        if (a > kMinArea) {
            // grad of hat_i is the rotated opposite edge over 2|T|.
            hat_grads_[3 * t + 0] = Vec2{p1.y - p2.y, p2.x - p1.x} * (0.5 / a);
            hat_grads_[3 * t + 1] = Vec2{p2.y - p0.y, p0.x - p2.x} * (0.5 / a);
            hat_grads_[3 * t + 2] = Vec2{p0.y - p1.y, p1.x - p0.x} * (0.5 / a);
        }
    }
    boundary_mask_.assign(vertices.size(), 0);
    std::set<int> bset;
    for (const auto& e : boundary_edges) {
        bset.insert(e.a);
        bset.insert(e.b);
    }
    boundary_nodes.assign(bset.begin(), bset.end());
    for (int i : boundary_nodes) boundary_mask_[i] = 1;
}

void Mesh::validate() const {
    const int nv = num_vertices();
    for (int t = 0; t < num_triangles(); ++t) {
        for (int v : triangles[t])
            if (v < 0 || v >= nv)
                throw InputError("mesh: triangle " + std::to_string(t) + " has vertex index out of range");
        if (areas_[t] <= kMinArea)
            throw InputError("mesh: triangle " + std::to_string(t) + " has non-positive area");
    }
    for (int i = 0; i < nv; ++i)
        if (!hold_all.contains(vertices[i], 1e-12))
            throw InputError("mesh: vertex " + std::to_string(i) + " lies outside the hold-all box");

    // Every boundary edge must be a facet of exactly one triangle.
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = tri[k], b = tri[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            edge_count[{a, b}]++;
        }
    }
    std::map<int, int> degree;
    for (const auto& e : boundary_edges) {
        int a = e.a, b = e.b;
        if (a < 0 || a >= nv || b < 0 || b >= nv)
            throw InputError("mesh: boundary edge vertex index out of range");
        if (a > b) std::swap(a, b);
        auto it = edge_count.find({a, b});
        if (it == edge_count.end() || it->second != 1)
            throw InputError("mesh: boundary edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                             ") is not a facet of exactly one triangle");
        degree[e.a]++;
        degree[e.b]++;
    }
    // Closed loops: every boundary vertex has exactly two incident boundary edges.
    for (const auto& [node, deg] : degree)
        if (deg != 2)
            throw InputError("mesh: boundary is not a union of closed loops at vertex " + std::to_string(node));
    // Interior facets must not be marked as boundary, and vice versa.
    for (const auto& [edge, cnt] : edge_count) {
        if (cnt == 1 && !degree.count(edge.first))
            throw InputError("mesh: facet of a single triangle missing from the boundary list");
    }
}

double Mesh::total_area() const {
    double s = 0.0;
    for (double a : areas_) s += a;
    return s;
}

Vec2 Mesh::centroid(int t) const {
    const auto& tri = triangles[t];
    return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) * (1.0 / 3.0);
}

Mesh unit_square_mesh(int n, Box2 hold_all) {
    if (n < 1) throw InputError("unit_square_mesh: n must be >= 1");
    const int m = n + 1;
    std::vector<Vec2> verts(m * m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            verts[j * m + i] = Vec2{double(i) / n, double(j) / n};

    std::vector<std::array<int, 3>> tris;
    tris.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = j * m + i, v10 = j * m + i + 1;
            const int v01 = (j + 1) * m + i, v11 = (j + 1) * m + i + 1;
            tris.push_back({v00, v10, v11});
            tris.push_back({v00, v11, v01});
        }
    }
    std::vector<BoundaryEdge> bedges;
    for (int i = 0; i < n; ++i) bedges.push_back({i, i + 1, 1});
    for (int j = 0; j < n; ++j) bedges.push_back({j * m + n, (j + 1) * m + n, 1});
    for (int i = n; i > 0; --i) bedges.push_back({n * m + i, n * m + i - 1, 1});
    for (int j = n; j > 0; --j) bedges.push_back({j * m, (j - 1) * m, 1});
    return Mesh(std::move(verts), std::move(tris), std::move(bedges), hold_all);
}

Mesh unit_disk_mesh(int n, Box2 hold_all) {
    Mesh square = unit_square_mesh(n, Box2{-2.0, 2.0, -2.0, 2.0});
    // [0,1]^2 -> [-1,1]^2 -> unit disk (elliptical map keeps triangles positive).
    auto to_disk = [](const Vec2& p) {
        const double u = 2.0 * p.x - 1.0, v = 2.0 * p.y - 1.0;
        return Vec2{u * std::sqrt(1.0 - 0.5 * v * v), v * std::sqrt(1.0 - 0.5 * u * u)};
    };
    std::vector<Vec2> verts(square.vertices.size());
    for (size_t i = 0; i < verts.size(); ++i) verts[i] = to_disk(square.vertices[i]);
    return Mesh(std::move(verts), square.triangles, square.boundary_edges, hold_all);
}

Mesh refine_uniform(const Mesh& mesh) {
    std::vector<Vec2> verts = mesh.vertices;
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        int lo = std::min(a, b), hi = std::max(a, b);
        auto it = midpoint.find({lo, hi});
        if (it != midpoint.end()) return it->second;
        const int idx = static_cast<int>(verts.size());
        verts.push_back((mesh.vertices[a] + mesh.vertices[b]) * 0.5);
        midpoint[{lo, hi}] = idx;
        return idx;
    };

    std::vector<std::array<int, 3>> tris;
    tris.reserve(4 * mesh.num_triangles());
    for (const auto& tri : mesh.triangles) {
        const int m01 = mid(tri[0], tri[1]);
        const int m12 = mid(tri[1], tri[2]);
        const int m20 = mid(tri[2], tri[0]);
        tris.push_back({tri[0], m01, m20});
        tris.push_back({m01, tri[1], m12});
        tris.push_back({m20, m12, tri[2]});
        tris.push_back({m01, m12, m20});
    }
    std::vector<BoundaryEdge> bedges;
    bedges.reserve(2 * mesh.boundary_edges.size());
    for (const auto& e : mesh.boundary_edges) {
        const int m = mid(e.a, e.b);
        bedges.push_back({e.a, m, e.marker});
        bedges.push_back({m, e.b, e.marker});
    }
    return Mesh(std::move(verts), std::move(tris), std::move(bedges), mesh.hold_all);
}

Mesh deform(const Mesh& mesh, const std::function<Vec2(const Vec2&)>& map) {
    std::vector<Vec2> verts(mesh.vertices.size());
    for (size_t i = 0; i < verts.size(); ++i) verts[i] = map(mesh.vertices[i]);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        if (signed_area(verts[tri[0]], verts[tri[1]], verts[tri[2]]) <= Mesh::kMinArea)
            throw InputError("deform: inverted element at triangle " + std::to_string(t));
    }
    return Mesh(std::move(verts), mesh.triangles, mesh.boundary_edges, mesh.hold_all);
}

void check_field(const Mesh& mesh, const NodalField& f) {
    if (f.mesh_id != mesh.id() || f.size() != mesh.num_vertices())
        throw InputError("nodal field does not match mesh");
    for (double v : f.values)
        if (!std::isfinite(v)) throw InputError("nodal field has non-finite entry");
}

void check_field(const Mesh& mesh, const VectorNodalField& f) {
    if (f.mesh_id != mesh.id() || f.size() != 2 * mesh.num_vertices())
        throw InputError("vector nodal field does not match mesh");
    for (double v : f.values)
        if (!std::isfinite(v)) throw InputError("vector nodal field has non-finite entry");
}

Vec2 element_gradient(const Mesh& mesh, const NodalField& f, int t) {
    const auto& tri = mesh.triangles[t];
    Vec2 g{0.0, 0.0};
    for (int v = 0; v < 3; ++v) g += mesh.hat_gradient(t, v) * f[tri[v]];
    return g;
}

Mat2 element_jacobian(const Mesh& mesh, const VectorNodalField& f, int t) {
    const auto& tri = mesh.triangles[t];
    Mat2 J = Mat2::zero();
    for (int v = 0; v < 3; ++v) {
        const Vec2 g = mesh.hat_gradient(t, v);
        const Vec2 u = f.at(tri[v]);
        J(0, 0) += u.x * g.x;
        J(0, 1) += u.x * g.y;
        J(1, 0) += u.y * g.x;
        J(1, 1) += u.y * g.y;
    }
    return J;
}

double l2_norm(const Mesh& mesh, const NodalField& f) {
    check_field(mesh, f);
    // Exact P1 mass: int_T v^2 = |T|/12 * v^T [[2,1,1],[1,2,1],[1,1,2]] v.
    double s = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double v0 = f[tri[0]], v1 = f[tri[1]], v2 = f[tri[2]];
        s += mesh.area(t) / 12.0 *
             (2.0 * (v0 * v0 + v1 * v1 + v2 * v2) + 2.0 * (v0 * v1 + v1 * v2 + v2 * v0));
    }
    return std::sqrt(s);
}

double h1_seminorm(const Mesh& mesh, const NodalField& f) {
    check_field(mesh, f);
    double s = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2 g = element_gradient(mesh, f, t);
        s += mesh.area(t) * g.dot(g);
    }
    return std::sqrt(s);
}

double h1_norm(const Mesh& mesh, const NodalField& f) {
    const double l2 = l2_norm(mesh, f);
    const double h1 = h1_seminorm(mesh, f);
    return std::sqrt(l2 * l2 + h1 * h1);
}

double l2_norm(const Mesh& mesh, const VectorNodalField& f) {
    check_field(mesh, f);
    NodalField c1(mesh), c2(mesh);
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        c1[i] = f.values[2 * i];
        c2[i] = f.values[2 * i + 1];
    }
    const double a = l2_norm(mesh, c1), b = l2_norm(mesh, c2);
    return std::sqrt(a * a + b * b);
}

double h1_norm(const Mesh& mesh, const VectorNodalField& f) {
    check_field(mesh, f);
    NodalField c1(mesh), c2(mesh);
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        c1[i] = f.values[2 * i];
        c2[i] = f.values[2 * i + 1];
    }
    const double a = h1_norm(mesh, c1), b = h1_norm(mesh, c2);
    return std::sqrt(a * a + b * b);
}

double w1p_seminorm(const Mesh& mesh, const NodalField& f, double p) {
    check_field(mesh, f);
    double s = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2 g = element_gradient(mesh, f, t);
        s += mesh.area(t) * std::pow(g.norm(), p);
    }
    return std::pow(s, 1.0 / p);
}

std::vector<Vec2> recovered_gradient(const Mesh& mesh, const NodalField& f) {
    check_field(mesh, f);
    std::vector<Vec2> grad(mesh.num_vertices(), Vec2{0.0, 0.0});
    std::vector<double> weight(mesh.num_vertices(), 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2 g = element_gradient(mesh, f, t);
        for (int v : mesh.triangles[t]) {
            grad[v] += g * mesh.area(t);
            weight[v] += mesh.area(t);
        }
    }
    for (int i = 0; i < mesh.num_vertices(); ++i) grad[i] = grad[i] * (1.0 / weight[i]);
    return grad;
}

std::string export_mesh_text(const Mesh& mesh) {
    std::string out;
    out += "vertices:\n";
    for (const auto& v : mesh.vertices)
        out += format_float(v.x) + " " + format_float(v.y) + "\n";
    out += "triangles:\n";
    for (const auto& t : mesh.triangles)
        out += std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n";
    out += "boundary:\n";
    for (const auto& e : mesh.boundary_edges)
        out += std::to_string(e.a) + " " + std::to_string(e.b) + " " + std::to_string(e.marker) + "\n";
    return out;
}

std::string export_field_csv(const Mesh& mesh, const NodalField& f) {
    check_field(mesh, f);
    std::string out = "node,x,y,value\n";
    for (int i = 0; i < mesh.num_vertices(); ++i)
        out += std::to_string(i) + "," + format_float(mesh.vertices[i].x) + "," +
               format_float(mesh.vertices[i].y) + "," + format_float(f[i]) + "\n";
    return out;
}

} // namespace vishape
