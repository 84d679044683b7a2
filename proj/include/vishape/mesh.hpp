#ifndef VISHAPE_MESH_HPP
#define VISHAPE_MESH_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vishape/geometry.hpp"

namespace vishape {

struct BoundaryEdge {
    int a = -1;
    int b = -1;
    int marker = 1;
};

// Conforming P1 triangulation of a polygonal domain inside a hold-all box.
// Immutable after construction; refine/deform return new meshes.
class Mesh {
public:
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles; // counter-clockwise vertex indices
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<int> boundary_nodes; // sorted, unique
    Box2 hold_all;

    Mesh(std::vector<Vec2> verts, std::vector<std::array<int, 3>> tris,
         std::vector<BoundaryEdge> bedges, Box2 hold_all_box);

    std::uint64_t id() const { return id_; }
    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }

    double area(int t) const { return areas_[t]; }
    double total_area() const;
    // Gradient of the P1 hat function of local vertex v on triangle t.
    Vec2 hat_gradient(int t, int v) const { return hat_grads_[3 * t + v]; }
    Vec2 centroid(int t) const;
    bool is_boundary_node(int i) const { return boundary_mask_[i]; }

    // Mesh quality floor used by the validity invariant.
    static constexpr double kMinArea = 1e-14;

private:
    std::uint64_t id_;
    std::vector<double> areas_;
    std::vector<Vec2> hat_grads_;
    std::vector<char> boundary_mask_;

    void validate() const;
    void build_derived();
};

// Real-valued P1 coefficient vector attached to one mesh.
struct NodalField {
    std::vector<double> values;
    std::uint64_t mesh_id = 0;

    NodalField() = default;
    NodalField(const Mesh& mesh, double fill = 0.0)
        : values(mesh.num_vertices(), fill), mesh_id(mesh.id()) {}

    double& operator[](int i) { return values[i]; }
    double operator[](int i) const { return values[i]; }
    int size() const { return static_cast<int>(values.size()); }
};

// Two interleaved components per vertex: (u1_i, u2_i).
struct VectorNodalField {
    std::vector<double> values;
    std::uint64_t mesh_id = 0;

    VectorNodalField() = default;
    VectorNodalField(const Mesh& mesh, double fill = 0.0)
        : values(2 * mesh.num_vertices(), fill), mesh_id(mesh.id()) {}

    Vec2 at(int i) const { return {values[2 * i], values[2 * i + 1]}; }
    void set(int i, const Vec2& v) {
        values[2 * i] = v.x;
        values[2 * i + 1] = v.y;
    }
    int size() const { return static_cast<int>(values.size()); }
};

Mesh unit_square_mesh(int n, Box2 hold_all = Box2{-0.5, 1.5, -0.5, 1.5});
// Unit disk through the elliptical square-to-disk map of a structured square mesh.
Mesh unit_disk_mesh(int n, Box2 hold_all = Box2{-1.5, 1.5, -1.5, 1.5});
Mesh refine_uniform(const Mesh& mesh);
Mesh deform(const Mesh& mesh, const std::function<Vec2(const Vec2&)>& map);

void check_field(const Mesh& mesh, const NodalField& f);
void check_field(const Mesh& mesh, const VectorNodalField& f);

double l2_norm(const Mesh& mesh, const NodalField& f);
double h1_seminorm(const Mesh& mesh, const NodalField& f);
double h1_norm(const Mesh& mesh, const NodalField& f);
double l2_norm(const Mesh& mesh, const VectorNodalField& f);
double h1_norm(const Mesh& mesh, const VectorNodalField& f);
// (sum_T |T| |grad v|_T^p)^(1/p); exact for P1.
double w1p_seminorm(const Mesh& mesh, const NodalField& f, double p);

// Per-triangle constant gradient of a P1 field.
Vec2 element_gradient(const Mesh& mesh, const NodalField& f, int t);
Mat2 element_jacobian(const Mesh& mesh, const VectorNodalField& f, int t);
// Area-weighted average of incident element gradients.
std::vector<Vec2> recovered_gradient(const Mesh& mesh, const NodalField& f);

std::string export_mesh_text(const Mesh& mesh);
std::string export_field_csv(const Mesh& mesh, const NodalField& f);

} // namespace vishape

#endif
