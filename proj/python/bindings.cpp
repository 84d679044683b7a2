#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vishape/commands.hpp"
#include "vishape/cones.hpp"
#include "vishape/damage.hpp"
#include "vishape/demos.hpp"
#include "vishape/error.hpp"
#include "vishape/rates.hpp"

namespace py = pybind11;
using namespace vishape;

namespace {

ObstacleProblem problem_from_text(const Mesh& mesh, const std::string& config_text) {
    return problem_from_config(Config::parse(config_text), mesh);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "obstacle-type variational inequalities, shape sensitivities and "
              "time-discrete damage evolution on 2D meshes";

    py::register_exception<InputError>(m, "InputError");
    py::register_exception<SolverError>(m, "SolverError");

    py::class_<Vec2>(m, "Vec2")
        .def(py::init<double, double>())
        .def_readwrite("x", &Vec2::x)
        .def_readwrite("y", &Vec2::y)
        .def("__repr__", [](const Vec2& v) {
            return "Vec2(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ")";
        });

    py::class_<Box2>(m, "Box2")
        .def(py::init<double, double, double, double>())
        .def_readwrite("x0", &Box2::x0)
        .def_readwrite("x1", &Box2::x1)
        .def_readwrite("y0", &Box2::y0)
        .def_readwrite("y1", &Box2::y1);

    py::class_<Mesh>(m, "Mesh")
        .def_property_readonly("num_vertices", &Mesh::num_vertices)
        .def_property_readonly("num_triangles", &Mesh::num_triangles)
        .def("total_area", &Mesh::total_area)
        .def("vertices",
             [](const Mesh& mesh) {
                 std::vector<std::pair<double, double>> out;
                 for (const Vec2& v : mesh.vertices) out.emplace_back(v.x, v.y);
                 return out;
             })
        .def("triangles", [](const Mesh& mesh) { return mesh.triangles; })
        .def("boundary_nodes", [](const Mesh& mesh) { return mesh.boundary_nodes; })
        .def("export_text", &export_mesh_text);

    m.def("unit_square_mesh", &unit_square_mesh, py::arg("n"),
          py::arg("hold_all") = Box2{-0.5, 1.5, -0.5, 1.5});
    m.def("unit_disk_mesh", &unit_disk_mesh, py::arg("n"),
          py::arg("hold_all") = Box2{-1.5, 1.5, -1.5, 1.5});
    m.def("refine_uniform", &refine_uniform);

    py::class_<VectorField>(m, "VectorField")
        .def_static("parse", &VectorField::parse, py::arg("x_expr"), py::arg("y_expr"),
                    py::arg("support"), py::arg("hold_all"))
        .def_static("zero", &VectorField::zero)
        .def("value", [](const VectorField& f, double x, double y) {
            const Vec2 v = f.value({x, y});
            return std::make_pair(v.x, v.y);
        })
        .def("divergence", [](const VectorField& f, double x, double y) {
            return f.divergence({x, y});
        })
        .def("scaled", &VectorField::scaled);

    m.def("integrate_flow", [](const VectorField& X, double t, double x, double y) {
        const FlowSample s = integrate_flow(X, t, {x, y});
        return py::make_tuple(py::make_tuple(s.point.x, s.point.y),
                              py::make_tuple(s.jacobian(0, 0), s.jacobian(0, 1),
                                             s.jacobian(1, 0), s.jacobian(1, 1)));
    });
    m.def("flow_validity_time", &compute_validity_time, py::arg("field"), py::arg("limit") = 1.0);

    py::class_<VISolution>(m, "VISolution")
        .def_property_readonly("state", [](const VISolution& s) { return s.state.values; })
        .def_property_readonly("multiplier",
                               [](const VISolution& s) { return s.multiplier.values; })
        .def_readonly("active", &VISolution::active)
        .def_readonly("strongly_active", &VISolution::strongly_active)
        .def_readonly("biactive", &VISolution::biactive)
        .def_readonly("res_stationarity", &VISolution::res_stationarity)
        .def_readonly("res_feasibility", &VISolution::res_feasibility)
        .def_readonly("res_sign", &VISolution::res_sign)
        .def_readonly("res_complementarity", &VISolution::res_complementarity)
        .def_readonly("iterations", &VISolution::iterations);

    py::class_<ObstacleProblem>(m, "ObstacleProblem")
        .def_static("from_config", &problem_from_text, py::arg("mesh"), py::arg("config_text"),
                    py::keep_alive<0, 1>());

    m.def("solve_obstacle", [](const ObstacleProblem& p, double tol) {
        return solve_obstacle_semilinear(p, tol);
    }, py::arg("problem"), py::arg("tol") = 1e-10);
    m.def("solve_transported", &solve_transported, py::arg("problem"), py::arg("field"),
          py::arg("t"), py::arg("tol") = 1e-10);
    m.def("brute_force_vi", &brute_force_vi, py::arg("problem"), py::arg("tol") = 1e-10);
    m.def("material_derivative",
          [](const ObstacleProblem& p, const VISolution& sol, const VectorField& X, double tol) {
              const NodalField psidot = static_obstacle_rate(p, X);
              return solve_material_derivative(p, sol, X, psidot, tol).values;
          },
          py::arg("problem"), py::arg("solution"), py::arg("field"), py::arg("tol") = 1e-10);

    m.def("run_config", [](const std::string& command, const std::string& text,
                           const std::string& out_dir) {
        return run_command(command, Config::parse(text), out_dir);
    }, py::arg("command"), py::arg("config_text"), py::arg("out_dir"));
    m.def("demo_names", []() {
        std::vector<std::string> names;
        for (const DemoEntry& d : demo_catalog()) names.push_back(d.name);
        return names;
    });
    m.def("demo_config", [](const std::string& name) { return find_demo(name).config; });
    m.def("demo_command", [](const std::string& name) { return find_demo(name).command; });
}
