#include "vishape/demos.hpp"

#include "vishape/error.hpp"

namespace vishape {

namespace {

const char* kSolveVi = R"cfg(
[mesh]
kind = square
n = 8

[problem]
lambda = 1.0
density = cubic
a = 1.0
b = 1.0
f_expr = 6*bump(x,y,0.4,0.45,0.25)
obstacle = const
psi_const = 0.1
tol = 1e-10
)cfg";

const char* kSemilinearLipschitz = R"cfg(
[mesh]
kind = square
n = 16

[problem]
lambda = 1.0
density = cubic
a = 1.0
b = 1.0
f_expr = 6*bump(x,y,0.4,0.45,0.25)
obstacle = const
psi_const = 0.1
tol = 1e-10

[field]
x_expr = 0.7*bump(x,y,0.55,0.5,0.4)
y_expr = 0.2*bump(x,y,0.55,0.5,0.4)
support = [0.15, 0.95, 0.1, 0.9]

[sweep]
t_first_exp = 3
t_last_exp = 9
exponent = 1.0
)cfg";

const char* kPLaplaceRates = R"cfg(
[mesh]
kind = square
n = 12

[problem]
p_list = [1.5, 2, 3, 4]
f_expr = 4*sin(pi*x)*sin(pi*y)
tol = 1e-9

[field]
x_expr = 0.7*bump(x,y,0.55,0.5,0.4)
y_expr = 0.2*bump(x,y,0.55,0.5,0.4)
support = [0.15, 0.95, 0.1, 0.9]

[sweep]
t_first_exp = 3
t_last_exp = 9
)cfg";

const char* kMaterialDerivative = R"cfg(
[mesh]
kind = square
n = 16

[problem]
lambda = 1.0
density = cubic
a = 1.0
b = 1.0
f_expr = 6*bump(x,y,0.4,0.45,0.25)
obstacle = const
psi_const = 0.1
tol = 1e-10

[field]
x_expr = 0.5*bump(x,y,0.55,0.5,0.4)
y_expr = 0.15*bump(x,y,0.55,0.5,0.4)
support = [0.15, 0.95, 0.1, 0.9]

[material]
t_list = [0.1, 0.01, 0.001]
cone_tol = 1e-6
)cfg";

const char* kStaticShapeDerivative = R"cfg(
[mesh]
kind = square
n = 8

[problem]
lambda = 1.0
density = cubic
a = 1.0
b = 1.0
f_expr = 6*bump(x,y,0.4,0.45,0.25)
obstacle = const
psi_const = 0.1
tol = 1e-10

[field]
x_expr = bump(x,y,0.5,0.5,0.32)
y_expr = -0.5*bump(x,y,0.5,0.5,0.32)
support = [0.18, 0.82, 0.18, 0.82]

[refine]
levels = 3
)cfg";

const char* kDamageRun = R"cfg(
[mesh]
kind = square
n = 12

[damage]
tau = 0.1
steps = 4
lambda_e = 1.0
mu_e = 1.0
eta = 0.001
beta = 0.15
dirichlet_x = 0.25*(x-0.5)
dirichlet_y = -0.05*(y-0.5)
dirichlet_scale = ramp
load_x = 0
load_y = 0
u0_x = 0
u0_y = 0
v0_x = 0
v0_y = 0
chi0 = 1 - 0.9*bump(x,y,0.5,0.5,0.3)
tol = 1e-10

[cost]
lambda_u = 0.5
lambda_chi = 1.0
u_ref_x = 0
u_ref_y = 0
chi_ref = 1 - 0.8*bump(x,y,0.62,0.5,0.3)

[catalog]
region = [0.3, 0.7, 0.3, 0.7]
nx = 2
ny = 2
radius = 0.18
)cfg";

const char* kDamageDj = R"cfg(
[mesh]
kind = square
n = 12

[damage]
tau = 0.1
steps = 4
lambda_e = 1.0
mu_e = 1.0
eta = 0.001
beta = 0.15
dirichlet_x = 0.25*(x-0.5)
dirichlet_y = -0.05*(y-0.5)
dirichlet_scale = ramp
load_x = 0
load_y = 0
u0_x = 0
u0_y = 0
v0_x = 0
v0_y = 0
chi0 = 1 - 0.9*bump(x,y,0.5,0.5,0.3)
tol = 1e-10

[cost]
lambda_u = 0.5
lambda_chi = 1.0
u_ref_x = 0
u_ref_y = 0
chi_ref = 1 - 0.8*bump(x,y,0.62,0.5,0.3)

[field]
x_expr = 0.6*bump(x,y,0.55,0.45,0.35)
y_expr = 0.2*bump(x,y,0.55,0.45,0.35)
support = [0.2, 0.9, 0.1, 0.8]

[fd]
t_list = [0.01, 0.001]
homogeneity = [0.5, 2, 10]
)cfg";

const char* kShapeDescent = R"cfg(
[mesh]
kind = square
n = 8

[damage]
tau = 0.1
steps = 2
lambda_e = 1.0
mu_e = 1.0
eta = 0.001
beta = 0.15
dirichlet_x = 0.25*(x-0.5)
dirichlet_y = -0.05*(y-0.5)
dirichlet_scale = ramp
load_x = 0
load_y = 0
u0_x = 0
u0_y = 0
v0_x = 0
v0_y = 0
chi0 = 1 - 0.9*bump(x,y,0.45,0.5,0.28)
tol = 1e-10

[cost]
lambda_u = 0.0
lambda_chi = 1.0
u_ref_x = 0
u_ref_y = 0
chi_ref = 1 - 0.9*bump(x,y,0.58,0.5,0.28)

[catalog]
region = [0.3, 0.7, 0.3, 0.7]
nx = 2
ny = 2
radius = 0.18

[descent]
max_iterations = 12
step = 0.08
tol_opt = 1e-4
)cfg";

std::vector<DemoEntry> build_catalog() {
    return {
        {"solve-vi", "solve-vi", "semilinear obstacle problem on the unit square", kSolveVi},
        {"semilinear-lipschitz", "rate-sweep",
         "Lipschitz sensitivity rate of the semilinear obstacle problem", kSemilinearLipschitz},
        {"p-laplace-rates", "p-laplace-rates",
         "sensitivity rates of the p-Laplace energy for several p", kPLaplaceRates},
        {"material-derivative", "material-derivative",
         "material derivative vs. transported finite differences", kMaterialDerivative},
        {"static-shape-derivative", "shape-derivative",
         "vanishing shape derivative under a tangential field, refinement study",
         kStaticShapeDerivative},
        {"damage-run", "damage-run", "time-discrete damage evolution with diagnostics", kDamageRun},
        {"damage-dj", "damage-dj",
         "shape derivative of the damage tracking cost vs. finite differences", kDamageDj},
        {"shape-descent", "shape-descent", "catalog descent on the damage tracking cost",
         kShapeDescent},
    };
}

} // namespace

const std::vector<DemoEntry>& demo_catalog() {
    static const std::vector<DemoEntry> catalog = build_catalog();
    return catalog;
}

const DemoEntry& find_demo(const std::string& name) {
    for (const DemoEntry& d : demo_catalog())
        if (d.name == name) return d;
    throw InputError("unknown demo '" + name + "'");
}

} // namespace vishape
