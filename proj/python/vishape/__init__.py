"""Obstacle-type variational inequalities, shape sensitivities and
time-discrete damage evolution on 2D meshes."""

from vishape._core import (  # noqa: F401
    Box2,
    InputError,
    Mesh,
    ObstacleProblem,
    SolverError,
    Vec2,
    VectorField,
    VISolution,
    brute_force_vi,
    demo_command,
    demo_config,
    demo_names,
    flow_validity_time,
    integrate_flow,
    material_derivative,
    refine_uniform,
    run_config,
    solve_obstacle,
    solve_transported,
    unit_disk_mesh,
    unit_square_mesh,
)

__all__ = [
    "Box2",
    "InputError",
    "Mesh",
    "ObstacleProblem",
    "SolverError",
    "Vec2",
    "VectorField",
    "VISolution",
    "brute_force_vi",
    "demo_command",
    "demo_config",
    "demo_names",
    "flow_validity_time",
    "integrate_flow",
    "material_derivative",
    "refine_uniform",
    "run_config",
    "solve_obstacle",
    "solve_transported",
    "unit_disk_mesh",
    "unit_square_mesh",
]
