"""Optimal favorable sets for the weighted Neumann eigenvalue problem."""

from ._eigendesign import (
    Design,
    Error,
    ExpansionPair,
    InvalidArgument,
    LimitConfig,
    Mesh,
    Shape,
    SolverError,
    admissible_delta,
    bathtub,
    check_identities,
    competitor_expansions,
    compose_expansions,
    generate_mesh,
    import_mesh,
    limit_constants,
    optimize,
    predicted_bound,
    principal_lambda,
    run_cli,
    solve_limit,
    sweep,
    unit_ball_volume,
)

__version__ = "0.1.0"


def interval_design(mesh, beta, start, end):
    """Design whose favorable set is [start, end] on a 1D mesh."""
    theta = []
    for (i, j), size in zip(mesh.elements, mesh.element_measure):
        a, b = sorted((mesh.vertices[i][0], mesh.vertices[j][0]))
        overlap = max(0.0, min(b, end) - max(a, start))
        theta.append(overlap / size)
    return Design.from_fractions(mesh, beta, theta)
