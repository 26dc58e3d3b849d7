"""Eigenvalue solvers: closed forms and P1 finite elements."""
from .closed import eigs_1d_robin, eigs_disk, eigs_rectangle, robin_interval_modes, robin_interval_roots
from .fem import (
    FemResult,
    GeneralizedEigenProblem,
    Mesh,
    assemble,
    convergence_ratios,
    eigs_fem,
    fem_eigenvalues,
    mesh_polygon,
    refine,
    weyl_sanity,
)
