"""Dimension theory toolkit for planar lower-triangular self-affine IFS."""

from triaffine.ifs_model import (
    AffineComposite,
    AffineIFS,
    Coefficient,
    CylinderParallelogram,
    TriangularMap,
    ValidationError,
    compose,
    cylinder,
    dump_system,
    parse_system,
)
from triaffine.dimension import (
    AffinityResult,
    LyapunovInputs,
    TheoremVerdict,
    affinity_dimension,
    homogeneous_affinity,
    lyapunov_dimension,
    phase_transition_profile,
    similarity_dimension,
    theorem_dimension,
)
from triaffine.projective import (
    ScalarIFS,
    ScalarMap,
    derive_scalar_ifs,
    invariant_interval,
    project_prefix,
)

__all__ = [
    "AffineComposite",
    "AffineIFS",
    "AffinityResult",
    "Coefficient",
    "CylinderParallelogram",
    "LyapunovInputs",
    "ScalarIFS",
    "ScalarMap",
    "TheoremVerdict",
    "TriangularMap",
    "ValidationError",
    "affinity_dimension",
    "compose",
    "cylinder",
    "derive_scalar_ifs",
    "dump_system",
    "homogeneous_affinity",
    "invariant_interval",
    "lyapunov_dimension",
    "parse_system",
    "phase_transition_profile",
    "project_prefix",
    "similarity_dimension",
    "theorem_dimension",
]

__version__ = "0.1.0"
