"""Simulation of phase-space-compressed cat states in a cavity-qubit system."""

from sqcat.constants import (
    DB_PER_UNIT_R,
    DEFAULT_CAVITY_DIM,
    VACUUM_QUAD_VARIANCE,
    db_to_r,
    r_to_db,
)
from sqcat.hilbert import (
    CavitySpace,
    DegenerateStateError,
    DensityMatrix,
    Operator,
    PureState,
    QubitSpace,
    SpaceSpec,
    TruncationWarning,
    expectation,
    make_operator,
    make_state,
    partial_trace,
    project_qubit,
    state_fidelity,
    tensor,
)

__all__ = [
    "DB_PER_UNIT_R",
    "DEFAULT_CAVITY_DIM",
    "VACUUM_QUAD_VARIANCE",
    "db_to_r",
    "r_to_db",
    "CavitySpace",
    "DegenerateStateError",
    "DensityMatrix",
    "Operator",
    "PureState",
    "QubitSpace",
    "SpaceSpec",
    "TruncationWarning",
    "expectation",
    "make_operator",
    "make_state",
    "partial_trace",
    "project_qubit",
    "state_fidelity",
    "tensor",
]
