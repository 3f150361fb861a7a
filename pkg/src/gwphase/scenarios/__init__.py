"""Concrete models: the complex cone, dichroic Jones optics and the AC moment."""

from .ac import (
    ACModel,
    NeglectedTerms,
    PlanarPath,
    TopologicalFactor,
    Winding,
    ac_geometric_phase,
    effective_moment,
    neglected_terms,
    topological_factor,
    winding_number,
)
from .cone import SIGMA_X, SIGMA_Y, SIGMA_Z, ComplexCone, cone_hamiltonian, cone_loop, cone_surface
from .optics import (
    JonesSegment,
    circuit_phase,
    elliptic_generator,
    helix_exact_phase,
    helical_fiber_loop,
    linear_dichroic,
    propagate_sequence,
    rotated,
    rotation,
    sequence_circuit_phase,
    sequence_phase_extract,
    three_vertex_phase,
    tracked_mode,
    vacuum,
)
