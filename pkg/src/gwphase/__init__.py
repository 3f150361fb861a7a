"""Complex geometric phases of non-Hermitian effective Hamiltonians.

Submodules
----------
numerics   dense eigensolver, RK4 integrator, quadrature
biortho    biorthogonal eigensystems and branch tracking around loops
geomphase  line, surface and open-path phase integrals, holonomies
dynamics   exact evolution and adiabaticity checks
scenarios  complex cone, dichroic optics, metastable-moment AC model
bornopp    Born-Oppenheimer potentials and ring spectra
cli        ``gwphase`` command line runner
"""

from .biortho import (
    BiorthogonalSystem,
    EigenbranchPath,
    HamiltonianLoop,
    biorthogonal_decompose,
    track_branches,
)
from .errors import *  # noqa: F401,F403
from .geomphase import (
    GWPhase,
    ParameterSurface,
    aa_phase,
    im_phase_open_path,
    nonabelian_holonomy,
    phase_line_integral,
    phase_naive,
    phase_surface_integral,
)
from .numerics import TimeGrid, eig_dense, integrate_ode, quadrature

__version__ = "0.1.0"
