"""Two-level system in a field precessing on a (possibly complex) cone.

    H(t) = (b/2) (sin T cos wt sx + sin T sin wt sy + cos T sz),  w = 2 pi / period

For complex polar angle ``T`` the loop is non-Hermitian while the eigenvalues
stay ``+-b/2``; the branch aligned with the field acquires the complex solid
angle phase ``-pi (1 - cos T)``.
"""

from dataclasses import dataclass

import numpy as np

from ..biortho import HamiltonianLoop
from ..errors import ContractViolation
from ..geomphase import ParameterSurface
from ..numerics import TimeGrid

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class ComplexCone:
    b: complex = 1.0
    theta: complex = 0.5 + 0.2j
    period: float = 2 * np.pi
    handedness: int = 1

    def __post_init__(self):
        if self.handedness not in (1, -1):
            raise ContractViolation("handedness must be +1 or -1")
        if not self.period > 0:
            raise ContractViolation("period must be positive")
        if self.b == 0:
            raise ContractViolation("field strength must be nonzero")

    @property
    def drive_frequency(self):
        return 2 * np.pi / self.period

    @property
    def upper_branch(self):
        """Sorted index of the ``+b/2`` branch."""
        b = complex(self.b)
        return 1 if (b.real, b.imag) > (0.0, 0.0) else 0

    @property
    def exact_phase(self):
        """Closed-form phase of the upper branch."""
        return complex(-self.handedness * np.pi * (1 - np.cos(complex(self.theta))))


def cone_hamiltonian(b, theta, azimuth):
    """Vectorized ``(b/2) n . sigma`` with ``n`` at polar `theta`, azimuth `azimuth`."""
    theta, azimuth = np.broadcast_arrays(np.asarray(theta, dtype=complex),
                                         np.asarray(azimuth, dtype=float))
    st = np.sin(theta)[..., None, None]
    return 0.5 * b * (
        st * np.cos(azimuth)[..., None, None] * SIGMA_X
        + st * np.sin(azimuth)[..., None, None] * SIGMA_Y
        + np.cos(theta)[..., None, None] * SIGMA_Z
    )


def cone_loop(cone, samples=2001):
    if samples < 100:
        raise ContractViolation("cone_loop needs at least 100 samples")
    grid = TimeGrid(0.0, float(cone.period), samples)
    az = cone.handedness * cone.drive_frequency * grid.samples
    H = cone_hamiltonian(cone.b, np.full(samples, complex(cone.theta)), az)
    H[-1] = H[0]
    return HamiltonianLoop(grid, H)


def cone_surface(cone, n_u=401, n_v=401, fd_step=1e-4):
    """Cap of the cone: polar angle ``v * theta``, azimuth ``2 pi u``."""

    def chart(u, v):
        return cone_hamiltonian(cone.b, v * complex(cone.theta), cone.handedness * 2 * np.pi * u)

    return ParameterSurface(chart, n_u, n_v, fd_step)
