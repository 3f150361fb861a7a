"""Born-Oppenheimer reduction onto one metastable fast branch on a ring.

The full Hamiltonian is ``P^2 / 2M + V(Q) + h(Q)`` with ``Q`` an angle.
Writing the state as ``chi(Q) psi_i(Q)`` and projecting with the left
eigenvector gives the slow equation

    [(P - A)^2 / 2M + Vs] chi = Omega chi

with ``X = <phi|psi'> / <phi|psi>``, ``Y = <phi|psi''> / <phi|psi>`` and

    A  = i X
    Vs = V + omega + (X' + X^2 - Y) / 2M

so that ``int A dQ`` around the ring is the geometric phase of the fast loop.
Both potentials are complex when ``h`` is non-Hermitian.

Derivatives along the ring are spectral: the tracked fast branch is put in
a smooth single-valued gauge, so its Fourier series converges quickly.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.signal import resample

from .biortho import HamiltonianLoop, track_branches
from .errors import ContractViolation
from .numerics import TimeGrid, eig_dense

__all__ = [
    "MAX_GRID",
    "FastFamily",
    "BOPotentials",
    "bo_potentials",
    "ring_hamiltonian",
    "ring_spectrum",
    "flux_equivalence",
    "random_gauge",
]

MAX_GRID = 512


@dataclass(frozen=True)
class FastFamily:
    """Fast Hamiltonian ``h(Q)`` around the ring, slow mass and potential.

    `h` maps an array of angles ``(n,)`` to a stack ``(n, d, d)``; `V` maps
    angles to complex values and defaults to zero.
    """

    h: object = field(repr=False)
    mass: float = 1.0
    V: object = field(default=None, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise ContractViolation("slow mass must be positive")
        ends = self.hamiltonians(np.array([0.0, 2 * np.pi]))
        if not np.allclose(ends[0], ends[1], rtol=0, atol=1e-10 * max(1.0, np.abs(ends).max())):
            raise ContractViolation("h(Q) must be 2 pi periodic")

    def hamiltonians(self, Q):
        H = np.array(self.h(np.asarray(Q, dtype=float)), dtype=complex)
        if H.ndim != 3 or H.shape[0] != np.size(Q) or H.shape[1] != H.shape[2]:
            raise ContractViolation(f"h(Q) must return (n, d, d), got {H.shape}")
        return H

    def potential(self, Q):
        if self.V is None:
            return np.zeros(np.size(Q), dtype=complex)
        return np.broadcast_to(np.asarray(self.V(np.asarray(Q, dtype=float)), dtype=complex),
                               (np.size(Q),)).copy()


@dataclass
class BOPotentials:
    """Slow-coordinate potentials sampled at ``Q_k = 2 pi k / n``."""

    Q: np.ndarray
    A: np.ndarray
    scalar: np.ndarray
    omega: np.ndarray
    mass: float

    @property
    def n(self):
        return self.Q.shape[0]

    def loop_integral(self):
        """``int A dQ`` around the ring (periodic trapezoid, spectrally exact)."""
        return complex(2 * np.pi / self.n * self.A.sum())


def _wavenumbers(n):
    return np.fft.fftfreq(n, 1.0 / n)


def _spectral_derivative(f, order=1):
    """Derivative of periodic samples along axis 0."""
    n = f.shape[0]
    m = _wavenumbers(n)
    ik = (1j * m) ** order
    if order % 2 == 1 and n % 2 == 0:
        ik[n // 2] = 0.0
    shape = (n,) + (1,) * (f.ndim - 1)
    return np.fft.ifft(np.fft.fft(f, axis=0) * ik.reshape(shape), axis=0)


def _resample(f, n_new):
    """Trigonometric interpolation of periodic samples onto `n_new` points."""
    if n_new == f.shape[0]:
        return f.copy()
    return resample(f, n_new)


def bo_potentials(family, branch, gridN):
    """Vector and scalar potentials of fast branch `branch` on `gridN` points.

    Raises the biortho errors if the branch meets an exceptional point or a
    degeneracy on the ring, and `NonCyclicBranchError` if it does not return.
    """
    if int(gridN) != gridN or gridN < 8:
        raise ContractViolation("gridN must be an integer >= 8")
    n = int(gridN)
    grid = TimeGrid(0.0, 2 * np.pi, n + 1)
    Q = grid.samples
    H = family.hamiltonians(Q)
    H[-1] = H[0]
    branches = track_branches(HamiltonianLoop(grid, H))
    if not 0 <= branch < len(branches):
        raise ContractViolation(f"branch {branch} out of range")
    b = branches[branch]
    b.require_cyclic()
    psi, phi, omega = b.psi[:-1], b.phi[:-1], b.omega[:-1]
    d1 = _spectral_derivative(psi, 1)
    d2 = _spectral_derivative(psi, 2)
    norm = np.einsum("nk,nk->n", phi.conj(), psi)
    X = np.einsum("nk,nk->n", phi.conj(), d1) / norm
    Y = np.einsum("nk,nk->n", phi.conj(), d2) / norm
    dX = _spectral_derivative(X, 1)
    M = family.mass
    scalar = family.potential(Q[:-1]) + omega + (dX + X**2 - Y) / (2 * M)
    return BOPotentials(Q[:-1].copy(), 1j * X, scalar, omega.copy(), float(M))


def _link_phases(A):
    """``int_{Q_k}^{Q_k + h} A dQ`` for the trigonometric interpolant of `A`."""
    n = A.shape[0]
    h = 2 * np.pi / n
    m = _wavenumbers(n)
    F = np.fft.fft(A)
    w = np.empty(n, dtype=complex)
    w[0] = h
    nz = m != 0
    w[nz] = (np.exp(1j * m[nz] * h) - 1.0) / (1j * m[nz])
    if n % 2 == 0:
        # the cos(n Q / 2) mode integrates to zero over every cell
        w[n // 2] = 0.0
    return np.fft.ifft(F * w)


def ring_hamiltonian(A, scalar, M):
    """Periodic three-point discretization of ``(P - A)^2 / 2M + Vs``.

    Hops carry the Peierls factors ``exp(-+i int A)`` over each cell, so a
    gauge change ``A -> A + L'`` is a diagonal similarity transform.
    """
    n = A.shape[0]
    h = 2 * np.pi / n
    t = 1.0 / (2 * M * h * h)
    theta = _link_phases(A)
    K = np.diag(2 * t + np.asarray(scalar, dtype=complex))
    k = np.arange(n)
    K[k, (k + 1) % n] += -t * np.exp(-1j * theta)
    K[(k + 1) % n, k] += -t * np.exp(1j * theta)
    return K


def ring_spectrum(pot, M, gridN):
    """Eigenvalues of the slow ring Hamiltonian, sorted by (Re, Im).

    The potentials are interpolated onto `gridN` points when their grid
    differs.  The free ring gives ``(1 - cos(k h)) / (M h^2)``, which is
    ``k^2 / 2M`` to second order in ``h``.
    """
    if int(gridN) != gridN or not 3 <= gridN <= MAX_GRID:
        raise ContractViolation(f"gridN must be an integer in [3, {MAX_GRID}]")
    if not (np.isfinite(M) and M > 0):
        raise ContractViolation("mass must be positive")
    n = int(gridN)
    A = _resample(np.asarray(pot.A, dtype=complex), n)
    Vs = _resample(np.asarray(pot.scalar, dtype=complex), n)
    K = ring_hamiltonian(A, Vs, M)
    return np.array([lam for lam, _ in eig_dense(K, tol=1e-8)])


def random_gauge(seed=0, modes=3, scale=0.3):
    """Derivative of a random smooth periodic gauge function."""
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=scale, size=modes)
    b = rng.normal(scale=scale, size=modes)
    m = np.arange(1, modes + 1)

    def dlam(Q):
        Q = np.asarray(Q, dtype=float)[:, None]
        return (m * (-a * np.sin(m * Q) + b * np.cos(m * Q))).sum(axis=1)

    return dlam


def flux_equivalence(pot, M, gridN, gauge_derivative=None):
    """Largest eigenvalue shift after ``A -> A + L'(Q)``, with matched spectra.

    `gauge_derivative` maps angles to ``L'``; a random smooth periodic gauge
    is used when omitted.  ``L' = 1`` (``L = Q``) is a large gauge change and
    only relabels the eigenvalues.
    """
    if gauge_derivative is None:
        gauge_derivative = random_gauge()
    base = ring_spectrum(pot, M, gridN)
    Q = pot.Q
    shift = np.broadcast_to(np.asarray(gauge_derivative(Q), dtype=complex), Q.shape)
    moved = BOPotentials(pot.Q, pot.A + shift, pot.scalar, pot.omega, pot.mass)
    other = ring_spectrum(moved, M, gridN)
    cost = np.abs(base[:, None] - other[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
