"""Left/right eigensystems of non-Hermitian matrices and eigenbranch tracking.

Conventions
-----------
Left eigenvectors are stored as kets ``phi`` such that the bra
``<phi| = phi.conj()`` satisfies ``<phi| H = w <phi|``, i.e. ``phi`` is an
eigenvector of ``H^dagger`` with eigenvalue ``conj(w)``.  Overlaps are
``<phi_i|psi_j> = np.vdot(phi_i, psi_j)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BranchCollisionError,
    ContractViolation,
    ExceptionalPointError,
    NearDegeneracyError,
    NonCyclicBranchError,
)
from .numerics import TimeGrid, as_matrix, eig2_batch, eig_dense

__all__ = [
    "EP_FLOOR",
    "DEGENERACY_FLOOR",
    "BiorthogonalSystem",
    "HamiltonianLoop",
    "EigenbranchPath",
    "biorthogonal_decompose",
    "decompose_batch",
    "track_branches",
]

# normalized |<phi|psi>| / (|phi| |psi|) below this is treated as an exceptional point
EP_FLOOR = 1e-6
# eigenvalue separation relative to |H|
DEGENERACY_FLOOR = 1e-9
RETURN_OVERLAP = 0.99


@dataclass
class BiorthogonalSystem:
    eigenvalues: np.ndarray  # (d,)
    right: np.ndarray  # (d, d), columns psi_i, unit norm
    left: np.ndarray  # (d, d), columns phi_i (kets), unit norm
    overlaps: np.ndarray  # (d,), <phi_i|psi_i>

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def normalized_overlaps(self):
        return np.abs(self.overlaps)

    def projector(self, i):
        """Spectral projector ``|psi_i><phi_i| / <phi_i|psi_i>``."""
        return np.outer(self.right[:, i], self.left[:, i].conj()) / self.overlaps[i]

    def reconstruct(self):
        d = self.dim
        H = np.zeros((d, d), dtype=complex)
        for i in range(d):
            H += self.eigenvalues[i] * self.projector(i)
        return H


def _check_spectrum(w, scale):
    d = w.shape[-1]
    if d < 2:
        return
    gaps = np.where(np.eye(d, dtype=bool), np.inf, np.abs(w[..., :, None] - w[..., None, :]))
    gap = gaps.min()
    if gap <= DEGENERACY_FLOOR * max(scale, 1e-300):
        raise NearDegeneracyError(
            f"eigenvalue gap {gap:.3e} below degeneracy floor (|H| = {scale:.3e})"
        )


def _check_overlaps(ovl):
    worst = float(np.min(np.abs(ovl)))
    if worst < EP_FLOOR:
        raise ExceptionalPointError(
            f"normalized left/right overlap {worst:.3e} below floor {EP_FLOOR:g}",
            overlap=worst,
        )


def biorthogonal_decompose(H, tol=1e-10):
    """Biorthogonal eigensystem of `H`.

    Right vectors come from ``H``, left vectors from ``H^dagger`` matched by
    conjugated eigenvalue.  Both are unit-normalized, so ``overlaps`` carry
    the distance from an exceptional point.
    """
    H = as_matrix(H)
    d = H.shape[0]
    scale = np.linalg.norm(H, 2)
    right_pairs = eig_dense(H, tol)
    w = np.array([p[0] for p in right_pairs])
    _check_spectrum(w, scale)
    R = np.stack([p[1] for p in right_pairs], axis=1)

    left_pairs = eig_dense(H.conj().T, tol)
    L = np.empty_like(R)
    unused = list(range(d))
    for i in range(d):
        dist = [abs(np.conj(left_pairs[j][0]) - w[i]) for j in unused]
        j = unused.pop(int(np.argmin(dist)))
        L[:, i] = left_pairs[j][1]
    ovl = np.einsum("ki,ki->i", L.conj(), R)
    _check_overlaps(ovl)
    cross = np.abs(L.conj().T @ R) - np.diag(np.abs(ovl))
    if d > 1 and cross.max() > max(tol, 1e-8) / EP_FLOOR:
        raise ExceptionalPointError(
            f"mutual orthogonality violated ({cross.max():.3e})", overlap=float(np.min(np.abs(ovl)))
        )
    return BiorthogonalSystem(w, R, L, ovl)


def decompose_batch(Hs, tol=1e-10):
    """Decompose a stack ``(n, d, d)``; returns ``(w, R, L)`` arrays.

    Eigenvalues are sorted by (Re, Im) per sample.  Left kets are scaled so
    that ``<phi_i|psi_i> = 1``.  2x2 stacks use closed forms.
    """
    Hs = np.asarray(Hs, dtype=complex)
    if Hs.ndim != 3 or Hs.shape[1] != Hs.shape[2]:
        raise ContractViolation(f"expected (n, d, d) stack, got {Hs.shape}")
    if not np.all(np.isfinite(Hs)):
        raise ContractViolation("non-finite Hamiltonian samples")
    n, d, _ = Hs.shape
    if d == 2:
        w, R = eig2_batch(Hs)
        scale = np.abs(Hs).max(axis=(1, 2))
        a, b, c, dd = Hs[:, 0, 0], Hs[:, 0, 1], Hs[:, 1, 0], Hs[:, 1, 1]
        L = np.empty_like(R)
        for k in range(2):
            lam = w[:, k]
            # row vectors r with r H = lam r
            r1 = np.stack([c, lam - a], axis=1)
            r2 = np.stack([lam - dd, b], axis=1)
            n1 = np.linalg.norm(r1, axis=1)
            n2 = np.linalg.norm(r2, axis=1)
            r = np.where((n1 >= n2)[:, None], r1, r2)
            nr = np.maximum(n1, n2)
            flat = nr <= 1e-14 * np.maximum(scale, 1e-300)
            r[flat] = R[flat, :, k].conj()
            nr = np.where(flat, 1.0, nr)
            L[:, :, k] = (r / nr[:, None]).conj()
        gap = np.abs(w[:, 1] - w[:, 0])
        bad = gap <= DEGENERACY_FLOOR * np.maximum(scale, 1e-300)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise NearDegeneracyError(f"eigenvalue gap {gap[k]:.3e} at sample {k}")
        ovl = np.einsum("nki,nki->ni", L.conj(), R)
        _check_overlaps(ovl)
        swap = (w[:, 0].real > w[:, 1].real) | (
            (w[:, 0].real == w[:, 1].real) & (w[:, 0].imag > w[:, 1].imag)
        )
        idx = np.where(swap[:, None], [1, 0], [0, 1])
        w = np.take_along_axis(w, idx, axis=1)
        R = np.take_along_axis(R, idx[:, None, :], axis=2)
        L = np.take_along_axis(L, idx[:, None, :], axis=2)
        ovl = np.take_along_axis(ovl, idx, axis=1)
    else:
        w = np.empty((n, d), dtype=complex)
        R = np.empty((n, d, d), dtype=complex)
        L = np.empty((n, d, d), dtype=complex)
        ovl = np.empty((n, d), dtype=complex)
        for k in range(n):
            sysk = biorthogonal_decompose(Hs[k], tol)
            w[k], R[k], L[k], ovl[k] = sysk.eigenvalues, sysk.right, sysk.left, sysk.overlaps
    L = L / ovl.conj()[:, None, :]
    return w, R, L


@dataclass
class HamiltonianLoop:
    """Hamiltonian samples ``H[k] = H(grid.samples[k])``.

    ``closed`` is detected from the endpoint samples; open paths are allowed
    and are what the open-path routines consume.
    """

    grid: TimeGrid
    H: np.ndarray

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=complex)
        if self.H.ndim != 3 or self.H.shape[1] != self.H.shape[2]:
            raise ContractViolation(f"H must be (n, d, d), got {self.H.shape}")
        if self.H.shape[0] != self.grid.n_samples:
            raise ContractViolation("one Hamiltonian per grid sample required")
        if not np.all(np.isfinite(self.H)):
            raise ContractViolation("non-finite Hamiltonian samples")

    @property
    def times(self):
        return self.grid.samples

    @property
    def dim(self):
        return self.H.shape[1]

    @property
    def period(self):
        return self.grid.duration

    @property
    def closed(self):
        return bool(np.max(np.abs(self.H[-1] - self.H[0])) <= 1e-12 * max(1.0, np.abs(self.H[0]).max()))

    def reversed(self):
        return HamiltonianLoop(self.grid, self.H[::-1].copy())

    def interpolate(self, t):
        """Piecewise-linear H at times `t` (array)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = (t - self.grid.t0) / self.grid.dt
        k = np.clip(np.floor(x).astype(int), 0, self.grid.n_samples - 2)
        f = (x - k)[:, None, None]
        return (1.0 - f) * self.H[k] + f * self.H[k + 1]


@dataclass
class EigenbranchPath:
    index: int
    times: np.ndarray
    omega: np.ndarray  # (n,)
    psi: np.ndarray  # (n, d)
    phi: np.ndarray  # (n, d) kets
    cyclic: bool
    return_overlap: float = field(default=1.0)

    @property
    def n_samples(self):
        return self.times.shape[0]

    @property
    def duration(self):
        return float(self.times[-1] - self.times[0])

    def overlaps(self):
        return np.einsum("nk,nk->n", self.phi.conj(), self.psi)

    def require_cyclic(self):
        if not self.cyclic:
            raise NonCyclicBranchError(
                f"branch {self.index} does not return (overlap {self.return_overlap:.4f})",
                overlap=self.return_overlap,
            )

    def with_gauge(self, right_factor, left_factor):
        """Rescale ``psi -> lambda(t) psi`` and ``phi -> eta(t) phi``."""
        lam = np.asarray(right_factor, dtype=complex)[:, None]
        eta = np.asarray(left_factor, dtype=complex)[:, None]
        return EigenbranchPath(
            self.index, self.times, self.omega, self.psi * lam, self.phi * eta,
            self.cyclic, self.return_overlap,
        )

    def reversed(self):
        t = self.times
        return EigenbranchPath(
            self.index, (t[-1] + t[0]) - t[::-1], self.omega[::-1], self.psi[::-1],
            self.phi[::-1], self.cyclic, self.return_overlap,
        )

    def segment(self, start, stop):
        """Open sub-path over samples ``start..stop-1``."""
        sl = slice(start, stop)
        return EigenbranchPath(
            self.index, self.times[sl], self.omega[sl], self.psi[sl], self.phi[sl], False,
            self.return_overlap,
        )


def _match_permutations(w, tol):
    """Branch assignment ``perm[k, b]`` = sorted index of branch b at sample k."""
    n, d = w.shape
    scale = max(np.abs(w).max(), 1e-300)
    if d == 1:
        return np.zeros((n, 1), dtype=int)
    if d == 2:
        stay = np.abs(w[1:, 0] - w[:-1, 0]) + np.abs(w[1:, 1] - w[:-1, 1])
        cross = np.abs(w[1:, 1] - w[:-1, 0]) + np.abs(w[1:, 0] - w[:-1, 1])
        amb = np.abs(stay - cross) <= tol * scale
        if np.any(amb):
            k = int(np.argmax(amb))
            raise BranchCollisionError(f"ambiguous branch matching between samples {k} and {k + 1}")
        flips = np.concatenate([[0], np.cumsum(cross < stay) % 2])
        return np.where(flips[:, None] == 1, [1, 0], [0, 1])
    perm = np.empty((n, d), dtype=int)
    perm[0] = np.arange(d)
    for k in range(n - 1):
        free = list(range(d))
        for b in range(d):
            prev = w[k, perm[k, b]]
            dist = np.array([abs(w[k + 1, j] - prev) for j in free])
            order = np.argsort(dist)
            if len(free) > 1 and dist[order[1]] - dist[order[0]] <= tol * scale:
                raise BranchCollisionError(
                    f"ambiguous branch matching between samples {k} and {k + 1}"
                )
            perm[k + 1, b] = free.pop(int(order[0]))
    return perm


def track_branches(loop, tol=1e-10):
    """Follow every eigenbranch of `loop` sample to sample.

    Branch ``b`` starts on the b-th eigenvalue (sorted by Re, Im) at the first
    sample.  Right vectors are phase-aligned so that consecutive overlaps are
    real and positive; left vectors are scaled to ``<phi|psi> = 1``.  On
    closed loops a branch whose ray returns is twisted by a smooth phase so
    that its endpoint vectors coincide, then the last sample is overwritten
    by the first.
    """
    w, R, L = decompose_batch(loop.H, tol)
    n, d = w.shape
    perm = _match_permutations(w, tol)
    rows = np.arange(n)
    times = loop.times
    closed = loop.closed
    branches = []
    for b in range(d):
        sel = perm[:, b]
        omega = w[rows, sel]
        psi = R[rows, :, sel]
        phi = L[rows, :, sel]
        step = np.einsum("nk,nk->n", psi[:-1].conj(), psi[1:])
        if np.min(np.abs(step)) < 0.5:
            k = int(np.argmin(np.abs(step)))
            raise BranchCollisionError(
                f"branch {b} jumps between samples {k} and {k + 1} (overlap {abs(step[k]):.3f}); refine the grid"
            )
        alpha = np.concatenate([[0.0], -np.cumsum(np.angle(step))])
        gauge = np.exp(1j * alpha)
        psi = psi * gauge[:, None]
        phi = phi * gauge[:, None]  # keeps <phi|psi> = 1
        cyclic = False
        ret = float(abs(np.vdot(psi[0], psi[-1])))
        if closed and sel[-1] == sel[0] and ret > RETURN_OVERLAP:
            gamma = np.angle(np.vdot(psi[0], psi[-1]))
            twist = np.exp(-1j * gamma * (times - times[0]) / (times[-1] - times[0]))
            psi = psi * twist[:, None]
            phi = phi * twist[:, None]
            psi[-1] = psi[0]
            phi[-1] = phi[0]
            omega = omega.copy()
            omega[-1] = omega[0]
            cyclic = True
        branches.append(EigenbranchPath(b, times, omega, psi, phi, cyclic, ret))
    return branches
