"""Dense complex linear algebra, fixed-step ODE integration and quadrature.

Everything here operates on plain numpy arrays.  Matrices are ``(d, d)``
complex arrays, vectors are ``(d,)`` complex arrays.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, ContractViolation, SolverFailure

__all__ = [
    "TimeGrid",
    "as_matrix",
    "eig_dense",
    "eig2_batch",
    "integrate_ode",
    "quadrature",
]

MAX_DIM = 1024


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t0 = s_0 < s_1 < ... < s_{n-1} = t1``."""

    t0: float
    t1: float
    n_samples: int

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ContractViolation("TimeGrid needs n_samples >= 2")
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)) or self.t1 <= self.t0:
            raise ContractViolation("TimeGrid needs finite t0 < t1")

    @property
    def samples(self):
        s = np.linspace(self.t0, self.t1, self.n_samples)
        s[0], s[-1] = self.t0, self.t1
        return s

    @property
    def dt(self):
        return (self.t1 - self.t0) / (self.n_samples - 1)

    @property
    def duration(self):
        return self.t1 - self.t0


def as_matrix(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ContractViolation(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ContractViolation("matrix has non-finite entries")
    return M


def _sort_key(lam):
    return (lam.real, lam.imag)


def _eig_closed_form(M):
    d = M.shape[0]
    if d == 1:
        return np.array([M[0, 0]]), np.ones((1, 1), dtype=complex)
    w, V = eig2_batch(M[None])
    return w[0], V[0]


def eig2_batch(H):
    """Closed-form eigenpairs for a stack of 2x2 matrices.

    Parameters
    ----------
    H : (n, 2, 2) complex array

    Returns
    -------
    w : (n, 2) eigenvalues, ``w[:, 0] = m - s`` and ``w[:, 1] = m + s`` with
        ``s`` the principal square root of the discriminant (not sorted).
    V : (n, 2, 2) unit right eigenvectors as columns.
    """
    H = np.asarray(H, dtype=complex)
    a, b, c, d = H[:, 0, 0], H[:, 0, 1], H[:, 1, 0], H[:, 1, 1]
    m = 0.5 * (a + d)
    s = np.sqrt((0.5 * (a - d)) ** 2 + b * c)
    w = np.stack([m - s, m + s], axis=1)
    V = np.empty(H.shape, dtype=complex)
    scale = np.maximum(np.abs(H).max(axis=(1, 2)), np.finfo(float).tiny)
    for k in range(2):
        lam = w[:, k]
        v1 = np.stack([b, lam - a], axis=1)
        v2 = np.stack([lam - d, c], axis=1)
        n1 = np.linalg.norm(v1, axis=1)
        n2 = np.linalg.norm(v2, axis=1)
        v = np.where((n1 >= n2)[:, None], v1, v2)
        nv = np.maximum(n1, n2)
        # scalar multiple of identity: any vector works, use the basis
        flat = nv <= 1e-14 * scale
        basis = np.zeros(2, dtype=complex)
        basis[k] = 1.0
        v[flat] = basis
        nv = np.where(flat, 1.0, nv)
        V[:, :, k] = v / nv[:, None]
    return w, V


def eig_dense(M, tol=1e-10):
    """Eigenvalues and unit right eigenvectors of a dense complex matrix.

    Returns a list of ``(eigenvalue, vector)`` sorted by (Re, Im).  Each pair
    satisfies ``|M v - lam v| <= tol * |M|``; otherwise `SolverFailure`.
    Dimension <= 2 uses the characteristic roots directly, larger matrices go
    through LAPACK (``numpy.linalg.eig``).
    """
    M = as_matrix(M)
    d = M.shape[0]
    if d > MAX_DIM:
        raise ContractViolation(f"dim {d} exceeds {MAX_DIM}")
    norm = max(np.linalg.norm(M, 2), np.finfo(float).tiny)

    def residuals(w, V):
        return np.linalg.norm(M @ V - V * w[None, :], axis=0) / norm

    w = V = None
    if d <= 2:
        w, V = _eig_closed_form(M)
        if np.max(residuals(w, V)) > tol:
            w = None
    if w is None:
        try:
            w, V = np.linalg.eig(M)
        except np.linalg.LinAlgError as exc:
            raise SolverFailure(f"eigensolver did not converge: {exc}") from exc
        V = V / np.linalg.norm(V, axis=0)[None, :]
    res = residuals(w, V)
    # balancing can spoil single vectors of badly scaled matrices; recompute
    # those as the null vector of M - lam I
    for i in np.flatnonzero(~(res <= tol)):
        if np.isfinite(w[i]):
            V[:, i] = np.linalg.svd(M - w[i] * np.eye(d))[2][-1].conj()
    res = residuals(w, V)
    if not np.all(np.isfinite(res)) or np.max(res) > tol:
        raise SolverFailure(
            f"eigenpair residual {np.max(res):.3e} exceeds tol {tol:.1e}",
            residual=float(np.max(res)),
        )
    order = sorted(range(d), key=lambda i: _sort_key(w[i]))
    return [(complex(w[i]), V[:, i].copy()) for i in order]


def integrate_ode(rhs, y0, grid):
    """Classic RK4 over the uniform `grid`; returns the state at ``grid.t1``.

    ``rhs(t, y)`` must return an array shaped like ``y``.
    """
    y = np.array(y0, dtype=complex)
    h = grid.dt
    t = grid.t0
    for k in range(grid.n_samples - 1):
        t = grid.t0 + k * h
        # overflow is reported below as BlowUpError
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise BlowUpError(f"non-finite state at t={t + h!r}", time=t + h)
    return y


def quadrature(samples, grid):
    """Trapezoid rule for `samples` taken on `grid`."""
    f = np.asarray(samples, dtype=complex)
    if f.ndim != 1 or f.shape[0] != grid.n_samples:
        raise ContractViolation(
            f"{f.shape[0] if f.ndim == 1 else f.shape} samples for a grid of {grid.n_samples}"
        )
    return complex(grid.dt * (f.sum() - 0.5 * (f[0] + f[-1])))
