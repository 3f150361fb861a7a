"""Aharonov-Casher phase of a particle with a metastable internal moment.

A neutral particle with moment operator ``mu_z`` circles a line charge of
density ``rho``.  In the cylindrically symmetric gauge the vector potential
is ``a = (rho / 2 pi) grad(theta)``, so along any path

    int mu a . dr = mu rho (theta_2 - theta_1 + 2 pi n) / (2 pi)

where ``theta_2 - theta_1`` is the principal endpoint difference and ``n``
counts full turns.  The path-sum factor therefore splits into an endpoint
piece ``exp(i mu rho (theta_2 - theta_1) / 2 pi)`` and a topological piece
``exp(i mu rho n)``.  With a complex effective moment the topological piece
has magnitude ``exp(-Im(mu) rho n)``.
"""

from dataclasses import dataclass, field

import numpy as np

from ..biortho import biorthogonal_decompose
from ..errors import ContractViolation
from ..geomphase import GWPhase, wrap_angle
from ..numerics import as_matrix

__all__ = [
    "PlanarPath",
    "ACModel",
    "Winding",
    "TopologicalFactor",
    "NeglectedTerms",
    "effective_moment",
    "winding_number",
    "topological_factor",
    "ac_geometric_phase",
    "neglected_terms",
]

# vertices closer than this to the line charge are rejected
ORIGIN_FLOOR = 1e-12


@dataclass(frozen=True)
class PlanarPath:
    """Polygonal path in the plane, avoiding the origin.

    Every edge must turn by less than pi as seen from the origin, so no edge
    passes through it.  A closed path has an implicit edge from the last
    vertex back to the first.
    """

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    closed: bool = True

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ContractViolation("path needs matching 1-d coordinate arrays with >= 2 vertices")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ContractViolation("path has non-finite vertices")
        if np.min(np.hypot(x, y)) <= ORIGIN_FLOOR:
            raise ContractViolation("path touches the origin")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        inc = self.increments
        if np.any(np.abs(inc) >= np.pi):
            raise ContractViolation("an edge turns by pi or more around the origin")

    @classmethod
    def from_xy(cls, x, y, closed=True):
        return cls(x, y, closed)

    @classmethod
    def from_polar(cls, r, theta, closed=True):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        steps = np.diff(theta)
        if np.any(np.abs(steps) >= np.pi):
            raise ContractViolation("consecutive angular increments must lie in (-pi, pi)")
        return cls(r * np.cos(theta), r * np.sin(theta), closed)

    @property
    def radius(self):
        return np.hypot(self.x, self.y)

    @property
    def angle(self):
        return np.arctan2(self.y, self.x)

    @property
    def increments(self):
        th = self.angle
        if self.closed:
            th = np.append(th, th[0])
        return wrap_angle(np.diff(th))


@dataclass(frozen=True)
class ACModel:
    h_int: np.ndarray = field(repr=False)
    mu_z: np.ndarray = field(repr=False)
    rho: float = 1.0

    def __post_init__(self):
        h = as_matrix(self.h_int)
        mu = as_matrix(self.mu_z)
        if h.shape != mu.shape:
            raise ContractViolation("internal Hamiltonian and moment operator differ in shape")
        if not np.isfinite(self.rho):
            raise ContractViolation("line charge density must be finite")
        object.__setattr__(self, "h_int", h)
        object.__setattr__(self, "mu_z", mu)

    def decompose(self):
        return biorthogonal_decompose(self.h_int)


@dataclass(frozen=True)
class Winding:
    n: int
    net_angle: float
    endpoint_angle: float


@dataclass(frozen=True)
class TopologicalFactor:
    n: int
    endpoint: complex
    topological: complex

    @property
    def value(self):
        return self.endpoint * self.topological

    @property
    def log_magnitude(self):
        return float(np.log(abs(self.topological)))


@dataclass(frozen=True)
class NeglectedTerms:
    max_gauge_field: float
    quadratic: float
    interbranch: float


def effective_moment(model, branch):
    """``<phi_i|mu_z|psi_i> / <phi_i|psi_i>`` on internal branch `branch`.

    Branches are ordered by (Re, Im) of the internal eigenvalues.
    """
    sysm = model.decompose()
    if not 0 <= branch < sysm.eigenvalues.size:
        raise ContractViolation(f"branch {branch} out of range")
    psi = sysm.right[:, branch]
    phi = sysm.left[:, branch]
    return complex(np.vdot(phi, model.mu_z @ psi) / np.vdot(phi, psi))


def winding_number(path):
    """Full turns around the origin plus the accumulated angle.

    For a closed path ``n = round(sum(increments) / 2 pi)``; for an open path
    the accumulated angle is split as ``theta_2 - theta_1 + 2 pi n`` with the
    principal endpoint difference in (-pi, pi].
    """
    total = float(np.sum(path.increments))
    if path.closed:
        return Winding(int(round(total / (2 * np.pi))), total, 0.0)
    th = path.angle
    ends = float(wrap_angle(th[-1] - th[0]))
    n = int(round((total - ends) / (2 * np.pi)))
    return Winding(n, total, ends)


def topological_factor(mu, rho, path):
    """Endpoint and winding factors of the path sum, reported separately."""
    w = winding_number(path)
    mu = complex(mu)
    endpoint = np.exp(1j * mu * rho * w.endpoint_angle / (2 * np.pi))
    topo = np.exp(1j * mu * rho * w.n)
    return TopologicalFactor(w.n, complex(endpoint), complex(topo))


def ac_geometric_phase(model, path, branch):
    """Geometric part ``n mu_i rho`` of the closed-loop action on `branch`."""
    if not path.closed:
        raise ContractViolation("the AC phase needs a closed path")
    n = winding_number(path).n
    mu = effective_moment(model, branch)
    return GWPhase.from_value(n * mu * model.rho, 0.0, path.x.size)


def neglected_terms(model, path, branch, mass=1.0, momentum=1.0):
    """Size of the terms dropped from the single-branch path sum.

    ``quadratic`` is ``|mu_i a|^2 / 2m`` and ``interbranch`` is the largest
    ``|<phi_j|mu_z|psi_i>| a p / m`` over the other branches, both at the
    vertex closest to the line charge where ``|a| = rho / (2 pi r)``.
    """
    if mass <= 0:
        raise ContractViolation("mass must be positive")
    a = abs(model.rho) / (2 * np.pi * float(np.min(path.radius)))
    sysm = model.decompose()
    psi = sysm.right[:, branch]
    phi = sysm.left[:, branch]
    mu_i = np.vdot(phi, model.mu_z @ psi) / np.vdot(phi, psi)
    quad = abs(mu_i * a) ** 2 / (2 * mass)
    cross = 0.0
    for j in range(sysm.eigenvalues.size):
        if j == branch:
            continue
        pj, fj = sysm.right[:, j], sysm.left[:, j]
        mij = abs(np.vdot(fj, model.mu_z @ psi) / np.vdot(fj, pj))
        cross = max(cross, mij * a * abs(momentum) / mass)
    return NeglectedTerms(float(a), float(quad), float(cross))
