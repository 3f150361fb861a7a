"""Complex geometric phase of cyclic (and open) biorthogonal eigenbranches.

The central quantity is

    phi_GW = i * oint <phi|d psi> / <phi|psi>

whose real part is a geometric phase and whose imaginary part is a geometric
(log) decay factor: the surviving amplitude carries ``exp(i phi_GW)``.  The
functions below evaluate it several independent ways (naive line integral,
gauge-invariant symmetric line integral, surface integral of the two-form,
Hermitian AA limit) so that they can check each other.
"""

from dataclasses import dataclass

import numpy as np

from .biortho import EP_FLOOR, HamiltonianLoop, decompose_batch, track_branches
from .errors import ContractViolation, ExceptionalPointError
from .numerics import TimeGrid

__all__ = [
    "GWPhase",
    "ParameterSurface",
    "wrap_angle",
    "phase_difference",
    "aa_phase",
    "phase_naive",
    "phase_line_integral",
    "im_phase_open_path",
    "two_form",
    "phase_surface_integral",
    "nonabelian_holonomy",
    "holonomy_operator",
]


def wrap_angle(x):
    """Map real angles into (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y == -np.pi, np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def phase_difference(a, b):
    """|a - b| for complex phases with the real parts compared modulo 2 pi."""
    return float(abs(complex(wrap_angle((a - b).real), (a - b).imag)))


@dataclass(frozen=True)
class GWPhase:
    """A complex geometric phase.

    ``value`` keeps the real part as accumulated along the path;
    ``principal`` folds it into (-pi, pi] and ``real_part_branch`` counts the
    2 pi turns removed.  ``exp(-2 * value.imag)`` is the geometric factor on
    the survival probability.
    """

    value: complex
    real_part_branch: int = 0
    max_integrand: float = 0.0
    n_samples: int = 0

    @classmethod
    def from_value(cls, value, max_integrand=0.0, n_samples=0):
        value = complex(value)
        if not np.isfinite(value):
            raise ContractViolation(f"non-finite geometric phase {value!r}")
        p = wrap_angle(value.real)
        branch = int(round((value.real - p) / (2 * np.pi)))
        return cls(value, branch, float(max_integrand), int(n_samples))

    @property
    def principal(self):
        return complex(self.value.real - 2 * np.pi * self.real_part_branch, self.value.imag)

    @property
    def phase(self):
        return self.value.real

    @property
    def decay_exponent(self):
        return self.value.imag

    @property
    def survival_factor(self):
        """Geometric factor multiplying the no-decay probability."""
        return float(np.exp(-2.0 * self.value.imag))


def _inner(a, b):
    return np.einsum("...k,...k->...", a.conj(), b)


def _check_branch_overlaps(branch):
    ovl = _inner(branch.phi, branch.psi)
    norm = np.linalg.norm(branch.phi, axis=1) * np.linalg.norm(branch.psi, axis=1)
    worst = float(np.min(np.abs(ovl) / norm))
    if worst < EP_FLOOR:
        raise ExceptionalPointError(f"branch overlap {worst:.3e} below floor", overlap=worst)
    return ovl


def _step(times):
    h = np.diff(times)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ContractViolation("branch samples must be uniformly spaced")
    return float(h[0])


def _derivative(arr, h, cyclic):
    if cyclic:
        core = arr[:-1]
        d = (np.roll(core, -1, axis=0) - np.roll(core, 1, axis=0)) / (2 * h)
        return np.concatenate([d, d[:1]], axis=0)
    return np.gradient(arr, h, axis=0, edge_order=2)


def _integrate(f, h, cyclic):
    if cyclic:
        return h * f[:-1].sum()
    return h * (f.sum() - 0.5 * (f[0] + f[-1]))


def aa_phase(branch, loop=None, atol=1e-8):
    """Aharonov-Anandan phase ``-i ln<psi(0)|psi(T)> + i int <psi|d psi> dt``.

    Only defined for Hermitian loops; pass `loop` to have that checked
    directly, otherwise the branch's left and right vectors must coincide up
    to scale.
    """
    if loop is not None:
        dev = np.max(np.abs(loop.H - np.conj(np.swapaxes(loop.H, 1, 2))))
        if dev > atol * max(1.0, np.abs(loop.H).max()):
            raise ContractViolation(f"aa_phase needs a Hermitian loop (deviation {dev:.2e})")
    else:
        u = branch.psi / np.linalg.norm(branch.psi, axis=1)[:, None]
        v = branch.phi / np.linalg.norm(branch.phi, axis=1)[:, None]
        if np.min(np.abs(_inner(v, u))) < 1 - 1e-8:
            raise ContractViolation("aa_phase needs coinciding left and right states")
    branch.require_cyclic()
    psi = branch.psi / np.linalg.norm(branch.psi, axis=1)[:, None]
    h = _step(branch.times)
    integrand = _inner(psi, _derivative(psi, h, True))
    value = -1j * np.log(np.vdot(psi[0], psi[-1])) + 1j * _integrate(integrand, h, True)
    return GWPhase.from_value(value, np.abs(integrand).max(), branch.n_samples)


def phase_naive(branch):
    """``i oint <phi|d psi>/<phi|psi>`` by central differences and trapezoid.

    Gauge dependent: only meaningful when the vectors are single valued
    around the loop (open branches use one-sided end differences).
    """
    ovl = _check_branch_overlaps(branch)
    h = _step(branch.times)
    cyclic = branch.cyclic
    integrand = _inner(branch.phi, _derivative(branch.psi, h, cyclic)) / ovl
    value = 1j * _integrate(integrand, h, cyclic)
    return GWPhase.from_value(value, np.abs(integrand).max(), branch.n_samples)


def _symmetric_accumulation(branch):
    """Discrete form of the symmetric, gauge-invariant line integral.

    Each step contributes ``ln(<phi_k|psi_k+1> / <phi_k+1|psi_k>)``; summed
    steps telescope exactly under ``psi -> lambda psi, phi -> eta phi``.
    Returns ``(step_sum, log_term, max_integrand)``.
    """
    _check_branch_overlaps(branch)
    psi, phi = branch.psi, branch.phi
    fwd = _inner(phi[:-1], psi[1:])
    bwd = _inner(phi[1:], psi[:-1])
    steps = np.log(fwd / bwd)
    h = np.diff(branch.times)
    ratio = (
        np.vdot(psi[0], psi[-1]) * np.vdot(phi[0], phi[0])
        / (np.vdot(psi[0], psi[0]) * np.vdot(phi[-1], phi[0]))
    )
    return steps.sum(), np.log(ratio), float(np.abs(steps / h).max())


def phase_line_integral(branch):
    """Gauge-invariant complex geometric phase of a cyclic branch.

        phi = -(i/2) ln[<psi0|psiT> / <phiT|phi0>] + (i/2) oint (<phi|dpsi> - <dphi|psi>)/<phi|psi>

    with the t = 0 states normalized inside the log.  The integral is
    accumulated step by step so its real part is unwrapped; the log uses the
    principal branch.
    """
    branch.require_cyclic()
    total, log_term, peak = _symmetric_accumulation(branch)
    value = 0.5j * (total - log_term)
    return GWPhase.from_value(value, peak, branch.n_samples)


def im_phase_open_path(branch):
    """Imaginary part of the symmetric line integral on an open branch.

    Unlike the real part this is meaningful without closing the path; it is
    unchanged by reparametrization and by independent rescaling of the left
    and right vectors.
    """
    total, log_term, _ = _symmetric_accumulation(branch)
    return float(0.5 * (total.real - log_term.real))


@dataclass
class ParameterSurface:
    """A chart ``(u, v) in [0, 1]^2 -> H`` bounding a loop.

    The loop is the ``v = 1`` edge traversed with increasing ``u``.  The other
    three edges must not contribute: the chart is periodic in ``u`` and the
    ``v = 0`` edge collapses to a single Hamiltonian.  `chart` takes broadcast
    arrays ``u, v`` and returns ``(..., d, d)``.
    """

    chart: object
    n_u: int = 101
    n_v: int = 101
    fd_step: float = 1e-4

    def evaluate(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        H = np.asarray(self.chart(u, v), dtype=complex)
        return H.reshape(u.shape + H.shape[-2:])

    def boundary_loop(self, n_samples=None):
        n = n_samples or self.n_u
        grid = TimeGrid(0.0, 1.0, n)
        u = grid.samples
        return HamiltonianLoop(grid, self.evaluate(u, np.ones_like(u)))


def _stencil(x, h):
    """Offsets and weights for a 3-point first derivative inside [0, 1]."""
    x = np.asarray(x, dtype=float)
    off = np.empty((3,) + x.shape)
    coef = np.empty((3,) + x.shape)
    lo = x - h < 0.0
    hi = x + h > 1.0
    mid = ~(lo | hi)
    off[:, mid] = np.array([-h, 0.0, h])[:, None]
    coef[:, mid] = np.array([-0.5, 0.0, 0.5])[:, None] / h
    off[:, lo] = np.array([0.0, h, 2 * h])[:, None]
    coef[:, lo] = np.array([-1.5, 2.0, -0.5])[:, None] / h
    off[:, hi] = np.array([-2 * h, -h, 0.0])[:, None]
    coef[:, hi] = np.array([0.5, -2.0, 1.5])[:, None] / h
    return off, coef


def _branch_states(surface, U, V, omega_ref, psi_ref):
    """Eigenpair nearest `omega_ref`, right vector phase-aligned to `psi_ref`."""
    H = surface.evaluate(U, V)
    shape = U.shape
    d = H.shape[-1]
    w, R, L = decompose_batch(H.reshape(-1, d, d))
    sel = np.argmin(np.abs(w - omega_ref.reshape(-1)[:, None]), axis=1)
    rows = np.arange(w.shape[0])
    psi = R[rows, :, sel]
    phi = L[rows, :, sel]
    if psi_ref is not None:
        ov = _inner(psi_ref.reshape(-1, d), psi)
        g = np.conj(ov) / np.abs(ov)
        psi = psi * g[:, None]
        phi = phi * g[:, None]  # left kets keep <phi|psi> = 1
    return w[rows, sel].reshape(shape), psi.reshape(shape + (d,)), phi.reshape(shape + (d,))


def _two_form_grid(surface, index, U, V):
    U, V = np.broadcast_arrays(np.asarray(U, dtype=float), np.asarray(V, dtype=float))
    H = surface.evaluate(U, V)
    d = H.shape[-1]
    w, R, L = decompose_batch(H.reshape(-1, d, d))
    omega_c = w[:, index].reshape(U.shape)
    psi_c = R[:, :, index].reshape(U.shape + (d,))
    phi_c = L[:, :, index].reshape(U.shape + (d,))
    h = surface.fd_step
    derivs = {}
    for name, X in (("u", U), ("v", V)):
        off, coef = _stencil(X, h)
        dpsi = np.zeros_like(psi_c)
        dphi = np.zeros_like(phi_c)
        for j in range(3):
            if name == "u":
                _, p, f = _branch_states(surface, U + off[j], V, omega_c, psi_c)
            else:
                _, p, f = _branch_states(surface, U, V + off[j], omega_c, psi_c)
            dpsi += coef[j][..., None] * p
            dphi += coef[j][..., None] * f
        derivs[name] = (dpsi, dphi)
    du_psi, du_phi = derivs["u"]
    dv_psi, dv_phi = derivs["v"]
    # <phi|psi> = 1 at the centre
    B = (
        _inner(dv_phi, du_psi) - _inner(dv_phi, psi_c) * _inner(phi_c, du_psi)
        - _inner(du_phi, dv_psi) + _inner(du_phi, psi_c) * _inner(phi_c, dv_psi)
    )
    return B


def two_form(surface, index, u, v):
    """Antisymmetric coefficient ``B_uv`` of the complex two-form at (u, v).

        B_ab = <d_b phi|d_a psi>/<phi|psi> - <d_b phi|psi><phi|d_a psi>/<phi|psi>^2 - (a <-> b)

    with a = u, b = v, evaluated by finite differences of step
    ``surface.fd_step`` on states gauge-aligned to the centre.
    """
    return complex(_two_form_grid(surface, index, np.array(u, dtype=float), np.array(v, dtype=float)))


def phase_surface_integral(surface, index):
    """``i * int int B_uv du dv`` by the 2-D trapezoid rule.

    With the boundary orientation of `ParameterSurface` this equals the line
    integral around the ``v = 1`` edge, up to 2 pi in the real part.
    """
    u = np.linspace(0.0, 1.0, surface.n_u)
    v = np.linspace(0.0, 1.0, surface.n_v)
    U, V = np.meshgrid(u, v, indexing="ij")
    B = _two_form_grid(surface, index, U, V)
    wu = np.full(surface.n_u, 1.0 / (surface.n_u - 1))
    wu[[0, -1]] *= 0.5
    wv = np.full(surface.n_v, 1.0 / (surface.n_v - 1))
    wv[[0, -1]] *= 0.5
    value = 1j * np.sum(B * wu[:, None] * wv[None, :])
    return GWPhase.from_value(value, np.abs(B).max(), B.size)


def _frames(branches):
    U = np.stack([b.psi for b in branches], axis=2)  # (n, d, d), columns psi_i
    Phi = np.stack([b.phi for b in branches], axis=2)
    ovl = np.einsum("nki,nki->ni", Phi.conj(), U)
    if np.min(np.abs(ovl) / (np.linalg.norm(Phi, axis=1) * np.linalg.norm(U, axis=1))) < EP_FLOOR:
        raise ExceptionalPointError("frame overlap below floor")
    Uinv = np.swapaxes(Phi.conj(), 1, 2) / ovl[:, :, None]  # rows <phi_j| / <phi_j|psi_j>
    return U, Uinv


def nonabelian_holonomy(loop, branches=None):
    """Time-ordered ``T exp(i int A dt)`` for the sudden (common eigenvalue) limit.

    ``A_ij = i <phi_i|d psi_j> / <phi_i|psi_i>`` acts on the amplitudes in the
    instantaneous eigenframe ``U = [psi_1 ... psi_d]``.  The ordered
    exponential is discretized as the product of link matrices
    ``U(t_k+1)^-1 U(t_k)``, which agrees with it to second order in the step
    and transforms exactly as ``g(T)^-1 W g(0)`` under a frame change
    ``U -> U g``.  The dynamical factor is excluded; see `holonomy_operator`
    for the lab-frame operator.
    """
    if branches is None:
        branches = track_branches(loop)
    U, Uinv = _frames(branches)
    d = U.shape[2]
    links = Uinv[1:] @ U[:-1]
    W = np.eye(d, dtype=complex)
    for M in links:
        W = M @ W
    return W


def holonomy_operator(W, branches):
    """Lab-frame operator ``U(T) W U(0)^-1`` for a holonomy from `nonabelian_holonomy`."""
    U, Uinv = _frames(branches)
    return U[-1] @ W @ Uinv[0]
