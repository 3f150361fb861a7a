"""Exact evolution under ``i d/dt psi = H(t) psi`` and adiabatic checks."""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .biortho import track_branches
from .errors import ContractViolation
from .geomphase import holonomy_operator, nonabelian_holonomy, phase_line_integral, wrap_angle
from .numerics import TimeGrid, integrate_ode

__all__ = [
    "ADIABATIC_RATIO",
    "EvolutionResult",
    "AdiabaticityReport",
    "SweepPoint",
    "evolve",
    "evolve_operator",
    "adiabaticity_diagnostic",
    "adiabatic_sweep",
    "sudden_propagator_check",
    "max_workers",
]

# gap / drive-frequency ratio at which a loop is reported as adiabatic
ADIABATIC_RATIO = 10.0


def max_workers():
    env = os.environ.get("GWPHASE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class EvolutionResult:
    final_state: np.ndarray
    survival_amplitude: complex
    dynamical_phase: complex
    extracted_geometric: complex
    predicted_geometric: complex

    @property
    def error(self):
        diff = self.extracted_geometric - self.predicted_geometric
        return float(abs(complex(wrap_angle(diff.real), diff.imag)))


@dataclass
class AdiabaticityReport:
    min_gap: float
    gap_time: float
    drive_frequency: float
    ratio: float

    @property
    def adiabatic(self):
        return self.ratio >= ADIABATIC_RATIO


@dataclass
class SweepPoint:
    T: float
    error: float
    ratio: float
    adiabatic: bool
    extracted: complex
    predicted: complex


def _step_hamiltonians(loop, steps):
    grid = TimeGrid(loop.grid.t0, loop.grid.t1, steps + 1)
    t = grid.samples
    h = grid.dt
    H_nodes = loop.interpolate(t)
    H_mid = loop.interpolate(t[:-1] + 0.5 * h)
    return grid, H_nodes, H_mid


def _propagate(loop, y0, steps):
    """RK4 on the linearly interpolated loop; `y0` may be a vector or matrix."""
    if steps < loop.grid.n_samples - 1:
        raise ContractViolation("steps must be at least the number of loop intervals")
    grid, H_nodes, H_mid = _step_hamiltonians(loop, steps)
    t0, h = grid.t0, grid.dt

    def rhs(t, y):
        x = (t - t0) / h
        k = int(round(x))
        if abs(x - k) < 1e-6:
            H = H_nodes[k]
        else:
            H = H_mid[int(math.floor(x))]
        return -1j * (H @ y)

    return integrate_ode(rhs, y0, grid)


def evolve(loop, branch_index, steps, branches=None):
    """Evolve the eigenstate ``psi_i(0)`` around `loop` and extract its phase.

    ``extracted_geometric = -i ln(c) + int omega_i dt`` where ``c`` is the
    biorthogonal survival amplitude, ``c ~ exp(-i int omega) exp(i phi_GW)``.
    Its real part is moved onto the sheet of the adiabatic prediction.
    """
    if branches is None:
        branches = track_branches(loop)
    branch = branches[branch_index]
    psi0, phi0 = branch.psi[0], branch.phi[0]
    final = _propagate(loop, psi0, steps)
    c = np.vdot(phi0, final) / np.vdot(phi0, psi0)
    h = loop.grid.dt
    om = branch.omega
    dyn = complex(h * (om.sum() - 0.5 * (om[0] + om[-1])))
    extracted = -1j * np.log(c) + dyn
    predicted = phase_line_integral(branch).value
    shift = 2 * np.pi * round((predicted.real - extracted.real) / (2 * np.pi))
    extracted = complex(extracted.real + shift, extracted.imag)
    return EvolutionResult(final, complex(c), dyn, extracted, predicted)


def evolve_operator(loop, steps):
    """Full propagator ``U(T)`` over one traversal of `loop`."""
    return _propagate(loop, np.eye(loop.dim, dtype=complex), steps)


def adiabaticity_diagnostic(loop, branches=None):
    """Smallest ``|Re(omega_i - omega_j)|`` along the loop against ``2 pi / T``."""
    if branches is None:
        branches = track_branches(loop)
    drive = 2 * np.pi / loop.period
    omegas = np.stack([b.omega for b in branches], axis=1)
    d = omegas.shape[1]
    if d < 2:
        return AdiabaticityReport(np.inf, float(loop.times[0]), drive, np.inf)
    gaps = np.abs(omegas.real[:, :, None] - omegas.real[:, None, :])
    gaps[:, np.arange(d), np.arange(d)] = np.inf
    per_t = gaps.min(axis=(1, 2))
    k = int(np.argmin(per_t))
    gap = float(per_t[k])
    return AdiabaticityReport(gap, float(loop.times[k]), drive, gap / drive)


def adiabatic_sweep(loop_factory, durations, branch_index, steps_per_unit_time=50.0,
                    min_steps=None, workers=None):
    """Evolution error against the geometric prediction for each duration.

    `loop_factory(T)` must build the same loop shape traversed in time T.
    Points are computed independently and returned in the order of
    `durations`.
    """

    def point(T):
        loop = loop_factory(T)
        branches = track_branches(loop)
        report = adiabaticity_diagnostic(loop, branches)
        steps = max(int(math.ceil(T * steps_per_unit_time)), loop.grid.n_samples - 1, min_steps or 0)
        res = evolve(loop, branch_index, steps, branches)
        return SweepPoint(float(T), res.error, report.ratio, report.adiabatic,
                          res.extracted_geometric, res.predicted_geometric)

    workers = workers or max_workers()
    if workers == 1 or len(durations) == 1:
        return [point(T) for T in durations]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(point, durations))


def sudden_propagator_check(loop, omega, steps, branches=None):
    """``|| U_exact(T) exp(i omega T) - U(T) W U(0)^-1 ||_2``.

    `W` is the eigenframe holonomy of `nonabelian_holonomy`; the deviation
    vanishes as the cycle time shrinks against the inverse level splitting.
    """
    if branches is None:
        branches = track_branches(loop)
    exact = evolve_operator(loop, steps) * np.exp(1j * omega * loop.period)
    W = nonabelian_holonomy(loop, branches)
    return float(np.linalg.norm(exact - holonomy_operator(W, branches), 2))
