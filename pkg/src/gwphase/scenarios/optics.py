"""Jones-calculus model of light crossing absorbing, birefringent slabs.

A slab is a 2x2 generator ``N`` (per unit length) with transfer matrix
``exp(-i N L)``.  Absorbing dichroic media make ``N`` non-normal, so the two
eigenpolarizations are no longer orthogonal and a circuit of them carries a
complex geometric phase.

The crystal-sequence comparison follows the eigenpolarization circuit of the
beam.  The vacuum vertex is the input polarization; each slab contributes its
least-attenuated eigenpolarization (right and left vectors).  Every interface
``a -> b`` contributes ``ln(<phi_a|psi_b> / <phi_b|psi_a>)``, which is
antisymmetric under reversal, so a slab entered from and left to vacuum
(``vac -> A -> vac``) retraces its edge and cancels exactly.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ..biortho import EP_FLOOR, HamiltonianLoop, biorthogonal_decompose
from ..errors import ContractViolation, NonCyclicError
from ..geomphase import GWPhase
from ..numerics import TimeGrid

__all__ = [
    "JonesSegment",
    "vacuum",
    "rotation",
    "linear_dichroic",
    "rotated",
    "propagate_sequence",
    "tracked_mode",
    "circuit_phase",
    "sequence_circuit_phase",
    "sequence_phase_extract",
    "helical_fiber_loop",
    "three_vertex_phase",
    "elliptic_generator",
    "helix_exact_phase",
]


@dataclass(frozen=True)
class JonesSegment:
    generator: np.ndarray = field(repr=False)
    length: float = 1.0
    label: str = ""

    def __post_init__(self):
        N = np.asarray(self.generator, dtype=complex)
        if N.shape != (2, 2) or not np.all(np.isfinite(N)):
            raise ContractViolation("Jones generator must be a finite 2x2 matrix")
        if not (np.isfinite(self.length) and self.length >= 0):
            raise ContractViolation("segment length must be finite and non-negative")
        object.__setattr__(self, "generator", N)

    @property
    def is_vacuum(self):
        return not np.any(self.generator)

    def transfer(self):
        return expm(-1j * self.generator * self.length)


def vacuum(length=1.0):
    return JonesSegment(np.zeros((2, 2), dtype=complex), length, "vac")


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def linear_dichroic(kappa, length=1.0, angle=0.0, label="A", activity=0.0):
    """Absorbs the polarization at ``angle + 90 deg`` with rate ``kappa``.

    A nonzero optical `activity` adds ``activity * sy``; the generator is then
    non-normal and its eigenpolarizations are no longer orthogonal.
    """
    N = np.diag([0.0, -1j * kappa]).astype(complex)
    R = rotation(angle)
    N = R @ N @ R.T + activity * np.array([[0, -1j], [1j, 0]])
    return JonesSegment(N, length, label)


def rotated(segment, angle, label=None):
    R = rotation(angle)
    return JonesSegment(R @ segment.generator @ R.T, segment.length,
                        segment.label if label is None else label)


def propagate_sequence(segments, polarization):
    """Output Jones vector after the segments in order."""
    out = np.asarray(polarization, dtype=complex)
    if out.shape != (2,):
        raise ContractViolation("polarization must be a 2-vector")
    for seg in segments:
        out = seg.transfer() @ out
    return out


def tracked_mode(segment):
    """Least-attenuated eigenmode ``(omega, psi, phi)`` with ``<phi|psi> = 1``."""
    sysm = biorthogonal_decompose(segment.generator)
    i = int(np.argmax(sysm.eigenvalues.imag))
    psi = sysm.right[:, i]
    phi = sysm.left[:, i] / np.conj(sysm.overlaps[i])
    return complex(sysm.eigenvalues[i]), psi, phi


def _vertices(segments, polarization):
    eps = np.asarray(polarization, dtype=complex)
    eps = eps / np.linalg.norm(eps)
    verts = [(eps, eps, "in")]
    dyn = 0j
    for seg in segments:
        if seg.is_vacuum:
            v = (eps, eps, seg.label or "vac")
        else:
            omega, psi, phi = tracked_mode(seg)
            dyn += omega * seg.length
            v = (psi, phi, seg.label)
        prev = verts[-1]
        if np.array_equal(prev[0], v[0]) and np.array_equal(prev[1], v[1]):
            continue
        verts.append(v)
    if not (np.array_equal(verts[-1][0], eps) and np.array_equal(verts[-1][1], eps)):
        verts.append((eps, eps, "out"))
    return verts, dyn


def circuit_phase(vertices):
    """``(i/2) sum_edges ln(<phi_a|psi_b> / <phi_b|psi_a>)`` around a closed circuit.

    `vertices` is a list of ``(psi, phi, label)``; the last vertex must equal
    the first.  Returns ``(phase, overlaps)``.
    """
    total = 0j
    overlaps = []
    for (pa, fa, la), (pb, fb, lb) in zip(vertices[:-1], vertices[1:]):
        fwd = np.vdot(fa, pb)
        bwd = np.vdot(fb, pa)
        for val, (f, p) in ((fwd, (fa, pb)), (bwd, (fb, pa))):
            norm = abs(val) / (np.linalg.norm(f) * np.linalg.norm(p))
            overlaps.append((la, lb, float(norm)))
        if min(o[2] for o in overlaps[-2:]) < EP_FLOOR:
            raise NonCyclicError(
                f"polarization circuit breaks at interface {la!r} -> {lb!r}", overlaps=overlaps
            )
        # separate logs: a retraced edge then cancels exactly, on any branch
        total += np.log(fwd) - np.log(bwd)
    return 0.5j * total, overlaps


def sequence_circuit_phase(segments, polarization):
    """Circuit phase of a single sequence, starting and ending on the input."""
    verts, _ = _vertices(segments, polarization)
    return circuit_phase(verts)[0]


def _check_matched_dwell(entangled, reference):
    media_e = [(s.generator, s.length) for s in entangled if not s.is_vacuum]
    media_r = [(s.generator, s.length) for s in reference if not s.is_vacuum]
    same = len(media_e) == len(media_r) and all(
        np.allclose(Ne, Nr, rtol=0, atol=1e-14) and abs(Le - Lr) <= 1e-14 * max(1.0, Le)
        for (Ne, Le), (Nr, Lr) in zip(media_e, media_r)
    )
    if not same:
        raise ContractViolation("both sequences must contain the same media with equal lengths")


def sequence_phase_extract(entangled, reference, polarization):
    """Complex geometric phase separating two orderings of the same crystals.

    Each sequence is assigned the circuit amplitude
    ``exp(-i sum omega_k L_k) * exp(i phi_circuit)``; the result is
    ``-i ln`` of the ratio of the two amplitudes.  The dwell factors are
    identical for both orderings and cancel; a reference in which each
    crystal is bracketed by vacuum has ``phi_circuit = 0``.
    """
    _check_matched_dwell(entangled, reference)
    ve, dyn_e = _vertices(entangled, polarization)
    vr, dyn_r = _vertices(reference, polarization)
    phi_e, _ = circuit_phase(ve)
    phi_r, _ = circuit_phase(vr)
    # -i ln(amp_e / amp_r): dwell factors cancel, the real part is kept as accumulated
    value = phi_e - phi_r
    return GWPhase.from_value(value, 0.0, len(ve) + len(vr))


def helical_fiber_loop(rotation_rate, generator, length, samples=2001):
    """Generator ``R(a z) N R(-a z)`` along a fiber making one full turn.

    ``rotation_rate * length`` must be ``+-2 pi``.
    """
    if abs(abs(rotation_rate * length) - 2 * np.pi) > 1e-9 * 2 * np.pi:
        raise ContractViolation("the fiber must make exactly one full rotation over its length")
    N = np.asarray(generator, dtype=complex)
    grid = TimeGrid(0.0, float(length), samples)
    ang = rotation_rate * grid.samples
    c, s = np.cos(ang), np.sin(ang)
    R = np.empty((samples, 2, 2), dtype=complex)
    R[:, 0, 0], R[:, 0, 1], R[:, 1, 0], R[:, 1, 1] = c, -s, s, c
    H = R @ N @ np.swapaxes(R, 1, 2)
    H[-1] = H[0]
    return HamiltonianLoop(grid, H)


def three_vertex_phase(polarization, first, second):
    """Circuit phase of ``vac -> A -> B -> vac`` from mode projectors.

    ``(i/2) ln[tr(P_e P_A P_B) / tr(P_B P_A P_e)]`` with ``P = |psi><phi|``.
    """
    eps = np.asarray(polarization, dtype=complex)
    eps = eps / np.linalg.norm(eps)
    P = [np.outer(eps, eps.conj())]
    for seg in (first, second):
        _, psi, phi = tracked_mode(seg)
        P.append(np.outer(psi, phi.conj()))
    fwd = np.trace(P[0] @ P[1] @ P[2])
    bwd = np.trace(P[2] @ P[1] @ P[0])
    return complex(0.5j * (np.log(fwd) - np.log(bwd)))


def elliptic_generator(a, c):
    """``a sz + c sy``: linear retardance/dichroism ``a`` plus circular ``c``."""
    return np.array([[a, -1j * c], [1j * c, -a]], dtype=complex)


def helix_exact_phase(a, c, rotation_sign, branch):
    """Closed-form phase of `elliptic_generator(a, c)` along a one-turn helix.

    The frame rotation turns the generator twice about the ``sy`` axis, so
    each branch picks up twice the complex solid angle with
    ``cos T = c / sqrt(a^2 + c^2)``; branch 0 is the lower (by real part)
    eigenvalue.
    """
    r = np.sqrt(complex(a) ** 2 + complex(c) ** 2)
    if r.real < 0:
        r = -r
    if abs(r) == 0:
        raise ContractViolation("generator is degenerate")
    sign = np.sign(rotation_sign) * (1 if branch == 0 else -1)
    return complex(sign * 2 * np.pi * (1 - complex(c) / r))
