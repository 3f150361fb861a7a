import numpy as np
import pytest

from gwphase.biortho import track_branches
from gwphase.bornopp import (
    MAX_GRID,
    BOPotentials,
    FastFamily,
    bo_potentials,
    flux_equivalence,
    ring_spectrum,
)
from gwphase.errors import ContractViolation
from gwphase.geomphase import phase_difference, phase_line_integral
from gwphase.scenarios.cone import ComplexCone, cone_hamiltonian, cone_loop

THETA = 0.5 + 0.2j


def cone_family(theta=THETA, b=1.0, mass=1.0):
    return FastFamily(lambda Q: cone_hamiltonian(b, theta, Q), mass)


def coupled_channel_levels(h, mass, kmax=40, quad=256):
    """Full ring spectrum of ``P^2 / 2M + h(Q)`` in a plane-wave basis."""
    Q = 2 * np.pi * np.arange(quad) / quad
    H = h(Q)
    d = H.shape[1]
    coef = np.fft.fft(H, axis=0) / quad
    ks = np.arange(-kmax, kmax + 1)
    nk = ks.size
    big = np.zeros((nk * d, nk * d), dtype=complex)
    for i, k in enumerate(ks):
        for j, kp in enumerate(ks):
            big[i * d:(i + 1) * d, j * d:(j + 1) * d] = coef[(k - kp) % quad]
        big[i * d:(i + 1) * d, i * d:(i + 1) * d] += k * k / (2 * mass) * np.eye(d)
    return np.linalg.eigvals(big)


def test_family_validation():
    with pytest.raises(ContractViolation):
        FastFamily(lambda Q: cone_hamiltonian(1.0, 0.4, Q / 2))
    with pytest.raises(ContractViolation):
        cone_family(mass=0.0)
    with pytest.raises(ContractViolation):
        bo_potentials(cone_family(), 0, 4)
    with pytest.raises(ContractViolation):
        bo_potentials(cone_family(), 2, 64)


def test_q_independent_family_has_no_gauge_field():
    H0 = np.array([[1.0, 0.2], [0.1, -1.0 - 0.3j]])
    fam = FastFamily(lambda Q: np.broadcast_to(H0, (np.size(Q), 2, 2)), 2.0, V=lambda Q: 0.1 * np.cos(Q))
    pot = bo_potentials(fam, 1, 64)
    lam = np.sort_complex(np.linalg.eigvals(H0))[1]
    assert np.abs(pot.A).max() < 1e-12
    assert np.allclose(pot.scalar, 0.1 * np.cos(pot.Q) + lam, atol=1e-12)


def test_hermitian_family_gives_real_vector_potential():
    pot = bo_potentials(cone_family(theta=0.7), 1, 64)
    assert np.abs(pot.A.imag).max() < 1e-10
    assert np.abs(pot.scalar.imag).max() < 1e-10


@pytest.mark.parametrize("branch", [0, 1])
def test_vector_potential_loop_equals_geometric_phase(branch):
    pot = bo_potentials(cone_family(), branch, 64)
    exact = (-1) ** (branch + 1) * ComplexCone(1.0, THETA).exact_phase
    assert phase_difference(pot.loop_integral(), exact) < 1e-10
    line = phase_line_integral(track_branches(cone_loop(ComplexCone(1.0, THETA), 4001))[branch]).value
    assert phase_difference(pot.loop_integral(), line) < 1e-6


def _flat(n, A=0.0, scalar=0.0, mass=1.0):
    Q = 2 * np.pi * np.arange(n) / n
    one = np.ones(n, dtype=complex)
    return BOPotentials(Q, A * one, scalar * one, 0 * one, mass)


def test_free_ring_spectrum():
    n, M = 128, 2.0
    h = 2 * np.pi / n
    levels = np.sort(ring_spectrum(_flat(n, mass=M), M, n).real)
    k = np.arange(-n // 2 + 1, n // 2 + 1)
    assert np.allclose(levels, np.sort((1 - np.cos(k * h)) / (M * h * h)), atol=1e-9)
    assert np.allclose(levels[:5], np.sort(k**2 / (2 * M))[:5], rtol=1e-3, atol=1e-12)


def test_constant_vector_potential_shifts_momentum():
    n, M, c = 256, 1.0, 0.3
    levels = np.sort(ring_spectrum(_flat(n, A=c, mass=M), M, n).real)[:4]
    k = np.arange(-3, 4)
    assert np.allclose(levels, np.sort((k - c) ** 2 / (2 * M))[:4], rtol=1e-3)


def test_imaginary_scalar_shifts_every_level():
    n = 64
    plain = ring_spectrum(_flat(n), 1.0, n)
    lossy = ring_spectrum(_flat(n, scalar=-0.2j), 1.0, n)
    assert np.allclose(np.sort_complex(lossy), np.sort_complex(plain - 0.2j), atol=1e-9)


def test_grid_limit():
    with pytest.raises(ContractViolation):
        ring_spectrum(_flat(16), 1.0, MAX_GRID + 1)
    with pytest.raises(ContractViolation):
        ring_spectrum(_flat(16), -1.0, 16)


@pytest.mark.parametrize(
    "gauge, tol",
    [(lambda Q: np.zeros_like(Q), 1e-12), (lambda Q: 0.3 * np.cos(Q), 1e-6), (lambda Q: np.ones_like(Q), 1e-6), (None, 1e-6)],
)
def test_flux_equivalence(gauge, tol):
    pot = bo_potentials(cone_family(mass=20.0), 0, 64)
    assert flux_equivalence(pot, 20.0, 256, gauge) < tol


def test_hermitian_slow_spectrum_is_real():
    pot = bo_potentials(cone_family(theta=0.7, mass=10.0), 0, 64)
    assert np.abs(ring_spectrum(pot, 10.0, 128).imag).max() < 1e-8


def test_grid_convergence_second_order():
    pot = bo_potentials(cone_family(mass=20.0), 0, 64)
    ref = np.sort_complex(ring_spectrum(pot, 20.0, 512))[:3]
    errs = [np.abs(np.sort_complex(ring_spectrum(pot, 20.0, n))[:3] - ref).max() for n in (32, 64)]
    assert 3.0 < errs[0] / errs[1] < 5.0


def _bo_vs_exact(M):
    fam = cone_family(mass=M)
    pot = bo_potentials(fam, 0, 64)
    bo = np.sort_complex(ring_spectrum(pot, M, 512))[:2]
    exact = coupled_channel_levels(fam.h, M)
    return max(np.abs(exact - e).min() for e in bo)


def test_slow_levels_match_coupled_channels():
    # the remaining gap is the next adiabatic order, which falls as 1 / M^2
    coarse, fine = _bo_vs_exact(20.0), _bo_vs_exact(80.0)
    assert fine < 5e-6
    assert 12.0 < coarse / fine < 20.0
