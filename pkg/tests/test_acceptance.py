"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import numpy as np

from gwphase.biortho import HamiltonianLoop, track_branches
from gwphase.bornopp import BOPotentials, FastFamily, bo_potentials, flux_equivalence, ring_spectrum
from gwphase.dynamics import adiabatic_sweep, sudden_propagator_check
from gwphase.geomphase import (
    aa_phase,
    im_phase_open_path,
    nonabelian_holonomy,
    phase_difference,
    phase_line_integral,
    phase_surface_integral,
)
from gwphase.numerics import TimeGrid
from gwphase.scenarios import (
    ACModel,
    ComplexCone,
    PlanarPath,
    ac_geometric_phase,
    cone_hamiltonian,
    cone_loop,
    cone_surface,
    effective_moment,
    linear_dichroic,
    rotated,
    sequence_phase_extract,
    topological_factor,
    vacuum,
)

from conftest import complex_solid_angle, report

THETA = 0.5 + 0.2j
CIRCULAR = np.array([1.0, 1j]) / np.sqrt(2)


def _periodic_gauge(rng, t, modes=4):
    s = 2 * np.pi * (t - t[0]) / (t[-1] - t[0])
    z = np.zeros_like(s, dtype=complex)
    for m in range(1, modes + 1):
        a, b = rng.normal(scale=0.4, size=2) + 1j * rng.normal(scale=0.4, size=2)
        z += a * np.sin(m * s) + b * (np.cos(m * s) - 1)
    return np.exp(z + rng.normal() + 1j * rng.normal())


def test_criterion_1_gauge_invariance(complex_cone_branch):
    _, b = complex_cone_branch
    ref = phase_line_integral(b).value
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        moved = b.with_gauge(_periodic_gauge(rng, b.times), _periodic_gauge(rng, b.times))
        worst = max(worst, phase_difference(phase_line_integral(moved).value, ref))
    ok = worst < 1e-8
    report(1, "gauge invariance", ok, f"max deviation over 50 rescalings {worst:.2e} (< 1e-8)")
    assert ok


def test_criterion_2_hermitian_reduction():
    im_max = aa_max = exact_max = 0.0
    for theta in (np.pi / 6, np.pi / 3, np.pi / 2):
        loop = cone_loop(ComplexCone(1.0, theta), 8001)
        b = track_branches(loop)[1]
        gw = phase_line_integral(b).value
        aa = aa_phase(b, loop).value
        im_max = max(im_max, abs(gw.imag))
        aa_max = max(aa_max, phase_difference(gw.real, aa))
        exact = complex_solid_angle(theta)
        exact_max = max(exact_max, phase_difference(gw, exact), phase_difference(aa, exact))
    ok = im_max < 1e-8 and aa_max < 1e-6 and exact_max < 1e-6
    report(2, "Hermitian reduction", ok,
           f"|Im| {im_max:.1e} (< 1e-8), GW vs AA {aa_max:.1e}, vs solid angle {exact_max:.1e} (< 1e-6)")
    assert ok


def test_criterion_3_complex_solid_angle(complex_cone_branch):
    _, b = complex_cone_branch
    line = phase_line_integral(b).value
    surf = phase_surface_integral(cone_surface(ComplexCone(1.0, THETA), 401, 401), 1).value
    (pt,) = adiabatic_sweep(
        lambda T: cone_loop(ComplexCone(1.0, THETA, period=T), 4001), [1280.0], 1, steps_per_unit_time=8
    )
    d_ls = phase_difference(line, surf)
    d_le = phase_difference(line, pt.extracted)
    d_exact = phase_difference(line, complex_solid_angle(THETA))
    ok = d_ls < 1e-5 and d_exact < 1e-5 and d_le < 1e-2
    report(3, "complex solid angle", ok,
           f"line-surface {d_ls:.1e}, line-closed form {d_exact:.1e} (< 1e-5), "
           f"line-evolution at T=1280 {d_le:.1e} (< 1e-2)")
    assert ok


def test_criterion_4_adiabatic_convergence():
    details, ok = [], True
    for label, theta in (("Hermitian", np.pi / 3), ("complex", THETA)):
        pts = adiabatic_sweep(
            lambda T, th=theta: cone_loop(ComplexCone(1.0, th, period=T), 2001),
            [20.0, 80.0, 320.0], 1, steps_per_unit_time=20,
        )
        errs = [p.error for p in pts]
        ok = ok and errs[0] > errs[1] > errs[2]
        details.append(f"{label} " + "/".join(f"{e:.2e}" for e in errs))
    report(4, "adiabatic convergence", ok, "errors at T=20/80/320: " + ", ".join(details))
    assert ok


def _monotone_warp(rng, s, modes=3):
    a = rng.uniform(-1, 1, size=modes)
    a *= 0.9 / max(np.abs(a).sum(), 1e-12)
    w = s.copy()
    for m, am in enumerate(a, start=1):
        w += am * np.sin(m * np.pi * s) / (m * np.pi)
    return w


def test_criterion_5_open_path_reparametrization():
    cone = ComplexCone(1.0, THETA)
    n = 8001
    s = np.linspace(0.0, 1.0, n)
    g = TimeGrid(0.0, 1.0, n)

    def half_loop(warp):
        H = cone_hamiltonian(cone.b, cone.theta, np.pi * warp)
        return im_phase_open_path(track_branches(HamiltonianLoop(g, H))[1])

    ref = half_loop(s)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        w = _monotone_warp(rng, s)
        assert np.all(np.diff(w) > 0)
        worst = max(worst, abs(half_loop(w) - ref))
    ok = worst < 1e-7
    report(5, "open-path Im invariance", ok, f"max deviation over 20 reparametrizations {worst:.2e} (< 1e-7)")
    assert ok


def _common_omega_loop(theta, T, delta=1e-3, omega=0.7, n=401):
    g = TimeGrid(0.0, T, n)
    H = omega * np.eye(2) + cone_hamiltonian(delta, theta, 2 * np.pi * g.samples / T)
    H[-1] = H[0]
    return HamiltonianLoop(g, H)


def test_criterion_6_sudden_limit_holonomy():
    dev = sudden_propagator_check(_common_omega_loop(THETA, 1.0), 0.7, 4000)
    W = nonabelian_holonomy(_common_omega_loop(1.0, 1.0))
    unit = float(np.abs(W.conj().T @ W - np.eye(2)).max())
    ok = dev < 1e-3 and unit < 1e-7
    report(6, "sudden-limit holonomy", ok,
           f"propagator deviation {dev:.1e} (< 1e-3), Hermitian unitarity defect {unit:.1e} (< 1e-7)")
    assert ok


def _deformed_path(rng, turns, vertices=96):
    t = np.linspace(0.0, 2 * np.pi * turns, vertices * turns, endpoint=False)
    t = t + 0.3 * np.sin(t) * rng.uniform(-1, 1)
    r = np.ones_like(t)
    for m in range(1, 4):
        r += 0.15 * rng.uniform(-1, 1) * np.cos(m * t / turns + rng.uniform(0, 2 * np.pi))
    return PlanarPath.from_polar(r * rng.uniform(0.5, 3.0), t + rng.uniform(0, 2 * np.pi))


def test_criterion_7_ac_topology():
    SZ = np.diag([1.0, -1.0])
    model = ACModel(np.diag([1 - 0.1j, 1.5 - 0.6j]) + 0.2 * np.array([[0, 1], [1, 0]]), SZ, 0.4)
    rng = np.random.default_rng(11)
    spread = 0.0
    for turns in (1, 2):
        ref = ac_geometric_phase(model, _deformed_path(rng, turns), 0).value
        for _ in range(50):
            spread = max(spread, abs(ac_geometric_phase(model, _deformed_path(rng, turns), 0).value - ref))
    mu = effective_moment(model, 0)
    n = np.arange(0, 5)
    logs = np.array([topological_factor(mu, model.rho, _deformed_path(rng, int(k)) if k else
                                        PlanarPath.from_xy([3, 4, 4, 3], [0, 0, 1, 1])).log_magnitude
                     for k in n])
    slope, intercept = np.polyfit(n, logs, 1)
    resid = np.abs(logs - (slope * n + intercept)).max()
    slope_err = abs(slope - (-mu.imag * model.rho))
    ok = spread < 1e-12 and slope_err < 1e-12 and resid < 1e-12
    report(7, "AC topology", ok,
           f"spread over 100 deformations {spread:.1e}, slope error {slope_err:.1e}, "
           f"affine residual {resid:.1e} (< 1e-12)")
    assert ok


def _matrix_product_oracle(eps, first, second):
    """Circuit phase from explicit eigenprojectors of the transfer matrices."""

    def projector(seg):
        w, V = np.linalg.eig(seg.transfer())
        k = int(np.argmax(np.abs(w)))
        left = np.linalg.inv(V)[k]
        return np.outer(V[:, k], left)

    e = eps / np.linalg.norm(eps)
    Pe = np.outer(e, e.conj())
    PA, PB = projector(first), projector(second)
    return 0.5j * (np.log(np.trace(Pe @ PA @ PB)) - np.log(np.trace(PB @ PA @ Pe)))


def test_criterion_8_optics_null_and_signal():
    v = vacuum()
    A = linear_dichroic(0.3, 1.0)
    B = rotated(A, np.pi / 6, "B")
    merged, ref = [v, A, B, v], [v, A, v, B, v]
    null = abs(sequence_phase_extract(ref, ref, CIRCULAR).value)
    signal = sequence_phase_extract(merged, ref, CIRCULAR).value
    oracle = phase_difference(signal, _matrix_product_oracle(CIRCULAR, A, B))
    ok = null < 1e-10 and abs(signal) > 1e-3 and oracle < 1e-10
    report(8, "optics null and signal", ok,
           f"|reference| {null:.1e} (< 1e-10), |merged| {abs(signal):.3e} (> 1e-3), "
           f"oracle deviation {oracle:.1e} (< 1e-10)")
    assert ok


def test_criterion_9_bo_cross_oracle(complex_cone_branch):
    _, b = complex_cone_branch
    M = 20.0
    fam = FastFamily(lambda Q: cone_hamiltonian(1.0, THETA, Q), M)
    pot = bo_potentials(fam, 1, 64)
    loop_dev = phase_difference(pot.loop_integral(), phase_line_integral(b).value)
    flux = flux_equivalence(pot, M, 256)

    # free ring: the deviation from k^2 / 2M is the stencil's h^2 k^4 / 24M
    ratios = []
    for n in (64, 128):
        h = 2 * np.pi / n
        Q = h * np.arange(n)
        zero = np.zeros(n, dtype=complex)
        levels = np.sort(ring_spectrum(BOPotentials(Q, zero, zero, zero, M), M, n).real)[:5]
        k = np.array([0, 1, 1, 2, 2])
        dev = k**2 / (2 * M) - levels
        bound = h**2 * k**4 / (24 * M)
        ratios.append(np.abs(dev[1:] / bound[1:]))
        assert abs(dev[0]) < 1e-12
    free_ok = all(np.all(np.abs(r - 1) < 0.01) for r in ratios)
    ok = loop_dev < 1e-6 and flux < 1e-6 and free_ok
    report(9, "BO cross-oracle", ok,
           f"loop A vs phase {loop_dev:.1e}, flux shift {flux:.1e} (< 1e-6), "
           f"free ring within h^2 k^4/24M to {max(np.abs(r - 1).max() for r in ratios):.1e}")
    assert ok
