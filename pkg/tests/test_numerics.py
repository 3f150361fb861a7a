import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gwphase.errors import BlowUpError, ContractViolation
from gwphase.numerics import MAX_DIM, TimeGrid, eig2_batch, eig_dense, integrate_ode, quadrature


def test_time_grid_endpoints_and_spacing():
    g = TimeGrid(0.0, 2 * np.pi, 7)
    s = g.samples
    assert s[0] == 0.0 and s[-1] == 2 * np.pi
    assert np.allclose(np.diff(s), g.dt)
    assert g.duration == 2 * np.pi


@pytest.mark.parametrize("args", [(0.0, 1.0, 1), (1.0, 1.0, 5), (1.0, 0.0, 5), (0.0, np.inf, 5), (0.0, 1.0, 2.5)])
def test_time_grid_rejects_bad_input(args):
    with pytest.raises(ContractViolation):
        TimeGrid(*args)


def test_eig_dense_diagonal_sorted():
    pairs = eig_dense(np.diag([3.0, -1.0 + 2j, -1.0 - 1j]))
    assert [p[0] for p in pairs] == [-1 - 1j, -1 + 2j, 3]


def test_eig_dense_matches_numpy_on_random_matrices():
    rng = np.random.default_rng(3)
    for d in (1, 2, 3, 6):
        M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        pairs = eig_dense(M)
        ref = np.sort_complex(np.linalg.eigvals(M))
        got = np.array([p[0] for p in pairs])
        assert np.allclose(np.sort_complex(got), ref, atol=1e-10)
        for lam, v in pairs:
            assert np.linalg.norm(M @ v - lam * v) <= 1e-10 * np.linalg.norm(M, 2)
            assert np.isclose(np.linalg.norm(v), 1.0)


def test_eig_dense_scalar_matrix():
    pairs = eig_dense(2.5 * np.eye(2))
    assert all(np.isclose(lam, 2.5) for lam, _ in pairs)


def test_eig_dense_rejects_non_square_and_non_finite():
    with pytest.raises(ContractViolation):
        eig_dense(np.ones((2, 3)))
    with pytest.raises(ContractViolation):
        eig_dense(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(ContractViolation):
        eig_dense(np.zeros((MAX_DIM + 1, MAX_DIM + 1)))


def test_eig2_batch_closed_form():
    rng = np.random.default_rng(0)
    H = rng.normal(size=(50, 2, 2)) + 1j * rng.normal(size=(50, 2, 2))
    w, V = eig2_batch(H)
    for k in range(50):
        for j in range(2):
            assert np.linalg.norm(H[k] @ V[k, :, j] - w[k, j] * V[k, :, j]) < 1e-12 * np.abs(H[k]).max() * 10


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (2, 3, 3), elements=st.floats(-5, 5)))
def test_eig_dense_residual_property(a):
    M = a[0] + 1j * a[1]
    if np.linalg.norm(M) < 1e-3:
        return
    for lam, v in eig_dense(M, tol=1e-8):
        assert np.linalg.norm(M @ v - lam * v) <= 1e-8 * np.linalg.norm(M, 2)


def test_rk4_fourth_order():
    omega = 1.3 - 0.2j

    def rhs(t, y):
        return -1j * omega * y

    errs = []
    for n in (51, 101, 201):
        y = integrate_ode(rhs, np.array([1.0 + 0j]), TimeGrid(0.0, 5.0, n))
        errs.append(abs(y[0] - np.exp(-1j * omega * 5.0)))
    rate = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
    assert min(rate) > 3.8


def test_rk4_matrix_state():
    H = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    U = integrate_ode(lambda t, y: -1j * H @ y, np.eye(2, dtype=complex), TimeGrid(0.0, 1.0, 401))
    exact = np.cos(1.0) * np.eye(2) - 1j * np.sin(1.0) * H
    assert np.abs(U - exact).max() < 1e-11


def test_rk4_blow_up():
    with pytest.raises(BlowUpError) as info:
        integrate_ode(lambda t, y: 1e300 * y, np.array([1e10 + 0j]), TimeGrid(0.0, 1.0, 11))
    assert info.value.time > 0


def test_quadrature():
    g = TimeGrid(0.0, 2.0, 11)
    assert np.isclose(quadrature(3 * g.samples + 1j, g), 6 + 2j)
    with pytest.raises(ContractViolation):
        quadrature(np.ones(5), g)


def test_eig_dense_badly_scaled_matrix():
    # tiny entries make LAPACK balancing return a wrong null vector
    tiny = 4.73e-217
    M = np.full((3, 3), tiny * (1 + 1j))
    M[0, 1] += 1.0
    M[2, 0] += 1.0
    M[0, 2] += 1j
    for lam, v in eig_dense(M, tol=1e-8):
        assert np.linalg.norm(M @ v - lam * v) < 1e-14
