import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coorbit_kit.quasinorm import build_quasinorm, equivalence_test, quasi_triangle_constant

MATS = [np.array([[2.0]]), np.diag([2.0, 3.0]), np.array([[2.0, 1.0], [0.0, 2.0]]),
        np.array([[1.0, -1.0], [1.0, 1.0]]) * 1.5]


@pytest.mark.parametrize("A", MATS)
def test_lyapunov_identity(A):
    q = build_quasinorm(A)
    Ai = np.linalg.inv(A)
    assert np.allclose(q.P - Ai.T @ q.P @ Ai, np.eye(len(A)), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(range(len(MATS))), st.integers(0, 10_000), st.integers(-6, 6))
def test_exact_homogeneity(k, seed, power):
    A = MATS[k]
    q = build_quasinorm(A)
    x = np.random.default_rng(seed).standard_normal((50, len(A))) * 10.0 ** power
    assert np.allclose(q.evaluate(x @ A.T), q.detA * q.evaluate(x), rtol=1e-10, atol=0)


def test_one_dimensional_values():
    # Omega = [-r, r] with r = sqrt(3)/2 for A = 2; rho = 2^{j-1} on the shell (2^{j-1} r, 2^j r]
    q = build_quasinorm([[2.0]])
    r = np.sqrt(3) / 2
    assert q.evaluate(np.array([[r]])) == pytest.approx(0.5)
    assert q.evaluate(np.array([[r * 1.01]])) == pytest.approx(1.0)
    assert q.evaluate(np.array([[0.0]])) == 0.0


def test_quasi_triangle_constant_is_finite():
    q = build_quasinorm(np.diag([2.0, 3.0]))
    c = quasi_triangle_constant(q, 5000, rng=0)
    assert 1 <= c < 50


def test_saturation_flag():
    q = build_quasinorm([[2.0]])
    val, sat = q.evaluate(np.array([[1e300], [1.0]]), with_flag=True)
    assert sat.tolist() == [False, False]
    slow = build_quasinorm([[1.01]])
    _, sat = slow.evaluate(np.array([[1e-300], [1e300], [1.0]]), with_flag=True)
    assert sat.tolist() == [True, True, False]


def test_rejects_non_expansive():
    with pytest.raises(ValueError):
        build_quasinorm(np.diag([2.0, 0.5]))


@pytest.mark.parametrize("A1,A2,expected", [
    ([[2.0]], [[4.0]], True),
    (np.diag([2.0, 3.0]), np.diag([4.0, 9.0]), True),
    (np.diag([2.0, 2.0]), np.diag([2.0, 4.0]), False),
    (np.diag([2.0, 2.0]), 3 * np.eye(2), True),
])
def test_equivalence_verdicts(A1, A2, expected):
    rep = equivalence_test(build_quasinorm(A1), build_quasinorm(A2), rng=0)
    assert rep["equivalent"] is expected
    assert rep["verdict"].endswith("(empirical)")


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        equivalence_test(build_quasinorm([[2.0]]), build_quasinorm(2 * np.eye(2)))
