import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pps4bp import spectrum
from pps4bp.spectrum import ModulusClass, eig3, f_map, modulus_class, reciprocal_pair

entries = st.floats(-10, 10, allow_nan=False)
matrices = st.lists(entries, min_size=9, max_size=9).map(lambda v: np.array(v).reshape(3, 3))


def match(found, expected):
    """Largest distance after pairing each expected root with its nearest unused root."""
    left = list(found)
    worst = 0.0
    for e in expected:
        k = min(range(len(left)), key=lambda i: abs(left[i] - e))
        worst = max(worst, abs(left.pop(k) - e))
    return worst


def test_identity():
    trip = eig3(np.eye(3))
    assert trip.roots == (1, 1, 1)
    assert trip.all_real


def test_diagonal():
    trip = eig3(np.diag([2.0, -3.0, 0.5]))
    assert match(trip.roots, [2, -3, 0.5]) <= 1e-14


def test_companion_recovers_roots():
    r = np.array([0.3, -0.9, 1.7])
    c = np.poly(r)  # monic coefficients
    C = np.zeros((3, 3))
    C[1:, :2] = np.eye(2)
    C[:, 2] = -c[::-1][:3]
    trip = eig3(C)
    assert match(trip.roots, r) <= 1e-12


def test_complex_pair_is_conjugate():
    th = 0.7
    R = np.array([[math.cos(th), -math.sin(th), 0], [math.sin(th), math.cos(th), 0], [0, 0, 2.0]])
    M = R @ np.diag([1.0, 1.0, 1.0])
    trip = eig3(M)
    cplx = [z for z, f in zip(trip.roots, trip.reality_flags) if not f]
    assert len(cplx) == 2 and cplx[0] == cplx[1].conjugate()
    assert match(trip.roots, [cmath.exp(1j * th), cmath.exp(-1j * th), 2]) <= 1e-14


def test_rejects_wrong_shape():
    with pytest.raises(ValueError):
        eig3(np.eye(4))


def test_cubic_branches():
    # three real, one real with p < 0, one real with p > 0, p = 0
    for roots in ([1.0, 2.0, 3.0], [2.0, 0.5 + 0.2j, 0.5 - 0.2j], [1.0, 3j, -3j], [0.0, 0.0, 0.0]):
        a, b, c = np.poly(roots)[1:].real
        assert match(spectrum.cubic_roots(a, b, c), roots) <= 1e-12
    assert match(spectrum.cubic_roots(0.0, 0.0, -8.0), [2, -1 + math.sqrt(3) * 1j, -1 - math.sqrt(3) * 1j]) <= 1e-14


def test_agrees_with_lapack_on_random_matrices():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        M = rng.normal(size=(3, 3))
        worst = max(worst, match(eig3(M).roots, np.linalg.eigvals(M)))
    assert worst <= 1e-9


@settings(max_examples=300, deadline=None)
@given(matrices)
def test_trace_determinant_and_residuals(M):
    trip = eig3(M)
    roots = np.array(trip.roots)
    scale = max(1.0, np.abs(M).max())
    assert abs(roots.sum() - np.trace(M)) <= 1e-10 * 3 * scale
    assert abs(np.prod(roots) - np.linalg.det(M)) <= 1e-10 * 6 * scale ** 3
    assert max(trip.residuals) <= 1e-9 * max(1.0, np.linalg.norm(M) ** 3)
    cplx = [z for z, f in zip(trip.roots, trip.reality_flags) if not f]
    if cplx:
        assert len(cplx) == 2 and cplx[0] == cplx[1].conjugate()


# -- reciprocal pair -----------------------------------------------------------

def test_reciprocal_pair_examples():
    assert reciprocal_pair(1.0) == (1, 1)
    lam, inv = reciprocal_pair(1.25)
    assert lam == pytest.approx(2.0, abs=1e-15) and inv == pytest.approx(0.5, abs=1e-15)


def test_reciprocal_pair_unit_circle():
    k = 0.6941364299
    lam, inv = reciprocal_pair(k)
    assert abs(abs(lam) - 1) <= 1e-15
    assert abs(cmath.phase(lam)) == pytest.approx(math.acos(k), abs=1e-12)
    assert abs(cmath.phase(lam)) == pytest.approx(0.803578, abs=2e-6)  # six-digit rounded reference
    assert abs(f_map(lam) - k) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False))
def test_reciprocal_pair_properties(k):
    lam, inv = reciprocal_pair(k)
    assert lam * inv == pytest.approx(1.0, abs=1e-15)
    assert abs(lam) >= abs(inv) - 1e-15
    tol = 1e-12 * max(1.0, abs(k))
    assert abs(f_map(lam) - k) <= tol
    assert abs(f_map(inv) - k) <= tol


def test_modulus_class():
    assert modulus_class(1.0) is ModulusClass.ON_CIRCLE
    assert modulus_class(-50.70044516) is ModulusClass.OUTSIDE
    assert modulus_class(0.3) is ModulusClass.INSIDE
    z = 0.8407916212 + 0.5413588917j
    assert abs(abs(z) - 1) <= 1e-9
    assert modulus_class(z) is ModulusClass.ON_CIRCLE
