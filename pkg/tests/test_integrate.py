import math

import numpy as np
import pytest

from pps4bp import _backend, _fallback, integrate, model, orbit
from pps4bp.integrate import StepSpec
from pps4bp.model import J

from .conftest import random_state


def test_stepspec_exact_division():
    spec = StepSpec.span(math.pi / 4)
    assert spec.steps == 50000
    assert spec.step == pytest.approx(math.pi / 200000, rel=1e-15)
    odd = StepSpec(0.0, 1.0, 0.3)
    assert odd.steps == 3 and odd.step * odd.steps == pytest.approx(1.0, rel=1e-15)


def test_stepspec_validation():
    with pytest.raises(ValueError):
        StepSpec(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        StepSpec(1.0, 0.0)


def test_zero_span_is_identity(seed_record):
    z0 = seed_record.z0
    out = integrate.flow_with_variational(z0, np.eye(8), StepSpec.span(0.0), seed_record.m, seed_record.E_hat)
    assert np.array_equal(out.z, z0)
    assert np.array_equal(out.Y, np.eye(8))


def _linear_field(monkeypatch):
    # z' = J z, Hessian identity
    monkeypatch.setattr(_fallback, "_field", lambda z, m, E: J @ z)
    monkeypatch.setattr(_fallback, "_coupled", lambda z, Y, m, E: (J @ z, J @ Y))


def test_rk4_linear_system_taylor_polynomial(monkeypatch):
    _linear_field(monkeypatch)
    h = 0.1
    z = np.arange(1.0, 9.0)
    hJ = h * J
    taylor = sum(np.linalg.matrix_power(hJ, k) / math.factorial(k) for k in range(5))
    zn, _, _ = integrate.rk4_step(z, h, 1.0, 0.0, backend="python")
    np.testing.assert_allclose(zn, taylor @ z, atol=1e-15)
    zn, Yn, _ = integrate.rk4_step(z, h, 1.0, 0.0, Y=np.eye(8), backend="python")
    np.testing.assert_allclose(Yn, taylor, atol=1e-15)
    np.testing.assert_allclose(zn, taylor @ z, atol=1e-15)


def test_backends_agree(rng):
    if "compiled" not in _backend.BACKENDS:
        pytest.skip("compiled core not built")
    m, h = 0.7, math.pi / 2000
    for _ in range(5):
        z = random_state(rng)
        E = model.solve_energy(z, m)
        Y0 = np.zeros((8, 9))
        Y0[:, :8] = np.eye(8)
        spec = StepSpec(0.0, 100 * h, h)
        a = integrate.flow_with_variational(z, Y0, spec, m, E, backend="compiled")
        b = integrate.flow_with_variational(z, Y0, spec, m, E, backend="python")
        np.testing.assert_allclose(a.z, b.z, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(a.Y, b.Y, rtol=0, atol=1e-10 * max(1.0, np.abs(b.Y).max()))
        assert a.t == pytest.approx(b.t, rel=1e-12)
        ga, Ha = _backend.BACKENDS["compiled"].derivatives(z, m, E)
        gb, Hb = _backend.BACKENDS["python"].derivatives(z, m, E)
        np.testing.assert_allclose(ga, gb, atol=1e-13)
        np.testing.assert_allclose(Ha, Hb, atol=1e-12)


def test_deterministic(seed_record):
    spec = StepSpec.span(0.1)
    a = integrate.flow_with_variational(seed_record.z0, np.eye(8), spec, seed_record.m, seed_record.E_hat)
    b = integrate.flow_with_variational(seed_record.z0, np.eye(8), spec, seed_record.m, seed_record.E_hat)
    assert np.array_equal(a.z, b.z) and np.array_equal(a.Y, b.Y) and a.t == b.t


def test_energy_column_matches_finite_difference(seed_record):
    z0, m, E = seed_record.z0, seed_record.m, seed_record.E_hat
    spec = StepSpec(0.0, 0.2, math.pi / 20000)
    Y0 = np.zeros((8, 9))
    Y0[:, :8] = np.eye(8)
    dzdE = integrate.flow_with_variational(z0, Y0, spec, m, E).Y[:, 8]
    d = 1e-6
    fd = (integrate.flow(z0, spec, m, E + d).z - integrate.flow(z0, spec, m, E - d).z) / (2 * d)
    np.testing.assert_allclose(dzdE, fd, atol=1e-7)


def test_symplectic_and_first_column(seed_record):
    z0, m, E = seed_record.z0, seed_record.m, seed_record.E_hat
    gp0 = model.vector_field(z0, m, E)
    Y = np.eye(8)
    z = z0
    for s in (0.3, 0.2, math.pi / 4 - 0.5):
        out = integrate.flow_with_variational(z, Y, StepSpec.span(s), m, E)
        z, Y = out.z, out.Y
        assert np.abs(Y.T @ J @ Y - J).max() <= 1e-9
        np.testing.assert_allclose(Y @ gp0, model.vector_field(z, m, E), atol=1e-8)


def test_sample_endpoints(seed_record):
    z0, m, E = seed_record.z0, seed_record.m, seed_record.E_hat
    spec = StepSpec(0.0, 0.01, 0.001)
    two = integrate.sample_trajectory(z0, spec, spec.steps, m, E)
    assert len(two) == 2
    every = integrate.sample_trajectory(z0, spec, 1, m, E)
    assert len(every) == spec.steps + 1
    np.testing.assert_array_equal(every[-1].z, integrate.flow(z0, spec, m, E).z)
    assert every[-1].s == pytest.approx(0.01)
    with pytest.raises(ValueError):
        integrate.sample_trajectory(z0, spec, 0, m, E)


def test_physical_time_monotone_through_collision(seed_record):
    # the first pair collides at s = pi/4, where dt/ds vanishes
    spec = StepSpec(0.0, math.pi / 2, math.pi / 200000)
    s, zs, ts = integrate.sample_arrays(seed_record.z0, spec, 500, seed_record.m, seed_record.E_hat)
    assert np.all(np.diff(ts) > 0)
    k = len(s) // 2
    assert s[k] == pytest.approx(math.pi / 4)
    assert model.time_rescale(zs[k]) < 1e-20


def test_singular_start_raises():
    z = np.array([0.0, 0, 0, 0, 1, 0, 0, 0])
    with pytest.raises(integrate.IntegrationError):
        integrate.flow(z, StepSpec(0.0, 0.01, 0.001), 1.0, -1.0)


def test_conservation_over_period(seed_record):
    rep = orbit.verify_periodicity(seed_record)
    assert rep.gamma_drift <= 1e-10
    assert rep.A_drift <= 1e-10
