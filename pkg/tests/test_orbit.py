import math

import numpy as np
import pytest

from pps4bp import model, orbit
from pps4bp.model import PhysicalState
from pps4bp.orbit import SymmetricSeed


def test_embed_examples():
    z = orbit.embed_symmetric(SymmetricSeed(0.5, [1, 2, 3, 4]))
    assert np.array_equal(z, [1, 2, 1, -2, 3, 4, -3, 4])
    assert np.array_equal(orbit.embed(np.zeros(4)), np.zeros(8))


def test_seed_validation():
    with pytest.raises(ValueError):
        SymmetricSeed(1.2, np.zeros(4))
    with pytest.raises(ValueError):
        SymmetricSeed(0.5, np.zeros(3))


def test_momentum_reading_matches_transformation():
    seed = orbit.printed_seed("momentum")
    z = model.to_regularized(PhysicalState(orbit.SEED_POSITIONS, orbit.SEED_RATES))
    assert np.array_equal(orbit.embed_symmetric(seed), z)


def test_both_readings_converge_to_the_same_orbit(seed_record):
    other = orbit.newton_refine(orbit.printed_seed("momentum"), with_closure=False)
    np.testing.assert_allclose(other.p, seed_record.p, atol=1e-10)
    assert other.E_hat == pytest.approx(seed_record.E_hat, abs=1e-11)


def test_printed_conditions_are_off_the_periodic_family():
    # observed seed quality: both readings sit well away from Fix(S_G) at s = pi/4
    for reading in ("velocity", "momentum"):
        r = np.linalg.norm(orbit.shooting_residual(orbit.printed_seed(reading)))
        assert 0.1 < r < 1.0


def test_converged_seed(seed_record):
    rec = seed_record
    assert rec.residual_norm <= 1e-12
    assert np.abs(orbit.shooting_residual(rec.seed)).max() <= 1e-12
    assert abs(model.gamma_hat(rec.z0, rec.m, rec.E_hat)) <= 1e-12
    assert rec.closure_error <= 1e-8
    assert not rec.rank_deficient and rec.jacobian_cond < 1e3


def test_refining_a_converged_seed_is_a_fixed_point(seed_record):
    again = orbit.newton_refine(seed_record.seed, with_closure=False)
    assert again.iterations <= 2  # one evaluation, plus at most one rejected polish step
    assert np.array_equal(again.p, seed_record.p)


def test_residual_grows_along_jacobian_columns(seed_record):
    jac = orbit.shooting_jacobian(seed_record.seed)
    for k in range(4):
        for delta in (1e-6, 2e-6):
            p = seed_record.p.copy()
            p[k] += delta
            r = orbit.shooting_residual(SymmetricSeed(seed_record.m, p))
            np.testing.assert_allclose(r, jac[:, k] * delta, atol=1e-10)


def test_no_convergence_error():
    with pytest.raises(orbit.ConvergenceError):
        orbit.newton_refine(orbit.printed_seed(), max_iter=1)


def test_rank_deficiency_flag_and_raise(monkeypatch, seed_record):
    monkeypatch.setattr(orbit, "COND_LIMIT", 0.0)
    p = seed_record.p + 1e-6
    with pytest.warns(RuntimeWarning):
        rec = orbit.newton_refine(SymmetricSeed(seed_record.m, p), with_closure=False)
    assert rec.rank_deficient and rec.residual_norm <= 1e-12
    with pytest.raises(orbit.RankDeficiencyError):
        orbit.newton_refine(SymmetricSeed(seed_record.m, p), on_rank_deficiency="raise")


def test_mass_grid():
    up = orbit.mass_grid(0.539, 1.0, 0.01)
    assert len(up) == 47 and up[0] == 0.54 and up[-1] == 1.0
    down = orbit.mass_grid(0.539, 0.01, -0.01)
    assert down[0] == 0.53 and down[-1] == 0.01
    fine = orbit.mass_grid(0.53, 0.539, 0.001)
    assert fine == [0.531, 0.532, 0.533, 0.534, 0.535, 0.536, 0.537, 0.538, 0.539]
    with pytest.raises(ValueError):
        orbit.mass_grid(0.5, 0.6, -0.01)


def test_short_continuation(seed_record):
    recs = orbit.continue_in_mass(seed_record, 0.56, 0.01)
    assert [r.m for r in recs] == [0.54, 0.55, 0.56]
    assert all(r.residual_norm <= 1e-11 and r.closure_error <= 1e-8 for r in recs)


def test_continuation_stall(monkeypatch, seed_record):
    def fail(*a, **k):
        raise orbit.ConvergenceError("forced")

    monkeypatch.setattr(orbit, "newton_refine", fail)
    with pytest.raises(orbit.ContinuationStallError):
        orbit.continue_in_mass(seed_record, 0.55, 0.01)


def test_family_records(family_rows):
    assert len(family_rows) == 100
    for row in family_rows:
        assert row.residual <= 1e-11
        assert abs(row.A_value) <= 1e-10  # A = 0 is observed, not imposed


def test_energy_steps_between_neighbouring_masses(family_rows):
    E = np.array([r.E_hat for r in family_rows])
    jumps = np.abs(np.diff(E))
    assert jumps.max() <= 0.1, f"largest jump {jumps.max():.4f} after m={family_rows[int(jumps.argmax())].m}"


def test_family_closes_over_one_period(family_rows):
    bad = [(r.m, r.closure) for r in family_rows if not r.closure <= 1e-8]
    assert not bad


def test_polish_lowers_closure_on_hyperbolic_orbit(family_rows):
    # at small m the multipliers reach 1e9, so closure needs residuals near 1e-16
    row = min(family_rows, key=lambda r: r.m)
    assert row.residual <= 1e-14 and row.closure <= 1e-8


def test_energy_equal_masses(record_m1):
    row, _ = record_m1
    assert row.E_hat == pytest.approx(-2.818584789, abs=1e-5)


def test_periodicity_equal_masses(record_m1):
    row, _ = record_m1
    rep = row.diagnostics["periodicity"]
    assert rep.closure <= 1e-9
    assert rep.sf_defect <= 1e-8 and rep.sg_defect <= 1e-8
    assert rep.samples >= 64
    assert all(v < 1e-16 for v in rep.sbc_values.values())
    assert rep.t_monotone


def test_sbc_alternation(seed_record):
    rep = orbit.verify_periodicity(seed_record)
    z = seed_record.z0
    # at the designated times the other pair's momenta are far from zero
    assert rep.sbc_values["pi/4 v3^2+v4^2"] < 1e-16 < z[4] ** 2
    # time-reversal symmetry of the check itself
    n = len(rep.sg_defects)
    q = n // 4
    for k in range(q + 1):
        assert rep.sg_defects[k] == pytest.approx(rep.sg_defects[(q - k) % n], abs=1e-15)


def test_periodicity_sampling_validation(seed_record):
    with pytest.raises(ValueError):
        orbit.verify_periodicity(seed_record, samples=100)


def test_orbit_store_roundtrip(tmp_path, seed_record):
    recs = [seed_record, orbit.OrbitRecord(0.2, np.array([0.1, -1 / 3, math.pi, 1e-300]), -1.0, 1e-13, -0.0, 2e-12)]
    path = tmp_path / "orbits.csv"
    orbit.write_orbit_store(recs, path)
    back = orbit.read_orbit_store(path)
    assert [r.m for r in back] == [0.2, 0.539]
    for a, b in zip(sorted(recs, key=lambda r: r.m), back):
        assert np.array_equal(a.p, b.p)
        assert (a.m, a.E_hat, a.residual_norm, a.A_value, a.closure_error) == (
            b.m, b.E_hat, b.residual_norm, b.A_value, b.closure_error
        )
    assert path.read_text().splitlines()[0] == ",".join(orbit.ORBIT_COLUMNS)
