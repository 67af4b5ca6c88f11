"""The family of symmetric SBC periodic orbits and its continuation in m.

Orbits are found by Newton shooting over one eighth of the period: a seed on
the s = 0 symmetry subspace is integrated to s = pi/4 and driven onto the
fixed set of S_G, {u1 = u2 = 0, v3 = v4 = 0}.  The energy is not an unknown;
it is re-solved from gamma_hat = 0 at every iterate, and its sensitivity is
carried by a ninth column of the variational system.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import model
from .integrate import DEFAULT_STEP, IntegrationError, StepSpec, flow, flow_with_variational, sample_arrays
from .model import S_F, S_G, PhysicalState

SHOOT_SPAN = math.pi / 4
PERIOD = 2 * math.pi
COND_LIMIT = 1e12
DM_MIN = 1e-4
POLISH_STEPS = 3

# p = (u1, u2, v1, v2) -> z = (u1, u2, u1, -u2, v1, v2, -v1, v2)
EMBEDDING = np.zeros((8, 4))
EMBEDDING[[0, 2], 0] = 1.0
EMBEDDING[1, 1], EMBEDDING[3, 1] = 1.0, -1.0
EMBEDDING[4, 2], EMBEDDING[6, 2] = 1.0, -1.0
EMBEDDING[[5, 7], 3] = 1.0

# components of z(pi/4) that vanish on Fix(S_G)
TARGET = [0, 1, 6, 7]

# printed m = 0.539 initial conditions: positions and the listed rates
SEED_MASS = 0.539
SEED_POSITIONS = (2.11421, 0.0, 0.0, 1.01146)
SEED_RATES = (0.0, 0.18151, 0.70392, 0.0)

ORBIT_COLUMNS = ["m", "E_hat", "u1", "u2", "v1", "v2", "residual_norm", "A_value", "closure_error"]


class ConvergenceError(ArithmeticError):
    """Newton shooting did not reach the requested tolerance."""


class RankDeficiencyError(ConvergenceError):
    """The shooting Jacobian is too ill-conditioned to trust."""


class ContinuationStallError(ArithmeticError):
    """The mass step was halved to its floor without Newton converging."""


@dataclass(frozen=True)
class SymmetricSeed:
    m: float
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m", model.check_mass(self.m))
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if p.shape != (4,):
            raise ValueError("seed needs (u1, u2, v1, v2)")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class OrbitRecord:
    m: float
    p: np.ndarray
    E_hat: float
    residual_norm: float
    A_value: float
    closure_error: float
    iterations: int = 0
    jacobian_cond: float = float("nan")
    rank_deficient: bool = False

    @property
    def z0(self) -> np.ndarray:
        return EMBEDDING @ self.p

    @property
    def seed(self) -> SymmetricSeed:
        return SymmetricSeed(self.m, self.p)


def embed(p) -> np.ndarray:
    return EMBEDDING @ np.asarray(p, dtype=float)


def embed_symmetric(seed: SymmetricSeed) -> np.ndarray:
    return embed(seed.p)


def printed_seed(reading: str = "velocity") -> SymmetricSeed:
    """Seed from the printed m = 0.539 conditions.

    With ``reading="velocity"`` the printed rates are taken as dx/dt and
    converted to momenta (2 dx/dt for the unit-mass pair, 2 m dx/dt for the
    other); this is the reading consistent with A = 0 along the family.
    ``reading="momentum"`` uses them as momenta directly.
    """
    m = SEED_MASS
    if reading == "velocity":
        w = (2 * SEED_RATES[0], 2 * SEED_RATES[1], 2 * m * SEED_RATES[2], 2 * m * SEED_RATES[3])
    elif reading == "momentum":
        w = SEED_RATES
    else:
        raise ValueError(f"unknown reading {reading!r}")
    z = model.to_regularized(PhysicalState(np.array(SEED_POSITIONS), np.array(w)), m)
    return SymmetricSeed(m, z[[0, 1, 4, 5]])


def shooting_system(p, m: float, h: float = DEFAULT_STEP, jacobian: bool = True):
    """Residual at s = pi/4 and, optionally, its 4x4 Jacobian in p.

    Returns ``(r, jac, E_hat)``; ``jac`` is None when not requested.
    """
    z0 = embed(p)
    E = model.solve_energy(z0, m)
    spec = StepSpec.span(SHOOT_SPAN, h)
    if not jacobian:
        return flow(z0, spec, m, E).z[TARGET], None, E
    Y0 = np.zeros((8, 9))
    Y0[:, :8] = np.eye(8)
    out = flow_with_variational(z0, Y0, spec, m, E)
    # dE/dz from gamma_hat(z, E) = 0 and d gamma_hat / dE = -ab
    dE_dp = model.grad_gamma_hat(z0, m, E) / model.time_rescale(z0) @ EMBEDDING
    full = out.Y[:, :8] @ EMBEDDING + np.outer(out.Y[:, 8], dE_dp)
    return out.z[TARGET], full[TARGET], E


def shooting_residual(seed: SymmetricSeed, h: float = DEFAULT_STEP) -> np.ndarray:
    """(u1, u2, v3, v4) at s = pi/4: the distance of z(pi/4) from Fix(S_G)."""
    return shooting_system(seed.p, seed.m, h, jacobian=False)[0]


def shooting_jacobian(seed: SymmetricSeed, h: float = DEFAULT_STEP) -> np.ndarray:
    return shooting_system(seed.p, seed.m, h)[1]


def closure_error(p, m: float, E_hat: float, h: float = DEFAULT_STEP) -> float:
    z0 = embed(p)
    return float(np.linalg.norm(flow(z0, StepSpec.span(PERIOD, h), m, E_hat).z - z0))


def newton_refine(
    seed0: SymmetricSeed,
    tol: float = 1e-12,
    max_iter: int = 25,
    h: float = DEFAULT_STEP,
    on_rank_deficiency: str = "flag",
    with_closure: bool = True,
) -> OrbitRecord:
    """Refine a seed to a symmetric periodic orbit.

    Once the residual is below ``tol``, up to ``POLISH_STEPS`` further Newton
    steps are taken while each at least halves the residual.  The iteration
    count in the record is the number of residual evaluations, so an already
    converged seed reports 1 or 2.  When the Jacobian condition
    number exceeds 1e12 the step is taken in the least-squares sense and the
    record is flagged, or :class:`RankDeficiencyError` is raised when
    ``on_rank_deficiency="raise"``.
    """
    m = seed0.m
    p = seed0.p.copy()
    flagged = False
    cond = float("nan")
    for it in range(1, max_iter + 1):
        r, jac, E = shooting_system(p, m, h)
        res = float(np.linalg.norm(r))
        if not np.isfinite(res):
            raise ConvergenceError(f"non-finite residual at m={m}")
        cond = float(np.linalg.cond(jac))
        if res <= tol:
            break
        if cond > COND_LIMIT:
            if on_rank_deficiency == "raise":
                raise RankDeficiencyError(f"shooting Jacobian condition {cond:.3e} at m={m}")
            flagged = True
            dp = np.linalg.lstsq(jac, r, rcond=None)[0]
        else:
            dp = np.linalg.solve(jac, r)
        p = p - dp
    else:
        raise ConvergenceError(f"no convergence at m={m} after {max_iter} iterations (|r|={res:.3e})")
    # Past the tolerance, keep stepping while the residual at least halves.
    # On strongly hyperbolic orbits the full-period closure is the residual
    # times multipliers near 1e9, so the last factors of ten matter.
    for _ in range(POLISH_STEPS):
        if res == 0.0 or cond > COND_LIMIT:
            break
        p_new = p - np.linalg.solve(jac, r)
        r_new, jac_new, E_new = shooting_system(p_new, m, h)
        it += 1
        res_new = float(np.linalg.norm(r_new))
        if not res_new < 0.5 * res:
            break
        p, r, jac, E, res = p_new, r_new, jac_new, E_new, res_new
        cond = float(np.linalg.cond(jac))
    if flagged:
        warnings.warn(f"ill-conditioned shooting Jacobian at m={m}", RuntimeWarning, stacklevel=2)
    z0 = embed(p)
    return OrbitRecord(
        m=m,
        p=p,
        E_hat=float(E),
        residual_norm=res,
        A_value=float(model.angular_momentum_reg(z0)),
        closure_error=closure_error(p, m, E, h) if with_closure else float("nan"),
        iterations=it,
        jacobian_cond=cond,
        rank_deficient=flagged,
    )


def mass_grid(m_start: float, m_target: float, dm: float) -> list[float]:
    """Multiples of |dm| strictly beyond m_start, up to and including m_target.

    A start that is off the grid (0.539 with dm = 0.01) first steps to the
    nearest grid point in the direction of travel.
    """
    if dm == 0 or (m_target - m_start) * dm < 0:
        raise ValueError("dm must be nonzero and point from the start toward the target")
    step = abs(dm)
    direction = 1 if dm > 0 else -1
    eps = 1e-9
    k = math.floor(m_start / step + eps) + 1 if direction > 0 else math.ceil(m_start / step - eps) - 1
    out = []
    while True:
        mk = round(k * step, 12)
        if direction * (mk - m_target) > eps * step:
            break
        out.append(mk)
        k += direction
    return out


def continue_in_mass(
    start: OrbitRecord,
    m_target: float,
    dm: float,
    tol: float = 1e-12,
    max_iter: int = 25,
    h: float = DEFAULT_STEP,
    dm_min: float = DM_MIN,
    with_closure: bool = True,
    progress=None,
) -> list[OrbitRecord]:
    """March the family from ``start`` to ``m_target``, one record per grid point.

    The predictor is the previous converged seed, or the secant through the
    last two once available.  A failed corrector halves the step toward the
    next grid point (intermediate points are not emitted) down to ``dm_min``.
    """
    targets = mass_grid(start.m, m_target, dm)
    hist = [(start.m, start.p)]
    out = []
    for mt in targets:
        m_cur = hist[-1][0]
        step = mt - m_cur
        while True:
            on_grid = step == mt - m_cur
            m_try = mt if on_grid else m_cur + step
            pred = _predict(hist, m_try)
            try:
                rec = newton_refine(
                    SymmetricSeed(m_try, pred), tol, max_iter, h, with_closure=with_closure and on_grid
                )
            except (ConvergenceError, IntegrationError, model.SingularConfigurationError):
                step /= 2
                if abs(step) < dm_min:
                    raise ContinuationStallError(f"continuation stalled near m={m_cur}") from None
                continue
            hist.append((m_try, rec.p))
            if on_grid:
                break
            m_cur = m_try
            step = mt - m_cur
        out.append(rec)
        if progress is not None:
            progress(rec)
    return out


def _predict(hist, m):
    if len(hist) < 2:
        return hist[-1][1].copy()
    (m0, p0), (m1, p1) = hist[-2], hist[-1]
    return p1 + (p1 - p0) * (m - m1) / (m1 - m0)


@dataclass
class PeriodicityReport:
    m: float
    closure: float
    sf_defect: float
    sg_defect: float
    sg_defects: np.ndarray = field(repr=False)
    sbc_values: dict[str, float] = field(default_factory=dict)
    gamma_drift: float = 0.0
    A_drift: float = 0.0
    t_monotone: bool = True
    period_t: float = float("nan")
    samples: int = 0


def verify_periodicity(rec: OrbitRecord, h: float = DEFAULT_STEP, samples: int = 400) -> PeriodicityReport:
    """Full-period diagnostics for a converged orbit.

    ``samples`` must be a multiple of 8 so that the quarter and eighth
    period points fall on the sampling grid.
    """
    if samples % 8:
        raise ValueError("samples must be a multiple of 8")
    spec = StepSpec.span(PERIOD, h)
    if spec.steps % samples:
        raise ValueError("step count over the period must be divisible by samples")
    stride = spec.steps // samples
    s, zs, ts = sample_arrays(rec.z0, spec, stride, rec.m, rec.E_hat)
    n = samples
    quarter = n // 4
    idx = np.arange(n)
    sf = np.linalg.norm(zs[idx] @ S_F.T - zs[(idx + quarter) % n], axis=1)
    # S_G z(s) = z(pi/2 - s); the last sample coincides with the first by periodicity
    zper = zs[:n]
    sg = np.linalg.norm(zper @ S_G.T - zper[(quarter - idx) % n], axis=1)
    eighth = n // 8
    v = zs[:, 4:]
    sbc = {
        "pi/4 v3^2+v4^2": float(v[eighth, 2] ** 2 + v[eighth, 3] ** 2),
        "3pi/4 v1^2+v2^2": float(v[3 * eighth, 0] ** 2 + v[3 * eighth, 1] ** 2),
        "5pi/4 v3^2+v4^2": float(v[5 * eighth, 2] ** 2 + v[5 * eighth, 3] ** 2),
        "7pi/4 v1^2+v2^2": float(v[7 * eighth, 0] ** 2 + v[7 * eighth, 1] ** 2),
    }
    gam = np.array([model.gamma_hat(z, rec.m, rec.E_hat) for z in zs])
    A = np.array([model.angular_momentum_reg(z) for z in zs])
    return PeriodicityReport(
        m=rec.m,
        closure=float(np.linalg.norm(zs[-1] - zs[0])),
        sf_defect=float(sf.max()),
        sg_defect=float(sg.max()),
        sg_defects=sg,
        sbc_values=sbc,
        gamma_drift=float(np.abs(gam).max()),
        A_drift=float(np.abs(A - A[0]).max()),
        t_monotone=bool(np.all(np.diff(ts) > 0)),
        period_t=float(ts[-1] - ts[0]),
        samples=len(s),
    )


def write_orbit_store(records, path) -> None:
    rows = sorted(records, key=lambda r: r.m)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ORBIT_COLUMNS)
        for r in rows:
            vals = [r.m, r.E_hat, *r.p, r.residual_norm, r.A_value, r.closure_error]
            w.writerow([f"{float(x):.17g}" for x in vals])


def read_orbit_store(path) -> list[OrbitRecord]:
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        missing = set(ORBIT_COLUMNS) - set(rd.fieldnames or ())
        if missing:
            raise ValueError(f"orbit store is missing columns {sorted(missing)}")
        for row in rd:
            f = {k: float(row[k]) for k in ORBIT_COLUMNS}
            out.append(
                OrbitRecord(
                    m=f["m"],
                    p=np.array([f["u1"], f["u2"], f["v1"], f["v2"]]),
                    E_hat=f["E_hat"],
                    residual_norm=f["residual_norm"],
                    A_value=f["A_value"],
                    closure_error=f["closure_error"],
                )
            )
    return sorted(out, key=lambda r: r.m)


def with_closure(rec: OrbitRecord, h: float = DEFAULT_STEP) -> OrbitRecord:
    if math.isnan(rec.closure_error):
        return replace(rec, closure_error=closure_error(rec.p, rec.m, rec.E_hat, h))
    return rec
