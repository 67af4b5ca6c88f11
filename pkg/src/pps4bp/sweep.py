"""Mass sweeps: continuation, reduction and classification per grid point.

Also owns the results CSV and the plot-data export.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

from . import orbit, reduction
from .integrate import DEFAULT_STEP
from .orbit import OrbitRecord
from .spectrum import REALITY_TOL

RESULT_COLUMNS = [
    "m", "E_hat",
    "lam1_re", "lam1_im", "lam2_re", "lam2_im", "lam3_re", "lam3_im",
    "class",
    "mult1_re", "mult1_im", "mult2_re", "mult2_im",
    "residual", "closure", "A_value",
]
GRID_EPS = 1e-9


class SweepError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    start: float = 0.01
    stop: float = 1.0
    step: float = 0.01
    values: tuple[float, ...] | None = None
    h: float = DEFAULT_STEP
    newton_tol: float = 1e-12
    max_iter: int = 25
    class_tol: float = REALITY_TOL
    orbits_path: str | None = None
    out_path: str | None = None
    crosscheck: bool = False

    def __post_init__(self):
        if self.values is None:
            if not (self.step > 0 and self.stop >= self.start):
                raise ValueError("grid needs step > 0 and stop >= start")
            n = (self.stop - self.start) / self.step
            if abs(n - round(n)) * self.step > 1e-12:
                raise ValueError("step must divide the range")
        for mk in self.grid():
            if not 0.0 < mk <= 1.0:
                raise ValueError(f"grid value {mk} outside (0, 1]")

    def grid(self) -> list[float]:
        if self.values is not None:
            return sorted({float(v) for v in self.values})
        n = int(round((self.stop - self.start) / self.step))
        return [round(self.start + k * self.step, 12) for k in range(n + 1)]

    @property
    def march_step(self) -> float:
        if self.values is None:
            return self.step
        return 0.01


@dataclass
class SweepRow:
    m: float
    E_hat: float
    lam: tuple[complex, complex, complex]
    klass: str
    mult: tuple[complex, complex]
    residual: float
    closure: float
    A_value: float
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def as_csv(self) -> list[str]:
        vals = [self.m, self.E_hat]
        for z in self.lam:
            vals += [z.real, z.imag]
        out = [_num(v) for v in vals] + [self.klass]
        for z in self.mult:
            out += [_num(z.real), _num(z.imag)]
        out += [_num(self.residual), _num(self.closure), _num(self.A_value)]
        return out


def _num(x) -> str:
    return f"{float(x):.17g}"


def build_family(cfg: SweepConfig, progress=None) -> dict[float, OrbitRecord]:
    """Converged orbits at every grid point, keyed by grid value.

    Orbits found in the store at ``cfg.orbits_path`` are reused; the rest are
    reached by continuation from the printed m = 0.539 seed in both
    directions.
    """
    grid = cfg.grid()
    found: dict[float, OrbitRecord] = {}
    if cfg.orbits_path and os.path.exists(cfg.orbits_path):
        for rec in orbit.read_orbit_store(cfg.orbits_path):
            for g in grid:
                if abs(rec.m - g) <= GRID_EPS:
                    found[g] = rec
    missing = [g for g in grid if g not in found]
    if not missing:
        return found

    seed = orbit.newton_refine(orbit.printed_seed(), cfg.newton_tol, cfg.max_iter, cfg.h)
    chain = [seed]
    step = cfg.march_step
    hi, lo = max(missing), min(missing)
    try:
        if hi > seed.m + GRID_EPS:
            chain += orbit.continue_in_mass(seed, hi, step, cfg.newton_tol, cfg.max_iter, cfg.h, progress=progress)
        if lo < seed.m - GRID_EPS:
            chain += orbit.continue_in_mass(seed, lo, -step, cfg.newton_tol, cfg.max_iter, cfg.h, progress=progress)
    except orbit.ContinuationStallError as exc:
        raise SweepError(str(exc)) from exc
    chain.sort(key=lambda r: r.m)
    for g in missing:
        near = min(chain, key=lambda r: abs(r.m - g))
        if abs(near.m - g) <= GRID_EPS:
            found[g] = near
            continue
        # off the marching grid: a short continuation from the nearest orbit
        recs = orbit.continue_in_mass(near, g, g - near.m, cfg.newton_tol, cfg.max_iter, cfg.h)
        found[g] = recs[-1]
    return found


def analyse(rec: OrbitRecord, cfg: SweepConfig, periodicity: bool = True) -> SweepRow:
    red = reduction.reduce(rec.z0, rec.m, rec.E_hat, cfg.h, cfg.class_tol)
    diag = {"orbit": rec, "invariants": red.invariants(), "reduction": red}
    if periodicity:
        diag["periodicity"] = orbit.verify_periodicity(rec, cfg.h)
    if cfg.crosscheck:
        diag["crosscheck"] = reduction.monodromy_crosscheck(rec.z0, rec.m, rec.E_hat, red, cfg.h)
    mults = red.multipliers
    return SweepRow(
        m=rec.m,
        E_hat=rec.E_hat,
        lam=red.lam,
        klass=red.stability.value,
        mult=(mults[0], mults[2]),
        residual=rec.residual_norm,
        closure=rec.closure_error,
        A_value=rec.A_value,
        diagnostics=diag,
    )


def run_sweep(cfg: SweepConfig, progress=None, periodicity: bool = True) -> list[SweepRow]:
    """Continuation, reduction and classification over the configured grid.

    Writes the results CSV when ``cfg.out_path`` is set and the orbit store
    when ``cfg.orbits_path`` is set.
    """
    family = build_family(cfg, progress)
    recs = [orbit.with_closure(family[g], cfg.h) for g in sorted(family)]
    if cfg.orbits_path:
        orbit.write_orbit_store(recs, cfg.orbits_path)
    rows = [analyse(r, cfg, periodicity) for r in recs]
    if cfg.out_path:
        write_results(rows, cfg.out_path)
    return rows


def write_results(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_COLUMNS)
        for r in sorted(rows, key=lambda r: r.m):
            w.writerow(r.as_csv())


def read_results(path) -> list[SweepRow]:
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != RESULT_COLUMNS:
            raise ValueError("unexpected results header")
        for row in rd:
            f = {k: float(v) for k, v in row.items() if k != "class"}

            def c(name):
                return complex(f[f"{name}_re"], f[f"{name}_im"])

            out.append(
                SweepRow(
                    m=f["m"],
                    E_hat=f["E_hat"],
                    lam=(c("lam1"), c("lam2"), c("lam3")),
                    klass=row["class"],
                    mult=(c("mult1"), c("mult2")),
                    residual=f["residual"],
                    closure=f["closure"],
                    A_value=f["A_value"],
                )
            )
    return out


FIGURE_SCRIPT = """# gnuplot script for the real stability eigenvalues against m
set datafile separator ','
set key autotitle columnhead
set xlabel 'm'
set ylabel 'eigenvalue'
set yrange [-1.5:1.5]
plot '{data}' using 1:2 with points pt 7 ps 0.5 title 'lam1', \\
     '' using 1:3 with points pt 7 ps 0.5 title 'lam2', \\
     '' using 1:4 with points pt 7 ps 0.5 title 'lam3'
"""


def emit_figure_data(results_path, out_path, script_path=None, tol: float = REALITY_TOL) -> int:
    """Write (m, lam1, lam2, lam3) with complex entries left blank.

    Returns the number of rows written.
    """
    rows = read_results(results_path)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "lam1", "lam2", "lam3"])
        for r in rows:
            w.writerow([_num(r.m)] + [_num(z.real) if abs(z.imag) <= tol else "" for z in r.lam])
    if script_path:
        with open(script_path, "w") as fh:
            fh.write(FIGURE_SCRIPT.format(data=os.path.basename(str(out_path))))
    return len(rows)


def format_invariants(row: SweepRow) -> str:
    """Plain-text invariant report for one analysed orbit."""
    d = row.diagnostics
    lines = [
        f"m = {row.m:.17g}",
        f"E_hat = {row.E_hat:.17g}",
        f"shooting residual = {row.residual:.3e}",
        f"A value = {row.A_value:.3e}",
        f"closure error = {row.closure:.3e}",
    ]
    per = d.get("periodicity")
    if per is not None:
        lines += [
            f"gamma_hat drift = {per.gamma_drift:.3e}",
            f"A drift = {per.A_drift:.3e}",
            f"S_F defect = {per.sf_defect:.3e}",
            f"S_G defect = {per.sg_defect:.3e}",
        ]
        lines += [f"SBC {k} = {v:.3e}" for k, v in per.sbc_values.items()]
    for k, v in d["invariants"].items():
        lines.append(f"{k} = {v:.3e}")
    names = ("lam1", "lam2", "lam3")
    lines += [f"{n} = {_cfmt(z)}" for n, z in zip(names, row.lam)]
    red = d["reduction"]
    if red.lam3_flagged:
        lines.append(f"flag: lam3 is {abs(red.eigs.lam3 + 1.0):.3e} away from -1")
    lines += [f"multiplier = {_cfmt(z)}  |.| = {abs(z):.12f}" for z in red.multipliers]
    lines.append(f"class = {row.klass}")
    cc = d.get("crosscheck")
    if cc is not None:
        lines += [
            f"|Y0^-1 Y(2pi) - W^4|_max = {cc.w4_defect:.3e}",
            f"quarter-period factor defect = {cc.quarter_factor_defect:.3e}",
            f"Y(pi/2) factor defect = {cc.half_quarter_defect:.3e}",
            "trivial direction defects = " + ", ".join(f"{x:.3e}" for x in cc.trivial_right_defects + cc.trivial_left_defects),
        ]
    return "\n".join(lines)


def _cfmt(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:.10f}"
    return f"{z.real:.10f} {'+' if z.imag >= 0 else '-'} {abs(z.imag):.10f}i"


def class_consistent(row: SweepRow, tol: float = REALITY_TOL) -> bool:
    return reduction.classify(row.lam[0], row.lam[1], tol).value == row.klass


def nearest_row(rows, m):
    return min(rows, key=lambda r: abs(r.m - m))


def lam_real(row: SweepRow, i: int, tol: float = REALITY_TOL):
    z = row.lam[i]
    return z.real if abs(z.imag) <= tol else math.nan
