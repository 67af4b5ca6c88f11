"""Command-line driver: ``pps4bp <group> <command> [options]``.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import functools
import sys

import click

from . import _backend, model, orbit, sweep
from .integrate import DEFAULT_STEP
from .spectrum import REALITY_TOL


def _mass(ctx, param, value):
    if value is None:
        return value
    vals = value if isinstance(value, tuple) else (value,)
    for v in vals:
        if not 0.0 < v <= 1.0:
            raise click.BadParameter(f"{v} is outside (0, 1]")
    return value


def numeric_options(f):
    opts = [
        click.option("--h-step", "h", type=float, default=DEFAULT_STEP, show_default="pi/200000", help="RK4 step in s."),
        click.option("--newton-tol", type=float, default=1e-12, show_default=True),
        click.option("--max-iter", type=int, default=25, show_default=True),
        click.option("--class-tol", type=float, default=REALITY_TOL, show_default=True),
        click.option("--orbits", "orbits_path", type=click.Path(dir_okay=False), help="Orbit store CSV (read and updated)."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def numerical(f):
    """Turn numerical failures into exit code 1."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (ArithmeticError, model.SingularConfigurationError) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _config(**kw) -> sweep.SweepConfig:
    try:
        return sweep.SweepConfig(**kw)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


def _progress(rec):
    click.echo(f"  m={rec.m:.6g} E_hat={rec.E_hat:.12f} |r|={rec.residual_norm:.1e} it={rec.iterations}", err=True)


@click.group()
@click.option("--backend", type=click.Choice(sorted(_backend.BACKENDS)), default=None, help="Kernel backend (default: compiled when built).")
def main(backend):
    """Symmetry-reduced stability of symmetric SBC orbits in the pairwise symmetric four-body problem."""
    if backend:
        _backend.use(backend)


@main.group("orbit")
def orbit_group():
    """Refine and continue the orbit family."""


@orbit_group.command("refine")
@click.option("--m", "m", type=float, required=True, callback=_mass)
@numeric_options
@click.option("--out", type=click.Path(dir_okay=False), help="Write the orbit as a one-row orbit store.")
@numerical
def orbit_refine(m, h, newton_tol, max_iter, class_tol, orbits_path, out):
    """Converged orbit at a single mass, reached from the built-in seed."""
    cfg = _config(values=(m,), h=h, newton_tol=newton_tol, max_iter=max_iter, class_tol=class_tol, orbits_path=orbits_path)
    rec = orbit.with_closure(sweep.build_family(cfg, _progress)[m], h)
    click.echo(
        f"m={rec.m:.17g}\nE_hat={rec.E_hat:.17g}\np={' '.join(f'{x:.17g}' for x in rec.p)}\n"
        f"residual={rec.residual_norm:.3e}\nA={rec.A_value:.3e}\nclosure={rec.closure_error:.3e}"
    )
    if out:
        orbit.write_orbit_store([rec], out)


@orbit_group.command("continue")
@click.option("--from", "m_from", type=float, default=0.01, show_default=True, callback=_mass)
@click.option("--to", "m_to", type=float, default=1.0, show_default=True, callback=_mass)
@click.option("--step", type=float, default=0.01, show_default=True)
@numeric_options
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Orbit store CSV to write.")
@numerical
def orbit_continue(m_from, m_to, step, h, newton_tol, max_iter, class_tol, orbits_path, out):
    """Continue the family over a mass grid and write the orbit store."""
    cfg = _config(start=m_from, stop=m_to, step=step, h=h, newton_tol=newton_tol, max_iter=max_iter, orbits_path=orbits_path)
    fam = sweep.build_family(cfg, _progress)
    recs = [orbit.with_closure(fam[g], h) for g in sorted(fam)]
    orbit.write_orbit_store(recs, out)
    click.echo(f"wrote {len(recs)} orbits to {out}")


@main.group("stability")
def stability_group():
    """Reduced stability analysis."""


@stability_group.command("sweep")
@click.option("--from", "m_from", type=float, default=0.01, show_default=True, callback=_mass)
@click.option("--to", "m_to", type=float, default=1.0, show_default=True, callback=_mass)
@click.option("--step", type=float, default=0.01, show_default=True)
@click.option("--m", "m_values", type=float, multiple=True, callback=_mass, help="Explicit masses (overrides the range).")
@numeric_options
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Results CSV.")
@click.option("--crosscheck", is_flag=True, help="Also integrate the full period and compare with W^4.")
@numerical
def stability_sweep(m_from, m_to, step, m_values, h, newton_tol, max_iter, class_tol, orbits_path, out, crosscheck):
    """Sweep the mass grid and write one results row per mass."""
    cfg = _config(
        start=m_from, stop=m_to, step=step, values=tuple(m_values) or None, h=h, newton_tol=newton_tol,
        max_iter=max_iter, class_tol=class_tol, orbits_path=orbits_path, out_path=out, crosscheck=crosscheck,
    )
    rows = sweep.run_sweep(cfg, _progress, periodicity=False)
    for r in rows:
        line = f"m={r.m:.4g}  {r.klass}"
        if crosscheck:
            line += f"  W4 defect={r.diagnostics['crosscheck'].w4_defect:.2e}"
        click.echo(line)
    click.echo(f"wrote {len(rows)} rows to {out}")


def _single(m, crosscheck, **kw):
    cfg = _config(values=(m,), crosscheck=crosscheck, **kw)
    rec = orbit.with_closure(sweep.build_family(cfg, _progress)[m], cfg.h)
    return sweep.analyse(rec, cfg)


@stability_group.command("single")
@click.option("--m", "m", type=float, required=True, callback=_mass)
@numeric_options
@click.option("--out", type=click.Path(dir_okay=False), help="Results CSV with one row.")
@click.option("--crosscheck", is_flag=True)
@numerical
def stability_single(m, h, newton_tol, max_iter, class_tol, orbits_path, out, crosscheck):
    """Eigenvalues, multipliers and class at one mass."""
    row = _single(m, crosscheck, h=h, newton_tol=newton_tol, max_iter=max_iter, class_tol=class_tol, orbits_path=orbits_path)
    click.echo("\n".join(f"{k}={v}" for k, v in zip(sweep.RESULT_COLUMNS, row.as_csv())))
    if out:
        sweep.write_results([row], out)


@main.group("check")
def check_group():
    """Diagnostics."""


@check_group.command("invariants")
@click.option("--m", "m", type=float, required=True, callback=_mass)
@numeric_options
@click.option("--crosscheck", is_flag=True)
@numerical
def check_invariants(m, h, newton_tol, max_iter, class_tol, orbits_path, crosscheck):
    """Print the invariant report for the orbit at one mass."""
    row = _single(m, crosscheck, h=h, newton_tol=newton_tol, max_iter=max_iter, class_tol=class_tol, orbits_path=orbits_path)
    click.echo(sweep.format_invariants(row))


@main.group("monodromy")
def monodromy_group():
    """Full-period comparisons."""


@monodromy_group.command("crosscheck")
@click.option("--m", "m", type=float, required=True, callback=_mass)
@numeric_options
@numerical
def monodromy_crosscheck(m, h, newton_tol, max_iter, class_tol, orbits_path):
    """Compare Y0^-1 Y(2 pi) with W^4 and report the trivial-direction defects."""
    row = _single(m, True, h=h, newton_tol=newton_tol, max_iter=max_iter, class_tol=class_tol, orbits_path=orbits_path)
    cc = row.diagnostics["crosscheck"]
    click.echo(f"m={m}")
    click.echo(f"|Y0^-1 Y(2pi) - W^4|_max = {cc.w4_defect:.3e}")
    click.echo(f"quarter-period factor defect = {cc.quarter_factor_defect:.3e}")
    click.echo(f"Y(pi/2) factor defect = {cc.half_quarter_defect:.3e}")
    click.echo("trivial right defects = " + ", ".join(f"{x:.3e}" for x in cc.trivial_right_defects))
    click.echo("trivial left defects = " + ", ".join(f"{x:.3e}" for x in cc.trivial_left_defects))
    click.echo("monodromy eigenvalues = " + ", ".join(sweep._cfmt(complex(z)) for z in cc.monodromy_eigenvalues))


@main.group("figure")
def figure_group():
    """Plot-data export."""


@figure_group.command("emit")
@click.argument("results", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--script", type=click.Path(dir_okay=False), help="Also write a gnuplot script.")
@click.option("--class-tol", type=float, default=REALITY_TOL, show_default=True)
def figure_emit(results, out, script, class_tol):
    """Real stability eigenvalues against m, complex entries left blank."""
    try:
        n = sweep.emit_figure_data(results, out, script, class_tol)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    click.echo(f"wrote {n} rows to {out}")


if __name__ == "__main__":
    main()
