"""Time the compiled and pure-Python kernels on the same work.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Each case runs on the built-in m = 0.539 seed state.  The compiled backend is
skipped with a note when the extension is not built.
"""

import argparse
import math
import time

import numpy as np

from pps4bp import _backend, model, orbit
from pps4bp.integrate import StepSpec, flow, flow_with_variational


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(steps):
    z0 = orbit.embed_symmetric(orbit.printed_seed())
    m = orbit.SEED_MASS
    E = model.solve_energy(z0, m)
    spec = StepSpec(0.0, steps * math.pi / 200000, math.pi / 200000)
    Y0 = np.zeros((8, 9))
    Y0[:, :8] = np.eye(8)
    return {
        f"derivatives x{steps}": lambda b: [_backend.BACKENDS[b].derivatives(z0, m, E) for _ in range(steps)][-1][1],
        f"flow, {steps} RK4 steps": lambda b: flow(z0, spec, m, E, backend=b).z,
        f"flow + variational, {steps} RK4 steps": lambda b: flow_with_variational(z0, Y0, spec, m, E, backend=b).Y,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    names = [b for b in ("compiled", "python") if b in _backend.BACKENDS]
    if "compiled" not in names:
        print("compiled core not built; run `python3 setup.py build_ext --inplace` to compare")
    print(f"{'case':40s}" + "".join(f"{n:>14s}" for n in names) + ("     speedup  max|diff|" if len(names) == 2 else ""))
    for label, fn in cases(args.steps).items():
        res = {b: best_of(lambda: fn(b), args.repeat) for b in names}
        line = f"{label:40s}" + "".join(f"{res[b][0] * 1e3:11.2f} ms" for b in names)
        if len(names) == 2:
            diff = np.abs(np.asarray(res["compiled"][1]) - np.asarray(res["python"][1])).max()
            line += f"  {res['python'][0] / res['compiled'][0]:9.1f}x  {diff:9.1e}"
        print(line)


if __name__ == "__main__":
    main()
