"""Fixed-step RK4 propagation of the regularized flow.

The state, the 8x8 fundamental matrix (optionally with a ninth energy
sensitivity column) and the physical time t are advanced together in one
coupled step.  Work is delegated to the compiled core when available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend

DEFAULT_STEP = math.pi / 200000


class IntegrationError(ArithmeticError):
    """A kernel met a singular configuration or produced a non-finite value."""


@dataclass(frozen=True)
class StepSpec:
    """Regularized-time span (s0, s1) divided into equal RK4 steps.

    The requested step ``h`` is adjusted so that the span is an exact integer
    number of steps; no partial final step is ever taken.
    """

    s0: float
    s1: float
    h: float = DEFAULT_STEP

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step must be positive")
        if self.s1 < self.s0:
            raise ValueError("span must satisfy s1 >= s0")

    @property
    def length(self) -> float:
        return self.s1 - self.s0

    @property
    def steps(self) -> int:
        n = int(round(self.length / self.h))
        if n == 0 and self.length > 0:
            n = 1
        return n

    @property
    def step(self) -> float:
        """Step actually used."""
        return self.length / self.steps if self.steps else self.h

    @classmethod
    def span(cls, length: float, h: float = DEFAULT_STEP) -> "StepSpec":
        return cls(0.0, float(length), h)


@dataclass
class TrajectorySample:
    s: float
    z: np.ndarray
    t: float
    Y: np.ndarray | None = None


def _call(fn, *args):
    try:
        return fn(*args)
    except _backend.KernelErrors as exc:
        raise IntegrationError(str(exc)) from None


def rk4_step(z, h: float, m: float, E_hat: float, Y=None, t: float = 0.0, backend: str | None = None):
    """One classical RK4 step of z' = J grad(gamma_hat), Y' = J hess Y, t' = dt/ds.

    Returns ``(z_next, Y_next, t_next)``; ``Y_next`` is None when ``Y`` is.
    """
    k = _backend.get(backend)
    return _call(k.rk4_step, z, Y, t, h, m, E_hat)


def flow(z0, spec: StepSpec, m: float, E_hat: float, t0: float = 0.0, backend: str | None = None) -> TrajectorySample:
    k = _backend.get(backend)
    z, t = _call(k.flow, z0, m, E_hat, spec.step, spec.steps, t0)
    return TrajectorySample(spec.s1, z, t)


def flow_with_variational(
    z0, Y0, spec: StepSpec, m: float, E_hat: float, t0: float = 0.0, backend: str | None = None
) -> TrajectorySample:
    """Final state with Y(s1), where Y(s0) = Y0 (8x8, or 8x9 with an energy column)."""
    k = _backend.get(backend)
    z, Y, t = _call(k.flow_variational, z0, Y0, m, E_hat, spec.step, spec.steps, t0)
    return TrajectorySample(spec.s1, z, t, Y)


def sample_trajectory(
    z0, spec: StepSpec, stride: int, m: float, E_hat: float, t0: float = 0.0, backend: str | None = None
) -> list[TrajectorySample]:
    """Every ``stride``-th state along the span, both endpoints included."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    k = _backend.get(backend)
    idx, zs, ts = _call(k.sample, z0, m, E_hat, spec.step, spec.steps, int(stride), t0)
    return [TrajectorySample(spec.s0 + i * spec.step, z, t) for i, z, t in zip(idx, zs, ts)]


def sample_arrays(z0, spec: StepSpec, stride: int, m: float, E_hat: float, backend: str | None = None):
    """Array form of :func:`sample_trajectory`: (s, z, t) with shapes (k,), (k, 8), (k,)."""
    k = _backend.get(backend)
    idx, zs, ts = _call(k.sample, z0, m, E_hat, spec.step, spec.steps, int(stride), 0.0)
    return spec.s0 + idx * spec.step, zs, ts
