"""Closed-form eigenvalues of 3x3 matrices and the reciprocal-pair solve."""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

REALITY_TOL = 1e-8


@dataclass(frozen=True)
class EigenTriple:
    roots: tuple[complex, complex, complex]
    reality_flags: tuple[bool, bool, bool]
    residuals: tuple[float, float, float]

    @property
    def all_real(self) -> bool:
        return all(self.reality_flags)


def char_poly(M) -> tuple[float, float, float]:
    """Coefficients (a, b, c) of det(lam I - M) = lam^3 + a lam^2 + b lam + c."""
    M = np.asarray(M, dtype=float)
    tr = M[0, 0] + M[1, 1] + M[2, 2]
    minors = (
        M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
        + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
    )
    return -tr, minors, -float(np.linalg.det(M))


def _poly(a, b, c, x):
    return ((x + a) * x + b) * x + c


def _dpoly(a, b, x):
    return (3 * x + 2 * a) * x + b


def _polish(a, b, c, x):
    d = _dpoly(a, b, x)
    if d == 0:
        return x
    y = x - _poly(a, b, c, x) / d
    # keep the polish only if it does not make things worse
    return y if abs(_poly(a, b, c, y)) <= abs(_poly(a, b, c, x)) else x


def cubic_roots(a: float, b: float, c: float) -> list[complex]:
    """Roots of lam^3 + a lam^2 + b lam + c via the depressed cubic.

    Three real roots use the trigonometric form, one real root the
    hyperbolic form; the remaining complex pair comes from deflation and is
    conjugate-symmetric by construction.
    """
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    disc = 4.0 * p ** 3 + 27.0 * q * q

    if p == 0.0 and q == 0.0:
        return [complex(-shift)] * 3

    if disc <= 0.0 and p < 0.0:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * r)
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg) / 3.0
        xs = [r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
        # deflate from the best separated root; a double root is then
        # recovered from the quadratic instead of the ill-conditioned angle
        gap = [min(abs(xs[k] - xs[j]) for j in range(3) if j != k) for k in range(3)]
        x = xs[gap.index(max(gap))]
    elif p < 0.0:
        r = math.sqrt(-p / 3.0)
        arg = -3.0 * abs(q) / (2.0 * p) * math.sqrt(-3.0 / p)
        x = -2.0 * math.copysign(1.0, q) * r * math.cosh(math.acosh(max(arg, 1.0)) / 3.0)
    elif p > 0.0:
        r = math.sqrt(p / 3.0)
        x = -2.0 * r * math.sinh(math.asinh(3.0 * q / (2.0 * p) / r) / 3.0)
    else:
        x = -math.copysign(abs(q) ** (1.0 / 3.0), q)
    x1 = _polish(a, b, c, x - shift)

    # deflate: lam^2 + (a + x1) lam + (b + x1 (a + x1))
    bb = a + x1
    cc = b + x1 * bb
    d = bb * bb - 4.0 * cc
    # a clustered pair is left unpolished so that its sum stays exact
    clustered = abs(d) <= 1e-8 * max(1.0, bb * bb)
    if d >= 0.0:
        # numerically real pair; stable quadratic formula
        s = -0.5 * (bb + math.copysign(math.sqrt(d), bb))
        x2 = s
        x3 = cc / s if s != 0.0 else -bb - s
        if not clustered:
            x2, x3 = _polish(a, b, c, x2), _polish(a, b, c, x3)
        return [complex(x1), complex(x2), complex(x3)]
    z = complex(-0.5 * bb, 0.5 * math.sqrt(-d))
    if not clustered:
        z = _polish(a, b, c, z)
    z = complex(z.real, abs(z.imag))
    return [complex(x1), z, z.conjugate()]


def eig3(M, tol: float = REALITY_TOL) -> EigenTriple:
    """Eigenvalues of a real 3x3 matrix with per-root reality flags and residuals."""
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError("eig3 needs a 3x3 matrix")
    a, b, c = char_poly(M)
    roots = cubic_roots(a, b, c)
    flags = tuple(abs(r.imag) <= tol for r in roots)
    res = tuple(float(abs(_poly(a, b, c, r))) for r in roots)
    return EigenTriple(tuple(roots), flags, res)


def reciprocal_pair(k: complex) -> tuple[complex, complex]:
    """The two roots of lam^2 - 2 k lam + 1 = 0, i.e. the preimages of k under (lam + 1/lam)/2.

    The root of larger modulus is computed first, the other as its reciprocal.
    For real k in [-1, 1] the first root lies in the closed upper half plane.
    """
    k = complex(k)
    s = cmath.sqrt(k * k - 1.0)
    if (k.real * s.real + k.imag * s.imag) < 0.0:
        s = -s
    lam = k + s
    return lam, 1.0 / lam


def f_map(lam: complex) -> complex:
    return 0.5 * (lam + 1.0 / lam)


class ModulusClass(str, enum.Enum):
    INSIDE = "inside"
    ON_CIRCLE = "on_circle"
    OUTSIDE = "outside"


def modulus_class(lam: complex, tol: float = REALITY_TOL) -> ModulusClass:
    d = abs(lam) - 1.0
    if abs(d) <= tol:
        return ModulusClass.ON_CIRCLE
    return ModulusClass.INSIDE if d < 0 else ModulusClass.OUTSIDE
