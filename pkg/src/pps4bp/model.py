"""Regularized planar pairwise symmetric four-body problem.

Bodies sit at (x1, x2), (x3, x4), (-x1, -x2), (-x3, -x4) with masses
1, m, 1, m.  The regularized phase state is the 8-vector

    z = (u1, u2, u3, u4, v1, v2, v3, v4)

obtained by complex squaring of the relative positions,
(u1 + i u2)^2 = (x1 - x3) + i (x2 - x4) and
(u3 + i u4)^2 = (x1 + x3) + i (x2 + x4), together with the conjugate
momenta v = (dx/du)^T w.  Everything here is a pure function of numpy
arrays; the hot integration loops live in the compiled core.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularConfigurationError(ValueError):
    """Raised when a formula hits a zero denominator."""


# ---------------------------------------------------------------------------
# symmetry constants

J = np.block([[np.zeros((4, 4)), np.eye(4)], [-np.eye(4), np.zeros((4, 4))]])

F_BLOCK = np.array([[-1.0, 0.0], [0.0, 1.0]])
G_BLOCK = np.eye(2)


def _blocks(rows):
    return np.block([[b if b is not None else np.zeros((2, 2)) for b in row] for row in rows])


S_F = _blocks(
    [
        [None, F_BLOCK, None, None],
        [-F_BLOCK, None, None, None],
        [None, None, None, F_BLOCK],
        [None, None, -F_BLOCK, None],
    ]
)
S_G = _blocks(
    [
        [-G_BLOCK, None, None, None],
        [None, G_BLOCK, None, None],
        [None, None, G_BLOCK, None],
        [None, None, None, -G_BLOCK],
    ]
)
Q = S_F.T @ S_G

# the 4x4 block diag(-G, G) of the K block formula
HG = _blocks([[-G_BLOCK, None], [None, G_BLOCK]])


@dataclass(frozen=True)
class SymmetryConstants:
    J: np.ndarray = J
    S_F: np.ndarray = S_F
    S_G: np.ndarray = S_G
    Q: np.ndarray = Q
    F: np.ndarray = F_BLOCK
    G: np.ndarray = G_BLOCK


SYMMETRY = SymmetryConstants()


# ---------------------------------------------------------------------------
# states

@dataclass(frozen=True)
class PhysicalState:
    """Positions x = (x1..x4) and conjugate momenta w = (w1..w4)."""

    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(4))
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float).reshape(4))


def check_mass(m: float) -> float:
    m = float(m)
    if not (0.0 < m <= 1.0):
        raise ValueError(f"mass parameter must lie in (0, 1], got {m!r}")
    return m


def as_state(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (8,):
        raise ValueError(f"phase state must have shape (8,), got {z.shape}")
    return z


# ---------------------------------------------------------------------------
# scalar quantities

def time_rescale(z) -> float:
    """dt/ds = (u1^2 + u2^2)(u3^2 + u4^2)."""
    u1, u2, u3, u4 = np.asarray(z, dtype=float)[:4]
    return float((u1 * u1 + u2 * u2) * (u3 * u3 + u4 * u4))


def angular_momentum_reg(z) -> float:
    u1, u2, u3, u4, v1, v2, v3, v4 = as_state(z)
    return float(0.5 * (-v1 * u2 + v2 * u1 - v3 * u4 + v4 * u3))


def angular_momentum_phys(p: PhysicalState) -> float:
    x1, x2, x3, x4 = p.x
    w1, w2, w3, w4 = p.w
    return float(x1 * w2 - x2 * w1 + x3 * w4 - x4 * w3)


def _kinetic_coeffs(m):
    return (1.0 + 1.0 / m) / 16.0, (1.0 - 1.0 / m) / 8.0


def _m_products(z):
    u1, u2, u3, u4, v1, v2, v3, v4 = z
    M1 = v1 * u1 - v2 * u2
    M2 = v1 * u2 + v2 * u1
    M3 = v3 * u3 - v4 * u4
    M4 = v3 * u4 + v4 * u3
    M5 = u1 * u1 - u2 * u2 + u3 * u3 - u4 * u4
    M6 = 2.0 * u1 * u2 + 2.0 * u3 * u4
    M7 = u1 * u1 - u2 * u2 - u3 * u3 + u4 * u4
    M8 = 2.0 * u1 * u2 - 2.0 * u3 * u4
    return M1, M2, M3, M4, M5, M6, M7, M8


def gamma_hat(z, m: float, E_hat: float) -> float:
    """Regularized Hamiltonian (dt/ds)(H - E_hat) as a six-term sum."""
    z = as_state(z)
    u1, u2, u3, u4, v1, v2, v3, v4 = z
    c1, c2 = _kinetic_coeffs(m)
    M1, M2, M3, M4, M5, M6, M7, M8 = _m_products(z)
    a = u1 * u1 + u2 * u2
    b = u3 * u3 + u4 * u4
    r5 = np.hypot(M5, M6)
    r7 = np.hypot(M7, M8)
    if r5 == 0.0 or r7 == 0.0:
        raise SingularConfigurationError("square-root denominator vanishes")
    return float(
        c1 * ((v1 * v1 + v2 * v2) * b + (v3 * v3 + v4 * v4) * a)
        + c2 * (M3 * M1 + M4 * M2)
        - a * b / r5
        - 2.0 * m * (a + b)
        - m * m * a * b / r7
        - E_hat * a * b
    )


def solve_energy(z, m: float) -> float:
    """Energy placing ``z`` on the level set gamma_hat = 0."""
    z = as_state(z)
    ab = time_rescale(z)
    if ab == 0.0:
        raise SingularConfigurationError("energy is undetermined at a binary collision")
    return gamma_hat(z, m, 0.0) / ab


# ---------------------------------------------------------------------------
# derivatives


def _radial_term(u, sign):
    """Value, gradient and Hessian (in u) of ab / |U1^2 + sign U3^2|."""
    u1, u2, u3, u4 = u
    a = u1 * u1 + u2 * u2
    b = u3 * u3 + u4 * u4
    da = np.array([2 * u1, 2 * u2, 0.0, 0.0])
    db = np.array([0.0, 0.0, 2 * u3, 2 * u4])
    g = a * b
    dg = b * da + a * db
    d2g = np.diag([2 * b, 2 * b, 2 * a, 2 * a]) + np.outer(da, db) + np.outer(db, da)

    mr = u1 * u1 - u2 * u2 + sign * (u3 * u3 - u4 * u4)
    mi = 2 * u1 * u2 + sign * 2 * u3 * u4
    dmr = np.array([2 * u1, -2 * u2, sign * 2 * u3, -sign * 2 * u4])
    dmi = np.array([2 * u2, 2 * u1, sign * 2 * u4, sign * 2 * u3])
    d2mr = np.diag([2.0, -2.0, 2.0 * sign, -2.0 * sign])
    d2mi = np.zeros((4, 4))
    d2mi[0, 1] = d2mi[1, 0] = 2.0
    d2mi[2, 3] = d2mi[3, 2] = 2.0 * sign

    q = mr * mr + mi * mi
    if q == 0.0:
        raise SingularConfigurationError("square-root denominator vanishes")
    dq = 2 * mr * dmr + 2 * mi * dmi
    d2q = 2 * (np.outer(dmr, dmr) + np.outer(dmi, dmi)) + 2 * mr * d2mr + 2 * mi * d2mi

    r = np.sqrt(q)
    q32 = q * r
    f = g / r
    df = dg / r - 0.5 * g / q32 * dq
    d2f = (
        d2g / r
        - 0.5 / q32 * (np.outer(dg, dq) + np.outer(dq, dg))
        - 0.5 * g / q32 * d2q
        + 0.75 * g / (q32 * q) * np.outer(dq, dq)
    )
    return f, df, d2f


# constant Hessians of the bilinear products M1..M4 in z
def _bilinear_hessians():
    hs = [np.zeros((8, 8)) for _ in range(4)]
    pairs = [
        [(0, 4, 1.0), (1, 5, -1.0)],  # M1 = v1 u1 - v2 u2
        [(1, 4, 1.0), (0, 5, 1.0)],  # M2 = v1 u2 + v2 u1
        [(2, 6, 1.0), (3, 7, -1.0)],  # M3
        [(3, 6, 1.0), (2, 7, 1.0)],  # M4
    ]
    for h, entries in zip(hs, pairs):
        for i, j, c in entries:
            h[i, j] = h[j, i] = c
    return hs


_D2M = _bilinear_hessians()


def _derivatives(z, m, E_hat, want_hessian):
    z = as_state(z)
    u1, u2, u3, u4, v1, v2, v3, v4 = z
    c1, c2 = _kinetic_coeffs(m)
    a = u1 * u1 + u2 * u2
    b = u3 * u3 + u4 * u4
    V1 = v1 * v1 + v2 * v2
    V3 = v3 * v3 + v4 * v4

    grad = np.zeros(8)
    hess = np.zeros((8, 8)) if want_hessian else None

    # c1 (V1 b + V3 a)
    da = np.array([2 * u1, 2 * u2, 0, 0, 0, 0, 0, 0], dtype=float)
    db = np.array([0, 0, 2 * u3, 2 * u4, 0, 0, 0, 0], dtype=float)
    dV1 = np.array([0, 0, 0, 0, 2 * v1, 2 * v2, 0, 0], dtype=float)
    dV3 = np.array([0, 0, 0, 0, 0, 0, 2 * v3, 2 * v4], dtype=float)
    grad += c1 * (V1 * db + b * dV1 + V3 * da + a * dV3)

    # c2 (M1 M3 + M2 M4)
    M1, M2, M3, M4 = _m_products(z)[:4]
    dM = [h @ z for h in _D2M]  # quadratic forms: gradient is H z
    grad += c2 * (M3 * dM[0] + M1 * dM[2] + M4 * dM[1] + M2 * dM[3])

    # u-only potential terms
    f5, df5, d2f5 = _radial_term(z[:4], +1.0)
    f7, df7, d2f7 = _radial_term(z[:4], -1.0)
    dg = np.array([2 * u1 * b, 2 * u2 * b, 2 * u3 * a, 2 * u4 * a])
    grad[:4] += -df5 - 2.0 * m * 2.0 * z[:4] - m * m * df7 - E_hat * dg

    if want_hessian:
        hess += c1 * (
            np.diag([2 * V3, 2 * V3, 2 * V1, 2 * V1, 2 * b, 2 * b, 2 * a, 2 * a])
            + np.outer(db, dV1)
            + np.outer(dV1, db)
            + np.outer(da, dV3)
            + np.outer(dV3, da)
        )
        hess += c2 * (
            M3 * _D2M[0]
            + M1 * _D2M[2]
            + M4 * _D2M[1]
            + M2 * _D2M[3]
            + np.outer(dM[0], dM[2])
            + np.outer(dM[2], dM[0])
            + np.outer(dM[1], dM[3])
            + np.outer(dM[3], dM[1])
        )
        ga = da[:4]
        gb = db[:4]
        d2g = np.diag([2 * b, 2 * b, 2 * a, 2 * a]) + np.outer(ga, gb) + np.outer(gb, ga)
        hess[:4, :4] += -d2f5 - 4.0 * m * np.eye(4) - m * m * d2f7 - E_hat * d2g
        hess = 0.5 * (hess + hess.T)
    return grad, hess


def grad_gamma_hat(z, m: float, E_hat: float) -> np.ndarray:
    return _derivatives(z, m, E_hat, False)[0]


def hess_gamma_hat(z, m: float, E_hat: float) -> np.ndarray:
    """Symmetric 8x8 matrix of second partials of gamma_hat in z."""
    return _derivatives(z, m, E_hat, True)[1]


def vector_field(z, m: float, E_hat: float) -> np.ndarray:
    """z' = J grad(gamma_hat)."""
    return J @ grad_gamma_hat(z, m, E_hat)


def variational_rhs(z, Xi, m: float, E_hat: float) -> np.ndarray:
    return J @ hess_gamma_hat(z, m, E_hat) @ np.asarray(Xi, dtype=float)


# ---------------------------------------------------------------------------
# physical coordinates


def physical_hamiltonian(p: PhysicalState, m: float) -> float:
    x1, x2, x3, x4 = p.x
    w1, w2, w3, w4 = p.w
    d13 = np.hypot(x1, x2)
    d12 = np.hypot(x3 - x1, x4 - x2)
    d14 = np.hypot(x1 + x3, x2 + x4)
    d24 = np.hypot(x3, x4)
    if min(d13, d12, d14, d24) == 0.0:
        raise SingularConfigurationError("collision: an inter-body distance vanishes")
    return float(
        0.25 * (w1 * w1 + w2 * w2)
        + 0.25 / m * (w3 * w3 + w4 * w4)
        - 0.5 / d13
        - 2.0 * m / d12
        - 2.0 * m / d14
        - m * m / (2.0 * d24)
    )


def _position_jacobian(u):
    """dx/du, rows x1..x4, columns u1..u4."""
    u1, u2, u3, u4 = u
    return np.array(
        [
            [u1, -u2, u3, -u4],
            [u2, u1, u4, u3],
            [-u1, u2, u3, -u4],
            [-u2, -u1, u4, u3],
        ]
    )


def positions_from_u(u) -> np.ndarray:
    u1, u2, u3, u4 = u
    return np.array(
        [
            0.5 * (u1 * u1 - u2 * u2 + u3 * u3 - u4 * u4),
            u1 * u2 + u3 * u4,
            0.5 * (u3 * u3 - u4 * u4 - u1 * u1 + u2 * u2),
            u3 * u4 - u1 * u2,
        ]
    )


def to_regularized(p: PhysicalState, m: float | None = None) -> np.ndarray:
    """Map physical (x, w) to z on the principal square-root branch.

    ``m`` is accepted for symmetry with :func:`to_physical`; the map does not
    depend on it.
    """
    x1, x2, x3, x4 = p.x
    d = complex(x1 - x3, x2 - x4)
    s = complex(x1 + x3, x2 + x4)
    if d == 0 or s == 0:
        raise SingularConfigurationError("pair collision: square-root branch is degenerate")
    U1 = np.sqrt(d)
    U3 = np.sqrt(s)
    u = np.array([U1.real, U1.imag, U3.real, U3.imag])
    v = _position_jacobian(u).T @ p.w
    return np.concatenate([u, v])


def to_physical(z, m: float | None = None) -> PhysicalState:
    """Inverse of :func:`to_regularized` (positions always, momenta off SBC)."""
    z = as_state(z)
    u = z[:4]
    x = positions_from_u(u)
    M1, M2, M3, M4 = _m_products(z)[:4]
    a = u[0] ** 2 + u[1] ** 2
    b = u[2] ** 2 + u[3] ** 2
    if a == 0.0 or b == 0.0:
        raise SingularConfigurationError("momenta are undefined at a binary collision")
    R = np.array([M1, M2]) / a  # w12 - w34
    P = np.array([M3, M4]) / b  # w12 + w34
    w = np.concatenate([0.5 * (P + R), 0.5 * (P - R)])
    return PhysicalState(x, w)


def transformation_jacobian(p: PhysicalState) -> np.ndarray:
    """Analytic 8x8 Jacobian d z / d(x, w) of :func:`to_regularized`."""
    z = to_regularized(p)
    u = z[:4]
    Dx = _position_jacobian(u)  # dx/du
    du_dx = np.linalg.inv(Dx)
    # v = Dx(u)^T w ; dv/dx = d/du (Dx^T w) . du/dx ; dv/dw = Dx^T
    w = p.w
    dvdu = np.empty((4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        dvdu[:, k] = _position_jacobian(e).T @ w  # Dx is linear in u
    T = np.zeros((8, 8))
    T[:4, :4] = du_dx
    T[4:, :4] = dvdu @ du_dx
    T[4:, 4:] = Dx.T
    return T
