"""Symmetry-reduced linear stability of the symmetric SBC orbits.

With Y0 chosen orthogonal and symplectic so that Y0^T Q Y0 = diag(I, -I),
the monodromy factors as Y0^{-1} Y(2 pi) = W^4 with W = Lambda D,
Lambda = Y0^{-1} Q Y0 and D = B^{-1} S_G B for B = Y(pi/4).  The average
(W + W^{-1}) / 2 is block diagonal diag(K^T, K), and the nontrivial
multipliers follow from the eigenvalues of the lower-right 3x3 block of K.
Only the first eighth of the period is integrated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .integrate import DEFAULT_STEP, StepSpec, flow_with_variational
from .model import HG, J, Q, S_F, S_G
from .spectrum import REALITY_TOL, eig3, reciprocal_pair

INV_SQRT2 = 1.0 / math.sqrt(2.0)
E5 = np.eye(8)[4]
LAM3_FLAG = 1e-3  # report lam3 when it leaves -1 by more than this


class ReductionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Y0Basis:
    a: float
    b: float
    c: float
    d: float
    e: float
    Y0: np.ndarray


def symmetric_derivative_defect(gp) -> float:
    """Distance of gamma'(0) from the subspace u3'=-u1', u4'=u2', v3'=v1', v4'=-v2'."""
    gp = np.asarray(gp, dtype=float)
    return float(
        max(
            abs(gp[2] + gp[0]),
            abs(gp[3] - gp[1]),
            abs(gp[6] - gp[4]),
            abs(gp[7] + gp[5]),
        )
    )


def build_Y0(gamma_prime_0, tol: float = 1e-10) -> Y0Basis:
    """Orthogonal, symplectic Y0 whose fifth column is gamma'(0) / |gamma'(0)|."""
    gp = np.asarray(gamma_prime_0, dtype=float)
    e = float(np.linalg.norm(gp))
    if e == 0.0:
        raise ReductionError("gamma'(0) vanishes")
    if symmetric_derivative_defect(gp) > tol * max(1.0, e):
        raise ReductionError("gamma'(0) is not in the symmetric-derivative subspace")
    a, b, c, d = gp[0], gp[1], gp[4], gp[5]
    Y0 = np.array(
        [
            [c, d, a, b, a, -b, -c, d],
            [d, -c, b, -a, b, a, -d, -c],
            [c, d, a, b, -a, b, c, -d],
            [-d, c, -b, a, b, a, -d, -c],
            [-a, b, c, -d, c, d, a, b],
            [-b, -a, d, c, d, -c, b, -a],
            [a, -b, -c, d, c, d, a, b],
            [-b, -a, d, c, -d, c, -b, a],
        ]
    ) / e
    return Y0Basis(a, b, c, d, e, Y0)


def compute_B(z0, m: float, E_hat: float, Y0, h: float = DEFAULT_STEP, span: float = math.pi / 4):
    """Fundamental matrix Y(span) along the orbit through z0 with Y(0) = Y0."""
    return flow_with_variational(z0, Y0, StepSpec.span(span, h), m, E_hat).Y


def symplectic_inverse(B) -> np.ndarray:
    return -J @ B.T @ J


def compute_W(B, Y0, tol: float = 1e-8):
    """Return (Lambda, D, W) with W = Lambda D."""
    Binv = symplectic_inverse(B)
    defect = np.abs(Binv @ B - np.eye(8)).max()
    if defect > tol:
        raise ReductionError(f"B is not symplectic enough to invert structurally (defect {defect:.3e})")
    Lam = Y0.T @ Q @ Y0  # Y0 is orthogonal
    D = Binv @ S_G @ B
    return Lam, D, Lam @ D


def k_entries(B) -> np.ndarray:
    """Lower-right 3x3 of K from columns of B: c_i^T S_G J c_{4+j}, i, j = 2..4."""
    SGJ = S_G @ J
    return np.array([[B[:, i] @ SGJ @ B[:, 4 + j] for j in (1, 2, 3)] for i in (1, 2, 3)])


def k_block(B) -> np.ndarray:
    """K = A3^T Hg A2 + A1^T Hg A4 from the 4x4 block partition of B."""
    A1, A2 = B[:4, :4], B[:4, 4:]
    A3, A4 = B[4:, :4], B[4:, 4:]
    return A3.T @ HG @ A2 + A1.T @ HG @ A4


def compute_K(B, tol: float = 1e-8) -> np.ndarray:
    """4x4 matrix K determined by B = Y(pi/4).

    The first column is fixed to (1, 0, 0, 0); the rest of the first row comes
    from the block formula and the lower-right 3x3 from the column formula.
    The two constructions are cross-checked.
    """
    Kb = k_block(B)
    Kc = k_entries(B)
    mismatch = np.abs(Kb[1:, 1:] - Kc).max()
    if mismatch > tol * max(1.0, np.abs(Kc).max()):
        raise ReductionError(f"K constructions disagree by {mismatch:.3e}")
    K = np.zeros((4, 4))
    K[0, 0] = 1.0
    K[0, 1:] = Kb[0, 1:]
    K[1:, 1:] = Kc
    return K


@dataclass(frozen=True)
class StabilityEigs:
    lam1: complex
    lam2: complex
    lam3: complex

    def as_tuple(self):
        return self.lam1, self.lam2, self.lam3


def stability_eigs(K, tol: float = REALITY_TOL) -> StabilityEigs:
    """Eigenvalues of the lower-right 3x3 block of K, labelled.

    lam3 is the one that stays near -1; when a complex pair is present and
    its real part is nearer -1 than the real root, the pair takes the roles
    of lam2 and lam3 (upper half plane first).
    """
    K = np.asarray(K, dtype=float)
    M = K[1:, 1:] if K.shape == (4, 4) else K
    trip = eig3(M, tol)
    roots = list(trip.roots)
    if trip.all_real:
        rs = sorted((r.real for r in roots), key=lambda x: abs(x + 1.0))
        l3 = rs[0]
        l1, l2 = sorted(rs[1:], reverse=True)
        return StabilityEigs(complex(l1), complex(l2), complex(l3))
    real = [r for r, f in zip(roots, trip.reality_flags) if f]
    pair = [r for r, f in zip(roots, trip.reality_flags) if not f]
    if len(real) != 1 or len(pair) != 2:
        # mixed flags from a borderline tolerance; fall back to the largest-|Im| pair
        order = sorted(roots, key=lambda r: abs(r.imag))
        real, pair = [order[0]], order[1:]
    r = complex(real[0].real)
    up = max(pair, key=lambda x: x.imag)
    lo = up.conjugate()
    if abs(r + 1.0) <= abs(up.real + 1.0):
        return StabilityEigs(up, lo, r)
    return StabilityEigs(r, up, lo)


def multipliers_from_k(k: complex) -> tuple[complex, complex]:
    """Characteristic multipliers (lam_W^4, lam_W^-4) carried by an eigenvalue k of K."""
    lw, lw_inv = reciprocal_pair(k)
    a, b = lw ** 4, lw_inv ** 4
    # conjugate pairs are reported upper half plane first
    if a.imag < b.imag:
        a, b = b, a
    return a, b


class StabilityClass(str, enum.Enum):
    LINEARLY_STABLE = "LinearlyStable"
    SPECTRALLY_STABLE_MARGINAL = "SpectrallyStableMarginal"
    LINEARLY_UNSTABLE = "LinearlyUnstable"
    INDETERMINATE = "Indeterminate"


def classify(lam1: complex, lam2: complex, tol: float = REALITY_TOL) -> StabilityClass:
    lams = [complex(lam1), complex(lam2)]
    if any(abs(l.imag) > tol for l in lams):
        return StabilityClass.LINEARLY_UNSTABLE
    rs = [l.real for l in lams]
    if any(abs(r) > 1.0 + tol for r in rs):
        return StabilityClass.LINEARLY_UNSTABLE
    if any(abs(abs(r) - 1.0) <= tol for r in rs):
        return StabilityClass.INDETERMINATE
    distinct = abs(rs[0] - rs[1]) > tol
    nonresonant = all(min(abs(r), abs(r - INV_SQRT2), abs(r + INV_SQRT2)) > tol for r in rs)
    if distinct and nonresonant:
        return StabilityClass.LINEARLY_STABLE
    return StabilityClass.SPECTRALLY_STABLE_MARGINAL


@dataclass
class ReductionResult:
    m: float
    Y0: np.ndarray
    B: np.ndarray
    Lambda: np.ndarray
    D: np.ndarray
    W: np.ndarray
    K: np.ndarray
    K_block: np.ndarray
    eigs: StabilityEigs
    multipliers: tuple[complex, complex, complex, complex]
    stability: StabilityClass
    gamma_prime_0: np.ndarray = field(repr=False)

    @property
    def lam(self):
        return self.eigs.as_tuple()

    @property
    def lam3_flagged(self) -> bool:
        return abs(self.eigs.lam3 + 1.0) > LAM3_FLAG

    def invariants(self) -> dict[str, float]:
        I8 = np.eye(8)
        Winv = symplectic_inverse(self.W)
        avg = 0.5 * (self.W + Winv)
        target = np.zeros((8, 8))
        target[:4, :4] = self.K_block.T
        target[4:, 4:] = self.K_block
        return {
            "Y0_orthogonal": float(np.abs(self.Y0.T @ self.Y0 - I8).max()),
            "Y0_symplectic": float(np.abs(self.Y0.T @ J @ self.Y0 - J).max()),
            "Y0_diagonalizes_Q": float(np.abs(self.Lambda - np.diag([1.0] * 4 + [-1.0] * 4)).max()),
            "B_symplectic": float(np.abs(self.B.T @ J @ self.B - J).max()),
            "W_symplectic": float(np.abs(self.W.T @ J @ self.W - J).max()),
            "Lambda_involution": float(np.abs(self.Lambda @ self.Lambda - I8).max()),
            "D_involution": float(np.abs(self.D @ self.D - I8).max()),
            "W_e5": float(np.abs(self.W @ E5 - E5).max()),
            "W_average_block": float(np.abs(avg - target).max()),
            "K_first_column": float(np.abs(self.K_block[:, 0] - np.eye(4)[0]).max()),
            "K_formula_agreement": float(np.abs(self.K_block[1:, 1:] - self.K[1:, 1:]).max()),
            "lam3_offset": float(abs(self.eigs.lam3 + 1.0)),
        }


def nontrivial_multipliers(eigs: StabilityEigs):
    m1 = multipliers_from_k(eigs.lam1)
    m2 = multipliers_from_k(eigs.lam2)
    return m1[0], m1[1], m2[0], m2[1]


def reduce(z0, m: float, E_hat: float, h: float = DEFAULT_STEP, class_tol: float = REALITY_TOL) -> ReductionResult:
    """Full one-eighth-period reduction for the orbit through z0."""
    gp = model.vector_field(z0, m, E_hat)
    basis = build_Y0(gp)
    B = compute_B(z0, m, E_hat, basis.Y0, h)
    Lam, D, W = compute_W(B, basis.Y0)
    K = compute_K(B)
    eigs = stability_eigs(K, class_tol)
    return ReductionResult(
        m=m,
        Y0=basis.Y0,
        B=B,
        Lambda=Lam,
        D=D,
        W=W,
        K=K,
        K_block=k_block(B),
        eigs=eigs,
        multipliers=nontrivial_multipliers(eigs),
        stability=classify(eigs.lam1, eigs.lam2, class_tol),
        gamma_prime_0=gp,
    )


@dataclass
class CrosscheckReport:
    m: float
    w4_defect: float
    quarter_factor_defect: float
    half_quarter_defect: float
    trivial_right_defects: tuple[float, float]
    trivial_left_defects: tuple[float, float]
    monodromy_eigenvalues: np.ndarray


def monodromy_crosscheck(z0, m: float, E_hat: float, red: ReductionResult, h: float = DEFAULT_STEP) -> CrosscheckReport:
    """Integrate Y over the full period and compare Y0^{-1} Y(2 pi) with W^4.

    Also checks the intermediate identities Y(pi/2) = S_G Y0 B^{-1} S_G B and
    Y(2 pi) = Y0 (Y0^{-1} S_F^T Y(pi/2))^4, and how well the four known unit
    multiplier directions (flow, rotation; energy and angular-momentum
    covectors) are reproduced.
    """
    Y0 = red.Y0
    q = StepSpec.span(math.pi / 4, h)
    s1 = flow_with_variational(z0, Y0, q, m, E_hat)
    s2 = flow_with_variational(s1.z, s1.Y, q, m, E_hat)
    rest = flow_with_variational(s2.z, s2.Y, StepSpec.span(3 * math.pi / 2, h), m, E_hat)
    Y_half, Y_full = s2.Y, rest.Y
    M = Y0.T @ Y_full
    W4 = np.linalg.matrix_power(red.W, 4)
    scale = max(1.0, np.abs(W4).max())

    predicted_half = S_G @ Y0 @ symplectic_inverse(red.B) @ S_G @ red.B
    predicted_full = Y0 @ np.linalg.matrix_power(Y0.T @ S_F.T @ Y_half, 4)

    z0 = np.asarray(z0, dtype=float)
    u1, u2, u3, u4, v1, v2, v3, v4 = z0
    gradA = 0.5 * np.array([v2, -v1, v4, -v3, -u2, u1, -u4, u3])
    rot = J @ gradA
    flow_dir = E5
    rot_dir = Y0.T @ rot / np.linalg.norm(rot)
    g_cov = Y0.T @ model.grad_gamma_hat(z0, m, E_hat)
    a_cov = Y0.T @ gradA / np.linalg.norm(gradA)
    g_cov = g_cov / np.linalg.norm(g_cov)
    right = (float(np.linalg.norm(M @ flow_dir - flow_dir)), float(np.linalg.norm(M @ rot_dir - rot_dir)))
    left = (float(np.linalg.norm(g_cov @ M - g_cov)), float(np.linalg.norm(a_cov @ M - a_cov)))
    return CrosscheckReport(
        m=m,
        w4_defect=float(np.abs(M - W4).max()),
        quarter_factor_defect=float(np.abs(Y_full - predicted_full).max() / scale),
        half_quarter_defect=float(np.abs(Y_half - predicted_half).max()),
        trivial_right_defects=right,
        trivial_left_defects=left,
        monodromy_eigenvalues=np.linalg.eigvals(M),
    )
