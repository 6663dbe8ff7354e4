"""Small dense tensor kernel: stretch tensors, SPD logarithms, invariants, deviators.

Everything operates on plain numpy arrays of shape (2, 2) or (3, 3). Eigendecompositions
use closed forms (guarded trace/determinant formula in 2D, Cardano plus one Newton polish
step per root in 3D) so results are deterministic and branch-stable; numpy's iterative
eigensolver is deliberately not used here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import (
    InvalidDimensions,
    NonPositiveDeterminant,
    NotPositiveDefinite,
    OutsideDomain,
)

# Absolute floor under all relative tolerances; eigenvalues at or below this
# count as non-positive for SPD purposes.
ABS_FLOOR = 1e-14

# Relative eigenvalue-gap threshold below which the 2x2 closed form returns
# axis-aligned eigenvectors (the off-diagonal formulas are singular there).
EQUAL_EIG_REL = 1e-12


class Region(enum.Enum):
    """Position of an invariant point relative to D(i1,i2) and its boundary."""

    INTERIOR_D = "InteriorD"
    ON_GAMMA2 = "OnGamma2"
    OUTSIDE = "Outside"


class EigenData(NamedTuple):
    """Eigenvalues sorted descending plus the matching orthonormal column basis."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class InvariantPoint:
    """Principal invariants of a stretch tensor: (i1, i2) in 2D, (i1, i2, i3) in 3D."""

    i1: float
    i2: float
    i3: Optional[float] = None
    region: Region = Region.INTERIOR_D

    @property
    def dim(self) -> int:
        return 2 if self.i3 is None else 3


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] not in (2, 3):
        raise InvalidDimensions(f"expected a 2x2 or 3x3 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidDimensions("matrix entries must be finite")
    return A


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def sym_eig2(A) -> EigenData:
    """Closed-form eigendecomposition of a symmetric 2x2 matrix.

    Uses the trace/determinant formula. When the eigenvalue gap is below
    EQUAL_EIG_REL relative to the eigenvalue magnitudes the matrix is treated
    as (numerically) a multiple of the identity and axis-aligned eigenvectors
    are returned, which sidesteps the 0/0 in the eigenvector formula.
    """
    A = _sym(_as_square(A))
    if A.shape[0] != 2:
        raise InvalidDimensions("sym_eig2 expects a 2x2 matrix")
    a, b, d = A[0, 0], A[0, 1], A[1, 1]
    half_tr = 0.5 * (a + d)
    # discriminant written as a sum of squares: immune to cancellation
    rad = math.hypot(0.5 * (a - d), b)
    lam1 = half_tr + rad
    lam2 = half_tr - rad
    if (lam1 - lam2) < EQUAL_EIG_REL * (abs(lam1) + abs(lam2)):
        return EigenData(np.array([lam1, lam2]), np.eye(2))
    # eigenvector for lam1: (b, lam1 - a) or (lam1 - d, b), whichever is larger
    v1 = np.array([b, lam1 - a])
    v1_alt = np.array([lam1 - d, b])
    if v1_alt @ v1_alt > v1 @ v1:
        v1 = v1_alt
    n = math.sqrt(v1 @ v1)
    if n == 0.0:  # diagonal matrix
        Q = np.eye(2) if a >= d else np.array([[0.0, 1.0], [1.0, 0.0]])
        return EigenData(np.array([lam1, lam2]), Q)
    v1 /= n
    v2 = np.array([-v1[1], v1[0]])
    return EigenData(np.array([lam1, lam2]), np.column_stack([v1, v2]))


def _charpoly_newton_polish(lam: float, i1: float, i2: float, i3: float) -> float:
    # one Newton step on p(x) = x^3 - i1 x^2 + i2 x - i3; skipped near multiple
    # roots and whenever |p| sits below its own evaluation rounding floor (the
    # step would then only inject p's roundoff, amplified by a small dp)
    p = ((lam - i1) * lam + i2) * lam - i3
    al = abs(lam)
    floor = al * al * (al + abs(i1)) + abs(i2) * al + abs(i3)
    if abs(p) <= 64.0 * 2.220446049250313e-16 * floor:
        return lam
    dp = (3.0 * lam - 2.0 * i1) * lam + i2
    scale = abs(lam) ** 2 + abs(i2) + 1.0
    if abs(dp) > 1e-8 * scale:
        lam = lam - p / dp
    return lam


def _eigvec_cross(M: np.ndarray) -> Tuple[np.ndarray, float]:
    # null vector of a (near-)singular symmetric 3x3 via the largest row cross product
    c01 = np.cross(M[0], M[1])
    c02 = np.cross(M[0], M[2])
    c12 = np.cross(M[1], M[2])
    best = c01
    best_n = c01 @ c01
    for c in (c02, c12):
        n = c @ c
        if n > best_n:
            best, best_n = c, n
    return best, math.sqrt(best_n)


def sym_eig3(A) -> EigenData:
    """Analytic eigendecomposition of a symmetric 3x3 matrix.

    Eigenvalues by the trigonometric (Cardano-type) formula followed by one
    Newton polish step on the characteristic polynomial; eigenvectors by row
    cross products of A - lambda*I with explicit handling of repeated
    eigenvalues (the repeated eigenspace is completed as an orthogonal
    complement, exact for symmetric input).
    """
    A = _sym(_as_square(A))
    if A.shape[0] != 3:
        raise InvalidDimensions("sym_eig3 expects a 3x3 matrix")
    scale = float(np.max(np.abs(A)))
    if scale == 0.0:
        return EigenData(np.zeros(3), np.eye(3))

    q = A.trace() / 3.0
    p1 = A[0, 1] ** 2 + A[0, 2] ** 2 + A[1, 2] ** 2
    p2 = (A[0, 0] - q) ** 2 + (A[1, 1] - q) ** 2 + (A[2, 2] - q) ** 2 + 2.0 * p1
    if p2 <= (ABS_FLOOR * max(1.0, scale)) ** 2:
        return EigenData(np.full(3, q), np.eye(3))
    p = math.sqrt(p2 / 6.0)
    B = (A - q * np.eye(3)) / p
    r = float(np.linalg.det(B)) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    lam_hi = q + 2.0 * p * math.cos(phi)
    lam_lo = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    lam_mid = 3.0 * q - lam_hi - lam_lo

    i1 = float(A.trace())
    i2 = float(np.trace(cofactor(A)))
    i3 = float(np.linalg.det(A))
    lams = sorted(
        (_charpoly_newton_polish(l, i1, i2, i3) for l in (lam_hi, lam_mid, lam_lo)),
        reverse=True,
    )
    values = np.array(lams)

    gap_tol = EQUAL_EIG_REL * max(1.0, scale)
    g12 = values[0] - values[1]
    g23 = values[1] - values[2]
    if g12 <= gap_tol and g23 <= gap_tol:
        return EigenData(values, np.eye(3))

    def vec_for(lam: float) -> Optional[np.ndarray]:
        v, n = _eigvec_cross(A - lam * np.eye(3))
        if n <= 1e-6 * scale * scale:
            return None
        return v / n

    vectors = np.empty((3, 3))
    if g12 >= g23:
        # top root is the best isolated one; the close pair sits below
        anchor_idx, pair = 0, (1, 2)
    else:
        anchor_idx, pair = 2, (0, 1)
    v_anchor = vec_for(values[anchor_idx])
    if v_anchor is None:
        # fully degenerate in practice; identity basis reconstructs fine
        return EigenData(values, np.eye(3))
    vectors[:, anchor_idx] = v_anchor

    pair_gap = values[pair[0]] - values[pair[1]]
    v_b = vec_for(values[pair[0]]) if pair_gap > gap_tol else None
    if v_b is not None:
        v_b = v_b - (v_b @ v_anchor) * v_anchor
        nb = math.sqrt(v_b @ v_b)
        v_b = v_b / nb if nb > 1e-8 else None
    if v_b is None:
        # repeated pair: any orthonormal basis of the complement of v_anchor
        k = int(np.argmin(np.abs(v_anchor)))
        e = np.zeros(3)
        e[k] = 1.0
        v_b = e - (e @ v_anchor) * v_anchor
        v_b /= math.sqrt(v_b @ v_b)
    vectors[:, pair[0]] = v_b
    # sign of the remaining eigenvector is immaterial for reconstruction
    vectors[:, pair[1]] = np.cross(v_anchor, v_b)
    return EigenData(values, vectors)


def sym_eig(A) -> EigenData:
    """Dispatch to the 2x2 or 3x3 analytic eigendecomposition."""
    A = _as_square(A)
    return sym_eig2(A) if A.shape[0] == 2 else sym_eig3(A)


def right_stretch(F) -> np.ndarray:
    """Right stretch tensor U = sqrt(F^T F), the unique SPD square root of C."""
    F = _as_square(F)
    det = float(np.linalg.det(F))
    if det <= 0.0:
        raise NonPositiveDeterminant(f"det F = {det:g} <= 0")
    C = _sym(F.T @ F)
    ed = sym_eig(C)
    vals = np.maximum(ed.values, 0.0)
    return ed.vectors @ np.diag(np.sqrt(vals)) @ ed.vectors.T


def polar_rotation(F) -> np.ndarray:
    """Rotation factor R of the polar decomposition F = R U."""
    F = _as_square(F)
    U = right_stretch(F)
    return F @ np.linalg.inv(U)


def _spd_eigen(A) -> EigenData:
    ed = sym_eig(A)
    floor = ABS_FLOOR
    if ed.values[-1] <= floor:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {ed.values[-1]:g} <= {floor:g}"
        )
    return ed


def spd_log(A) -> np.ndarray:
    """Matrix logarithm of an SPD matrix through its eigen-data."""
    ed = _spd_eigen(A)
    return ed.vectors @ np.diag(np.log(ed.values)) @ ed.vectors.T


def spd_exp(A) -> np.ndarray:
    """Matrix exponential of a symmetric matrix through the same eigen-path as spd_log."""
    ed = sym_eig(A)
    return ed.vectors @ np.diag(np.exp(ed.values)) @ ed.vectors.T


def spd_pow(A, expo: float) -> np.ndarray:
    """Real power of an SPD matrix through its eigen-data."""
    ed = _spd_eigen(A)
    return ed.vectors @ np.diag(ed.values**expo) @ ed.vectors.T


def deviator(A) -> np.ndarray:
    """Trace-free part: A - (tr A / n) * identity."""
    A = _as_square(A)
    n = A.shape[0]
    return A - (A.trace() / n) * np.eye(n)


def cofactor(A) -> np.ndarray:
    """Cofactor matrix by minors; well-defined for singular A."""
    A = _as_square(A)
    if A.shape[0] == 2:
        return np.array([[A[1, 1], -A[1, 0]], [-A[0, 1], A[0, 0]]])
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            mi = [r for r in range(3) if r != i]
            mj = [c for c in range(3) if c != j]
            minor = A[np.ix_(mi, mj)]
            out[i, j] = ((-1) ** (i + j)) * (
                minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0]
            )
    return out


def classify_region_2d(i1: float, i2: float) -> Region:
    """Locate (i1, i2) relative to D = {i1^2 - 4 i2 > 0} with tolerance 1e-12*i1^2."""
    disc = i1 * i1 - 4.0 * i2
    tol = 1e-12 * max(i1 * i1, 1e-300)
    if disc > tol:
        return Region.INTERIOR_D
    if disc < -tol:
        return Region.OUTSIDE
    return Region.ON_GAMMA2


def invariants(U) -> InvariantPoint:
    """Principal invariants of an SPD stretch tensor, with the region flag set.

    2D: i1 = tr U, i2 = det U. 3D: i1 = tr U, i2 = tr Cof U, i3 = det U; the
    region flag there marks eigenvalue coincidence (the 3D analogue of gamma2)
    and is informational only.
    """
    U = _as_square(U)
    ed = _spd_eigen(U)
    if U.shape[0] == 2:
        i1 = float(U.trace())
        i2 = float(np.linalg.det(U))
        return InvariantPoint(i1, i2, None, classify_region_2d(i1, i2))
    i1 = float(U.trace())
    i2 = float(np.trace(cofactor(U)))
    i3 = float(np.linalg.det(U))
    lam = ed.values
    gap_tol = 1e-12 * max(1.0, float(lam[0]))
    region = (
        Region.ON_GAMMA2
        if (lam[0] - lam[1] <= gap_tol or lam[1] - lam[2] <= gap_tol)
        else Region.INTERIOR_D
    )
    return InvariantPoint(i1, i2, i3, region)


def invariants_to_eigenvalues(p: InvariantPoint) -> Tuple[float, float]:
    """Invert the 2D invariant map: the two roots of x^2 - i1 x + i2."""
    if p.dim != 2:
        raise InvalidDimensions("eigenvalue recovery from invariants is 2D only")
    if p.region is Region.OUTSIDE:
        raise OutsideDomain(f"(i1, i2) = ({p.i1:g}, {p.i2:g}) lies outside D")
    disc = p.i1 * p.i1 - 4.0 * p.i2
    R = math.sqrt(max(disc, 0.0))
    lam1 = 0.5 * (p.i1 + R)
    lam2 = 0.5 * (p.i1 - R)
    if lam2 <= 0.0:
        raise OutsideDomain(
            f"(i1, i2) = ({p.i1:g}, {p.i2:g}) has a non-positive eigenvalue"
        )
    return lam1, lam2


def dev_log_norm_sq(U) -> float:
    """|| dev_n log U ||^2 for an SPD matrix, via eigenvalues."""
    ed = _spd_eigen(U)
    logs = np.log(ed.values)
    return float(np.sum((logs - logs.mean()) ** 2))


def tr_log(U) -> float:
    """tr log U = log det U for an SPD matrix, via eigenvalues."""
    ed = _spd_eigen(U)
    return float(np.sum(np.log(ed.values)))
