"""Grid-based verification of the convexity landscape of the plane energy.

Everything in this module is a falsifier, not a prover. A claim "Holds"
exactly when a declared grid with a declared tolerance produced no violation;
the report carries the grid and the tolerance so every verdict can be
reproduced or attacked with a finer grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DomainError,
    InvalidDimensions,
    OutsideDomain,
    StencilLeftDomain,
    TooCloseToGamma2,
)
from .tensor import InvariantPoint, Region, classify_region_2d, invariants_to_eigenvalues

MAX_STORED_VIOLATIONS = 50

# gamma2-exclusion band for the invariant-space formulas, relative eigenvalue gap
GAMMA2_GAP_REL = 1e-8


class Verdict(Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class GridAxis:
    """One scan variable: count points from lo to hi, linear or log spaced."""

    name: str
    lo: float
    hi: float
    count: int
    log: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"axis {self.name!r}: need lo < hi, got [{self.lo}, {self.hi}]")
        if self.count < 2:
            raise DomainError(f"axis {self.name!r}: need count >= 2, got {self.count}")
        if self.log and self.lo <= 0.0:
            raise DomainError(f"axis {self.name!r}: log spacing requires lo > 0")

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class ScanGrid:
    """Cartesian product of axes, walked in row-major order."""

    axes: Tuple[GridAxis, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        if not axes:
            raise DomainError("a scan grid needs at least one axis")
        object.__setattr__(self, "axes", axes)

    @property
    def total(self) -> int:
        n = 1
        for ax in self.axes:
            n *= ax.count
        return n

    def mesh(self) -> List[np.ndarray]:
        """Flattened coordinate arrays, one per axis, row-major point order."""
        grids = np.meshgrid(*[ax.values() for ax in self.axes], indexing="ij")
        return [g.ravel() for g in grids]

    def spec(self) -> dict:
        return {
            "axes": [
                {
                    "name": ax.name,
                    "lo": ax.lo,
                    "hi": ax.hi,
                    "count": ax.count,
                    "spacing": "log" if ax.log else "linear",
                }
                for ax in self.axes
            ]
        }


@dataclass(frozen=True)
class Violation:
    """One failing point: where, the raw value, and its normalized margin."""

    point: Tuple[float, ...]
    value: float
    margin: float


@dataclass(frozen=True)
class ScanReport:
    claim_id: str
    points_tested: int
    violations: Tuple[Violation, ...]
    min_margin: float
    verdict: Verdict
    tolerance: float
    grid: Optional[dict] = None
    violations_total: int = 0
    skipped: int = 0

    def to_json_dict(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "points_tested": self.points_tested,
            "skipped": self.skipped,
            "tolerance": self.tolerance,
            "grid": self.grid,
            "verdict": self.verdict.value,
            "min_margin": self.min_margin,
            "violations_total": self.violations_total,
            "violations": [
                {"point": list(v.point), "value": v.value, "margin": v.margin}
                for v in self.violations
            ],
        }

    def csv_rows(self) -> List[List[str]]:
        """Header row plus one row per stored violation."""
        width = max((len(v.point) for v in self.violations), default=0)
        head = ["claim_id"] + [f"x{j}" for j in range(width)] + ["value", "margin"]
        rows = [head]
        for v in self.violations:
            coords = [repr(float(c)) for c in v.point]
            coords += [""] * (width - len(v.point))
            rows.append([self.claim_id] + coords + [repr(v.value), repr(v.margin)])
        return rows


@dataclass(frozen=True)
class RankOneWitness:
    """A direction pair along which the energy bends downward at F."""

    F: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    second_derivative: float

    def __post_init__(self):
        # unit directions are part of the witness contract
        for name, vec in (("xi", self.xi), ("eta", self.eta)):
            if abs(float(np.linalg.norm(vec)) - 1.0) > 1e-12:
                raise DomainError(f"witness direction {name} is not a unit vector")


def _finish_report(
    claim_id: str,
    columns: Sequence[np.ndarray],
    values: np.ndarray,
    margins: np.ndarray,
    tolerance: float,
    grid: Optional[dict],
    skipped: int = 0,
) -> ScanReport:
    """Assemble a report from aligned value/margin arrays (order preserved)."""
    bad = np.flatnonzero(margins < -tolerance)
    stored = tuple(
        Violation(
            tuple(float(col[j]) for col in columns),
            float(values[j]),
            float(margins[j]),
        )
        for j in bad[:MAX_STORED_VIOLATIONS]
    )
    n = int(values.size)
    if n == 0:
        return ScanReport(
            claim_id, 0, (), math.nan, Verdict.INCONCLUSIVE, float(tolerance), grid, 0, skipped
        )
    verdict = Verdict.FAILS if bad.size else Verdict.HOLDS
    return ScanReport(
        claim_id,
        n,
        stored,
        float(np.min(margins)),
        verdict,
        float(tolerance),
        grid,
        int(bad.size),
        skipped,
    )


# ---------------------------------------------------------------------------
# invariant-space Hessian of psi(i1, i2) = exp((k/2) log^2(lambda1/lambda2))


def _interior_eigenpair(i1: float, i2: float) -> Tuple[float, float]:
    region = classify_region_2d(i1, i2)
    if region is Region.OUTSIDE:
        raise OutsideDomain(f"(i1, i2) = ({i1:g}, {i2:g}) lies outside D")
    if region is Region.ON_GAMMA2:
        raise TooCloseToGamma2(f"(i1, i2) = ({i1:g}, {i2:g}) sits on gamma2")
    lam1, lam2 = invariants_to_eigenvalues(InvariantPoint(i1, i2))
    # unreachable through the classifier's gate; kept as an explicit precondition
    if lam1 - lam2 <= GAMMA2_GAP_REL * (lam1 + lam2):
        raise TooCloseToGamma2(
            f"eigenvalue gap {lam1 - lam2:g} below {GAMMA2_GAP_REL:g} * (lam1 + lam2)"
        )
    return lam1, lam2


def _hessian_g_lambda(lam1: float, lam2: float, k: float) -> np.ndarray:
    """Eigenvalue-chart second derivative of the isochoric factor.

    This is the Hessian of g(l1, l2) = exp((k/2) log^2(l1/l2)) plus the
    coupling term that the curvature of i2 = l1 l2 injects when the pair is
    pulled back from invariant space; conjugating by the inverse Jacobian of
    (l1, l2) -> (i1, i2) then gives the invariant-space Hessian.
    """
    L = math.log(lam1 / lam2)
    g = math.exp(0.5 * k * L * L)
    gk = g * k
    d11 = gk * (k * L * L - L + 1.0) / (lam1 * lam1)
    d22 = gk * (k * L * L + L + 1.0) / (lam2 * lam2)
    d12 = -gk * (k * L * L + 1.0) / (lam1 * lam2)
    c = gk * L * (1.0 / lam1 + 1.0 / lam2) / (lam1 - lam2)
    return np.array([[d11, d12 + c], [d12 + c, d22]])


def hessian_psi(i1: float, i2: float, k: float) -> np.ndarray:
    """2x2 Hessian of psi with respect to (i1, i2), strictly inside D only."""
    lam1, lam2 = _interior_eigenpair(i1, i2)
    M = _hessian_g_lambda(lam1, lam2, k)
    jinv = np.array([[lam1, -1.0], [-lam2, 1.0]]) / (lam1 - lam2)
    H = jinv.T @ M @ jinv
    return 0.5 * (H + H.T)


def det_hessian_sign(i1: float, i2: float, k: float) -> float:
    """det of the invariant-space Hessian in closed form.

    Strictly positive prefactors multiply the bracket
    2 i2 log a + k i1 R log^2 a + i1 R - i1^2 log a with R = lam1 - lam2 and
    a = lam1/lam2, so the returned value and the bracket share their sign.
    """
    lam1, lam2 = _interior_eigenpair(i1, i2)
    R = lam1 - lam2
    la = math.log(lam1 / lam2)
    bracket = 2.0 * i2 * la + k * i1 * R * la * la + i1 * R - i1 * i1 * la
    try:
        grow = math.exp(k * la * la)
    except OverflowError:
        grow = math.inf
    return 2.0 * k * k * la * grow * bracket / (R**4 * i2 * i2)


def _det_bracket(i1: np.ndarray, z: np.ndarray, k: float) -> Tuple[np.ndarray, np.ndarray]:
    """Determinant bracket and its term-sum scale on the (i1, z) chart."""
    la = 2.0 * np.arctanh(z)
    R = i1 * z
    i2 = 0.25 * (i1 * i1 - R * R)
    t1 = 2.0 * i2 * la
    t2 = k * i1 * R * la * la
    t3 = i1 * R
    t4 = -(i1 * i1) * la
    return t1 + t2 + t3 + t4, np.abs(t1) + np.abs(t2) + np.abs(t3) + np.abs(t4)


def det_hessian_scan(
    k: float, grid: Optional[ScanGrid] = None, tolerance: float = 1e-10
) -> ScanReport:
    """Sign scan of det hessian_psi over (i1, z), z = (lam1 - lam2)/i1.

    Only the bracket is margined; the scale is the bracket's own term sum, so
    the -tolerance cut sits directly above the roundoff floor of the summation.
    """
    if k <= 0.0:
        raise DomainError("k must be positive")
    if grid is None:
        grid = ScanGrid(
            (GridAxis("i1", 0.1, 10.0, 200, log=True), GridAxis("z", 0.01, 0.99, 200))
        )
    i1, z = grid.mesh()
    value, scale = _det_bracket(i1, z, k)
    margins = value / scale
    return _finish_report("det-hessian-nonneg", (i1, z), value, margins, tolerance, grid.spec())


# ---------------------------------------------------------------------------
# scalar inequality ledger


def scalar_r(t: float, k: float) -> float:
    """r(t) = k t^2 - t + 1; positive for every real t exactly when k > 1/4."""
    if t <= 0.0:
        raise DomainError("scalar_r expects t > 0")
    return k * t * t - t + 1.0


def scalar_rhat(t: float, k: float) -> float:
    """rhat(t) = k (t^2 - 1) log^2 t - (t^2 + 1) log t + (t^2 - 1)."""
    if t <= 0.0:
        raise DomainError("scalar_rhat expects t > 0")
    lt = math.log(t)
    tt = t * t
    return k * (tt - 1.0) * lt * lt - (tt + 1.0) * lt + (tt - 1.0)


def scalar_t_of_a(a: float, k: float) -> float:
    """t(a) = 1/log a + k log a - (a^2 + 1)/(a^2 - 1) on a > 1."""
    if a <= 1.0:
        raise DomainError("scalar_t_of_a expects a > 1")
    la = math.log(a)
    return 1.0 / la + k * la - (a * a + 1.0) / (a * a - 1.0)


def scalar_b_of_a(a: float, k: float) -> float:
    """b(a) = k - 1/log^2 a + 4 a^2/(a^2 - 1)^2 on a > 1."""
    if a <= 1.0:
        raise DomainError("scalar_b_of_a expects a > 1")
    la = math.log(a)
    aa = a * a
    return k - 1.0 / (la * la) + 4.0 * aa / ((aa - 1.0) ** 2)


# With xi = log a the two hard lemma functions collapse to
#   b(a) = k + csch^2(xi) - 1/xi^2,   t(a) = k xi + 1/xi - coth xi,
# whose non-k parts cancel catastrophically as xi -> 0. Below the cut they are
# evaluated by their Laurent tails instead; the tail truncation error at the
# cut is ~1e-12 relative, far below every margin the scans resolve.
_SERIES_CUT = 0.2


def _csch2_minus_invsq(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    x2 = xi * xi
    ser = -1.0 / 3.0 + x2 * (
        1.0 / 15.0 + x2 * (-2.0 / 189.0 + x2 * (1.0 / 675.0 - x2 * (2.0 / 10395.0)))
    )
    safe = np.where(xi < _SERIES_CUT, 1.0, xi)
    sh = np.sinh(safe)
    direct = 1.0 / (sh * sh) - 1.0 / (safe * safe)
    return np.where(xi < _SERIES_CUT, ser, direct)


def _invxi_minus_coth(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    x2 = xi * xi
    ser = -xi * (
        1.0 / 3.0
        - x2 * (1.0 / 45.0 - x2 * (2.0 / 945.0 - x2 * (1.0 / 4725.0 - x2 * (2.0 / 93555.0))))
    )
    safe = np.where(xi < _SERIES_CUT, 1.0, xi)
    direct = 1.0 / safe - 1.0 / np.tanh(safe)
    return np.where(xi < _SERIES_CUT, ser, direct)


# claim ids of the seven scalar-inequality scans, grouped by their threshold
ANY_K_CLAIMS = ("psi-monotone-i1",)
K_THIRD_CLAIMS = ("b-of-a-nonneg", "t-of-a-nonneg", "det-bracket-z", "det-bracket-invariants")
K_EIGHTH_CLAIMS = ("i1-curvature-z", "i1-curvature-invariants")


def verify_scalar_inequalities(
    k: float, points_per_lemma: int = 10000, tolerance: float = 1e-10
) -> List[ScanReport]:
    """Scan the seven scalar inequalities that carry the convexity proofs.

    Returns one report per claim, in the fixed order ANY_K_CLAIMS +
    K_THIRD_CLAIMS + K_EIGHTH_CLAIMS. The K_THIRD block holds exactly for
    k >= 1/3 and its failures cluster at the degenerate end (a -> 1, z -> 0).
    The K_EIGHTH block is grouped by its k >= 1/8 hypothesis; on this chart
    the scanned quantity stays nonnegative down to k = 1/12 (its degenerate-end
    coefficient is 8k - 2/3), so no failure should be expected in (1/12, 1/8).
    """
    if k <= 0.0:
        raise DomainError("k must be positive")
    if points_per_lemma < 4:
        raise DomainError("need at least 4 points per claim")
    side = max(2, int(round(math.sqrt(points_per_lemma))))
    grid2 = ScanGrid(
        (GridAxis("i1", 0.1, 10.0, side, log=True), GridAxis("z", 0.005, 0.995, side))
    )
    xi_grid = ScanGrid((GridAxis("log_a", 1e-4, math.log(100.0), points_per_lemma, log=True),))
    z_grid = ScanGrid((GridAxis("z", 0.005, 0.995, points_per_lemma),))
    reports: List[ScanReport] = []

    # dpsi/di1 = (2 k log a / R) exp((k/2) log^2 a): a product of positives,
    # scanned anyway so the claim is checked the same way as the fragile ones
    i1, z = grid2.mesh()
    la = 2.0 * np.arctanh(z)
    R = i1 * z
    with np.errstate(over="ignore"):
        slope = (2.0 * k * la / R) * np.exp(0.5 * k * la * la)
    margins = slope / (1.0 + np.abs(slope))
    reports.append(
        _finish_report("psi-monotone-i1", (i1, z), slope, margins, tolerance, grid2.spec())
    )

    xi = xi_grid.mesh()[0]
    part = _csch2_minus_invsq(xi)
    value = k + part
    margins = value / (k + np.abs(part))
    reports.append(
        _finish_report("b-of-a-nonneg", (xi,), value, margins, tolerance, xi_grid.spec())
    )

    part = _invxi_minus_coth(xi)
    value = k * xi + part
    margins = value / (k * xi + np.abs(part))
    reports.append(
        _finish_report("t-of-a-nonneg", (xi,), value, margins, tolerance, xi_grid.spec())
    )

    zz = z_grid.mesh()[0]
    w = 2.0 * np.arctanh(zz)
    value = (2.0 * zz - w) - zz * zz * w + 2.0 * k * zz * w * w
    scale = 2.0 * zz + w + zz * zz * w + 2.0 * k * zz * w * w
    reports.append(
        _finish_report("det-bracket-z", (zz,), value, value / scale, tolerance, z_grid.spec())
    )

    value, scale = _det_bracket(i1, z, k)
    reports.append(
        _finish_report(
            "det-bracket-invariants", (i1, z), value, value / scale, tolerance, grid2.spec()
        )
    )

    value = 2.0 * k * zz * w * w + (2.0 * zz - w)
    scale = 2.0 * k * zz * w * w + 2.0 * zz + w
    reports.append(
        _finish_report("i1-curvature-z", (zz,), value, value / scale, tolerance, z_grid.spec())
    )

    t1 = 2.0 * k * R * la * la
    t2 = 2.0 * R
    t3 = -i1 * la
    value = t1 + t2 + t3
    scale = t1 + t2 + np.abs(t3)
    reports.append(
        _finish_report(
            "i1-curvature-invariants", (i1, z), value, value / scale, tolerance, grid2.spec()
        )
    )
    return reports


# ---------------------------------------------------------------------------
# Steigmann-style sufficient conditions


def counterexample_2d(i1: float, i2: float) -> float:
    """i1^4 - 4 i1^2 i2 + 2 i2^2, i.e. |F|^4 - 2 (det F)^2 in plane stretches.

    Convex as a function of F, yet its (i1, i2) Hessian has negative
    determinant at every interior point: monotonicity plus joint invariant
    convexity is sufficient for polyconvexity, never necessary.
    """
    return i1**4 - 4.0 * i1 * i1 * i2 + 2.0 * i2 * i2


def counterexample_3d(i1: float, i2: float, i3: float) -> float:
    """i2^2 - 2 i1 i3 = |Cof U|^2: polyconvex, yet neither jointly convex in
    (i1, i2, i3) nor nondecreasing in i1 (the i1 slope is -2 i3 < 0)."""
    return i2 * i2 - 2.0 * i1 * i3


def _point_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one sample: parallel order cannot change it."""
    return np.random.Generator(
        np.random.Philox(key=np.uint64(seed), counter=[np.uint64(index), 0, 0, 0])
    )


def _fd_slope(f: Callable[..., float], x: Sequence[float], axis: int) -> float:
    h = 1e-6 * (1.0 + abs(x[axis]))
    up = list(x)
    dn = list(x)
    up[axis] += h
    dn[axis] -= h
    return (f(*up) - f(*dn)) / (2.0 * h)


def _fd_hessian_step(f: Callable[..., float], x: Sequence[float], h: Sequence[float]) -> np.ndarray:
    n = len(x)
    f0 = f(*x)
    H = np.empty((n, n))

    def at(*shift):
        pt = list(x)
        for idx, s in shift:
            pt[idx] += s
        return f(*pt)

    for a in range(n):
        H[a, a] = (at((a, h[a])) + at((a, -h[a])) - 2.0 * f0) / (h[a] * h[a])
        for b in range(a + 1, n):
            mixed = (
                at((a, h[a]), (b, h[b]))
                - at((a, h[a]), (b, -h[b]))
                - at((a, -h[a]), (b, h[b]))
                + at((a, -h[a]), (b, -h[b]))
            ) / (4.0 * h[a] * h[b])
            H[a, b] = mixed
            H[b, a] = mixed
    return H


def _fd_hessian(f: Callable[..., float], x: Sequence[float]) -> np.ndarray:
    # one Richardson sweep: the h^2 truncation term of the exponential-of-log
    # integrands is large enough near gamma2 to swamp a 1e-8-relative PSD cut
    h = [1e-4 * (1.0 + abs(c)) for c in x]
    half = [0.5 * s for s in h]
    return (4.0 * _fd_hessian_step(f, x, half) - _fd_hessian_step(f, x, h)) / 3.0


def steigmann_check_2d(
    psi_fn: Callable[[float, float], float],
    grid: Optional[ScanGrid] = None,
    seed: int = 0,
    pairs: int = 400,
    slope_tolerance: float = 1e-10,
    hessian_tolerance: float = 1e-8,
) -> Tuple[ScanReport, ScanReport]:
    """Monotonicity-in-i1 and joint-convexity checks for a plane invariant energy.

    psi_fn takes scalar (i1, i2) with i1 >= 0, i2 > 0 and must be defined on
    the whole quadrant (extend with psi_hat-style constants if needed). The
    finite-difference Hessian is evaluated only where the stencil box stays
    clearly on one side of gamma2, because a convex extension is allowed a
    gradient kink there; convexity across the boundary is covered by midpoint
    sampling with per-pair seeded draws instead.
    """
    if grid is None:
        grid = ScanGrid((GridAxis("i1", 0.2, 8.0, 40), GridAxis("i2", 0.05, 8.0, 40)))
    i1v, i2v = grid.mesh()

    slopes = np.array([_fd_slope(psi_fn, (x, y), 0) for x, y in zip(i1v, i2v)])
    mono = _finish_report(
        "i1-monotone",
        (i1v, i2v),
        slopes,
        slopes.copy(),
        slope_tolerance,
        grid.spec(),
    )

    pts: List[Tuple[float, float]] = []
    values: List[float] = []
    margins: List[float] = []
    skipped = 0
    for x, y in zip(i1v, i2v):
        hx = 1e-4 * (1.0 + abs(x))
        hy = 1e-4 * (1.0 + abs(y))
        corners = [
            (x + sx * hx) ** 2 - 4.0 * (y + sy * hy) for sx in (-1.0, 1.0) for sy in (-1.0, 1.0)
        ]
        body = 1e-2 * max(x * x, 1e-300)
        if min(corners) > body:
            pass  # whole stencil strictly inside D
        elif max(corners) < -body:
            pass  # whole stencil strictly outside
        else:
            skipped += 1
            continue
        H = _fd_hessian(psi_fn, (x, y))
        mean = 0.5 * (H[0, 0] + H[1, 1])
        half = math.hypot(0.5 * (H[0, 0] - H[1, 1]), H[0, 1])
        low = mean - half
        scale = abs(H[0, 0]) + abs(H[1, 1]) + 2.0 * abs(H[0, 1]) + 1e-300
        pts.append((float(x), float(y)))
        values.append(low)
        margins.append(low / scale)

    lo0, hi0 = grid.axes[0].lo, grid.axes[0].hi
    lo1, hi1 = grid.axes[1].lo, grid.axes[1].hi
    for j in range(pairs):
        rng = _point_rng(seed, j)
        p = (rng.uniform(lo0, hi0), rng.uniform(lo1, hi1))
        q = (rng.uniform(lo0, hi0), rng.uniform(lo1, hi1))
        mid = (0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]))
        fp, fq, fm = psi_fn(*p), psi_fn(*q), psi_fn(*mid)
        gap = 0.5 * (fp + fq) - fm
        scale = abs(fp) + abs(fq) + abs(fm) + 1e-300
        pts.append(mid)
        values.append(gap)
        margins.append(gap / scale)

    cols = (
        np.array([p[0] for p in pts]) if pts else np.empty(0),
        np.array([p[1] for p in pts]) if pts else np.empty(0),
    )
    convex = _finish_report(
        "joint-convexity",
        cols,
        np.asarray(values, dtype=float),
        np.asarray(margins, dtype=float),
        hessian_tolerance,
        {**grid.spec(), "pairs": pairs, "seed": seed},
        skipped=skipped,
    )
    return mono, convex


def steigmann_check_3d(
    phi_fn: Callable[[float, float, float], float],
    points: Iterable[Tuple[float, float, float]],
    slope_tolerance: float = 1e-10,
    hessian_tolerance: float = 1e-8,
) -> Tuple[ScanReport, ScanReport]:
    """Pointwise 3D variant: slopes in i1 and i2 plus a 3x3 PSD check.

    The 3D sufficient condition requires monotonicity in both i1 and i2, so
    the slope report's value at each point is the smaller of the two slopes.
    Caller supplies smooth-field points; no gamma2 bookkeeping is done here.
    """
    pts = [tuple(float(c) for c in p) for p in points]
    if not pts:
        raise DomainError("need at least one probe point")
    slope_vals = []
    for p in pts:
        s1 = _fd_slope(phi_fn, p, 0)
        s2 = _fd_slope(phi_fn, p, 1)
        slope_vals.append(min(s1, s2))
    slope_vals = np.asarray(slope_vals)
    cols = tuple(np.array([p[j] for p in pts]) for j in range(3))
    mono = _finish_report(
        "i1-i2-monotone-3d",
        cols,
        slope_vals,
        slope_vals.copy(),
        slope_tolerance,
        {"points": len(pts)},
    )

    lows = []
    margins = []
    for p in pts:
        H = _fd_hessian(phi_fn, p)
        eigs = np.linalg.eigvalsh(0.5 * (H + H.T))
        scale = float(np.sum(np.abs(H))) + 1e-300
        lows.append(float(eigs[0]))
        margins.append(float(eigs[0]) / scale)
    convex = _finish_report(
        "joint-convexity-3d",
        cols,
        np.asarray(lows),
        np.asarray(margins),
        hessian_tolerance,
        {"points": len(pts)},
    )
    return mono, convex


# ---------------------------------------------------------------------------
# rank-one convexity sampling

_CHUNK = 4096


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    # sample i lives in chunk i // _CHUNK at a fixed draw offset, so the
    # sample set is a pure function of (seed, index) whatever runs in parallel
    return np.random.Generator(
        np.random.Philox(key=np.uint64(seed), counter=[np.uint64(chunk_index), 0, 0, 0])
    )


def _random_rotations(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    A = rng.normal(size=(count, dim, dim))
    Q, R = np.linalg.qr(A)
    sgn = np.sign(np.einsum("nii->ni", R))
    sgn[sgn == 0.0] = 1.0
    Q = Q * sgn[:, None, :]
    neg = np.linalg.det(Q) < 0.0
    Q[neg, :, 0] *= -1.0
    return Q


def sampler_2d_stretches(lo: float = 0.05, hi: float = 20.0):
    """F = R1 diag(l1, l2) R2 with log-uniform stretches in [lo, hi]."""
    if not 0.0 < lo < hi:
        raise DomainError("need 0 < lo < hi")

    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        lam = np.exp(rng.uniform(math.log(lo), math.log(hi), size=(count, 2)))
        R1 = _random_rotations(rng, count, 2)
        R2 = _random_rotations(rng, count, 2)
        return R1 @ (lam[:, :, None] * R2)

    draw.__name__ = f"stretches-2d-{lo:g}-{hi:g}"
    return draw


def sampler_3d_dev_biased(dev_lo: float = 2.0, dev_hi: float = 10.0, vol_amp: float = 1.0):
    """Stretches with |dev log U| uniform in [dev_lo, dev_hi], random
    orientations on both sides, and a log-volume offset in [-vol_amp, vol_amp]."""
    if not 0.0 <= dev_lo < dev_hi:
        raise DomainError("need 0 <= dev_lo < dev_hi")

    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        y = rng.normal(size=(count, 3))
        d = y - y.mean(axis=1, keepdims=True)
        d = d / np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-12)
        s = rng.uniform(dev_lo, dev_hi, size=(count, 1))
        v = rng.uniform(-vol_amp, vol_amp, size=(count, 1))
        lam = np.exp(s * d + v / 3.0)
        Q1 = _random_rotations(rng, count, 3)
        Q2 = _random_rotations(rng, count, 3)
        return Q1 @ (lam[:, :, None] * Q2)

    draw.__name__ = f"dev-biased-3d-{dev_lo:g}-{dev_hi:g}"
    return draw


def rank_one_second_derivative(
    energy_fn: Callable[[np.ndarray], np.ndarray],
    F,
    xi,
    eta,
    step_scale: float = 1e-4,
) -> float:
    """Central second difference of t -> W(F + t xi eta^T) at t = 0.

    energy_fn must be vectorized over a leading batch axis. Raises
    StencilLeftDomain when any stencil point has non-finite energy.
    """
    F = np.asarray(F, dtype=float)
    P = np.outer(np.asarray(xi, dtype=float), np.asarray(eta, dtype=float))
    h = step_scale * (1.0 + float(np.linalg.norm(F)))
    W = np.asarray(energy_fn(np.stack([F + h * P, F, F - h * P])), dtype=float)
    if not np.all(np.isfinite(W)):
        raise StencilLeftDomain("energy not finite on the difference stencil")
    return float((W[0] - 2.0 * W[1] + W[2]) / (h * h))


def rank_one_scan(
    energy_fn: Callable[[np.ndarray], np.ndarray],
    dim: int,
    sampler,
    n_samples: int = 100000,
    seed: int = 0,
    tolerance: float = 1e-10,
    step_scale: float = 1e-4,
    stop_at_first_witness: bool = False,
    claim_id: Optional[str] = None,
    confirm_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Tuple[ScanReport, Optional[RankOneWitness]]:
    """Monte-Carlo rank-one convexity scan.

    Per sample: F from the sampler, unit xi and eta, then the raw central
    second difference W(F+h P) + W(F-h P) - 2 W(F), P = xi eta^T. The margin
    divides by the stencil magnitude |W+| + 2|W0| + |W-|, putting the
    -tolerance cut a few decades above roundoff while true downward bending,
    which scales like h^2, still lands far below it. Samples with non-finite
    stencil energy are skipped and counted.

    The roundoff argument assumes energy_fn itself is accurate at the sampled
    F, which eigensolves of F^T F are not once the stretch ratio passes ~1e7
    (biased 3D sampling gets there). confirm_fn, when given, re-evaluates the
    stencil of every candidate violation; candidates it does not reproduce are
    dropped and counted in the report grid under "rejected_candidates", and
    the margins and derivatives of kept ones are the confirmed values.
    """
    if dim not in (2, 3):
        raise InvalidDimensions("rank-one scans support dim 2 and 3")
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    claim = claim_id or f"rank-one-convexity-{dim}d"
    meta = {
        "samples": n_samples,
        "seed": seed,
        "chunk": _CHUNK,
        "step_scale": step_scale,
        "sampler": getattr(sampler, "__name__", "custom"),
        "confirm": getattr(confirm_fn, "__name__", "custom") if confirm_fn else None,
        "rejected_candidates": 0,
    }
    tested = 0
    skipped = 0
    rejected = 0
    stored: List[Violation] = []
    total_bad = 0
    min_margin = math.inf
    witness: Optional[RankOneWitness] = None

    n_chunks = (n_samples + _CHUNK - 1) // _CHUNK
    for c in range(n_chunks):
        m = min(_CHUNK, n_samples - c * _CHUNK)
        rng = _chunk_rng(seed, c)
        F = np.asarray(sampler(rng, m), dtype=float)
        xi = rng.normal(size=(m, dim))
        xi /= np.linalg.norm(xi, axis=1, keepdims=True)
        eta = rng.normal(size=(m, dim))
        eta /= np.linalg.norm(eta, axis=1, keepdims=True)
        h = step_scale * (1.0 + np.linalg.norm(F, axis=(1, 2)))
        P = h[:, None, None] * np.einsum("ni,nj->nij", xi, eta)
        W = np.asarray(energy_fn(np.concatenate([F + P, F, F - P], axis=0)), dtype=float)
        W = W.reshape(3, m)
        finite = np.isfinite(W).all(axis=0)
        skipped += int(m - finite.sum())
        tested += int(finite.sum())
        if not finite.any():
            continue
        with np.errstate(invalid="ignore", over="ignore"):
            num = W[0] + W[2] - 2.0 * W[1]
            den = np.abs(W[0]) + 2.0 * np.abs(W[1]) + np.abs(W[2])
            margins = num / np.maximum(den, 1e-300)
        bad = np.flatnonzero(finite & (margins < -tolerance))
        if confirm_fn is not None and bad.size:
            Fb, Pb = F[bad], P[bad]
            Wc = np.asarray(
                confirm_fn(np.concatenate([Fb + Pb, Fb, Fb - Pb], axis=0)), dtype=float
            ).reshape(3, bad.size)
            with np.errstate(invalid="ignore", over="ignore"):
                numc = Wc[0] + Wc[2] - 2.0 * Wc[1]
                denc = np.abs(Wc[0]) + 2.0 * np.abs(Wc[1]) + np.abs(Wc[2])
                marginc = numc / np.maximum(denc, 1e-300)
            keep = np.isfinite(marginc) & (marginc < -tolerance)
            # the candidate's own margin was fast-path noise; report the
            # confirmed one (or none) so min_margin never carries an artifact
            margins[bad] = np.where(np.isfinite(marginc), marginc, 0.0)
            num[bad] = numc
            rejected += int(bad.size - keep.sum())
            bad = bad[keep]
        ok_margins = margins[finite]
        min_margin = min(min_margin, float(ok_margins.min()))
        total_bad += int(bad.size)
        for j in bad:
            d2 = float(num[j] / (h[j] * h[j]))
            if len(stored) < MAX_STORED_VIOLATIONS:
                point = tuple(F[j].ravel()) + tuple(xi[j]) + tuple(eta[j])
                stored.append(Violation(tuple(map(float, point)), d2, float(margins[j])))
            if witness is None:
                witness = RankOneWitness(
                    F=F[j].copy(), xi=xi[j].copy(), eta=eta[j].copy(), second_derivative=d2
                )
        if witness is not None and stop_at_first_witness:
            break

    meta["rejected_candidates"] = rejected
    if tested == 0:
        report = ScanReport(
            claim, 0, (), math.nan, Verdict.INCONCLUSIVE, float(tolerance), meta, 0, skipped
        )
    else:
        verdict = Verdict.FAILS if total_bad else Verdict.HOLDS
        report = ScanReport(
            claim,
            tested,
            tuple(stored),
            min_margin,
            verdict,
            float(tolerance),
            meta,
            total_bad,
            skipped,
        )
    return report, witness


# ---------------------------------------------------------------------------
# volumetric convexity


def volumetric_convexity_check(
    khat: float, m: int, grid: Optional[ScanGrid] = None, tolerance: float = 1e-10
) -> ScanReport:
    """Second-difference convexity scan of t -> exp(khat |log t|^m) on (0, inf).

    The step is proportional to t (1e-3 relative) and the margin is the raw
    second difference over the stencil magnitude, which keeps the threshold
    meaningful across five decades of t. Holds exactly when khat >= 1/m^(m+1);
    the first failures for smaller khat open up around t = e^(m/(m-1)·...),
    e.g. near t = e^2 for m = 2.
    """
    if khat <= 0.0:
        raise DomainError("khat must be positive")
    if int(m) != m or m < 1:
        raise DomainError("m must be an integer >= 1")
    if grid is None:
        grid = ScanGrid((GridAxis("t", 1e-3, 1e3, 10000, log=True),))
    t = grid.mesh()[0]
    h = 1e-3 * t

    def f(x):
        return np.exp(khat * np.abs(np.log(x)) ** m)

    fp, f0, fm = f(t + h), f(t), f(t - h)
    num = fp + fm - 2.0 * f0
    scale = np.abs(fp) + 2.0 * np.abs(f0) + np.abs(fm)
    return _finish_report(
        "volumetric-convexity", (t,), num, num / scale, tolerance, grid.spec()
    )


# ---------------------------------------------------------------------------
# sum of squared logarithms


def ssli_margin(lams, mus) -> float:
    """sum log^2 mu - sum log^2 lambda; nonnegative under symmetric dominance."""
    lams = np.asarray(lams, dtype=float)
    mus = np.asarray(mus, dtype=float)
    if lams.shape != mus.shape or lams.ndim != 1:
        raise DomainError("tuples must be 1-d and equally long")
    if np.any(lams <= 0.0) or np.any(mus <= 0.0):
        raise DomainError("entries must be positive")
    return float(np.sum(np.log(mus) ** 2) - np.sum(np.log(lams) ** 2))


def _cubic_roots_real(e1: np.ndarray, e2: np.ndarray, e3: np.ndarray):
    """Roots of x^3 - e1 x^2 + e2 x - e3 where all three are real and simple.

    Returns (roots (n,3), ok mask); rows failing the test carry junk. Rows
    whose discriminant sits within 1e-9 of a multiple root are rejected too,
    since their trig-form roots are too fuzzy to polish reliably.
    """
    a = -e1
    p = e2 - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * e2 / 3.0 - e3
    disc = 4.0 * p**3 + 27.0 * q * q
    sc = 4.0 * np.abs(p) ** 3 + 27.0 * q * q + 1e-300
    ok = (disc <= -1e-9 * sc) & (p < 0.0)
    pn = np.where(ok, p, -1.0)
    amp = 2.0 * np.sqrt(-pn / 3.0)
    arg = np.clip(3.0 * q / (pn * amp), -1.0, 1.0)
    th = np.arccos(arg)
    ks = np.array([0.0, 1.0, 2.0])
    roots = amp[:, None] * np.cos((th[:, None] - 2.0 * math.pi * ks[None, :]) / 3.0) - a[:, None] / 3.0
    # two Newton sweeps restore full precision on the simple roots kept above
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for _ in range(2):
            fval = ((roots - e1[:, None]) * roots + e2[:, None]) * roots - e3[:, None]
            dval = (3.0 * roots - 2.0 * e1[:, None]) * roots + e2[:, None]
            step = np.where(np.abs(dval) > 1e-300, fval / dval, 0.0)
            roots = roots - np.where(np.isfinite(step), step, 0.0)
    return roots, ok


def ssli_sampler(n: int, trials: int, seed: int = 0, tolerance: float = 1e-10) -> ScanReport:
    """Randomized stress test of the squared-log-sum dominance.

    mu is drawn log-uniform in [e^-3, e^3]^n. lambda is built to satisfy
    e_j(lambda) <= e_j(mu) for j < n with e_n equal: closed-form in 2D (fix
    the product, redraw the sum in [2 sqrt(p), sum mu]); rejection with
    shrinking downward perturbations of e_1..e_{n-1} in 3D and 4D, where a
    draw that never yields real positive roots within 100 attempts is counted
    as a construction failure and skipped.
    """
    if n not in (2, 3, 4):
        raise InvalidDimensions("ssli_sampler supports n in {2, 3, 4}")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    meta = {"n": n, "trials": trials, "seed": seed, "log_mu_range": [-3.0, 3.0], "chunk": _CHUNK}

    tested = 0
    failures = 0
    stored: List[Violation] = []
    total_bad = 0
    min_margin = math.inf

    n_chunks = (trials + _CHUNK - 1) // _CHUNK
    for c in range(n_chunks):
        m = min(_CHUNK, trials - c * _CHUNK)
        rng = _chunk_rng(seed, c)
        mu = np.exp(rng.uniform(-3.0, 3.0, size=(m, n)))

        if n == 2:
            p = mu[:, 0] * mu[:, 1]
            s_hi = mu[:, 0] + mu[:, 1]
            s_lo = 2.0 * np.sqrt(p)
            s = s_lo + (s_hi - s_lo) * rng.uniform(size=m)
            root = np.sqrt(np.maximum(s * s - 4.0 * p, 0.0))
            big = (s + root) / 2.0
            # the small root via the product, not (s - root)/2: that difference
            # cancels when s is drawn near its upper end and poisons the margin
            lam = np.stack([big, p / big], axis=1)
            good = np.ones(m, dtype=bool)
        else:
            e = np.empty((m, n))
            e[:, 0] = mu.sum(axis=1)
            if n == 3:
                e[:, 1] = (
                    mu[:, 0] * mu[:, 1] + mu[:, 0] * mu[:, 2] + mu[:, 1] * mu[:, 2]
                )
                e[:, 2] = mu.prod(axis=1)
            else:
                e[:, 1] = sum(
                    mu[:, a] * mu[:, b] for a in range(4) for b in range(a + 1, 4)
                )
                e[:, 2] = sum(
                    mu[:, a] * mu[:, b] * mu[:, c]
                    for a in range(4)
                    for b in range(a + 1, 4)
                    for c in range(b + 1, 4)
                )
                e[:, 3] = mu.prod(axis=1)
            lam = np.empty((m, n))
            good = np.zeros(m, dtype=bool)
            amp = 0.5
            for _ in range(100):
                shrink = 1.0 - amp * rng.uniform(size=(m, n - 1))
                ehat = e.copy()
                ehat[:, : n - 1] *= shrink
                if n == 3:
                    roots, ok = _cubic_roots_real(ehat[:, 0], ehat[:, 1], ehat[:, 2])
                    ok &= roots.min(axis=1) > 0.0
                else:
                    roots = np.empty((m, 4))
                    ok = np.zeros(m, dtype=bool)
                    for j in np.flatnonzero(~good):
                        rr = np.roots(
                            [1.0, -ehat[j, 0], ehat[j, 1], -ehat[j, 2], ehat[j, 3]]
                        )
                        if np.max(np.abs(rr.imag)) <= 1e-10 * np.max(np.abs(rr.real)) and np.all(
                            rr.real > 0.0
                        ):
                            roots[j] = np.sort(rr.real)
                            ok[j] = True
                take = ok & ~good
                lam[take] = roots[take][:, :n] if n == 3 else roots[take]
                good |= take
                if good.all():
                    break
                amp *= 0.8
            failures += int(m - good.sum())

        logs_mu = np.log(mu)
        with np.errstate(invalid="ignore"):
            logs_lam = np.log(np.where(lam > 0.0, lam, 1.0))
        value = (logs_mu**2).sum(axis=1) - (logs_lam**2).sum(axis=1)
        value = np.where(good, value, np.nan)
        tested += int(good.sum())
        if good.any():
            min_margin = min(min_margin, float(value[good].min()))
        bad = np.flatnonzero(good & (value < -tolerance))
        total_bad += int(bad.size)
        for j in bad[: max(0, MAX_STORED_VIOLATIONS - len(stored))]:
            point = tuple(map(float, mu[j])) + tuple(map(float, lam[j]))
            stored.append(Violation(point, float(value[j]), float(value[j])))

    claim = f"sum-squared-logs-{n}d"
    if tested == 0:
        return ScanReport(
            claim, 0, (), math.nan, Verdict.INCONCLUSIVE, float(tolerance), meta, 0, failures
        )
    verdict = Verdict.FAILS if total_bad else Verdict.HOLDS
    return ScanReport(
        claim,
        tested,
        tuple(stored),
        min_margin,
        verdict,
        float(tolerance),
        meta,
        total_bad,
        failures,
    )
