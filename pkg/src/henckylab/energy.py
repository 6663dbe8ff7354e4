"""The exponentiated Hencky energy family, its invariant-space form, and its stress.

Conventions: W(F) = (mu/k) exp(k ||dev_n log U||^2) + (kappa/(2 khat)) exp(khat |tr log U|^m)
for det F > 0, and +inf otherwise (math.inf, never an exception: minimizers treat
det <= 0 as a rejectable step). The quadratic comparison energy is
mu ||dev_n log U||^2 + (kappa/2) (tr log U)^2. For m = 2 the absolute value is
redundant; odd m needs it for the convexity threshold to hold, see the volumetric
check in the convexity module.

Scalar functions here go through tensor.py's closed-form eigensolves and are kept
independent of the batch kernels so the two routes can be tested against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import tensor
from .errors import DomainError, InvalidDimensions, NonPositiveDeterminant, OutsideDomain
from .tensor import InvariantPoint, Region


@dataclass(frozen=True)
class MaterialParams:
    """Material constants: shear mu, bulk kappa (one stress unit), dimensionless k, khat.

    The linear-elasticity relation kappa = (2 mu + 3 lambda)/3 is the caller's
    business and not enforced.
    """

    mu: float = 1.0
    kappa: float = 1.0
    k: float = 1.0 / 3.0
    khat: float = 1.0 / 8.0
    m: int = 2

    def __post_init__(self):
        if not (self.mu > 0 and self.kappa > 0 and self.k > 0 and self.khat > 0):
            raise DomainError("mu, kappa, k, khat must all be positive")
        if not (isinstance(self.m, int) and self.m >= 1):
            raise DomainError("volumetric exponent m must be an integer >= 1")

    @property
    def rest_energy(self) -> float:
        """Energy of the stress-free state: mu/k + kappa/(2 khat)."""
        return self.mu / self.k + self.kappa / (2.0 * self.khat)


def _strain_logs(F) -> Optional[Tuple[float, float]]:
    """(||dev_n log U||^2, tr log U) of F, or None when det F <= 0."""
    F = np.asarray(F, dtype=float)
    if float(np.linalg.det(F)) <= 0.0:
        return None
    U = tensor.right_stretch(F)
    return tensor.dev_log_norm_sq(U), tensor.tr_log(U)


def energy_iso(F, p: MaterialParams) -> float:
    """Isochoric summand (mu/k) exp(k ||dev_n log U||^2); +inf off GL+."""
    s = _strain_logs(F)
    if s is None:
        return math.inf
    dev2, _ = s
    try:
        return (p.mu / p.k) * math.exp(p.k * dev2)
    except OverflowError:
        return math.inf


def energy_vol(F, p: MaterialParams) -> float:
    """Volumetric summand (kappa/(2 khat)) exp(khat |tr log U|^m); +inf off GL+."""
    s = _strain_logs(F)
    if s is None:
        return math.inf
    _, trl = s
    try:
        return (p.kappa / (2.0 * p.khat)) * math.exp(p.khat * abs(trl) ** p.m)
    except OverflowError:
        return math.inf


def energy_eH(F, p: MaterialParams) -> float:
    """Total exponentiated energy, the exact sum of the two summands."""
    return energy_iso(F, p) + energy_vol(F, p)


def energy_quadratic_hencky(F, p: MaterialParams) -> float:
    """Quadratic logarithmic energy mu ||dev log U||^2 + (kappa/2)(tr log U)^2."""
    s = _strain_logs(F)
    if s is None:
        return math.inf
    dev2, trl = s
    return p.mu * dev2 + 0.5 * p.kappa * trl * trl


def g_iso(lam1: float, lam2: float, k: float) -> float:
    """Planar isochoric factor exp((k/2) log^2(lam1/lam2))."""
    if lam1 <= 0.0 or lam2 <= 0.0:
        raise DomainError("stretches must be positive")
    t = math.log(lam1 / lam2)
    return math.exp(0.5 * k * t * t)


def psi(i1: float, i2: float, k: float) -> float:
    """g_iso expressed in the invariants (i1, i2) = (tr U, det U).

    Evaluated through the eigenvalue route (roots of x^2 - i1 x + i2): the
    equivalent ratio form exp((k/2) log^2((i1+R)/(i1-R))) cancels
    catastrophically as R -> 0, the eigenvalue route does not.
    """
    region = tensor.classify_region_2d(i1, i2)
    lam1, lam2 = tensor.invariants_to_eigenvalues(
        InvariantPoint(i1, i2, None, region)
    )
    return g_iso(lam1, lam2, k)


def psi_hat(i1: float, i2: float, k: float) -> float:
    """Convex extension of psi: equal to psi on D and gamma2, 1 elsewhere.

    The extension applies to the unscaled exponential factor; any mu/k scaling
    is the caller's to apply afterwards.
    """
    if i1 < 0.0 or i2 <= 0.0:
        raise DomainError("psi_hat needs i1 >= 0 and i2 > 0")
    region = tensor.classify_region_2d(i1, i2)
    if region is Region.OUTSIDE:
        return 1.0
    if region is Region.ON_GAMMA2:
        return 1.0
    return psi(i1, i2, k)


def piola_stress(F, p: MaterialParams) -> np.ndarray:
    """First Piola-Kirchhoff stress of the exponentiated energy (2D, m = 2).

    S1 = R [2 mu e^{k ||dev2 log U||^2} dev2 log U
            + kappa e^{khat (tr log U)^2} (tr log U) I] U^{-1}
    with F = R U the polar decomposition. The bracket is the Kirchhoff-type
    stress in the principal frame; right-multiplying by U^{-1} and rotating
    forward by R is what F^{-T} does to its left-stretch twin.
    """
    F = np.asarray(F, dtype=float)
    if F.shape != (2, 2):
        raise InvalidDimensions("the closed-form stress is planar only")
    if p.m != 2:
        raise DomainError("the stress formula holds for volumetric exponent m = 2")
    det = float(np.linalg.det(F))
    if det <= 0.0:
        raise NonPositiveDeterminant(f"det F = {det:g} <= 0")
    U = tensor.right_stretch(F)
    R = F @ np.linalg.inv(U)
    logU = tensor.spd_log(U)
    dev = tensor.deviator(logU)
    dev2 = float(np.sum(dev * dev))
    trl = float(np.trace(logU))
    bracket = (
        2.0 * p.mu * math.exp(p.k * dev2) * dev
        + p.kappa * math.exp(p.khat * trl * trl) * trl * np.eye(2)
    )
    return R @ bracket @ np.linalg.inv(U)


def tangent_fd(F, p: MaterialParams, h: Optional[float] = None) -> np.ndarray:
    """Fourth-order tangent d^2 W / dF dF by central second differences.

    Step h defaults to 1e-4*(1 + ||F||). Every stencil point must stay in GL+;
    a det <= 0 stencil point raises NonPositiveDeterminant because a one-sided
    tangent would be silently wrong.
    """
    F = np.asarray(F, dtype=float)
    dim = F.shape[0]
    if F.shape != (dim, dim) or dim not in (2, 3):
        raise InvalidDimensions("tangent_fd expects a 2x2 or 3x3 matrix")
    if h is None:
        h = 1e-4 * (1.0 + float(np.linalg.norm(F)))

    def w(G) -> float:
        if float(np.linalg.det(G)) <= 0.0:
            raise NonPositiveDeterminant("finite-difference stencil left GL+")
        return energy_eH(G, p)

    w0 = w(F)
    out = np.empty((dim, dim, dim, dim))
    basis = [(i, j) for i in range(dim) for j in range(dim)]
    for a, (i, j) in enumerate(basis):
        Eij = np.zeros((dim, dim))
        Eij[i, j] = h
        out[i, j, i, j] = (w(F + Eij) - 2.0 * w0 + w(F - Eij)) / (h * h)
        for b in range(a + 1, len(basis)):
            kk, ll = basis[b]
            Ekl = np.zeros((dim, dim))
            Ekl[kk, ll] = h
            val = (
                w(F + Eij + Ekl)
                - w(F + Eij - Ekl)
                - w(F - Eij + Ekl)
                + w(F - Eij - Ekl)
            ) / (4.0 * h * h)
            out[i, j, kk, ll] = val
            out[kk, ll, i, j] = val
    return out
