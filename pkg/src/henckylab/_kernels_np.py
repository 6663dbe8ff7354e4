"""Pure-numpy batch kernels: the fallback backend.

Same contract as the compiled extension `_kernels`: every function takes a
C-contiguous (N, d, d) float64 batch of deformation gradients and returns
per-sample log-strain data or stresses. Samples with det F <= 0 yield NaN in
the strain outputs (the determinant itself is always reported) so callers can
apply the +inf energy branch without exceptions in hot loops.

The eigenvalue routes mirror tensor.py: guarded trace/determinant closed form
in 2D, trigonometric Cardano plus one Newton polish in 3D. Cancellation-prone
small eigenvalues of C are rebuilt from invariants: det(C)/lambda_max in 2D,
and in 3D the trailing pair is recovered from its sum tr - lam_max and product
det / lam_max, which keeps log U finite out to cond(C) near 1/eps.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"

_EQUAL_EIG_REL = 1e-12


def _c_entries_2d(F):
    f00, f01 = F[:, 0, 0], F[:, 0, 1]
    f10, f11 = F[:, 1, 0], F[:, 1, 1]
    det = f00 * f11 - f01 * f10
    c11 = f00 * f00 + f10 * f10
    c12 = f00 * f01 + f10 * f11
    c22 = f01 * f01 + f11 * f11
    return det, c11, c12, c22


def log_strain_2d(F):
    """(||dev2 log U||^2, tr log U, det F) per sample for 2x2 batches."""
    F = np.ascontiguousarray(F, dtype=float)
    det, c11, c12, c22 = _c_entries_2d(F)
    half_tr = 0.5 * (c11 + c22)
    rad = np.hypot(0.5 * (c11 - c22), c12)
    lam_hi = half_tr + rad
    ok = det > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_lo = np.where(ok, (det * det) / np.where(lam_hi > 0, lam_hi, 1.0), np.nan)
        ratio = np.where(ok & (lam_lo > 0), lam_hi / lam_lo, np.nan)
        # log U eigen-gap = 0.5*log(lam_hi/lam_lo) of C; dev-norm^2 = gap^2/2
        gap = 0.5 * np.log(ratio)
        dev2 = 0.5 * gap * gap
        trl = np.where(ok, np.log(np.where(ok, det, 1.0)), np.nan)
    return dev2, trl, det


def _det3(F):
    return (
        F[:, 0, 0] * (F[:, 1, 1] * F[:, 2, 2] - F[:, 1, 2] * F[:, 2, 1])
        - F[:, 0, 1] * (F[:, 1, 0] * F[:, 2, 2] - F[:, 1, 2] * F[:, 2, 0])
        + F[:, 0, 2] * (F[:, 1, 0] * F[:, 2, 1] - F[:, 1, 1] * F[:, 2, 0])
    )


def _eigvals_spd3(C, detC):
    """Eigenvalues (descending) of symmetric 3x3 batches, Cardano + Newton polish."""
    n = C.shape[0]
    a = C[:, 0, 0] + C[:, 1, 1] + C[:, 2, 2]
    b = (
        C[:, 0, 0] * C[:, 1, 1]
        - C[:, 0, 1] ** 2
        + C[:, 0, 0] * C[:, 2, 2]
        - C[:, 0, 2] ** 2
        + C[:, 1, 1] * C[:, 2, 2]
        - C[:, 1, 2] ** 2
    )
    q = a / 3.0
    b00 = C[:, 0, 0] - q
    b11 = C[:, 1, 1] - q
    b22 = C[:, 2, 2] - q
    p2 = (
        b00 * b00
        + b11 * b11
        + b22 * b22
        + 2.0 * (C[:, 0, 1] ** 2 + C[:, 0, 2] ** 2 + C[:, 1, 2] ** 2)
    )
    p = np.sqrt(np.maximum(p2, 0.0) / 6.0)
    safe = p > 0.0
    ps = np.where(safe, p, 1.0)
    det_b = (
        b00 * (b11 * b22 - C[:, 1, 2] ** 2)
        - C[:, 0, 1] * (C[:, 0, 1] * b22 - C[:, 1, 2] * C[:, 0, 2])
        + C[:, 0, 2] * (C[:, 0, 1] * C[:, 1, 2] - b11 * C[:, 0, 2])
    )
    r = np.clip(0.5 * det_b / (ps * ps * ps), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    hi = q + 2.0 * ps * np.cos(phi)
    lo = q + 2.0 * ps * np.cos(phi + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - hi - lo
    lam = np.stack([hi, mid, lo], axis=1)
    lam[~safe] = q[~safe, None]

    # one Newton step on x^3 - a x^2 + b x - c, skipped near multiple roots
    # and whenever |p| is below its evaluation rounding floor (a step there
    # would only inject p's roundoff, amplified by a small dp)
    aa, bb, cc = a[:, None], b[:, None], detC[:, None]
    pval = ((lam - aa) * lam + bb) * lam - cc
    dp = (3.0 * lam - 2.0 * aa) * lam + bb
    al = np.abs(lam)
    floor = al * al * (al + np.abs(aa)) + np.abs(bb) * al + np.abs(cc)
    scale = lam * lam + np.abs(bb) + 1.0
    ok = (np.abs(pval) > 64.0 * 2.220446049250313e-16 * floor) & (
        np.abs(dp) > 1e-8 * scale
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(ok, pval / dp, 0.0)
    lam = lam - step
    lam.sort(axis=1)
    lam = np.ascontiguousarray(lam[:, ::-1])

    # The trig form loses the trailing pair once it falls far below the
    # leading eigenvalue (absolute error ~ sqrt(eps) * lam_max, and one
    # Newton step cannot recover from that far). Rebuild the pair from the
    # exact invariants mid + lo = tr - hi and mid * lo = det / hi, taking
    # the small root as a quotient so the subtraction never cancels.
    hi = lam[:, 0]
    ssum = a - hi
    with np.errstate(divide="ignore", invalid="ignore"):
        prod = detC / np.where(hi > 0.0, hi, 1.0)
        disc = ssum * ssum - 4.0 * prod
        big = 0.5 * (ssum + np.sqrt(np.maximum(disc, 0.0)))
        tiny = prod / np.where(big > 0.0, big, 1.0)
    use = (hi > 0.0) & (ssum > 0.0) & (prod > 0.0)
    # a clamped discriminant can invert the pair by one ulp
    lam[:, 1] = np.where(use, np.maximum(big, tiny), lam[:, 1])
    lam[:, 2] = np.where(use, np.minimum(big, tiny), lam[:, 2])
    return lam


def log_strain_3d(F):
    """(||dev3 log U||^2, tr log U, det F) per sample for 3x3 batches."""
    F = np.ascontiguousarray(F, dtype=float)
    det = _det3(F)
    C = np.einsum("nji,njk->nik", F, F)
    lam = _eigvals_spd3(C, det * det)
    ok = det > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = 0.5 * np.log(np.where(lam > 0.0, lam, np.nan))
        trl = np.where(ok, np.log(np.where(ok, det, 1.0)), np.nan)
        dev = logs - trl[:, None] / 3.0
        dev2 = np.where(ok, np.einsum("ni,ni->n", dev, dev), np.nan)
        trl = np.where(ok, trl, np.nan)
    return dev2, trl, det


def piola_2d(F, mu, kappa, k, khat):
    """First Piola-Kirchhoff stress batch for the exponentiated energy, m = 2.

    S1 = F Q diag(tau_i / lamC_i) Q^T with Q, lamC the eigen-data of C = F^T F
    and tau_i = 2 mu e^{k dev2} (log U)_i^dev + kappa e^{khat (tr log U)^2} tr log U.
    Rows with det F <= 0 come back NaN.
    """
    F = np.ascontiguousarray(F, dtype=float)
    det, c11, c12, c22 = _c_entries_2d(F)
    half_tr = 0.5 * (c11 + c22)
    rad = np.hypot(0.5 * (c11 - c22), c12)
    ok = det > 0.0
    lam1 = half_tr + rad
    with np.errstate(divide="ignore", invalid="ignore"):
        lam2 = np.where(ok, (det * det) / np.where(lam1 > 0, lam1, 1.0), np.nan)
        gap = 0.5 * np.log(np.where(ok, lam1, 1.0) / np.where(ok, lam2, 1.0))
        trl = np.log(np.where(ok, det, 1.0))
    d1 = 0.5 * gap  # dev log U eigenvalue for lam1 direction
    dev2 = 2.0 * d1 * d1
    with np.errstate(over="ignore"):
        iso_f = 2.0 * mu * np.exp(k * dev2)
        vol_t = kappa * np.exp(khat * trl * trl) * trl
    tau1 = iso_f * d1 + vol_t
    tau2 = -iso_f * d1 + vol_t
    with np.errstate(divide="ignore", invalid="ignore"):
        w1 = tau1 / lam1
        w2 = tau2 / lam2

    # eigenvectors of C for lam1: (c12, lam1 - c11) vs (lam1 - c22, c12)
    va0, va1 = c12, lam1 - c11
    vb0, vb1 = lam1 - c22, c12
    use_b = vb0 * vb0 + vb1 * vb1 > va0 * va0 + va1 * va1
    v0 = np.where(use_b, vb0, va0)
    v1 = np.where(use_b, vb1, va1)
    nrm = np.hypot(v0, v1)
    equal = rad <= _EQUAL_EIG_REL * (np.abs(lam1) + np.abs(lam2))
    degen = equal | (nrm == 0.0)
    nrm = np.where(degen, 1.0, nrm)
    v0 = np.where(degen, 1.0, v0 / nrm)
    v1 = np.where(degen, 0.0, v1 / nrm)

    # M = Q diag(w) Q^T assembled entrywise; S1 = F M
    m00 = w1 * v0 * v0 + w2 * v1 * v1
    m01 = (w1 - w2) * v0 * v1
    m11 = w1 * v1 * v1 + w2 * v0 * v0
    M = np.empty_like(F)
    M[:, 0, 0] = m00
    M[:, 0, 1] = m01
    M[:, 1, 0] = m01
    M[:, 1, 1] = m11
    S = np.einsum("nij,njk->nik", F, M)
    S[~ok] = np.nan
    return S
