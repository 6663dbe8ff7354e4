"""Backend selection and batch energy evaluation for the hot loops.

The compiled extension (`henckylab._kernels`, Cython) is preferred; the
vectorized numpy twin (`henckylab._kernels_np`) is the fallback when the
extension was not built. Set HENCKYLAB_KERNEL=py or =c before import to force
a backend (=c raises if the extension is missing rather than degrading
silently). Both backends satisfy the same contract and the test suite runs
the equivalence checks on whichever pair is available.

Samples with det F <= 0 map to +inf energy, never to an exception: scans and
line searches must be able to step across the det = 0 barrier and reject.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_np

_requested = os.environ.get("HENCKYLAB_KERNEL", "").strip().lower()

if _requested in ("py", "numpy", "python"):
    _impl = _kernels_np
elif _requested in ("c", "compiled", "cython"):
    from . import _kernels as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_np


def backend_name() -> str:
    """Name of the active backend: 'compiled' or 'numpy'."""
    return _impl.BACKEND


def get_backends():
    """All importable backends, for equivalence tests and benchmarks."""
    out = {"numpy": _kernels_np}
    try:
        from . import _kernels

        out["compiled"] = _kernels
    except ImportError:
        pass
    return out


def _as_batch(F) -> np.ndarray:
    F = np.ascontiguousarray(F, dtype=float)
    if F.ndim == 2:
        F = F[None]
    if F.ndim != 3 or F.shape[1] != F.shape[2] or F.shape[1] not in (2, 3):
        raise ValueError(f"expected (N, d, d) with d in (2, 3), got {F.shape}")
    return F


def log_strain(F):
    """Batch (||dev_n log U||^2, tr log U, det F); NaN strain rows for det <= 0."""
    F = _as_batch(F)
    if F.shape[1] == 2:
        return _impl.log_strain_2d(F)
    return _impl.log_strain_3d(F)


def energy_eh(F, mu, kappa, k, khat, m: int = 2):
    """Batch exponentiated energy; +inf where det F <= 0 (or overflow)."""
    dev2, trl, det = log_strain(_as_batch(F))
    with np.errstate(over="ignore", invalid="ignore"):
        vol_arg = np.abs(trl) ** m if m != 2 else trl * trl
        out = (mu / k) * np.exp(k * dev2) + (kappa / (2.0 * khat)) * np.exp(
            khat * vol_arg
        )
    out = np.where(np.isnan(out), np.inf, out)
    out[det <= 0.0] = np.inf
    return out


def energy_parts(F, mu, kappa, k, khat, m: int = 2):
    """Batch (iso, vol) summands of the exponentiated energy; +inf off GL+."""
    dev2, trl, det = log_strain(_as_batch(F))
    with np.errstate(over="ignore", invalid="ignore"):
        vol_arg = np.abs(trl) ** m if m != 2 else trl * trl
        iso = (mu / k) * np.exp(k * dev2)
        vol = (kappa / (2.0 * khat)) * np.exp(khat * vol_arg)
    bad = ~(det > 0.0)
    iso = np.where(np.isnan(iso) | bad, np.inf, iso)
    vol = np.where(np.isnan(vol) | bad, np.inf, vol)
    return iso, vol


def energy_quadratic_hencky(F, mu, kappa):
    """Batch quadratic logarithmic energy; +inf where det F <= 0."""
    dev2, trl, det = log_strain(_as_batch(F))
    out = mu * dev2 + 0.5 * kappa * trl * trl
    out = np.where(np.isnan(out), np.inf, out)
    out[det <= 0.0] = np.inf
    return out


def piola_2d(F, mu, kappa, k, khat):
    """Batch first Piola-Kirchhoff stress (2D, m = 2); NaN rows for det <= 0."""
    F = _as_batch(F)
    if F.shape[1] != 2:
        raise ValueError("piola_2d expects 2x2 batches")
    return _impl.piola_2d(F, mu, kappa, k, khat)


def log_strain_svd(F):
    """log_strain through singular values of F itself, not eigenvalues of F^T F.

    Forming F^T F squares the condition number: once the stretch ratio passes
    ~1e7, the smallest eigenvalue of F^T F is dominated by the rounding of the
    product and any eigensolver returns noise, while sigma_min(F) is still
    good to ~eps * cond(F). Several times slower than the backend route; meant
    for verifying extreme-stretch samples, not for hot loops.
    """
    F = _as_batch(F)
    det = np.linalg.det(F)
    sig = np.linalg.svd(F, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(sig)
        trl = logs.sum(axis=1)
        devl = logs - trl[:, None] / F.shape[1]
        dev2 = (devl * devl).sum(axis=1)
    bad = ~(det > 0.0)
    dev2 = np.where(bad, np.nan, dev2)
    trl = np.where(bad, np.nan, trl)
    return dev2, trl, det


def energy_eh_svd(F, mu, kappa, k, khat, m: int = 2):
    """energy_eh on the singular-value route of log_strain_svd."""
    dev2, trl, det = log_strain_svd(F)
    with np.errstate(over="ignore", invalid="ignore"):
        vol_arg = np.abs(trl) ** m if m != 2 else trl * trl
        out = (mu / k) * np.exp(k * dev2) + (kappa / (2.0 * khat)) * np.exp(
            khat * vol_arg
        )
    out = np.where(np.isnan(out), np.inf, out)
    out[det <= 0.0] = np.inf
    return out


def energy_quadratic_hencky_svd(F, mu, kappa):
    """energy_quadratic_hencky on the singular-value route of log_strain_svd."""
    dev2, trl, det = log_strain_svd(F)
    out = mu * dev2 + 0.5 * kappa * trl * trl
    out = np.where(np.isnan(out), np.inf, out)
    out[det <= 0.0] = np.inf
    return out
