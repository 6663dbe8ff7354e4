# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels: the hot-loop backend.

Contract mirrors _kernels_np exactly; see that module for semantics. Each
function walks the sample axis once with closed-form eigensolves, no Python
objects inside the loop.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport acos, cos, exp, fabs, hypot, log, sqrt

cnp.import_array()

BACKEND = "compiled"

cdef double NAN = float("nan")
cdef double TWO_PI_3 = 2.0943951023931953  # 2*pi/3
cdef double EQUAL_EIG_REL = 1e-12


def log_strain_2d(F):
    cdef double[:, :, ::1] f = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0], i
    dev2_arr = np.empty(n)
    trl_arr = np.empty(n)
    det_arr = np.empty(n)
    cdef double[::1] dev2 = dev2_arr, trl = trl_arr, det = det_arr
    cdef double f00, f01, f10, f11, d, c11, c12, c22, half_tr, rad, hi, lo, gap
    for i in range(n):
        f00 = f[i, 0, 0]; f01 = f[i, 0, 1]
        f10 = f[i, 1, 0]; f11 = f[i, 1, 1]
        d = f00 * f11 - f01 * f10
        det[i] = d
        if d <= 0.0 or d != d:
            dev2[i] = NAN
            trl[i] = NAN
            continue
        c11 = f00 * f00 + f10 * f10
        c12 = f00 * f01 + f10 * f11
        c22 = f01 * f01 + f11 * f11
        half_tr = 0.5 * (c11 + c22)
        rad = hypot(0.5 * (c11 - c22), c12)
        hi = half_tr + rad
        lo = (d * d) / hi
        gap = 0.5 * log(hi / lo)
        dev2[i] = 0.5 * gap * gap
        trl[i] = log(d)
    return dev2_arr, trl_arr, det_arr


cdef inline void _eig3_spd(double c00, double c01, double c02,
                           double c11, double c12, double c22,
                           double detc, double* out) nogil:
    # descending eigenvalues of a symmetric (SPD in practice) 3x3
    cdef double a = c00 + c11 + c22
    cdef double b = c00 * c11 - c01 * c01 + c00 * c22 - c02 * c02 + c11 * c22 - c12 * c12
    cdef double q = a / 3.0
    cdef double b00 = c00 - q, b11 = c11 - q, b22 = c22 - q
    cdef double p2 = b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * (c01 * c01 + c02 * c02 + c12 * c12)
    cdef double p, det_b, r, phi, hi, lo, mid, lam, pval, dp, scale, tmp
    cdef double ssum, prod, disc, big, tiny
    cdef int j, m
    if p2 <= 0.0:
        out[0] = q; out[1] = q; out[2] = q
        return
    p = sqrt(p2 / 6.0)
    det_b = (b00 * (b11 * b22 - c12 * c12)
             - c01 * (c01 * b22 - c12 * c02)
             + c02 * (c01 * c12 - b11 * c02))
    r = 0.5 * det_b / (p * p * p)
    if r > 1.0:
        r = 1.0
    elif r < -1.0:
        r = -1.0
    phi = acos(r) / 3.0
    hi = q + 2.0 * p * cos(phi)
    lo = q + 2.0 * p * cos(phi + TWO_PI_3)
    mid = 3.0 * q - hi - lo
    out[0] = hi; out[1] = mid; out[2] = lo
    for j in range(3):
        lam = out[j]
        pval = ((lam - a) * lam + b) * lam - detc
        # skip the polish when |p| is below its evaluation rounding floor:
        # the step would only inject roundoff, amplified by a small dp
        tmp = fabs(lam)
        if fabs(pval) <= 1.4210854715202004e-14 * (
            tmp * tmp * (tmp + fabs(a)) + fabs(b) * tmp + fabs(detc)
        ):
            continue
        dp = (3.0 * lam - 2.0 * a) * lam + b
        scale = lam * lam + fabs(b) + 1.0
        if fabs(dp) > 1e-8 * scale:
            out[j] = lam - pval / dp
    # insertion sort, descending
    for j in range(1, 3):
        lam = out[j]
        m = j
        while m > 0 and out[m - 1] < lam:
            out[m] = out[m - 1]
            m -= 1
        out[m] = lam
    # The trig form loses the trailing pair once it falls far below the
    # leading eigenvalue (absolute error ~ sqrt(eps) * lam_max, and one
    # Newton step cannot recover from that far). Rebuild the pair from the
    # exact invariants mid + lo = tr - hi and mid * lo = det / hi, taking
    # the small root as a quotient so the subtraction never cancels.
    hi = out[0]
    ssum = a - hi
    if hi > 0.0 and ssum > 0.0 and detc > 0.0:
        prod = detc / hi
        if prod > 0.0:
            disc = ssum * ssum - 4.0 * prod
            if disc > 0.0:
                big = 0.5 * (ssum + sqrt(disc))
            else:
                big = 0.5 * ssum
            tiny = prod / big
            # a clamped discriminant can invert the pair by one ulp
            if tiny > big:
                tmp = big; big = tiny; tiny = tmp
            out[1] = big
            out[2] = tiny


def log_strain_3d(F):
    cdef double[:, :, ::1] f = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0], i
    dev2_arr = np.empty(n)
    trl_arr = np.empty(n)
    det_arr = np.empty(n)
    cdef double[::1] dev2 = dev2_arr, trl = trl_arr, det = det_arr
    cdef double d, t, l0, l1, l2, mean
    cdef double c00, c01, c02, c11, c12, c22
    cdef double lam[3]
    cdef Py_ssize_t r
    cdef double f0[3]
    cdef double f1[3]
    cdef double f2[3]
    for i in range(n):
        for r in range(3):
            f0[r] = f[i, r, 0]
            f1[r] = f[i, r, 1]
            f2[r] = f[i, r, 2]
        d = (f[i, 0, 0] * (f[i, 1, 1] * f[i, 2, 2] - f[i, 1, 2] * f[i, 2, 1])
             - f[i, 0, 1] * (f[i, 1, 0] * f[i, 2, 2] - f[i, 1, 2] * f[i, 2, 0])
             + f[i, 0, 2] * (f[i, 1, 0] * f[i, 2, 1] - f[i, 1, 1] * f[i, 2, 0]))
        det[i] = d
        if d <= 0.0 or d != d:
            dev2[i] = NAN
            trl[i] = NAN
            continue
        # C = F^T F, upper triangle
        c00 = f0[0] * f0[0] + f0[1] * f0[1] + f0[2] * f0[2]
        c01 = f0[0] * f1[0] + f0[1] * f1[1] + f0[2] * f1[2]
        c02 = f0[0] * f2[0] + f0[1] * f2[1] + f0[2] * f2[2]
        c11 = f1[0] * f1[0] + f1[1] * f1[1] + f1[2] * f1[2]
        c12 = f1[0] * f2[0] + f1[1] * f2[1] + f1[2] * f2[2]
        c22 = f2[0] * f2[0] + f2[1] * f2[1] + f2[2] * f2[2]
        _eig3_spd(c00, c01, c02, c11, c12, c22, d * d, lam)
        t = log(d)
        if lam[2] <= 0.0:
            dev2[i] = NAN
            trl[i] = t
            continue
        mean = t / 3.0
        l0 = 0.5 * log(lam[0]) - mean
        l1 = 0.5 * log(lam[1]) - mean
        l2 = 0.5 * log(lam[2]) - mean
        dev2[i] = l0 * l0 + l1 * l1 + l2 * l2
        trl[i] = t
    return dev2_arr, trl_arr, det_arr


def piola_2d(F, double mu, double kappa, double k, double khat):
    cdef double[:, :, ::1] f = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0], i
    S_arr = np.empty((n, 2, 2))
    cdef double[:, :, ::1] S = S_arr
    cdef double f00, f01, f10, f11, d, c11, c12, c22, half_tr, rad, lam1, lam2
    cdef double gap, trl, d1, dev2, iso_f, vol_t, tau1, tau2, w1, w2
    cdef double va0, va1, vb0, vb1, v0, v1, nrm, m00, m01, m11
    for i in range(n):
        f00 = f[i, 0, 0]; f01 = f[i, 0, 1]
        f10 = f[i, 1, 0]; f11 = f[i, 1, 1]
        d = f00 * f11 - f01 * f10
        if d <= 0.0 or d != d:
            S[i, 0, 0] = NAN; S[i, 0, 1] = NAN
            S[i, 1, 0] = NAN; S[i, 1, 1] = NAN
            continue
        c11 = f00 * f00 + f10 * f10
        c12 = f00 * f01 + f10 * f11
        c22 = f01 * f01 + f11 * f11
        half_tr = 0.5 * (c11 + c22)
        rad = hypot(0.5 * (c11 - c22), c12)
        lam1 = half_tr + rad
        lam2 = (d * d) / lam1
        gap = 0.5 * log(lam1 / lam2)
        trl = log(d)
        d1 = 0.5 * gap
        dev2 = 2.0 * d1 * d1
        iso_f = 2.0 * mu * exp(k * dev2)
        vol_t = kappa * exp(khat * trl * trl) * trl
        tau1 = iso_f * d1 + vol_t
        tau2 = -iso_f * d1 + vol_t
        w1 = tau1 / lam1
        w2 = tau2 / lam2
        if rad <= EQUAL_EIG_REL * (fabs(lam1) + fabs(lam2)):
            v0 = 1.0; v1 = 0.0
        else:
            va0 = c12; va1 = lam1 - c11
            vb0 = lam1 - c22; vb1 = c12
            if vb0 * vb0 + vb1 * vb1 > va0 * va0 + va1 * va1:
                v0 = vb0; v1 = vb1
            else:
                v0 = va0; v1 = va1
            nrm = hypot(v0, v1)
            if nrm == 0.0:
                v0 = 1.0; v1 = 0.0
            else:
                v0 /= nrm; v1 /= nrm
        m00 = w1 * v0 * v0 + w2 * v1 * v1
        m01 = (w1 - w2) * v0 * v1
        m11 = w1 * v1 * v1 + w2 * v0 * v0
        S[i, 0, 0] = f00 * m00 + f01 * m01
        S[i, 0, 1] = f00 * m01 + f01 * m11
        S[i, 1, 0] = f10 * m00 + f11 * m01
        S[i, 1, 1] = f10 * m01 + f11 * m11
    return S_arr
