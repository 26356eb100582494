# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled eigensolver kernel.

Same algorithm as ``eigenkae.linalg._kernel_py`` (Hessenberg reduction,
Francis double-shift QR, inverse-iteration eigenvectors) with the inner
loops in C. The eigenloss decomposes the Koopman operator on every
optimiser step, which makes this the hot path of training.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt, isfinite

cnp.import_array()

STATUS_OK = 0
STATUS_NO_CONVERGENCE = 1

cdef int _ST_OK = 0
cdef int _ST_NO_CONV = 1

FLAG_REAL = 0
FLAG_PAIR_FIRST = 1
FLAG_PAIR_SECOND = 2

cdef double _EPS = 2.220446049250313e-16
cdef double _TINY = 2.2250738585072014e-308
cdef int _INVIT_MAX_SWEEPS = 5
cdef double _INVIT_RTOL = 100.0 * 2.220446049250313e-16


cdef double _fro_norm(double[:, ::1] a, int n) noexcept nogil:
    cdef double s = 0.0
    cdef int i, j
    for i in range(n):
        for j in range(n):
            s += a[i, j] * a[i, j]
    return sqrt(s)


cdef void _hessenberg(double[:, ::1] a, double[:, ::1] q, double* v, int n) noexcept nogil:
    cdef int k, i, j, ln
    cdef double norm_x, norm_v, s
    for k in range(n - 2):
        ln = n - k - 1
        norm_x = 0.0
        for i in range(ln):
            norm_x += a[k + 1 + i, k] * a[k + 1 + i, k]
        norm_x = sqrt(norm_x)
        if norm_x == 0.0:
            continue
        for i in range(ln):
            v[i] = a[k + 1 + i, k]
        if v[0] >= 0.0:
            v[0] += norm_x
        else:
            v[0] -= norm_x
        norm_v = 0.0
        for i in range(ln):
            norm_v += v[i] * v[i]
        norm_v = sqrt(norm_v)
        if norm_v == 0.0:
            continue
        for i in range(ln):
            v[i] /= norm_v
        for j in range(k, n):
            s = 0.0
            for i in range(ln):
                s += v[i] * a[k + 1 + i, j]
            s *= 2.0
            for i in range(ln):
                a[k + 1 + i, j] -= s * v[i]
        for i in range(n):
            s = 0.0
            for j in range(ln):
                s += a[i, k + 1 + j] * v[j]
            s *= 2.0
            for j in range(ln):
                a[i, k + 1 + j] -= s * v[j]
        for i in range(n):
            s = 0.0
            for j in range(ln):
                s += q[i, k + 1 + j] * v[j]
            s *= 2.0
            for j in range(ln):
                q[i, k + 1 + j] -= s * v[j]
        for i in range(k + 2, n):
            a[i, k] = 0.0


cdef int _house3(double x, double y, double z, double* v) noexcept nogil:
    cdef double s = fabs(x) + fabs(y) + fabs(z)
    cdef double norm, norm_v
    if s == 0.0:
        return 0
    x /= s
    y /= s
    z /= s
    norm = sqrt(x * x + y * y + z * z)
    if x >= 0.0:
        v[0] = x + norm
    else:
        v[0] = x - norm
    v[1] = y
    v[2] = z
    norm_v = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if norm_v == 0.0:
        return 0
    v[0] /= norm_v
    v[1] /= norm_v
    v[2] /= norm_v
    return 1


cdef int _real_schur(double[:, ::1] t, double[:, ::1] q, double* work, int n,
                     int max_iter, double small) noexcept nogil:
    cdef int ihi, lo, total, stall, m, k, i, j, r, e
    cdef double h, s, det, x, y, z, ss, acc
    cdef double v[3]

    _hessenberg(t, q, work, n)

    ihi = n - 1
    total = 0
    stall = 0
    while ihi > 0:
        lo = ihi
        while lo > 0:
            h = fabs(t[lo, lo - 1])
            if h <= 4.0 * _EPS * (fabs(t[lo - 1, lo - 1]) + fabs(t[lo, lo])) or h <= small:
                t[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == ihi:
            ihi -= 1
            stall = 0
            continue
        if lo == ihi - 1:
            ihi -= 2
            stall = 0
            continue

        if total >= max_iter:
            return _ST_NO_CONV
        total += 1
        stall += 1

        m = ihi
        if stall % 10 == 0:
            ss = fabs(t[m, m - 1]) + fabs(t[m - 1, m - 2])
            s = 1.5 * ss
            det = -0.4375 * ss * ss
        else:
            s = t[m - 1, m - 1] + t[m, m]
            det = t[m - 1, m - 1] * t[m, m] - t[m - 1, m] * t[m, m - 1]

        x = t[lo, lo] * t[lo, lo] + t[lo, lo + 1] * t[lo + 1, lo] - s * t[lo, lo] + det
        y = t[lo + 1, lo] * (t[lo, lo] + t[lo + 1, lo + 1] - s)
        z = t[lo + 2, lo + 1] * t[lo + 1, lo]

        for k in range(lo, m - 1):
            if _house3(x, y, z, v):
                r = lo if k - 1 < lo else k - 1
                for j in range(r, n):
                    acc = v[0] * t[k, j] + v[1] * t[k + 1, j] + v[2] * t[k + 2, j]
                    acc *= 2.0
                    t[k, j] -= acc * v[0]
                    t[k + 1, j] -= acc * v[1]
                    t[k + 2, j] -= acc * v[2]
                e = k + 3
                if e > m:
                    e = m
                for i in range(e + 1):
                    acc = t[i, k] * v[0] + t[i, k + 1] * v[1] + t[i, k + 2] * v[2]
                    acc *= 2.0
                    t[i, k] -= acc * v[0]
                    t[i, k + 1] -= acc * v[1]
                    t[i, k + 2] -= acc * v[2]
                for i in range(n):
                    acc = q[i, k] * v[0] + q[i, k + 1] * v[1] + q[i, k + 2] * v[2]
                    acc *= 2.0
                    q[i, k] -= acc * v[0]
                    q[i, k + 1] -= acc * v[1]
                    q[i, k + 2] -= acc * v[2]
                if k > lo:
                    t[k + 1, k - 1] = 0.0
                    t[k + 2, k - 1] = 0.0
            x = t[k + 1, k]
            y = t[k + 2, k]
            if k < m - 2:
                z = t[k + 3, k]
            else:
                z = 0.0

        # final 2-element reflector
        ss = fabs(x) + fabs(y)
        if ss != 0.0:
            x /= ss
            y /= ss
            h = sqrt(x * x + y * y)
            if x >= 0.0:
                v[0] = x + h
            else:
                v[0] = x - h
            v[1] = y
            h = sqrt(v[0] * v[0] + v[1] * v[1])
            if h != 0.0:
                v[0] /= h
                v[1] /= h
                r = lo if m - 2 < lo else m - 2
                for j in range(r, n):
                    acc = v[0] * t[m - 1, j] + v[1] * t[m, j]
                    acc *= 2.0
                    t[m - 1, j] -= acc * v[0]
                    t[m, j] -= acc * v[1]
                for i in range(m + 1):
                    acc = t[i, m - 1] * v[0] + t[i, m] * v[1]
                    acc *= 2.0
                    t[i, m - 1] -= acc * v[0]
                    t[i, m] -= acc * v[1]
                for i in range(n):
                    acc = q[i, m - 1] * v[0] + q[i, m] * v[1]
                    acc *= 2.0
                    q[i, m - 1] -= acc * v[0]
                    q[i, m] -= acc * v[1]
                if m - 1 > lo:
                    t[m, m - 2] = 0.0
    return _ST_OK


def _schur_eigvals(double[:, ::1] t, int n):
    w = np.empty(n, dtype=np.complex128)
    flags = np.zeros(n, dtype=np.uint8)
    cdef double complex[::1] wv = w
    cdef unsigned char[::1] fv = flags
    cdef int i = 0
    cdef double a, b, c, d, p, disc, sq, zshift, lam1, lam2, re
    while i < n:
        if i == n - 1 or t[i + 1, i] == 0.0:
            wv[i] = t[i, i]
            fv[i] = 0
            i += 1
            continue
        a = t[i, i]
        b = t[i, i + 1]
        c = t[i + 1, i]
        d = t[i + 1, i + 1]
        p = 0.5 * (a - d)
        disc = p * p + b * c
        if disc >= 0.0:
            sq = sqrt(disc)
            if p >= 0.0:
                zshift = p + sq
            else:
                zshift = p - sq
            lam1 = d + zshift
            if zshift == 0.0:
                lam2 = d
            else:
                lam2 = d - b * c / zshift
            wv[i] = lam1
            wv[i + 1] = lam2
            fv[i] = 0
            fv[i + 1] = 0
        else:
            sq = sqrt(-disc)
            re = d + p
            wv[i] = re + 1j * sq
            wv[i + 1] = re - 1j * sq
            fv[i] = 1
            fv[i + 1] = 2
        i += 2
    return w, flags


cdef double _cabs(double complex z) noexcept nogil:
    cdef double re = z.real
    cdef double im = z.imag
    cdef double t
    re = fabs(re)
    im = fabs(im)
    if re == 0.0 and im == 0.0:
        return 0.0
    if re >= im:
        t = im / re
        return re * sqrt(1.0 + t * t)
    t = re / im
    return im * sqrt(1.0 + t * t)


cdef int _lu_factor_c(double complex[:, ::1] m, int* piv, int n, double pivot_floor) noexcept nogil:
    cdef int k, i, j, p
    cdef double best, cur
    cdef double complex tmp, mult
    for i in range(n):
        piv[i] = i
    for k in range(n):
        if k < n - 1:
            p = k
            best = _cabs(m[k, k])
            for i in range(k + 1, n):
                cur = _cabs(m[i, k])
                if cur > best:
                    best = cur
                    p = i
            if p != k:
                for j in range(n):
                    tmp = m[k, j]
                    m[k, j] = m[p, j]
                    m[p, j] = tmp
                i = piv[k]
                piv[k] = piv[p]
                piv[p] = i
        if _cabs(m[k, k]) <= pivot_floor:
            m[k, k] = pivot_floor
        if k < n - 1:
            for i in range(k + 1, n):
                mult = m[i, k] / m[k, k]
                m[i, k] = mult
                for j in range(k + 1, n):
                    m[i, j] = m[i, j] - mult * m[k, j]
    return 0


cdef void _lu_solve_c(double complex[:, ::1] lu, int* piv,
                      double complex* b, double complex* x, int n) noexcept nogil:
    cdef int k, j
    cdef double complex s
    for k in range(n):
        x[k] = b[piv[k]]
    for k in range(1, n):
        s = 0.0
        for j in range(k):
            s = s + lu[k, j] * x[j]
        x[k] = x[k] - s
    for k in range(n - 1, -1, -1):
        s = 0.0
        for j in range(k + 1, n):
            s = s + lu[k, j] * x[j]
        x[k] = (x[k] - s) / lu[k, k]


cdef int _invit_complex(double[:, ::1] a, double complex lam, int slot, double anorm,
                        double complex[:, ::1] m, int* piv,
                        double complex* b, double complex* x, double complex* y,
                        int n) noexcept nogil:
    cdef int i, j, sweep
    cdef double nrm, resid, tol
    cdef double complex s
    for i in range(n):
        for j in range(n):
            m[i, j] = a[i, j]
        m[i, i] = m[i, i] - lam
    cdef double pivot_floor = _EPS * anorm
    if pivot_floor < _TINY:
        pivot_floor = _TINY
    _lu_factor_c(m, piv, n, pivot_floor)

    for i in range(n):
        b[i] = 0.5
    b[slot % n] = b[slot % n] + 1.0
    nrm = 0.0
    for i in range(n):
        nrm += b[i].real * b[i].real + b[i].imag * b[i].imag
    nrm = sqrt(nrm)
    for i in range(n):
        b[i] = b[i] / nrm
        x[i] = b[i]

    tol = _INVIT_RTOL * (anorm if anorm > _TINY else _TINY)
    for sweep in range(_INVIT_MAX_SWEEPS):
        _lu_solve_c(m, piv, x, y, n)
        nrm = 0.0
        for i in range(n):
            nrm += y[i].real * y[i].real + y[i].imag * y[i].imag
        nrm = sqrt(nrm)
        if nrm == 0.0 or not isfinite(nrm):
            for i in range(n):
                x[i] = b[i]
            continue
        for i in range(n):
            x[i] = y[i] / nrm
        resid = 0.0
        for i in range(n):
            s = -lam * x[i]
            for j in range(n):
                s = s + a[i, j] * x[j]
            resid += s.real * s.real + s.imag * s.imag
        resid = sqrt(resid)
        if resid <= tol:
            break
    return 0


def eig_kernel(object a_in, int max_iter, bint want_vectors=True):
    """Mirror of the pure-Python kernel entry point (see _kernel_py)."""
    a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef int n = a.shape[0]
    cdef double[:, ::1] av = a

    if n == 1:
        w1 = np.array([complex(a[0, 0], 0.0)])
        flags1 = np.zeros(1, dtype=np.uint8)
        v1 = np.ones((1, 1), dtype=np.complex128) if want_vectors else None
        return w1, flags1, v1, STATUS_OK

    t = a.copy()
    q = np.eye(n)
    cdef double[:, ::1] tv = t
    cdef double[:, ::1] qv = q
    work = np.empty(n, dtype=np.float64)
    cdef double[::1] workv = work
    cdef double anorm = _fro_norm(av, n)
    # matches the pure-Python kernel: looser-than-eps deflation so repeated
    # eigenvalues (structurally zero subdiagonals) cannot livelock the sweep
    cdef double small = 4.0 * n * _EPS * (anorm if anorm > _TINY else _TINY)

    cdef int status
    with nogil:
        status = _real_schur(tv, qv, &workv[0], n, max_iter, small)
    if status != STATUS_OK:
        return None, None, None, STATUS_NO_CONVERGENCE

    w, flags = _schur_eigvals(tv, n)
    if not want_vectors:
        return w, flags, None, STATUS_OK

    v = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] vv = v
    m = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] mv = m
    piv = np.empty(n, dtype=np.intc)
    cdef int[::1] pivv = piv
    bwork = np.empty(3 * n, dtype=np.complex128)
    cdef double complex[::1] bw = bwork

    cdef unsigned char[::1] fv = flags
    cdef double complex[::1] wv = w
    cdef int j, i
    for j in range(n):
        if fv[j] == 2:
            continue
        _invit_complex(av, wv[j], j, anorm, mv, &pivv[0],
                       &bw[0], &bw[n], &bw[2 * n], n)
        for i in range(n):
            vv[i, j] = bw[n + i]
        if wv[j].imag == 0.0:
            # real shift: keep the vector exactly real
            for i in range(n):
                vv[i, j] = vv[i, j].real
    return w, flags, v, STATUS_OK
