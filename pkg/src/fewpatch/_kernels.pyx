# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled Monte Carlo kernels.

Bit-for-bit mirror of ``_purepy.py``: same Philox stream layout, same draw
order, same summation order, same libm calls.  The build disables FMA
contraction so float expressions round exactly like the interpreted ones.
Any change here must be applied to the pure backend as well; the parity
tests compare the two element by element.

Trials are independent Philox streams indexed by the counter prefix, so
the ``threads`` argument changes scheduling only, never outputs.
"""

import numpy as np

from cython.parallel cimport prange, threadid
from libc.math cimport INFINITY, fabs, log, pow, sqrt
from libc.stdint cimport int64_t, uint8_t, uint32_t, uint64_t

BACKEND_NAME = "cython"

cdef double DOUBLE_SCALE = 2.0 ** -53

cdef uint32_t M0 = 0xD2511F53u
cdef uint32_t M1 = 0xCD9E8D57u
cdef uint32_t W0 = 0x9E3779B9u
cdef uint32_t W1 = 0xBB67AE85u


cdef struct Gen:
    uint32_t k0
    uint32_t k1
    uint32_t p_lo
    uint32_t p_hi
    uint64_t block
    uint64_t buf0
    uint64_t buf1
    int pos


cdef inline void philox(uint32_t c0, uint32_t c1, uint32_t c2, uint32_t c3,
                        uint32_t k0, uint32_t k1, uint32_t* out) noexcept nogil:
    cdef int r
    cdef uint64_t p0, p1
    cdef uint32_t hi0, lo0, hi1, lo1, t0, t1, t2, t3
    for r in range(10):
        p0 = (<uint64_t>M0) * c0
        p1 = (<uint64_t>M1) * c2
        lo0 = <uint32_t>p0
        hi0 = <uint32_t>(p0 >> 32)
        lo1 = <uint32_t>p1
        hi1 = <uint32_t>(p1 >> 32)
        t0 = hi1 ^ c1 ^ k0
        t1 = lo1
        t2 = hi0 ^ c3 ^ k1
        t3 = lo0
        c0 = t0
        c1 = t1
        c2 = t2
        c3 = t3
        k0 = k0 + W0
        k1 = k1 + W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline void gen_init(Gen* g, uint32_t k0, uint32_t k1, uint64_t trial) noexcept nogil:
    g.k0 = k0
    g.k1 = k1
    g.p_lo = <uint32_t>(trial & 0xFFFFFFFFu)
    g.p_hi = <uint32_t>(trial >> 32)
    g.block = 0
    g.buf0 = 0
    g.buf1 = 0
    g.pos = 2


cdef inline uint64_t next_u64(Gen* g) noexcept nogil:
    cdef uint32_t o[4]
    if g.pos == 2:
        philox(<uint32_t>(g.block & 0xFFFFFFFFu), <uint32_t>(g.block >> 32),
               g.p_lo, g.p_hi, g.k0, g.k1, o)
        g.buf0 = (<uint64_t>o[0]) | ((<uint64_t>o[1]) << 32)
        g.buf1 = (<uint64_t>o[2]) | ((<uint64_t>o[3]) << 32)
        g.block = g.block + 1
        g.pos = 0
    if g.pos == 0:
        g.pos = 1
        return g.buf0
    g.pos = 2
    return g.buf1


cdef inline double next_double(Gen* g) noexcept nogil:
    return <double>(next_u64(g) >> 11) * DOUBLE_SCALE


cdef inline void gauss_pair(Gen* g, double* xa, double* xb) noexcept nogil:
    cdef double a, b, s, f
    while True:
        a = 2.0 * next_double(g) - 1.0
        b = 2.0 * next_double(g) - 1.0
        s = a * a + b * b
        if s < 1.0 and s > 0.0:
            break
    f = sqrt(-2.0 * log(s) / s)
    xa[0] = a * f
    xb[0] = b * f


cdef inline void fill_gauss(Gen* g, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i = 0
    cdef double x, y
    while i < n:
        gauss_pair(g, &x, &y)
        out[i] = x
        if i + 1 < n:
            out[i + 1] = y
        i += 2


cdef inline double direction_scale(Gen* g, double* buf, Py_ssize_t n) noexcept nogil:
    cdef double q
    cdef Py_ssize_t j
    while True:
        fill_gauss(g, buf, n)
        q = 0.0
        for j in range(n):
            q += buf[j] * buf[j]
        if q > 0.0:
            return 1.0 / sqrt(q)


cdef inline double ball_scale(Gen* g, double* buf, Py_ssize_t n,
                              double v, double rexp) noexcept nogil:
    cdef double q, u, r
    cdef Py_ssize_t j
    while True:
        fill_gauss(g, buf, n)
        q = 0.0
        for j in range(n):
            q += buf[j] * buf[j]
        if q > 0.0:
            break
    u = next_double(g)
    r = v * pow(u, rexp)
    return r / sqrt(q)


def ball_sample(key_lo, key_hi, trial, count, n, center, v, rexp, fold, threads=1):
    cdef Py_ssize_t C = count, N = n, i, j
    cdef uint32_t klo = key_lo, khi = key_hi
    cdef uint64_t tr = trial
    cdef double vv = v, rx = rexp, s
    cdef int do_fold = 1 if fold else 0
    cdef double[::1] cen = np.array(center, dtype=np.float64, copy=True)
    out_arr = np.empty((C, N), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    g_arr = np.empty(N, dtype=np.float64)
    cdef double[::1] g = g_arr
    cdef Gen gen
    gen_init(&gen, klo, khi, tr)
    with nogil:
        for i in range(C):
            s = ball_scale(&gen, &g[0], N, vv, rx)
            if do_fold:
                for j in range(N):
                    out[i, j] = fabs(cen[j] + s * g[j])
            else:
                for j in range(N):
                    out[i, j] = cen[j] + s * g[j]
    return out_arr


def sphere_sample(key_lo, key_hi, trial, count, n, threads=1):
    cdef Py_ssize_t C = count, N = n, i, j
    cdef uint32_t klo = key_lo, khi = key_hi
    cdef uint64_t tr = trial
    cdef double s
    out_arr = np.empty((C, N), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    g_arr = np.empty(N, dtype=np.float64)
    cdef double[::1] g = g_arr
    cdef Gen gen
    gen_init(&gen, klo, khi, tr)
    with nogil:
        for i in range(C):
            s = direction_scale(&gen, &g[0], N)
            for j in range(N):
                out[i, j] = s * g[j]
    return out_arr


def uniform_sample(key_lo, key_hi, trial, count, threads=1):
    cdef Py_ssize_t C = count, i
    cdef uint32_t klo = key_lo, khi = key_hi
    cdef uint64_t tr = trial
    out_arr = np.empty(C, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Gen gen
    gen_init(&gen, klo, khi, tr)
    with nogil:
        for i in range(C):
            out[i] = next_double(&gen)
    return out_arr


cdef void _quasi_trial(uint32_t klo, uint32_t khi, uint64_t trial,
                       Py_ssize_t n, Py_ssize_t k, double* center,
                       double v, double rexp, double delta, double eps,
                       double* sc, uint8_t* a1_out, uint8_t* a12_out) noexcept nogil:
    cdef Gen gen
    cdef double* g = sc
    cdef double* pts = sc + n
    cdef Py_ssize_t i, j, m
    cdef double s, d, q, e
    cdef double thr = delta * v
    cdef double rlim = (1.0 - eps) * v
    cdef int a1 = 1, a2 = 1
    gen_init(&gen, klo, khi, trial)
    for i in range(k):
        s = ball_scale(&gen, g, n, v, rexp)
        for j in range(n):
            pts[i * n + j] = center[j] + s * g[j]
    for i in range(k):
        for j in range(i + 1, k):
            d = 0.0
            for m in range(n):
                d += (pts[i * n + m] - center[m]) * (pts[j * n + m] - center[m])
            if fabs(d) > thr:
                a1 = 0
    for i in range(k):
        q = 0.0
        for m in range(n):
            e = pts[i * n + m] - center[m]
            q += e * e
        if sqrt(q) < rlim:
            a2 = 0
    a1_out[0] = <uint8_t>a1
    a12_out[0] = <uint8_t>(a1 & a2)


def quasi_orth_run(key_lo, key_hi, trials, n, k, center, v, rexp, delta, eps, threads=1):
    cdef Py_ssize_t T = trials, N = n, K = k, t
    cdef uint32_t klo = key_lo, khi = key_hi
    cdef double vv = v, rx = rexp, dl = delta, ep = eps
    cdef int nt = max(1, int(threads)), tid
    cdef double[::1] cen = np.array(center, dtype=np.float64, copy=True)
    a1_arr = np.zeros(T, dtype=np.uint8)
    a12_arr = np.zeros(T, dtype=np.uint8)
    cdef uint8_t[::1] a1 = a1_arr
    cdef uint8_t[::1] a12 = a12_arr
    scratch_arr = np.zeros((nt, N + K * N), dtype=np.float64)
    cdef double[:, ::1] sc = scratch_arr
    for t in prange(T, nogil=True, num_threads=nt, schedule="static"):
        tid = threadid()
        _quasi_trial(klo, khi, <uint64_t>t, N, K, &cen[0], vv, rx, dl, ep,
                     &sc[tid, 0], &a1[t], &a12[t])
    return a1_arr, a12_arr


cdef void _centering_trial(uint32_t klo, uint32_t khi, uint64_t trial,
                           Py_ssize_t n, Py_ssize_t k, double* center,
                           double v, double rexp,
                           double* sc, double* out) noexcept nogil:
    cdef Gen gen
    cdef double* g = sc
    cdef double* pts = sc + n
    cdef Py_ssize_t i, j
    cdef double s, d2, acc, e
    gen_init(&gen, klo, khi, trial)
    for i in range(k):
        s = ball_scale(&gen, g, n, v, rexp)
        for j in range(n):
            pts[i * n + j] = center[j] + s * g[j]
    d2 = 0.0
    for j in range(n):
        acc = 0.0
        for i in range(k):
            acc += pts[i * n + j]
        e = acc / k - center[j]
        d2 += e * e
    out[0] = d2


def centering_run(key_lo, key_hi, trials, n, k, center, v, rexp, threads=1):
    cdef Py_ssize_t T = trials, N = n, K = k, t
    cdef uint32_t klo = key_lo, khi = key_hi
    cdef double vv = v, rx = rexp
    cdef int nt = max(1, int(threads)), tid
    cdef double[::1] cen = np.array(center, dtype=np.float64, copy=True)
    out_arr = np.empty(T, dtype=np.float64)
    cdef double[::1] out = out_arr
    scratch_arr = np.zeros((nt, N + K * N), dtype=np.float64)
    cdef double[:, ::1] sc = scratch_arr
    for t in prange(T, nogil=True, num_threads=nt, schedule="static"):
        tid = threadid()
        _centering_trial(klo, khi, <uint64_t>t, N, K, &cen[0], vv, rx,
                         &sc[tid, 0], &out[t])
    return out_arr


cdef void _learn_few_trial(uint32_t klo, uint32_t khi, uint64_t trial,
                           Py_ssize_t n, Py_ssize_t k, Py_ssize_t m,
                           double new_v, double new_rexp, double base_rexp,
                           double* sc, uint8_t* built, double* theta_out,
                           uint8_t* memo, int64_t* fires) noexcept nogil:
    cdef Gen gen
    cdef double* g = sc
    cdef double* pts = sc + n
    cdef double* w = sc + n + k * n
    cdef double* dots = sc + n + k * n + n
    cdef Py_ssize_t i, j
    cdef double s, nm2, nm, acc, d, theta, q, u, proj
    cdef int ok, mm
    cdef int64_t hits
    gen_init(&gen, klo, khi, trial)
    for i in range(k):
        s = ball_scale(&gen, g, n, new_v, new_rexp)
        for j in range(n):
            pts[i * n + j] = fabs(s * g[j])
    nm2 = 0.0
    for j in range(n):
        acc = 0.0
        for i in range(k):
            acc += pts[i * n + j]
        w[j] = acc / k
        nm2 += w[j] * w[j]
    if nm2 == 0.0:
        return
    nm = sqrt(nm2)
    for j in range(n):
        w[j] = w[j] / nm
    ok = 1
    theta = INFINITY
    for i in range(k):
        d = 0.0
        for j in range(n):
            d += w[j] * pts[i * n + j]
        dots[i] = d
        if d < 0.0:
            ok = 0
        if d < theta:
            theta = d
    if ok == 0:
        return
    built[0] = 1
    theta_out[0] = theta
    mm = 1
    for i in range(k):
        if not dots[i] >= theta:
            mm = 0
    memo[0] = <uint8_t>mm
    hits = 0
    for i in range(m):
        while True:
            fill_gauss(&gen, g, n)
            q = 0.0
            for j in range(n):
                q += g[j] * g[j]
            if q > 0.0:
                break
        u = next_double(&gen)
        s = pow(u, base_rexp) / sqrt(q)
        proj = 0.0
        for j in range(n):
            proj += w[j] * g[j]
        if s * proj >= theta:
            hits = hits + 1
    fires[0] = hits


def learn_few_run(key_lo, key_hi, trials, n, k, m, new_v, new_rexp, base_rexp, threads=1):
    cdef Py_ssize_t T = trials, N = n, K = k, M = m, t
    cdef uint32_t klo = key_lo, khi = key_hi
    cdef double nv = new_v, nrx = new_rexp, brx = base_rexp
    cdef int nt = max(1, int(threads)), tid
    built_arr = np.zeros(T, dtype=np.uint8)
    theta_arr = np.zeros(T, dtype=np.float64)
    memo_arr = np.zeros(T, dtype=np.uint8)
    fires_arr = np.zeros(T, dtype=np.int64)
    cdef uint8_t[::1] built = built_arr
    cdef double[::1] theta = theta_arr
    cdef uint8_t[::1] memo = memo_arr
    cdef int64_t[::1] fires = fires_arr
    scratch_arr = np.zeros((nt, N + K * N + N + K), dtype=np.float64)
    cdef double[:, ::1] sc = scratch_arr
    for t in prange(T, nogil=True, num_threads=nt, schedule="static"):
        tid = threadid()
        _learn_few_trial(klo, khi, <uint64_t>t, N, K, M, nv, nrx, brx,
                         &sc[tid, 0], &built[t], &theta[t], &memo[t], &fires[t])
    return built_arr, theta_arr, memo_arr, fires_arr


cdef void _learn_from_few_trial(uint32_t klo, uint32_t khi, uint64_t trial,
                                Py_ssize_t n, Py_ssize_t k,
                                Py_ssize_t m_new, Py_ssize_t m_base,
                                double* center, double v,
                                double new_rexp, double base_rexp,
                                double upper_root, double theta_mix,
                                double* sc, uint8_t* ok_out, double* dcap_out,
                                double* theta_out, int64_t* hits_out,
                                int64_t* keep_out) noexcept nogil:
    cdef Gen gen
    cdef double* g = sc
    cdef double* pts = sc + n
    cdef double* w = sc + n + k * n
    cdef Py_ssize_t i, j
    cdef double s, nm2, nm, acc, dcap, lo, theta, wc, q, u, proj
    cdef int64_t hits, keep
    gen_init(&gen, klo, khi, trial)
    for i in range(k):
        s = ball_scale(&gen, g, n, v, new_rexp)
        for j in range(n):
            pts[i * n + j] = center[j] + s * g[j]
    nm2 = 0.0
    for j in range(n):
        acc = 0.0
        for i in range(k):
            acc += pts[i * n + j]
        w[j] = acc / k
        nm2 += w[j] * w[j]
    nm = sqrt(nm2)
    dcap = nm - upper_root
    dcap_out[0] = dcap
    if not dcap > 0.0:
        return
    ok_out[0] = 1
    lo = dcap - v
    if lo < 0.0:
        lo = 0.0
    theta = (1.0 - theta_mix) * lo + theta_mix * dcap
    theta_out[0] = theta
    for j in range(n):
        w[j] = w[j] / nm
    wc = 0.0
    for j in range(n):
        wc += w[j] * center[j]
    hits = 0
    for i in range(m_new):
        while True:
            fill_gauss(&gen, g, n)
            q = 0.0
            for j in range(n):
                q += g[j] * g[j]
            if q > 0.0:
                break
        u = next_double(&gen)
        s = v * pow(u, new_rexp) / sqrt(q)
        proj = 0.0
        for j in range(n):
            proj += w[j] * g[j]
        if wc + s * proj >= theta:
            hits = hits + 1
    hits_out[0] = hits
    keep = 0
    for i in range(m_base):
        while True:
            fill_gauss(&gen, g, n)
            q = 0.0
            for j in range(n):
                q += g[j] * g[j]
            if q > 0.0:
                break
        u = next_double(&gen)
        s = pow(u, base_rexp) / sqrt(q)
        proj = 0.0
        for j in range(n):
            proj += w[j] * g[j]
        if s * proj < theta:
            keep = keep + 1
    keep_out[0] = keep


def learn_from_few_run(key_lo, key_hi, trials, n, k, m_new, m_base, center, v,
                       new_rexp, base_rexp, upper_root, theta_mix, threads=1):
    cdef Py_ssize_t T = trials, N = n, K = k, MN = m_new, MB = m_base, t
    cdef uint32_t klo = key_lo, khi = key_hi
    cdef double vv = v, nrx = new_rexp, brx = base_rexp
    cdef double ur = upper_root, mix = theta_mix
    cdef int nt = max(1, int(threads)), tid
    cdef double[::1] cen = np.array(center, dtype=np.float64, copy=True)
    ok_arr = np.zeros(T, dtype=np.uint8)
    dcap_arr = np.zeros(T, dtype=np.float64)
    theta_arr = np.zeros(T, dtype=np.float64)
    hits_arr = np.zeros(T, dtype=np.int64)
    keep_arr = np.zeros(T, dtype=np.int64)
    cdef uint8_t[::1] ok = ok_arr
    cdef double[::1] dcap = dcap_arr
    cdef double[::1] theta = theta_arr
    cdef int64_t[::1] hits = hits_arr
    cdef int64_t[::1] keep = keep_arr
    scratch_arr = np.zeros((nt, N + K * N + N), dtype=np.float64)
    cdef double[:, ::1] sc = scratch_arr
    for t in prange(T, nogil=True, num_threads=nt, schedule="static"):
        tid = threadid()
        _learn_from_few_trial(klo, khi, <uint64_t>t, N, K, MN, MB, &cen[0], vv,
                              nrx, brx, ur, mix, &sc[tid, 0], &ok[t], &dcap[t],
                              &theta[t], &hits[t], &keep[t])
    return ok_arr, dcap_arr, theta_arr, hits_arr, keep_arr
