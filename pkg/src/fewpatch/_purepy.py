"""Interpreted Monte Carlo kernels.

This is the fallback backend used when the compiled extension is missing,
and the arithmetic reference it is tested against.  Every operation here
(draw order, summation order, rejection conditions) is mirrored exactly in
``_kernels.pyx``; the two must stay bit-identical, so any change to one
side must be made to the other.

All kernels take the two derived Philox key words rather than a seed; key
derivation lives with the callers.  The ``threads`` argument is accepted
for signature compatibility and ignored: outputs do not depend on it.
"""

import math

import numpy as np

from ._rng import DOUBLE_SCALE, MASK32, MASK64, philox_block

BACKEND_NAME = "pure-python"


class _Gen:
    """Philox stream for one trial: (block, trial) counter, derived key."""

    __slots__ = ("k0", "k1", "p_lo", "p_hi", "block", "buf0", "buf1", "pos")

    def __init__(self, key_lo, key_hi, trial):
        self.k0 = key_lo
        self.k1 = key_hi
        self.p_lo = trial & MASK32
        self.p_hi = (trial >> 32) & MASK32
        self.block = 0
        self.buf0 = 0
        self.buf1 = 0
        self.pos = 2

    def next_u64(self):
        if self.pos == 2:
            o0, o1, o2, o3 = philox_block(
                self.block & MASK32,
                (self.block >> 32) & MASK32,
                self.p_lo,
                self.p_hi,
                self.k0,
                self.k1,
            )
            self.buf0 = o0 | (o1 << 32)
            self.buf1 = o2 | (o3 << 32)
            self.block = (self.block + 1) & MASK64
            self.pos = 0
        if self.pos == 0:
            self.pos = 1
            return self.buf0
        self.pos = 2
        return self.buf1

    def next_double(self):
        return (self.next_u64() >> 11) * DOUBLE_SCALE

    def gauss_pair(self):
        # Marsaglia polar: rejection from the unit disc, s in (0, 1).
        while True:
            a = 2.0 * self.next_double() - 1.0
            b = 2.0 * self.next_double() - 1.0
            s = a * a + b * b
            if s < 1.0 and s > 0.0:
                break
        f = math.sqrt(-2.0 * math.log(s) / s)
        return a * f, b * f

    def fill_gauss(self, out, n):
        i = 0
        while i < n:
            x, y = self.gauss_pair()
            out[i] = x
            if i + 1 < n:
                out[i + 1] = y
            i += 2

    def direction_scale(self, g, n):
        """Fill g with gaussians, return 1/||g||; rejects the zero vector."""
        while True:
            self.fill_gauss(g, n)
            q = 0.0
            for j in range(n):
                q += g[j] * g[j]
            if q > 0.0:
                return 1.0 / math.sqrt(q)

    def ball_scale(self, g, n, v, rexp):
        """Direction in g plus radius: returns s with point = c + s*g."""
        while True:
            self.fill_gauss(g, n)
            q = 0.0
            for j in range(n):
                q += g[j] * g[j]
            if q > 0.0:
                break
        u = self.next_double()
        r = v * math.pow(u, rexp)
        return r / math.sqrt(q)


def ball_sample(key_lo, key_hi, trial, count, n, center, v, rexp, fold, threads=1):
    out = np.empty((count, n), dtype=np.float64)
    gen = _Gen(key_lo, key_hi, trial)
    g = [0.0] * n
    for i in range(count):
        s = gen.ball_scale(g, n, v, rexp)
        if fold:
            for j in range(n):
                out[i, j] = abs(center[j] + s * g[j])
        else:
            for j in range(n):
                out[i, j] = center[j] + s * g[j]
    return out


def sphere_sample(key_lo, key_hi, trial, count, n, threads=1):
    out = np.empty((count, n), dtype=np.float64)
    gen = _Gen(key_lo, key_hi, trial)
    g = [0.0] * n
    for i in range(count):
        s = gen.direction_scale(g, n)
        for j in range(n):
            out[i, j] = s * g[j]
    return out


def uniform_sample(key_lo, key_hi, trial, count, threads=1):
    out = np.empty(count, dtype=np.float64)
    gen = _Gen(key_lo, key_hi, trial)
    for i in range(count):
        out[i] = gen.next_double()
    return out


def quasi_orth_run(key_lo, key_hi, trials, n, k, center, v, rexp, delta, eps, threads=1):
    """Per trial: draw k cluster points, test pairwise quasi-orthogonality
    (A1) and the norm floor (A2) around the given center."""
    a1_out = np.zeros(trials, dtype=np.uint8)
    a12_out = np.zeros(trials, dtype=np.uint8)
    g = [0.0] * n
    pts = [[0.0] * n for _ in range(k)]
    thr = delta * v
    rlim = (1.0 - eps) * v
    for t in range(trials):
        gen = _Gen(key_lo, key_hi, t)
        for i in range(k):
            s = gen.ball_scale(g, n, v, rexp)
            row = pts[i]
            for j in range(n):
                row[j] = center[j] + s * g[j]
        a1 = 1
        for i in range(k):
            for j in range(i + 1, k):
                d = 0.0
                ri = pts[i]
                rj = pts[j]
                for m in range(n):
                    d += (ri[m] - center[m]) * (rj[m] - center[m])
                if abs(d) > thr:
                    a1 = 0
        a2 = 1
        for i in range(k):
            q = 0.0
            ri = pts[i]
            for m in range(n):
                e = ri[m] - center[m]
                q += e * e
            if math.sqrt(q) < rlim:
                a2 = 0
        a1_out[t] = a1
        a12_out[t] = a1 & a2
    return a1_out, a12_out


def centering_run(key_lo, key_hi, trials, n, k, center, v, rexp, threads=1):
    """Per trial: squared distance of the k-point empirical mean from the
    support center."""
    out = np.empty(trials, dtype=np.float64)
    g = [0.0] * n
    pts = [[0.0] * n for _ in range(k)]
    for t in range(trials):
        gen = _Gen(key_lo, key_hi, t)
        for i in range(k):
            s = gen.ball_scale(g, n, v, rexp)
            row = pts[i]
            for j in range(n):
                row[j] = center[j] + s * g[j]
        d2 = 0.0
        for j in range(n):
            acc = 0.0
            for i in range(k):
                acc += pts[i][j]
            e = acc / k - center[j]
            d2 += e * e
        out[t] = d2
    return out


def learn_few_run(key_lo, key_hi, trials, n, k, m, new_v, new_rexp, base_rexp, threads=1):
    """Per trial: build the mean-direction patch from k nonnegative-orthant
    points, then count fresh unit-ball points it captures.

    Returns (built, theta, memo, fires).  built=0 marks trials where the
    mean was zero or some (mean, x_i) was negative; their remaining fields
    are zero and no fresh points are drawn.
    """
    built = np.zeros(trials, dtype=np.uint8)
    theta_out = np.zeros(trials, dtype=np.float64)
    memo = np.zeros(trials, dtype=np.uint8)
    fires = np.zeros(trials, dtype=np.int64)
    g = [0.0] * n
    pts = [[0.0] * n for _ in range(k)]
    w = [0.0] * n
    dots = [0.0] * k
    for t in range(trials):
        gen = _Gen(key_lo, key_hi, t)
        for i in range(k):
            s = gen.ball_scale(g, n, new_v, new_rexp)
            row = pts[i]
            for j in range(n):
                row[j] = abs(s * g[j])
        nm2 = 0.0
        for j in range(n):
            acc = 0.0
            for i in range(k):
                acc += pts[i][j]
            w[j] = acc / k
            nm2 += w[j] * w[j]
        if nm2 == 0.0:
            continue
        nm = math.sqrt(nm2)
        for j in range(n):
            w[j] = w[j] / nm
        ok = 1
        theta = math.inf
        for i in range(k):
            d = 0.0
            ri = pts[i]
            for j in range(n):
                d += w[j] * ri[j]
            dots[i] = d
            if d < 0.0:
                ok = 0
            if d < theta:
                theta = d
        if not ok:
            continue
        built[t] = 1
        theta_out[t] = theta
        mm = 1
        for i in range(k):
            if not dots[i] >= theta:
                mm = 0
        memo[t] = mm
        hits = 0
        for _ in range(m):
            while True:
                gen.fill_gauss(g, n)
                q = 0.0
                for j in range(n):
                    q += g[j] * g[j]
                if q > 0.0:
                    break
            u = gen.next_double()
            s = math.pow(u, base_rexp) / math.sqrt(q)
            proj = 0.0
            for j in range(n):
                proj += w[j] * g[j]
            if s * proj >= theta:
                hits += 1
        fires[t] = hits
    return built, theta_out, memo, fires


def learn_from_few_run(
    key_lo,
    key_hi,
    trials,
    n,
    k,
    m_new,
    m_base,
    center,
    v,
    new_rexp,
    base_rexp,
    upper_root,
    theta_mix,
    threads=1,
):
    """Per trial: draw the k-point cluster, form the margin threshold, and
    count captured fresh cluster points and escaped fresh base points.

    Returns (ok, delta_cap, theta, new_hits, base_keep).  ok=0 marks trials
    whose margin ||mean|| - upper_root was not positive; they draw no fresh
    points.
    """
    ok_out = np.zeros(trials, dtype=np.uint8)
    dcap_out = np.zeros(trials, dtype=np.float64)
    theta_out = np.zeros(trials, dtype=np.float64)
    hits_out = np.zeros(trials, dtype=np.int64)
    keep_out = np.zeros(trials, dtype=np.int64)
    g = [0.0] * n
    pts = [[0.0] * n for _ in range(k)]
    w = [0.0] * n
    for t in range(trials):
        gen = _Gen(key_lo, key_hi, t)
        for i in range(k):
            s = gen.ball_scale(g, n, v, new_rexp)
            row = pts[i]
            for j in range(n):
                row[j] = center[j] + s * g[j]
        nm2 = 0.0
        for j in range(n):
            acc = 0.0
            for i in range(k):
                acc += pts[i][j]
            w[j] = acc / k
            nm2 += w[j] * w[j]
        nm = math.sqrt(nm2)
        dcap = nm - upper_root
        dcap_out[t] = dcap
        if not dcap > 0.0:
            continue
        ok_out[t] = 1
        lo = dcap - v
        if lo < 0.0:
            lo = 0.0
        theta = (1.0 - theta_mix) * lo + theta_mix * dcap
        theta_out[t] = theta
        for j in range(n):
            w[j] = w[j] / nm
        wc = 0.0
        for j in range(n):
            wc += w[j] * center[j]
        hits = 0
        for _ in range(m_new):
            while True:
                gen.fill_gauss(g, n)
                q = 0.0
                for j in range(n):
                    q += g[j] * g[j]
                if q > 0.0:
                    break
            u = gen.next_double()
            s = v * math.pow(u, new_rexp) / math.sqrt(q)
            proj = 0.0
            for j in range(n):
                proj += w[j] * g[j]
            if wc + s * proj >= theta:
                hits += 1
        hits_out[t] = hits
        keep = 0
        for _ in range(m_base):
            while True:
                gen.fill_gauss(g, n)
                q = 0.0
                for j in range(n):
                    q += g[j] * g[j]
                if q > 0.0:
                    break
            u = gen.next_double()
            s = math.pow(u, base_rexp) / math.sqrt(q)
            proj = 0.0
            for j in range(n):
                proj += w[j] * g[j]
            if s * proj < theta:
                keep += 1
        keep_out[t] = keep
    return ok_out, dcap_out, theta_out, hits_out, keep_out
