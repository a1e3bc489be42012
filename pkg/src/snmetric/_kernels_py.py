"""Pure-numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function. All window statistics are
read off a weighted Gram matrix ``gram[i, j] = w <S_i, S_j>`` of prefix sums
and the prefix sums of squared norms ``q``; prefix index ``i`` stands for the
first ``i`` observations, so window ``(a, b]`` holds observations a+1..b.
"""

import numpy as np

# max number of (k, l) cells evaluated per vectorized block
_BLOCK_CELLS = 1 << 21


def _split_terms(g, q, a, r, b, n_len, sn2):
    """Squared contrast terms for windows (a, r] vs (r, b], broadcasting over indices.

    T = (r-a)(b-r)/(n (b-a)) * (V(a,r] - V(r,b]) and TC = same weight * 2 w|mu1 - mu2|^2.
    Returns T^2 (+ TC^2 when ``sn2``).
    """
    m1 = (r - a).astype(float)
    m2 = (b - r).astype(float)
    gaa = g[a, a]
    grr = g[r, r]
    gbb = g[b, b]
    gar = g[a, r]
    grb = g[b, r]
    gab = g[a, b]
    n1 = grr - 2.0 * gar + gaa
    n2 = gbb - 2.0 * grb + grr
    v1 = (q[r] - q[a]) / m1 - n1 / (m1 * m1)
    v2 = (q[b] - q[r]) / m2 - n2 / (m2 * m2)
    wt = m1 * m2 / (n_len * (b - a))
    t = wt * (v1 - v2)
    out = t * t
    if sn2:
        md = n1 / (m1 * m1) + n2 / (m2 * m2) - 2.0 * (grb - grr - gab + gar) / (m1 * m2)
        md = np.maximum(md, 0.0)
        tc = 2.0 * wt * md
        out = out + tc * tc
    return out


def cp_curve(gram, q, start, stop, k_lo, k_hi, h, sn2):
    """Self-normalized contrast D(k), k = k_lo..k_hi, on observations start+1..stop.

    Returns ``(values, degenerate)``; degenerate entries (zero normalizer) are 0.
    """
    gram = np.asarray(gram, dtype=float)
    q = np.asarray(q, dtype=float)
    L = stop - start
    ks = np.arange(k_lo, k_hi + 1)
    nk = ks.size
    a0 = np.full(nk, start)
    num = L * _split_terms(gram, q, a0, start + ks, np.full(nk, stop), float(L), sn2)
    den = np.zeros(nk)
    if h >= 1:
        ls = np.arange(h, L - h + 1)
        block = max(1, _BLOCK_CELLS // max(ls.size, 1))
        with np.errstate(divide="ignore", invalid="ignore"):
            for i0 in range(0, nk, block):
                kk = ks[i0 : i0 + block, None]
                ll = ls[None, :]
                # left windows (0, l] | (l, k]
                left = ll <= kk - h
                lc = np.where(left, ll, h)
                kc = np.where(left, kk, 2 * h)
                terms = _split_terms(gram, q, start + 0 * lc, start + lc, start + kc, float(L), sn2)
                den[i0 : i0 + block] += np.where(left, terms, 0.0).sum(axis=1)
                # right windows (k, l] | (l, L]
                right = ll >= kk + h
                lc = np.where(right, ll, L - h)
                kc = np.where(right, kk, L - 2 * h)
                terms = _split_terms(gram, q, start + kc, start + lc, stop + 0 * lc, float(L), sn2)
                den[i0 : i0 + block] += np.where(right, terms, 0.0).sum(axis=1)
    degenerate = ~(den > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(degenerate, 0.0, num / np.where(degenerate, 1.0, den))
    return values, degenerate


def interval_maxima(gram, q, starts, stops, k_los, k_his, hs, sn2):
    """Max and (first) argmax of :func:`cp_curve` over each interval.

    Returns ``(max_values, argmax_k, all_degenerate)`` with local split indices.
    """
    m = len(starts)
    best = np.zeros(m)
    arg = np.zeros(m, dtype=np.int64)
    alldeg = np.zeros(m, dtype=bool)
    for i in range(m):
        vals, deg = cp_curve(gram, q, int(starts[i]), int(stops[i]), int(k_los[i]), int(k_his[i]), int(hs[i]), sn2)
        j = int(np.argmax(vals))
        best[i] = vals[j]
        arg[i] = int(k_los[i]) + j
        alldeg[i] = bool(deg.all())
    return best, arg, alldeg


def kahan_cumsum(x):
    """Compensated cumulative sum along axis 0 with a leading zero row."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((x.shape[0] + 1,) + x.shape[1:])
    s = np.zeros(x.shape[1:])
    c = np.zeros(x.shape[1:])
    for i in range(x.shape[0]):
        y = x[i] - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i + 1] = s
    return out
