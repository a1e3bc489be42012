"""Naive reference implementations built only on ``distance`` and ``frechet_mean``.

These recompute every window from scratch (no prefix sums, no embeddings)
and serve as independent oracles for the fast code paths.
"""

import math

import numpy as np

from snmetric.spaces import distance, frechet_mean


def fl(x):
    return int(math.floor(x + 1e-9))


def window_stats(objs):
    mu = frechet_mean(objs)
    return mu, float(np.mean([distance(o, mu) ** 2 for o in objs]))


def contaminated(objs, omega):
    return float(np.mean([distance(o, omega) ** 2 for o in objs]))


def two_sample_profiles(x1, x2, eta):
    """(k, T, TC) for k = floor(n eta)..n with windows floor(k n_i / n)."""
    n1, n2 = len(x1), len(x2)
    n = n1 + n2
    ks, T, TC = [], [], []
    for k in range(max(fl(n * eta), 1), n + 1):
        m1, m2 = k * n1 // n, k * n2 // n
        a, b = x1[:m1], x2[:m2]
        mu1, v1 = window_stats(a)
        mu2, v2 = window_stats(b)
        r = k / n
        ks.append(k)
        T.append(r * (v1 - v2))
        TC.append(r * (contaminated(a, mu2) + contaminated(b, mu1) - v1 - v2))
    return np.array(ks), np.array(T), np.array(TC)


def sn_ratio(n, procs, k):
    r = k / n
    num = n * sum(p[-1] ** 2 for p in procs)
    den = sum(float(np.sum((p - r * p[-1]) ** 2)) for p in procs)
    return num / den


def d_statistics(x1, x2, eta):
    k, T, TC = two_sample_profiles(x1, x2, eta)
    n = len(x1) + len(x2)
    return sn_ratio(n, [T], k), sn_ratio(n, [T, TC], k)


def split_contrast(objs, a, r, b, n):
    """(T, TC) for windows (a, r] and (r, b] of ``objs`` (0-based slices), length scale n."""
    left, right = objs[a:r], objs[r:b]
    mu1, v1 = window_stats(left)
    mu2, v2 = window_stats(right)
    wt = (r - a) * (b - r) / (n * (b - a))
    vc = contaminated(left, mu2) + contaminated(right, mu1)
    return wt * (v1 - v2), wt * (vc - v1 - v2)


def cp_curve(objs, eta1, eta2, sn2):
    n = len(objs)
    h = fl(n * eta2)
    k_lo = fl(n * eta1)
    cache = {}

    def sq(a, r, b):
        key = (a, r, b)
        if key not in cache:
            t, tc = split_contrast(objs, a, r, b, n)
            cache[key] = t * t + (tc * tc if sn2 else 0.0)
        return cache[key]

    ks, vals = [], []
    for k in range(k_lo, n - k_lo + 1):
        num = n * sq(0, k, n)
        den = sum(sq(0, l, k) for l in range(h, k - h + 1)) + sum(sq(k, l, n) for l in range(k + h, n - h + 1))
        ks.append(k)
        vals.append(num / den if den > 0 else 0.0)
    return np.array(ks), np.array(vals)
