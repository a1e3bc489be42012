"""Self-normalized change-point tests and wild binary segmentation.

For a split at k the contrast T compares the Fréchet variances of the windows
before and after k, and TC measures how far their Fréchet means are apart. The
statistic at k divides n T^2 (SN1) or n (T^2 + TC^2) (SN2) by the sum of the
same squared contrasts over all admissible splits of the left part (0, k] and
the right part (k, n]; the test statistic is the maximum over k, and its argmax
estimates the change location.

Index conventions: a window ``(a, b]`` holds observations a+1..b (1-based).
Curves live on the gram matrix of centered prefix sums and are computed by the
compiled kernels when available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DegenerateNormalizer, EmptyWindowError
from .frechet import ObjectSeries, PrefixStats, build_prefix, subsample_variance
from .null import NullSampleSet, pvalue, quantile


class CpVariant(str, Enum):
    SN1 = "SN1"
    SN2 = "SN2"


def _floor(x: float) -> int:
    return int(math.floor(x + 1e-9))


def window_contrast(prefix: PrefixStats, r: float, a: float, b: float) -> tuple[float, float]:
    """Contrasts ``(T, TC)`` between windows (floor(na), floor(nr)] and (floor(nr), floor(nb)].

    ``a < r < b`` are fractions of the series length.
    """
    n = prefix.n
    if not (0.0 <= a < r < b <= 1.0):
        raise ValueError(f"need 0 <= a < r < b <= 1, got a={a}, r={r}, b={b}")
    ia, ir, ib = _floor(n * a), _floor(n * r), _floor(n * b)
    if not (ia < ir < ib):
        raise EmptyWindowError(f"windows ({ia}, {ir}] and ({ir}, {ib}] must both be nonempty")
    wt = (r - a) * (b - r) / (b - a)
    v1 = subsample_variance(prefix, ia + 1, ir)
    v2 = subsample_variance(prefix, ir + 1, ib)
    # in the embedding the cross terms reduce to twice the squared gap between window means
    gap = prefix.window_sum(ia + 1, ir) / (ir - ia) - prefix.window_sum(ir + 1, ib) / (ib - ir)
    return wt * (v1 - v2), wt * 2.0 * prefix.weight * float(gap @ gap)


@dataclass(frozen=True, eq=False)
class ContrastCurve:
    """Statistic D(k) for k in ``k``; ``degenerate[i]`` marks a zero normalizer (value 0)."""

    n: int
    eta1: float
    eta2: float
    variant: CpVariant
    k: np.ndarray
    values: np.ndarray
    degenerate: np.ndarray

    @property
    def all_degenerate(self) -> bool:
        return bool(self.degenerate.all())

    def argmax(self) -> int:
        """Smallest k attaining the maximum."""
        return int(self.k[int(np.argmax(self.values))])


def _check_trimming(eta1: float, eta2: float):
    if not 0.0 < eta1 < 0.5:
        raise ValueError("eta1 must lie in (0, 1/2)")
    if not 0.0 < eta2 or not eta1 > 2 * eta2:
        raise ValueError("need 0 < eta2 and eta1 > 2 eta2")


def scan_bounds(length: int, eta1: float, eta2: float) -> tuple[int, int, int]:
    """``(k_lo, k_hi, h)`` for a segment of the given length."""
    k_lo = _floor(length * eta1)
    h = _floor(length * eta2)
    return k_lo, length - k_lo, h


def contrast_curve(series, eta1: float = 0.15, eta2: float = 0.05, variant="SN2") -> ContrastCurve:
    variant = CpVariant(variant)
    _check_trimming(eta1, eta2)
    if not isinstance(series, ObjectSeries):
        series = ObjectSeries.from_objects(series)
    n = len(series)
    k_lo, k_hi, h = scan_bounds(n, eta1, eta2)
    if h < 1:
        raise EmptyWindowError(f"floor(n * eta2) = 0 for n={n}; the series is too short")
    if not (1 <= k_lo <= k_hi):
        raise EmptyWindowError(f"empty k range for n={n}")
    p = build_prefix(series)
    vals, deg = kernels.cp_curve(p.gram, p.cum_sq, 0, n, k_lo, k_hi, h, variant is CpVariant.SN2)
    vals.setflags(write=False)
    deg.setflags(write=False)
    return ContrastCurve(n, eta1, eta2, variant, np.arange(k_lo, k_hi + 1), vals, deg)


@dataclass
class ChangePointReport:
    statistic: float | None
    k_hat: int | None
    tau_hat: float | None
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    variant: str
    eta1: float
    eta2: float
    n: int
    degenerate: bool = False
    caveats: list[str] = field(default_factory=list)
    null: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "k_hat": self.k_hat,
            "tau_hat": self.tau_hat,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "variant": self.variant,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "n": self.n,
            "degenerate": self.degenerate,
            "caveats": list(self.caveats),
            "null": dict(self.null),
        }


def run_cp_test(series, eta1: float = 0.15, eta2: float = 0.05, alpha: float = 0.05,
                variant="SN2", null: NullSampleSet | None = None, curve: ContrastCurve | None = None):
    """Single change-point test against a Seta null set with matching trimming."""
    if null is None:
        raise ValueError("a Seta null sample set is required")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    variant = CpVariant(variant)
    null.require("Seta", (eta1, eta2))
    if curve is None:
        curve = contrast_curve(series, eta1, eta2, variant)
    crit = quantile(null, 1.0 - alpha)
    if curve.all_degenerate:
        msg = str(DegenerateNormalizer("every split has a zero self-normalizer (constant series?)"))
        return ChangePointReport(None, None, None, crit, 1.0, False, alpha, variant.value, eta1, eta2,
                                 curve.n, True, [msg], null.metadata())
    caveats = []
    if curve.degenerate.any():
        caveats.append(f"{int(curve.degenerate.sum())} splits had a zero normalizer and were scored 0")
    k_hat = curve.argmax()
    stat = float(curve.values.max())
    return ChangePointReport(stat, k_hat, k_hat / curve.n, crit, pvalue(null, stat), bool(stat > crit),
                             alpha, variant.value, eta1, eta2, curve.n, False, caveats, null.metadata())


# --- wild binary segmentation ----------------------------------------------


@dataclass(frozen=True)
class WbsConfig:
    """Settings for wild binary segmentation with a Gaussian-calibrated threshold."""

    M: int = 100
    J: int = 200
    min_len: int = 20
    eta1: float = 0.15
    eta2: float = 0.05
    level: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.J < 1:
            raise ValueError("M and J must be positive")
        _check_trimming(self.eta1, self.eta2)
        need = max(4, math.ceil(1.0 / self.eta2 - 1e-9))
        if self.min_len < need:
            raise ValueError(f"min_len must be at least {need} so that every inner window is nonempty")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("M", "J", "min_len", "eta1", "eta2", "level", "seed")}


@dataclass(frozen=True)
class Segmentation:
    """Sorted change-point indices; a point k splits after observation k."""

    n: int
    points: tuple[int, ...] = ()

    def __post_init__(self):
        pts = tuple(int(p) for p in self.points)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("change points must be strictly increasing")
        if pts and (pts[0] < 1 or pts[-1] > self.n - 1):
            raise ValueError("change points must lie in 1..n-1")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def labels(self) -> np.ndarray:
        """Segment label of each observation 1..n."""
        lab = np.zeros(self.n, dtype=np.int64)
        for p in self.points:
            lab[p:] += 1
        return lab


def _rngs(seed: int):
    ss = np.random.SeedSequence(seed)
    interval_ss, calib_ss = ss.spawn(2)
    return np.random.default_rng(interval_ss), calib_ss


def draw_intervals(n: int, M: int, min_len: int, rng) -> np.ndarray:
    """M integer intervals (s, e], 0 <= s < e <= n, e - s >= min_len, uniform over valid pairs."""
    if n < min_len:
        raise ValueError(f"series length {n} is below min_len={min_len}")
    out = np.empty((M, 2), dtype=np.int64)
    i = 0
    while i < M:
        s, e = rng.integers(0, n + 1, size=2)
        if e - s >= min_len:
            out[i] = s, e
            i += 1
    return out


def _interval_maxima(prefix: PrefixStats, intervals: np.ndarray, cfg: WbsConfig):
    s = intervals[:, 0]
    e = intervals[:, 1]
    L = e - s
    k_lo = np.array([_floor(x * cfg.eta1) for x in L], dtype=np.int64)
    h = np.array([_floor(x * cfg.eta2) for x in L], dtype=np.int64)
    return kernels.interval_maxima(prefix.gram, prefix.cum_sq, s, e, k_lo, L - k_lo, h, True)


def wbs_threshold(n: int, cfg: WbsConfig, intervals: np.ndarray | None = None):
    """Gaussian-calibrated threshold ``xi`` and the interval set.

    Each of J iid N(0, 1) series of length n is scanned with the SN2 statistic
    over every interval; ``xi`` is the ``cfg.level`` quantile of the per-series
    maxima.
    """
    interval_rng, calib_ss = _rngs(cfg.seed)
    if intervals is None:
        intervals = draw_intervals(n, cfg.M, cfg.min_len, interval_rng)
    else:
        intervals = np.asarray(intervals, dtype=np.int64).reshape(-1, 2)
        if np.any(intervals[:, 1] - intervals[:, 0] < cfg.min_len) or intervals.min() < 0 or intervals.max() > n:
            raise ValueError("intervals must satisfy 0 <= s, e <= n and e - s >= min_len")
    xis = np.empty(cfg.J)
    for j, child in enumerate(calib_ss.spawn(cfg.J)):
        z = np.random.default_rng(child).standard_normal(n)
        best, _, _ = _interval_maxima(build_prefix(ObjectSeries.scalars(z)), intervals, cfg)
        xis[j] = best.max()
    xi = float(np.quantile(xis, cfg.level, method="inverted_cdf"))
    return xi, intervals


def wbs_detect(series, cfg: WbsConfig, xi: float, intervals: np.ndarray) -> Segmentation:
    """Recursive binary segmentation over the random intervals with threshold ``xi``."""
    if not isinstance(series, ObjectSeries):
        series = ObjectSeries.from_objects(series)
    n = len(series)
    if n < cfg.min_len:
        return Segmentation(n)
    intervals = np.asarray(intervals, dtype=np.int64).reshape(-1, 2)
    if intervals.size and intervals.max() > n:
        raise ValueError("intervals exceed the series length; use wbs_threshold with the same n")
    best, arg, alldeg = _interval_maxima(build_prefix(series), intervals, cfg)
    best = np.where(alldeg, -np.inf, best)
    found: list[int] = []
    stack = [(0, n)]
    while stack:
        s, e = stack.pop()
        if e - s < cfg.min_len:
            continue
        inside = np.flatnonzero((intervals[:, 0] >= s) & (intervals[:, 1] <= e))
        if inside.size == 0:
            continue
        m0 = inside[int(np.argmax(best[inside]))]
        if not best[m0] > xi:
            continue
        k0 = int(intervals[m0, 0] + arg[m0])
        found.append(k0)
        stack.append((k0, e))
        stack.append((s, k0))
    return Segmentation(n, tuple(sorted(set(found))))


def wbs(series, cfg: WbsConfig | None = None) -> tuple[Segmentation, float]:
    """Convenience wrapper: calibrate on the series length, then detect."""
    cfg = cfg or WbsConfig()
    n = len(series)
    if n < cfg.min_len:
        return Segmentation(n), float("nan")
    xi, intervals = wbs_threshold(n, cfg)
    return wbs_detect(series, cfg, xi, intervals), xi
