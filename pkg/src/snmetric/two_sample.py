"""Self-normalized two-sample and N-sample tests for Fréchet means and variances.

For recursive windows holding the first ``floor(k n_i / n)`` observations of
each sample, the contrast processes are

    T(k/n)  = (k/n) (V1 - V2)
    TC(k/n) = (k/n) (V1^C - V1 + V2^C - V2)

where ``V_i`` is the window variance of sample i and ``V_i^C`` the mean squared
distance of that window to the other sample's window mean. Both samples share a
common embedding origin, so ``V_i^C - V_i = w |mu_1 - mu_2|^2`` exactly and TC
is nonnegative by construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DegenerateNormalizer, EmptyWindowError, SpaceMismatchError
from .frechet import CLIP_TOL, ObjectSeries, build_prefix, clip_variance
from .null import NullSampleSet, pvalue, quantile


class Variant(str, Enum):
    D1 = "D1"
    D2 = "D2"
    DN1 = "DN1"
    DN2 = "DN2"


def _floor(x: float) -> int:
    return int(math.floor(x + 1e-9))


def _as_series(x) -> ObjectSeries:
    if isinstance(x, ObjectSeries):
        return x
    return ObjectSeries.from_objects(x)


def _window_moments(samples: Sequence[ObjectSeries], eta: float):
    """Window means (centered coords) and variances of every sample at every k.

    Returns ``(k, n, means, variances, mean_squares, weight)`` with ``means[i]``
    of shape (len(k), dim) and the other per-sample arrays of shape (len(k),).
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    desc = samples[0].descriptor
    for j, s in enumerate(samples):
        if s.descriptor != desc:
            raise SpaceMismatchError(f"sample {j} lives in {s.descriptor}, sample 0 in {desc}")
    sizes = [len(s) for s in samples]
    n = sum(sizes)
    k = np.arange(max(_floor(n * eta), 1), n + 1)
    origin = samples[0].embedded[0]
    means, variances, mean_squares = [], [], []
    for s, ni in zip(samples, sizes):
        p = build_prefix(s, origin=origin)
        m = (k * ni) // n
        if m[0] < 1:
            raise EmptyWindowError(
                f"sample of size {ni} gets an empty window at k={k[0]}; increase eta or the sample size"
            )
        mu = p.cum_sum[m] / m[:, None]
        msq = p.cum_sq[m] / m
        v = clip_variance(msq - p.weight * np.einsum("ij,ij->i", mu, mu), msq)
        means.append(mu)
        variances.append(v)
        mean_squares.append(msq)
    return k, n, means, variances, mean_squares, desc.weight


def _snap(proc: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Zero entries that are pure cancellation noise relative to ``scale``."""
    return np.where(np.abs(proc) <= CLIP_TOL * scale, 0.0, proc)


def _pair_contrasts(k, n, mu, var, msq, w, i, j):
    r = k / n
    d = mu[i] - mu[j]
    scale = r * (msq[i] + msq[j])
    T = _snap(r * (var[i] - var[j]), scale)
    TC = _snap(r * 2.0 * w * np.einsum("ij,ij->i", d, d), scale)
    return T, TC


@dataclass(frozen=True, eq=False)
class TwoSampleProfiles:
    """Contrast processes ``T`` and ``TC`` evaluated at ``k = floor(n eta)..n``."""

    n1: int
    n2: int
    eta: float
    k: np.ndarray
    T: np.ndarray
    TC: np.ndarray

    @property
    def n(self) -> int:
        return self.n1 + self.n2


def profiles(sample1, sample2, eta: float) -> TwoSampleProfiles:
    s1, s2 = _as_series(sample1), _as_series(sample2)
    k, n, mu, var, msq, w = _window_moments([s1, s2], eta)
    T, TC = _pair_contrasts(k, n, mu, var, msq, w, 0, 1)
    return TwoSampleProfiles(len(s1), len(s2), eta, k, T, TC)


def _normalizer(proc: np.ndarray, k: np.ndarray, n: int) -> float:
    r = k / n
    return float(np.sum((proc - r * proc[-1]) ** 2))


def _ratio(num: float, den: float, name: str) -> float:
    if not den > 0.0:
        raise DegenerateNormalizer(f"{name}: self-normalizer is zero (samples are degenerate)")
    return num / den


def d1_statistic(p: TwoSampleProfiles) -> float:
    """Variance-only statistic n T(1)^2 / sum_k (T(k/n) - (k/n) T(1))^2."""
    return _ratio(p.n * p.T[-1] ** 2, _normalizer(p.T, p.k, p.n), "D1")


def d2_statistic(p: TwoSampleProfiles) -> float:
    """Mean-and-variance statistic combining T and TC."""
    num = p.n * (p.T[-1] ** 2 + p.TC[-1] ** 2)
    den = _normalizer(p.T, p.k, p.n) + _normalizer(p.TC, p.k, p.n)
    return _ratio(num, den, "D2")


def n_sample_statistics(samples, eta: float) -> tuple[float, float]:
    """``(DN1, DN2)`` summing all pairwise contrasts, with n the pooled size."""
    series = [_as_series(s) for s in samples]
    if len(series) < 2:
        raise ValueError("need at least two samples")
    k, n, mu, var, msq, w = _window_moments(series, eta)
    num1 = num2 = den1 = den2 = 0.0
    for i in range(len(series)):
        for j in range(i + 1, len(series)):
            T, TC = _pair_contrasts(k, n, mu, var, msq, w, i, j)
            num1 += T[-1] ** 2
            num2 += T[-1] ** 2 + TC[-1] ** 2
            den1 += _normalizer(T, k, n)
            den2 += _normalizer(T, k, n) + _normalizer(TC, k, n)
    return _ratio(n * num1, den1, "DN1"), _ratio(n * num2, den2, "DN2")


def statistic(samples, eta: float, variant) -> float:
    variant = Variant(variant)
    if variant in (Variant.D1, Variant.D2):
        if len(samples) != 2:
            raise ValueError(f"{variant.value} compares exactly two samples")
        p = profiles(samples[0], samples[1], eta)
        return d1_statistic(p) if variant is Variant.D1 else d2_statistic(p)
    dn1, dn2 = n_sample_statistics(samples, eta)
    return dn1 if variant is Variant.DN1 else dn2


@dataclass
class TestReport:
    """Outcome of a self-normalized k-sample test."""

    __test__ = False  # not a pytest class

    variant: str
    statistic: float | None
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    eta: float
    sample_sizes: tuple[int, ...]
    degenerate: bool = False
    caveats: list[str] = field(default_factory=list)
    null: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "eta": self.eta,
            "sample_sizes": list(self.sample_sizes),
            "degenerate": self.degenerate,
            "caveats": list(self.caveats),
            "null": dict(self.null),
        }


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")


def run_k_sample_test(samples, eta: float, alpha: float, variant, null: NullSampleSet) -> TestReport:
    """Test equality of means/variances across ``samples`` against a Deta null set."""
    variant = Variant(variant)
    _check_alpha(alpha)
    null.require("Deta", (eta,))
    series = [_as_series(s) for s in samples]
    crit = quantile(null, 1.0 - alpha)
    sizes = tuple(len(s) for s in series)
    try:
        stat = statistic(series, eta, variant)
    except DegenerateNormalizer as exc:
        return TestReport(variant.value, None, crit, 1.0, False, alpha, eta, sizes, True,
                          [str(exc)], null.metadata())
    return TestReport(variant.value, stat, crit, pvalue(null, stat), bool(stat > crit), alpha,
                      eta, sizes, False, [], null.metadata())


def run_two_sample_test(sample1, sample2, eta: float = 0.1, alpha: float = 0.05,
                        variant="D2", null: NullSampleSet | None = None) -> TestReport:
    if null is None:
        raise ValueError("a Deta null sample set is required")
    return run_k_sample_test([sample1, sample2], eta, alpha, variant, null)


@dataclass
class PairwiseMatrix:
    """Symmetric matrices of pairwise statistics and p-values (diagonal: 0 and 1)."""

    statistics: np.ndarray
    pvalues: np.ndarray
    degenerate: np.ndarray
    caveats: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        stats = np.where(self.degenerate, np.nan, self.statistics)
        return {
            "statistics": [[None if math.isnan(x) else float(x) for x in row] for row in stats],
            "pvalues": self.pvalues.tolist(),
            "degenerate": self.degenerate.tolist(),
            "caveats": list(self.caveats),
        }


UNEQUAL_SIZE_CAVEAT = (
    "pairwise p-values from samples of unequal size are not mutually comparable "
    "in power and should be read with care"
)


def pairwise_pvalue_matrix(samples, eta: float, variant, null: NullSampleSet) -> PairwiseMatrix:
    """All pairwise two-sample tests; warns when sample sizes differ."""
    variant = Variant(variant)
    if variant not in (Variant.D1, Variant.D2):
        raise ValueError("pairwise comparisons use D1 or D2")
    null.require("Deta", (eta,))
    series = [_as_series(s) for s in samples]
    N = len(series)
    stats = np.zeros((N, N))
    pv = np.ones((N, N))
    deg = np.zeros((N, N), dtype=bool)
    for i in range(N):
        for j in range(i + 1, N):
            try:
                s = statistic([series[i], series[j]], eta, variant)
                stats[i, j] = stats[j, i] = s
                pv[i, j] = pv[j, i] = pvalue(null, s)
            except DegenerateNormalizer:
                deg[i, j] = deg[j, i] = True
    caveats = []
    if len({len(s) for s in series}) > 1:
        warnings.warn(UNEQUAL_SIZE_CAVEAT, UserWarning, stacklevel=2)
        caveats.append(UNEQUAL_SIZE_CAVEAT)
    return PairwiseMatrix(stats, pv, deg, caveats)
