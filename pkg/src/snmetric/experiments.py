"""Monte Carlo harness: rejection rates, size-adjusted power, location accuracy, WBS/ARI.

Replication ``i`` of an experiment with seed ``s`` simulates its data from the
seed entropy ``(s, i)``, so results do not depend on execution order and a
null run and an alternative run with the same seed share their latent paths.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .changepoint import Segmentation, WbsConfig, contrast_curve, wbs_detect, wbs_threshold
from .dgp import CpSpec, DgpSpec, MultiCpSpec, gen_cp_series, gen_multicp_series, gen_two_samples
from .errors import DegenerateNormalizer
from .null import NullSampleSet, quantile
from .two_sample import Variant, d1_statistic, d2_statistic, profiles


@dataclass
class ExperimentResult:
    """Per-replication statistics of one test variant under one design."""

    design: dict
    variant: str
    alpha: float
    critical_value: float
    statistics: np.ndarray
    degenerate: np.ndarray

    @property
    def replications(self) -> int:
        return int(self.statistics.size)

    @property
    def rejections(self) -> int:
        return int(np.sum((self.statistics > self.critical_value) & ~self.degenerate))

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.replications

    @property
    def standard_error(self) -> float:
        p = self.rejection_rate
        return math.sqrt(p * (1.0 - p) / self.replications)

    def row(self) -> dict:
        return dict(self.design, variant=self.variant, alpha=self.alpha,
                    replications=self.replications, rejection_rate=self.rejection_rate,
                    standard_error=self.standard_error, degenerate=int(self.degenerate.sum()))


@dataclass(frozen=True)
class TwoSampleDesign:
    spec: DgpSpec
    eta: float = 0.15
    variants: tuple[str, ...] = ("D1", "D2")

    def describe(self) -> dict:
        s = self.spec
        return {"test": "two_sample", "dgp": s.dgp.value, "n1": s.n1, "n2": s.n2, "rho": s.rho, "a": s.a,
                "delta1": s.delta1, "delta2": s.delta2, "eta": self.eta}


@dataclass(frozen=True)
class ChangePointDesign:
    spec: CpSpec
    eta1: float = 0.15
    eta2: float = 0.05
    variants: tuple[str, ...] = ("SN1", "SN2")

    def describe(self) -> dict:
        s = self.spec
        return {"test": "changepoint", "dgp": s.dgp.value, "n": s.n, "tau": s.tau, "rho": s.rho,
                "delta1": s.delta1, "delta2": s.delta2, "eta1": self.eta1, "eta2": self.eta2}


def _rep_seed(seed: int, i: int) -> tuple[int, int]:
    return (int(seed), int(i))


def _two_sample_stats(design: TwoSampleDesign, i: int, seed: int) -> dict[str, float | None]:
    s1, s2 = gen_two_samples(replace(design.spec, seed=_rep_seed(seed, i)))
    p = profiles(s1, s2, design.eta)
    out = {}
    for v in design.variants:
        fn = d1_statistic if Variant(v) is Variant.D1 else d2_statistic
        try:
            out[v] = fn(p)
        except DegenerateNormalizer:
            out[v] = None
    return out


def _cp_stats(design: ChangePointDesign, i: int, seed: int) -> dict[str, float | None]:
    series = gen_cp_series(replace(design.spec, seed=_rep_seed(seed, i)))
    out = {}
    for v in design.variants:
        c = contrast_curve(series, design.eta1, design.eta2, v)
        out[v] = None if c.all_degenerate else float(c.values.max())
    return out


def size_power_experiment(design, replications: int, alpha: float, seed: int,
                          null: NullSampleSet) -> dict[str, ExperimentResult]:
    """Rejection rates of each variant in ``design`` at level ``alpha``."""
    if isinstance(design, TwoSampleDesign):
        null.require("Deta", (design.eta,))
        one = _two_sample_stats
    elif isinstance(design, ChangePointDesign):
        null.require("Seta", (design.eta1, design.eta2))
        one = _cp_stats
    else:
        raise TypeError(f"unsupported design {type(design).__name__}")
    crit = quantile(null, 1.0 - alpha)
    stats = {v: np.zeros(replications) for v in design.variants}
    deg = {v: np.zeros(replications, dtype=bool) for v in design.variants}
    for i in range(replications):
        for v, x in one(design, i, seed).items():
            if x is None:
                deg[v][i] = True
            else:
                stats[v][i] = x
    desc = design.describe()
    return {v: ExperimentResult(desc, v, alpha, crit, stats[v], deg[v]) for v in design.variants}


def size_adjusted_power(null_result: ExperimentResult, alt_result: ExperimentResult,
                        level: float = 0.95) -> float:
    """Power at the empirical ``level`` quantile of the statistics from the null run."""
    s0 = np.where(null_result.degenerate, 0.0, null_result.statistics)
    crit = float(np.quantile(s0, level, method="inverted_cdf"))
    s1 = np.where(alt_result.degenerate, 0.0, alt_result.statistics)
    return float(np.mean(s1 > crit))


def location_experiment(spec: CpSpec, replications: int, seed: int, eta1: float = 0.15,
                        eta2: float = 0.05, variant="SN2") -> np.ndarray:
    """Estimated change fractions tau_hat over seeded replications (nan if degenerate)."""
    out = np.empty(replications)
    for i in range(replications):
        series = gen_cp_series(replace(spec, seed=_rep_seed(seed, i)))
        c = contrast_curve(series, eta1, eta2, variant)
        out[i] = np.nan if c.all_degenerate else c.argmax() / c.n
    return out


def adjusted_rand_index(seg1: Segmentation, seg2: Segmentation, n: int | None = None) -> float:
    """Adjusted Rand index between the partitions of 1..n induced by two segmentations."""
    n = seg1.n if n is None else n
    if seg1.n != n or seg2.n != n:
        raise ValueError("segmentations must cover the same n")
    a = seg1.labels()
    b = seg2.labels()
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)

    def pairs(x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(x * (x - 1.0) / 2.0))

    index = pairs(table)
    sa = pairs(table.sum(axis=1))
    sb = pairs(table.sum(axis=0))
    total = n * (n - 1) / 2.0
    expected = sa * sb / total if total else 0.0
    max_index = 0.5 * (sa + sb)
    if max_index == expected:
        # both partitions trivial in the same way (e.g. single clusters)
        return 1.0
    return (index - expected) / (max_index - expected)


@dataclass
class WbsExperimentResult:
    design: dict
    threshold: float
    true_points: tuple[int, ...]
    detected: list[tuple[int, ...]] = field(default_factory=list)
    ari: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def counts(self) -> np.ndarray:
        return np.array([len(d) for d in self.detected])

    def count_table(self, max_count: int = 6) -> dict[str, int]:
        """Replications detecting 0, 1, ..., and at least ``max_count`` points."""
        c = self.counts
        out = {str(k): int(np.sum(c == k)) for k in range(max_count)}
        out[f">={max_count}"] = int(np.sum(c >= max_count))
        return out

    def row(self) -> dict:
        return dict(self.design, threshold=self.threshold, replications=len(self.detected),
                    mean_ari=float(self.ari.mean()) if self.ari.size else float("nan"),
                    exact=int(np.sum(self.counts == len(self.true_points))),
                    **{f"count_{k}": v for k, v in self.count_table().items()})


def wbs_experiment(spec: MultiCpSpec, replications: int, seed: int, cfg: WbsConfig | None = None) -> WbsExperimentResult:
    """Detect change points on seeded replications; the threshold is calibrated once for n."""
    cfg = cfg or WbsConfig()
    xi, intervals = wbs_threshold(spec.n, cfg)
    truth = Segmentation(spec.n, spec.change_points)
    res = WbsExperimentResult(
        {"test": "wbs", "model": spec.model.value, "case": spec.case, "n": spec.n, "rho": spec.rho,
         "M": cfg.M, "J": cfg.J},
        xi, tuple(spec.change_points),
    )
    aris = []
    for i in range(replications):
        series = gen_multicp_series(replace(spec, seed=_rep_seed(seed, i)))
        seg = wbs_detect(series, cfg, xi, intervals)
        res.detected.append(seg.points)
        aris.append(adjusted_rand_index(seg, truth))
    res.ari = np.array(aris)
    return res


# --- output -----------------------------------------------------------------


def rows_to_csv(rows: Sequence[dict], path=None) -> str:
    """Render rows (dicts) as CSV with the union of keys as header; write if ``path``."""
    keys: list[str] = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
