"""Object series and the prefix-sum engine for subsample Fréchet statistics.

Given embeddings ``e_t`` of a series, the prefix arrays

    S_k = sum_{t <= k} (e_t - origin),     Q_k = sum_{t <= k} w |e_t - origin|^2

answer any window query (observations lo..hi) in O(embedding dim): the window
mean is ``origin + (S_hi - S_{lo-1}) / m`` and the window variance is
``(Q_hi - Q_{lo-1}) / m - w |(S_hi - S_{lo-1}) / m|^2``.

``origin`` defaults to the embedding of the first object. Distances are
translation invariant, so this changes nothing mathematically, but it keeps
prefix sums small and makes constant series produce exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .errors import EmptyWindowError, InvalidObjectError, SpaceMismatchError
from .spaces import (
    MetricObject,
    SpaceDescriptor,
    embed,
    embed_array,
    unembed,
    validate_payloads,
)

# compensated prefix sums above this length
KAHAN_MIN_LENGTH = 10_000
CLIP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ObjectSeries:
    """An ordered sequence of objects from one space, stored as a stacked array."""

    descriptor: SpaceDescriptor
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim == len(self.descriptor.shape):
            raise InvalidObjectError("values must be stacked along a leading series axis")
        if arr.shape[0] < 1:
            raise InvalidObjectError("a series needs at least one object")
        arr = np.array(validate_payloads(self.descriptor, arr), copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_objects(cls, objects: Sequence[MetricObject]) -> "ObjectSeries":
        objs = list(objects)
        if not objs:
            raise InvalidObjectError("a series needs at least one object")
        desc = objs[0].descriptor
        for i, o in enumerate(objs):
            if o.descriptor != desc:
                raise SpaceMismatchError(f"object {i} has descriptor {o.descriptor}, expected {desc}")
        return cls(desc, np.stack([o.data for o in objs]))

    @classmethod
    def scalars(cls, values) -> "ObjectSeries":
        return cls(SpaceDescriptor.scalar(), np.asarray(values, dtype=float).reshape(-1))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return ObjectSeries(self.descriptor, self.values[idx])
        return MetricObject._trusted(self.descriptor, self.values[idx])

    def __iter__(self) -> Iterator[MetricObject]:
        for i in range(len(self)):
            yield self[i]

    @property
    def objects(self) -> list[MetricObject]:
        return list(self)

    @cached_property
    def embedded(self) -> np.ndarray:
        """Embeddings, shape ``(n, embed_dim)``."""
        emb = embed_array(self.descriptor, self.values)
        emb.setflags(write=False)
        return emb

    def __repr__(self):
        return f"ObjectSeries({self.descriptor.kind.value}, n={len(self)})"


@dataclass(frozen=True, eq=False)
class PrefixStats:
    """Cumulative embedded sums ``cum_sum`` (n+1, dim) and squared norms ``cum_sq`` (n+1,).

    Both are taken relative to ``origin``; row 0 is zero.
    """

    descriptor: SpaceDescriptor
    origin: np.ndarray
    cum_sum: np.ndarray
    cum_sq: np.ndarray
    weight: float

    @property
    def n(self) -> int:
        return self.cum_sq.shape[0] - 1

    @cached_property
    def gram(self) -> np.ndarray:
        """``weight * S S^T`` over prefix indices 0..n (used by the scan kernels)."""
        s = self.cum_sum
        g = self.weight * (s @ s.T)
        g = 0.5 * (g + g.T)
        return np.ascontiguousarray(g)

    def window_sum(self, lo, hi) -> np.ndarray:
        return self.cum_sum[hi] - self.cum_sum[np.asarray(lo) - 1]

    def window_sq(self, lo, hi):
        return self.cum_sq[hi] - self.cum_sq[np.asarray(lo) - 1]

    def cancel_scale(self, lo, hi):
        """Size of the prefix terms that cancel in :meth:`window_sq`."""
        return self.cum_sq[hi] + self.cum_sq[np.asarray(lo) - 1]


def build_prefix(series: ObjectSeries, center: bool = True, origin=None) -> PrefixStats:
    """Prefix statistics of a series.

    ``origin`` (embedded coordinates) overrides the default, which is the first
    object's embedding, or zero when ``center=False``. Series that are compared
    against each other should share one origin.
    """
    emb = series.embedded
    w = series.descriptor.weight
    if origin is not None:
        origin = np.array(origin, dtype=float, copy=True)
        if origin.shape != (emb.shape[1],):
            raise SpaceMismatchError(f"origin has shape {origin.shape}, expected ({emb.shape[1]},)")
    else:
        origin = emb[0].copy() if center else np.zeros(emb.shape[1])
    x = emb - origin
    sq = w * np.einsum("ij,ij->i", x, x)
    n = len(series)
    if n > KAHAN_MIN_LENGTH:
        cum = kernels.kahan_cumsum(x)
        cq = kernels.kahan_cumsum(sq[:, None])[:, 0]
    else:
        cum = np.zeros((n + 1, x.shape[1]))
        np.cumsum(x, axis=0, out=cum[1:])
        cq = np.zeros(n + 1)
        np.cumsum(sq, out=cq[1:])
    for a in (origin, cum, cq):
        a.setflags(write=False)
    return PrefixStats(series.descriptor, origin, cum, cq, w)


def _check_window(prefix: PrefixStats, lo: int, hi: int) -> int:
    if not (1 <= lo <= hi <= prefix.n):
        raise EmptyWindowError(f"invalid window lo={lo}, hi={hi} for n={prefix.n}")
    return hi - lo + 1


def _window_mean_coords(prefix: PrefixStats, lo: int, hi: int) -> np.ndarray:
    m = _check_window(prefix, lo, hi)
    return prefix.window_sum(lo, hi) / m


def subsample_mean(prefix: PrefixStats, lo: int, hi: int) -> MetricObject:
    """Fréchet mean of observations lo..hi (1-based, inclusive)."""
    return unembed(prefix.origin + _window_mean_coords(prefix, lo, hi), prefix.descriptor)


def clip_variance(v, scale=1.0):
    """Clip rounding-level negatives to 0; larger negatives signal a bug.

    ``scale`` is the magnitude of the terms that cancelled (a mean square).
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < -CLIP_TOL * np.maximum(1.0, scale)):
        raise FloatingPointError(f"negative variance {v.min():.3e} beyond rounding tolerance")
    return np.maximum(v, 0.0)


def subsample_variance(prefix: PrefixStats, lo: int, hi: int) -> float:
    """Fréchet variance of observations lo..hi."""
    m = _check_window(prefix, lo, hi)
    mean = prefix.window_sum(lo, hi) / m
    msq = prefix.window_sq(lo, hi) / m
    v = msq - prefix.weight * float(mean @ mean)
    return float(clip_variance(v, prefix.cancel_scale(lo, hi) / m))


def contaminated_window_mean(prefix: PrefixStats, lo: int, hi: int, omega: MetricObject) -> float:
    """Mean squared distance from observations lo..hi to ``omega``."""
    if omega.descriptor != prefix.descriptor:
        raise SpaceMismatchError(f"omega lives in {omega.descriptor}, series in {prefix.descriptor}")
    m = _check_window(prefix, lo, hi)
    mean = prefix.window_sum(lo, hi) / m
    e = embed(omega).coords - prefix.origin
    w = prefix.weight
    msq = prefix.window_sq(lo, hi) / m
    v = msq - 2.0 * w * float(mean @ e) + w * float(e @ e)
    return float(clip_variance(v, prefix.cancel_scale(lo, hi) / m + w * float(e @ e)))
