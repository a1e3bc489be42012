"""Metric spaces for object-valued data and their Euclidean embeddings.

Every supported space is isometric to a (weighted) Euclidean space:

============================  ===========================  ===========
kind                          embedding                    weight
============================  ===========================  ===========
``Scalar``                    the value                    1
``L2Function``                values on the midpoint grid  1/M
``Wasserstein1D``             quantiles on the grid        1/M
``FrobeniusMatrix``           matrix entries               1
``GraphLaplacian``            matrix entries               1
``LogEuclideanSPD``           entries of ``logm(X)``       1
============================  ===========================  ===========

so ``d(x, y)**2 == weight * ||embed(x) - embed(y)||**2`` and Fréchet means
are images of ordinary weighted averages of the embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtri

from .errors import InvalidObjectError, SpaceMismatchError

MONOTONE_TOL = 1e-12
LAPLACIAN_ROW_TOL = 1e-9


class SpaceKind(str, Enum):
    SCALAR = "Scalar"
    L2_FUNCTION = "L2Function"
    WASSERSTEIN_1D = "Wasserstein1D"
    FROBENIUS = "FrobeniusMatrix"
    LOG_EUCLIDEAN = "LogEuclideanSPD"
    GRAPH_LAPLACIAN = "GraphLaplacian"

    @property
    def is_grid(self) -> bool:
        return self in (SpaceKind.L2_FUNCTION, SpaceKind.WASSERSTEIN_1D)

    @property
    def is_matrix(self) -> bool:
        return self in (SpaceKind.FROBENIUS, SpaceKind.LOG_EUCLIDEAN, SpaceKind.GRAPH_LAPLACIAN)


@dataclass(frozen=True)
class SpaceDescriptor:
    """Identifies a metric space. Objects are comparable iff descriptors are equal."""

    kind: SpaceKind
    grid_size: int | None = None
    matrix_dim: int | None = None
    spd_floor: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if self.kind.is_grid:
            if self.grid_size is None or int(self.grid_size) < 2:
                raise ValueError(f"{self.kind.value} needs grid_size M >= 2, got {self.grid_size}")
            object.__setattr__(self, "grid_size", int(self.grid_size))
            object.__setattr__(self, "matrix_dim", None)
        elif self.kind.is_matrix:
            if self.matrix_dim is None or int(self.matrix_dim) < 1:
                raise ValueError(f"{self.kind.value} needs matrix_dim p >= 1, got {self.matrix_dim}")
            object.__setattr__(self, "matrix_dim", int(self.matrix_dim))
            object.__setattr__(self, "grid_size", None)
        else:
            object.__setattr__(self, "grid_size", None)
            object.__setattr__(self, "matrix_dim", None)
        if not self.spd_floor > 0:
            raise ValueError("spd_floor must be positive")
        object.__setattr__(self, "spd_floor", float(self.spd_floor))

    # convenience constructors
    @classmethod
    def scalar(cls) -> "SpaceDescriptor":
        return cls(SpaceKind.SCALAR)

    @classmethod
    def wasserstein(cls, grid_size: int = 100) -> "SpaceDescriptor":
        return cls(SpaceKind.WASSERSTEIN_1D, grid_size=grid_size)

    @classmethod
    def l2_function(cls, grid_size: int) -> "SpaceDescriptor":
        return cls(SpaceKind.L2_FUNCTION, grid_size=grid_size)

    @classmethod
    def frobenius(cls, matrix_dim: int) -> "SpaceDescriptor":
        return cls(SpaceKind.FROBENIUS, matrix_dim=matrix_dim)

    @classmethod
    def graph_laplacian(cls, matrix_dim: int) -> "SpaceDescriptor":
        return cls(SpaceKind.GRAPH_LAPLACIAN, matrix_dim=matrix_dim)

    @classmethod
    def log_euclidean(cls, matrix_dim: int, spd_floor: float = 1e-10) -> "SpaceDescriptor":
        return cls(SpaceKind.LOG_EUCLIDEAN, matrix_dim=matrix_dim, spd_floor=spd_floor)

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of one object's payload."""
        if self.kind.is_grid:
            return (self.grid_size,)
        if self.kind.is_matrix:
            return (self.matrix_dim, self.matrix_dim)
        return ()

    @property
    def embed_dim(self) -> int:
        if self.kind.is_grid:
            return self.grid_size
        if self.kind.is_matrix:
            return self.matrix_dim * self.matrix_dim
        return 1

    @property
    def weight(self) -> float:
        """Quadrature weight w with d^2 = w * ||embed(x) - embed(y)||^2."""
        return 1.0 / self.grid_size if self.kind.is_grid else 1.0

    @property
    def grid(self) -> np.ndarray:
        """Midpoint grid (j - 1/2)/M, j = 1..M (probabilities or abscissae)."""
        if not self.kind.is_grid:
            raise AttributeError(f"{self.kind.value} has no grid")
        return midpoint_grid(self.grid_size)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if self.grid_size is not None:
            out["grid_size"] = self.grid_size
        if self.matrix_dim is not None:
            out["matrix_dim"] = self.matrix_dim
        if self.kind is SpaceKind.LOG_EUCLIDEAN:
            out["spd_floor"] = self.spd_floor
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceDescriptor":
        return cls(
            SpaceKind(d["kind"]),
            grid_size=d.get("grid_size"),
            matrix_dim=d.get("matrix_dim"),
            spd_floor=d.get("spd_floor", 1e-10),
        )


def midpoint_grid(m: int) -> np.ndarray:
    return (np.arange(1, m + 1) - 0.5) / m


def gaussian_quantiles(mean, sd, grid_size: int = 100) -> np.ndarray:
    """Quantile grid(s) of N(mean, sd^2) at the midpoint probabilities.

    ``mean`` and ``sd`` broadcast; the result has a trailing axis of length M.
    """
    z = ndtri(midpoint_grid(grid_size))
    mean = np.asarray(mean, dtype=float)[..., None]
    sd = np.asarray(sd, dtype=float)[..., None]
    return mean + sd * z


def empirical_quantiles(samples, grid_size: int = 100) -> np.ndarray:
    """Linear-interpolation empirical quantiles of raw samples on the midpoint grid."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot build a quantile function from zero samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return np.quantile(x, midpoint_grid(grid_size), method="linear")


# --- batch validation -------------------------------------------------------


def _fail(msg, idx, batched):
    raise InvalidObjectError(f"record {idx}: {msg}" if batched else msg, idx if batched else None)


def validate_payloads(desc: SpaceDescriptor, arr: np.ndarray, *, batched: bool = True) -> np.ndarray:
    """Check invariants for a stack of payloads of shape ``(n, *desc.shape)``.

    Returns the validated float array (symmetric matrix payloads are exactly
    symmetrized when asymmetric only at rounding level).
    """
    arr = np.asarray(arr, dtype=float)
    if arr.shape[1:] != desc.shape:
        raise InvalidObjectError(f"payload shape {arr.shape[1:]} does not match {desc.shape} for {desc.kind.value}")
    bad = ~np.all(np.isfinite(arr.reshape(arr.shape[0], -1)), axis=1)
    if bad.any():
        _fail("non-finite entries", int(np.argmax(bad)), batched)

    kind = desc.kind
    if kind is SpaceKind.WASSERSTEIN_1D:
        drops = np.diff(arr, axis=1).min(axis=1, initial=0.0)
        bad = drops < -MONOTONE_TOL
        if bad.any():
            _fail("quantile values must be nondecreasing", int(np.argmax(bad)), batched)
    elif kind.is_matrix:
        asym = np.abs(arr - np.swapaxes(arr, 1, 2)).reshape(arr.shape[0], -1).max(axis=1, initial=0.0)
        scale = np.maximum(1.0, np.abs(arr).reshape(arr.shape[0], -1).max(axis=1, initial=0.0))
        bad = asym > 1e-12 * scale
        if bad.any():
            _fail("matrix must be symmetric", int(np.argmax(bad)), batched)
        arr = 0.5 * (arr + np.swapaxes(arr, 1, 2))
        if kind is SpaceKind.GRAPH_LAPLACIAN:
            rows = np.abs(arr.sum(axis=2)).max(axis=1, initial=0.0)
            bad = rows > LAPLACIAN_ROW_TOL
            if bad.any():
                _fail("Laplacian rows must sum to 0", int(np.argmax(bad)), batched)
            p = desc.matrix_dim
            off = arr[:, ~np.eye(p, dtype=bool)]
            bad = off.max(axis=1, initial=0.0) > LAPLACIAN_ROW_TOL
            if bad.any():
                _fail("Laplacian off-diagonal entries must be <= 0", int(np.argmax(bad)), batched)
        elif kind is SpaceKind.LOG_EUCLIDEAN:
            lam = np.linalg.eigvalsh(arr)[:, 0]
            bad = lam < desc.spd_floor
            if bad.any():
                i = int(np.argmax(bad))
                _fail(f"minimum eigenvalue {lam[i]:.3g} below spd_floor {desc.spd_floor:g}", i, batched)
    return arr


# --- embeddings -------------------------------------------------------------


def _sym_logm(mats: np.ndarray, floor: float) -> np.ndarray:
    lam, vec = np.linalg.eigh(mats)
    if np.any(lam < floor):
        i = int(np.argmax((lam < floor).any(axis=-1))) if lam.ndim > 1 else None
        raise InvalidObjectError(f"eigenvalue below spd_floor {floor:g}", i)
    return (vec * np.log(lam)[..., None, :]) @ np.swapaxes(vec, -1, -2)


def _sym_expm(mats: np.ndarray) -> np.ndarray:
    mats = 0.5 * (mats + np.swapaxes(mats, -1, -2))
    lam, vec = np.linalg.eigh(mats)
    return (vec * np.exp(lam)[..., None, :]) @ np.swapaxes(vec, -1, -2)


def embed_array(desc: SpaceDescriptor, arr: np.ndarray) -> np.ndarray:
    """Embed a stack of validated payloads; returns shape ``(n, desc.embed_dim)``."""
    arr = np.asarray(arr, dtype=float)
    n = arr.shape[0]
    if desc.kind is SpaceKind.LOG_EUCLIDEAN:
        arr = _sym_logm(arr, desc.spd_floor)
    return arr.reshape(n, desc.embed_dim)


def unembed_array(desc: SpaceDescriptor, coords: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_array`, projecting onto the space where needed."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != desc.embed_dim:
        raise ValueError(f"expected coordinates of shape (n, {desc.embed_dim}), got {coords.shape}")
    n = coords.shape[0]
    kind = desc.kind
    if kind is SpaceKind.SCALAR:
        return coords.reshape(n)
    if kind is SpaceKind.WASSERSTEIN_1D:
        out = coords.copy()
        viol = np.diff(out, axis=1).min(axis=1, initial=0.0) < -MONOTONE_TOL
        if viol.any():
            out[viol] = np.sort(out[viol], axis=1)
        return out
    if kind is SpaceKind.L2_FUNCTION:
        return coords.copy()
    p = desc.matrix_dim
    mats = coords.reshape(n, p, p)
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    if kind is SpaceKind.LOG_EUCLIDEAN:
        return _sym_expm(mats)
    if kind is SpaceKind.GRAPH_LAPLACIAN:
        idx = np.arange(p)
        mats[:, idx, idx] -= mats.sum(axis=2)
    return mats


# --- objects ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetricObject:
    """A point of a metric space; ``data`` is a read-only payload array."""

    descriptor: SpaceDescriptor
    data: np.ndarray

    def __post_init__(self):
        arr = validate_payloads(self.descriptor, np.asarray(self.data, dtype=float)[None], batched=False)[0]
        arr = np.array(arr, dtype=float, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def scalar(cls, value: float) -> "MetricObject":
        return cls(SpaceDescriptor.scalar(), np.float64(value))

    @classmethod
    def _trusted(cls, descriptor: SpaceDescriptor, data: np.ndarray) -> "MetricObject":
        # skips validation; for payloads produced by this module
        obj = object.__new__(cls)
        arr = np.array(data, dtype=float, copy=True)
        arr.setflags(write=False)
        object.__setattr__(obj, "descriptor", descriptor)
        object.__setattr__(obj, "data", arr)
        return obj

    def __repr__(self):
        return f"MetricObject({self.descriptor.kind.value}, shape={self.data.shape})"


@dataclass(frozen=True)
class EmbeddedVector:
    coords: np.ndarray
    weight: float


def _check_same(x: MetricObject, y: MetricObject):
    if x.descriptor != y.descriptor:
        raise SpaceMismatchError(f"descriptor mismatch: {x.descriptor} vs {y.descriptor}")


def distance(x: MetricObject, y: MetricObject) -> float:
    """Metric distance between two objects of the same space."""
    _check_same(x, y)
    desc = x.descriptor
    kind = desc.kind
    if kind is SpaceKind.SCALAR:
        return float(abs(x.data - y.data))
    if kind.is_grid:
        diff = x.data - y.data
        return float(np.sqrt(np.mean(diff * diff)))
    if kind is SpaceKind.LOG_EUCLIDEAN:
        lx = _sym_logm(x.data, desc.spd_floor)
        ly = _sym_logm(y.data, desc.spd_floor)
        return float(np.linalg.norm(lx - ly, "fro"))
    return float(np.linalg.norm(x.data - y.data, "fro"))


def embed(x: MetricObject) -> EmbeddedVector:
    coords = embed_array(x.descriptor, x.data[None])[0]
    return EmbeddedVector(coords, x.descriptor.weight)


def unembed(v: EmbeddedVector | np.ndarray, descriptor: SpaceDescriptor) -> MetricObject:
    coords = v.coords if isinstance(v, EmbeddedVector) else np.asarray(v, dtype=float)
    if coords.shape != (descriptor.embed_dim,):
        raise ValueError(f"expected {descriptor.embed_dim} coordinates, got shape {coords.shape}")
    return MetricObject._trusted(descriptor, unembed_array(descriptor, coords[None])[0])


def _stack(objects: Iterable[MetricObject]) -> tuple[SpaceDescriptor, np.ndarray]:
    objs = list(objects)
    if not objs:
        raise ValueError("need at least one object")
    desc = objs[0].descriptor
    for o in objs[1:]:
        if o.descriptor != desc:
            raise SpaceMismatchError(f"descriptor mismatch: {desc} vs {o.descriptor}")
    return desc, np.stack([o.data for o in objs])


def frechet_mean(objects: Sequence[MetricObject], weights=None) -> MetricObject:
    """Weighted Fréchet mean; closed form through the embedding."""
    desc, arr = _stack(objects)
    emb = embed_array(desc, arr)
    if weights is None:
        center = emb.mean(axis=0)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(arr),):
            raise ValueError("weights must have one entry per object")
        if np.any(w < 0) or not w.sum() > 0:
            raise ValueError("weights must be nonnegative with positive sum")
        center = (w / w.sum()) @ emb
    return unembed(center, desc)


def frechet_variance(objects: Sequence[MetricObject], mean: MetricObject) -> float:
    """Mean squared distance of ``objects`` to ``mean``."""
    objs = list(objects)
    if not objs:
        raise ValueError("need at least one object")
    return float(np.mean([distance(o, mean) ** 2 for o in objs]))
