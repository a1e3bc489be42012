"""Simulation designs: latent VAR(1) drivers and the three object-valued DGPs.

All randomness flows from one integer seed through ``SeedSequence`` children,
so a (design, seed) pair always produces the same series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import lfilter

from .frechet import ObjectSeries
from .spaces import SpaceDescriptor, gaussian_quantiles

BURN_IN = 200


class Dgp(str, Enum):
    GAUSSIAN = "gaussian"
    GRAPH = "graph"
    COVARIANCE = "covariance"


@dataclass(frozen=True)
class LatentVarProcess:
    """Bivariate VAR(1) ``U_t = rho U_{t-1} + eps_t`` with corr(eps) = a."""

    rho: float
    a: float
    n: int
    seed: int = 0
    burn_in: int = BURN_IN

    def __post_init__(self):
        if not abs(self.rho) < 1.0:
            raise ValueError("|rho| must be below 1")
        if not 0.0 <= self.a < 1.0:
            raise ValueError("a must lie in [0, 1)")
        if self.n < 1 or self.burn_in < 0:
            raise ValueError("n must be positive and burn_in nonnegative")


def _var1(rng: np.random.Generator, rho: float, a: float, n: int, burn_in: int) -> np.ndarray:
    z = rng.standard_normal((n + burn_in, 2))
    eps = np.empty_like(z)
    eps[:, 0] = z[:, 0]
    eps[:, 1] = a * z[:, 0] + math.sqrt(1.0 - a * a) * z[:, 1]
    u = lfilter([1.0], [1.0, -rho], eps, axis=0)
    return u[burn_in:]


def gen_var1(proc: LatentVarProcess) -> np.ndarray:
    """Latent pairs, shape (n, 2)."""
    return _var1(np.random.default_rng(proc.seed), proc.rho, proc.a, proc.n, proc.burn_in)


def latent_streams(count: int, rho: float, a: float, n: int, seed, burn_in: int = BURN_IN) -> np.ndarray:
    """``count`` independent VAR(1) streams, shape (count, n, 2)."""
    children = np.random.SeedSequence(seed).spawn(count)
    return np.stack([_var1(np.random.default_rng(c), rho, a, n, burn_in) for c in children])


# --- object builders --------------------------------------------------------


def gaussian_objects(u: np.ndarray, delta1, delta2, grid_size: int = 100) -> ObjectSeries:
    """N(arctan(u) + delta1, delta2^2 (arctan(u^2) + 1)^2) as quantile functions."""
    mean = np.arctan(u) + delta1
    sd = np.asarray(delta2) * (np.arctan(u * u) + 1.0)
    return ObjectSeries(SpaceDescriptor.wasserstein(grid_size), gaussian_quantiles(mean, sd, grid_size))


def graph_objects(u: np.ndarray, u_prime: np.ndarray, delta1, delta2, nodes: int) -> ObjectSeries:
    """Laplacians of a two-community graph with floor(0.4 N) and remaining nodes.

    Within-community weights are ``delta2 (0.4 + arctan(u^2))`` and
    ``delta2 (0.2 + arctan(u'^2))``; between-community weight ``0.1 + delta1``.
    """
    n = u.shape[0]
    n1 = int(math.floor(0.4 * nodes + 1e-9))
    d1 = np.broadcast_to(np.asarray(delta1, dtype=float), (n,))
    d2 = np.broadcast_to(np.asarray(delta2, dtype=float), (n,))
    w1 = d2 * (0.4 + np.arctan(u * u))
    w2 = d2 * (0.2 + np.arctan(u_prime * u_prime))
    wb = 0.1 + d1
    first = np.arange(nodes) < n1
    same1 = np.outer(first, first)
    same2 = np.outer(~first, ~first)
    W = (
        same1[None] * w1[:, None, None]
        + same2[None] * w2[:, None, None]
        + (~(same1 | same2))[None] * wb[:, None, None]
    )
    W[:, np.arange(nodes), np.arange(nodes)] = 0.0
    L = -W
    L[:, np.arange(nodes), np.arange(nodes)] = W.sum(axis=2)
    return ObjectSeries(SpaceDescriptor.graph_laplacian(nodes), L)


def covariance_objects(u9: np.ndarray, delta1, delta2) -> ObjectSeries:
    """(2I + Z)(2I + Z)^T with Z entries ``delta1 + delta2 arctan(u)``; ``u9`` has shape (n, 9)."""
    n = u9.shape[0]
    d1 = np.asarray(delta1, dtype=float).reshape(-1, 1)
    d2 = np.asarray(delta2, dtype=float).reshape(-1, 1)
    Z = (d1 + d2 * np.arctan(u9)).reshape(n, 3, 3)
    A = 2.0 * np.eye(3) + Z
    Y = A @ np.swapaxes(A, 1, 2)
    Y = 0.5 * (Y + np.swapaxes(Y, 1, 2))
    return ObjectSeries(SpaceDescriptor.log_euclidean(3), Y)


# --- two-sample designs -----------------------------------------------------


@dataclass(frozen=True)
class DgpSpec:
    """Two-sample design; ``(delta1, delta2) = (0, 1)`` is the null."""

    dgp: Dgp
    n1: int
    n2: int | None = None
    delta1: float = 0.0
    delta2: float = 1.0
    rho: float = 0.0
    a: float = 0.0
    seed: int = 0
    nodes: int = 10
    grid_size: int = 100

    def __post_init__(self):
        object.__setattr__(self, "dgp", Dgp(self.dgp))
        if self.n2 is None:
            object.__setattr__(self, "n2", self.n1)
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("sample sizes must be at least 2")
        if not 0.0 <= self.delta1 <= 0.3 + 1e-12:
            raise ValueError("delta1 must lie in [0, 0.3]")
        if not 0.7 - 1e-12 <= self.delta2 <= 1.0:
            raise ValueError("delta2 must lie in [0.7, 1]")
        if self.dgp is Dgp.GRAPH and self.nodes < 3:
            raise ValueError("graph DGP needs at least 3 nodes")
        LatentVarProcess(self.rho, self.a, max(self.n1, self.n2))


def gen_two_samples(spec: DgpSpec) -> tuple[ObjectSeries, ObjectSeries]:
    """Two coupled object series; sample 2 carries the (delta1, delta2) perturbation.

    Samples are paired in time through the cross-correlation ``a`` of the
    latent VAR(1); with unequal sizes the longer latent path is truncated.
    """
    n = max(spec.n1, spec.n2)
    if spec.dgp is Dgp.GAUSSIAN:
        u = latent_streams(1, spec.rho, spec.a, n, spec.seed)[0]
        s1 = gaussian_objects(u[: spec.n1, 0], 0.0, 1.0, spec.grid_size)
        s2 = gaussian_objects(u[: spec.n2, 1], spec.delta1, spec.delta2, spec.grid_size)
    elif spec.dgp is Dgp.GRAPH:
        u, up = latent_streams(2, spec.rho, spec.a, n, spec.seed)
        s1 = graph_objects(u[: spec.n1, 0], up[: spec.n1, 0], 0.0, 1.0, spec.nodes)
        s2 = graph_objects(u[: spec.n2, 1], up[: spec.n2, 1], spec.delta1, spec.delta2, spec.nodes)
    else:
        u = latent_streams(9, spec.rho, spec.a, n, spec.seed)  # (9, n, 2)
        s1 = covariance_objects(u[:, : spec.n1, 0].T, 0.0, 1.0)
        s2 = covariance_objects(u[:, : spec.n2, 1].T, spec.delta1, spec.delta2)
    return s1, s2


# --- single-series designs --------------------------------------------------


def _series_from_latent(dgp: Dgp, n: int, d1: np.ndarray, d2: np.ndarray, rho: float, seed,
                        nodes: int, grid_size: int) -> ObjectSeries:
    if dgp is Dgp.GAUSSIAN:
        u = latent_streams(1, rho, 0.0, n, seed)[0, :, 0]
        return gaussian_objects(u, d1, d2, grid_size)
    if dgp is Dgp.GRAPH:
        u, up = latent_streams(2, rho, 0.0, n, seed)[:, :, 0]
        return graph_objects(u, up, d1, d2, nodes)
    u9 = latent_streams(9, rho, 0.0, n, seed)[:, :, 0].T
    return covariance_objects(u9, d1, d2)


@dataclass(frozen=True)
class CpSpec:
    """Single-change design: regime 2 starts after observation floor(n tau)."""

    dgp: Dgp
    n: int
    tau: float = 0.5
    delta1: float = 0.0
    delta2: float = 1.0
    rho: float = 0.0
    seed: int = 0
    nodes: int = 5
    grid_size: int = 100

    def __post_init__(self):
        object.__setattr__(self, "dgp", Dgp(self.dgp))
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        LatentVarProcess(self.rho, 0.0, self.n)


def gen_cp_series(spec: CpSpec) -> ObjectSeries:
    """One series from the sample-1 law, switching to the perturbed law at floor(n tau)."""
    k = int(math.floor(spec.n * spec.tau + 1e-9))
    after = np.arange(spec.n) >= k
    d1 = np.where(after, spec.delta1, 0.0)
    d2 = np.where(after, spec.delta2, 1.0)
    return _series_from_latent(spec.dgp, spec.n, d1, d2, spec.rho, spec.seed, spec.nodes, spec.grid_size)


MULTI_CP_POINTS = (110, 250, 370)
MULTI_CP_N = 500

MULTI_CP_CASES = {
    Dgp.GAUSSIAN: {
        1: ((0.0, 0.7, 0.0, 0.8), (1.0, 1.5, 0.7, 1.4)),
        2: ((0.0, 0.2, 0.0, 0.3), (0.5, 1.5, 0.4, 1.4)),
        3: ((0.0, 0.5, 1.5, 3.3), (0.2, 1.5, 3.8, 6.5)),
    },
    Dgp.COVARIANCE: {
        1: ((0.0, 1.2, 0.0, 1.3), (0.8, 1.5, 0.7, 1.6)),
        2: ((0.0, 1.0, 0.0, 1.0), (0.5, 2.0, 0.4, 1.9)),
        3: ((0.0, 2.0, 3.9, 5.7), (0.2, 0.7, 1.3, 2.0)),
    },
}


@dataclass(frozen=True)
class MultiCpSpec:
    """Piecewise-constant (delta1, delta2) over four regimes of a length-500 series.

    Pass ``a_vec``/``b_vec`` explicitly to override the tabulated case values.
    """

    model: Dgp
    case: int = 1
    rho: float = 0.0
    seed: int = 0
    n: int = MULTI_CP_N
    change_points: tuple[int, ...] = MULTI_CP_POINTS
    a_vec: tuple[float, ...] | None = None
    b_vec: tuple[float, ...] | None = None
    grid_size: int = 100

    def __post_init__(self):
        object.__setattr__(self, "model", Dgp(self.model))
        if self.model is Dgp.GRAPH:
            raise ValueError("multiple change-point designs use the gaussian or covariance model")
        if self.a_vec is None or self.b_vec is None:
            if self.case not in (1, 2, 3):
                raise ValueError("case must be 1, 2 or 3")
            a, b = MULTI_CP_CASES[self.model][self.case]
            object.__setattr__(self, "a_vec", self.a_vec if self.a_vec is not None else a)
            object.__setattr__(self, "b_vec", self.b_vec if self.b_vec is not None else b)
        cps = tuple(self.change_points)
        if len(self.a_vec) != len(cps) + 1 or len(self.b_vec) != len(cps) + 1:
            raise ValueError("coefficient vectors need one entry per regime")
        if any(y <= x for x, y in zip(cps, cps[1:])) or (cps and not (0 < cps[0] and cps[-1] < self.n)):
            raise ValueError("change points must be increasing inside (0, n)")
        LatentVarProcess(self.rho, 0.0, self.n)

    def regimes(self) -> np.ndarray:
        """Regime index of each observation t = 1..n (t <= 110 is regime 0)."""
        return np.searchsorted(np.asarray(self.change_points), np.arange(1, self.n + 1), side="left")


def gen_multicp_series(spec: MultiCpSpec) -> ObjectSeries:
    reg = spec.regimes()
    d1 = np.asarray(spec.a_vec, dtype=float)[reg]
    d2 = np.asarray(spec.b_vec, dtype=float)[reg]
    return _series_from_latent(spec.model, spec.n, d1, d2, spec.rho, spec.seed, 0, spec.grid_size)
