"""Simulated pivotal null laws for the two-sample and change-point statistics.

Brownian motion is approximated on a grid of G steps by standardized partial
sums of iid N(0, 1) variables, and the integrals in the limiting functionals by
left-endpoint Riemann sums on the same grid.

* ``Deta``:  B(1)^2 / int_eta^1 (B(r) - r B(1))^2 dr
* ``Seta``:  sup_{r in [eta1, 1-eta1]} (B(r) - r B(1))^2 / V(r), with
  V(r) = int_{eta2}^{r-eta2} (B(u) - u/r B(r))^2 du
       + int_{r+eta2}^{1-eta2} (B(1) - B(u) - (1-u)/(1-r) (B(1) - B(r)))^2 du

Every replication draws from its own child of ``SeedSequence(seed)``, so the
draws do not depend on chunking or worker count.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CacheError, NullMismatchError

FAMILIES = ("Deta", "Seta")
CACHE_VERSION = 1
CACHE_MAGIC = "# snmetric-null"
DEFAULT_GRID = 5000
DEFAULT_REPS = 10_000
DEFAULT_SEED = 0
V_FLOOR = 1e-300
_CHUNK = 250


def _ceil(x: float) -> int:
    return int(math.ceil(x - 1e-9))


def _floor(x: float) -> int:
    return int(math.floor(x + 1e-9))


@dataclass(frozen=True, eq=False)
class NullSampleSet:
    """Sorted draws from a simulated limiting law plus provenance."""

    family: str
    params: tuple[float, ...]
    grid_size: int
    replications: int
    seed: int
    draws: np.ndarray
    redraws: int = 0
    version: int = CACHE_VERSION

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        d = np.sort(np.asarray(self.draws, dtype=float))
        if d.shape != (self.replications,):
            raise ValueError(f"expected {self.replications} draws, got {d.shape}")
        if not np.all(np.isfinite(d)) or (d.size and d[0] < 0):
            raise ValueError("draws must be finite and nonnegative")
        d.setflags(write=False)
        object.__setattr__(self, "draws", d)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    def metadata(self) -> dict:
        return {
            "family": self.family,
            "params": list(self.params),
            "grid_size": self.grid_size,
            "replications": self.replications,
            "seed": self.seed,
            "redraws": self.redraws,
            "version": self.version,
        }

    def matches(self, family: str, params) -> bool:
        params = tuple(float(p) for p in params)
        return (
            self.family == family
            and len(params) == len(self.params)
            and all(abs(a - b) <= 1e-12 for a, b in zip(params, self.params))
        )

    def require(self, family: str, params):
        if not self.matches(family, params):
            raise NullMismatchError(
                f"null set is {self.family}{self.params}, test needs {family}{tuple(params)}"
            )


@dataclass(frozen=True)
class CriticalValueTable:
    family: str
    params: tuple[float, ...]
    pairs: tuple[tuple[float, float], ...] = field(default=())

    def as_dict(self) -> dict:
        return {f"{a:g}": q for a, q in self.pairs}


# --- paths and functionals --------------------------------------------------


def replication_rngs(seed: int, count: int, offset: int = 0) -> list[np.random.Generator]:
    """Independent per-replication generators derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(offset + count)[offset:]
    return [np.random.default_rng(c) for c in children]


def simulate_brownian_path(grid_size: int, rng) -> np.ndarray:
    """B(j/G), j = 0..G, as G^{-1/2} times partial sums of iid N(0,1)."""
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return _paths(rng.standard_normal(grid_size)[None])[0]


def _paths(z: np.ndarray) -> np.ndarray:
    c, g = z.shape
    b = np.zeros((c, g + 1))
    np.cumsum(z, axis=1, out=b[:, 1:])
    b[:, 1:] /= math.sqrt(g)
    return b


def deta_functional(paths: np.ndarray, eta: float) -> np.ndarray:
    """Deta value per path; ``paths`` has shape (c, G+1). Degenerate paths give nan."""
    g = paths.shape[1] - 1
    j0 = _ceil(eta * g)
    r = np.arange(g + 1) / g
    bridge = paths[:, j0:g] - r[j0:g] * paths[:, -1:]
    den = np.einsum("ij,ij->i", bridge, bridge) / g
    with np.errstate(divide="ignore", invalid="ignore"):
        out = paths[:, -1] ** 2 / den
    out[~(den > V_FLOOR)] = np.nan
    return out


def _pcum(x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape[:-1] + (x.shape[-1] + 1,))
    np.cumsum(x, axis=-1, out=out[..., 1:])
    return out


def seta_ratio(paths: np.ndarray, eta1: float, eta2: float) -> tuple[np.ndarray, np.ndarray]:
    """Ratio (B(r) - rB(1))^2 / V(r) on the r-grid; returns ``(j_indices, ratios)``.

    ``ratios`` has shape (c, len(j)); entries with V below the floor are nan.
    """
    c, gp1 = paths.shape
    g = gp1 - 1
    h2 = _ceil(eta2 * g)
    j = np.arange(_ceil(eta1 * g), _floor((1.0 - eta1) * g) + 1)
    if j.size == 0:
        raise ValueError("empty r-grid; eta1 must be below 1/2")
    u = np.arange(gp1) / g
    b = paths
    b1 = b[:, -1:]
    cc = b1 - b
    wu = 1.0 - u
    a1 = _pcum(b * b)
    a2 = _pcum(u * b)
    a3 = _pcum(u * u)
    c1 = _pcum(cc * cc)
    c2 = _pcum(wu * cc)
    c3 = _pcum(wu * wu)

    rj = j / g
    br = b[:, j]
    cr = cc[:, j]
    # left: i in [h2, j - h2)
    lo, hi = h2, np.maximum(j - h2, h2)
    sl = br / rj
    left = (a1[:, hi] - a1[:, [lo]]) - 2.0 * sl * (a2[:, hi] - a2[:, [lo]]) + sl * sl * (a3[hi] - a3[lo])
    # right: i in [j + h2, G - h2)
    lo2 = np.minimum(j + h2, g - h2)
    hi2 = g - h2
    sr = cr / (1.0 - rj)
    right = (c1[:, [hi2]] - c1[:, lo2]) - 2.0 * sr * (c2[:, [hi2]] - c2[:, lo2]) + sr * sr * (c3[hi2] - c3[lo2])
    v = (np.maximum(left, 0.0) + np.maximum(right, 0.0)) / g
    num = (br - rj * b1) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / v
    ratio[~(v > V_FLOOR)] = np.nan
    return j, ratio


def seta_functional(paths: np.ndarray, eta1: float, eta2: float) -> np.ndarray:
    """Seta value per path; any degenerate grid point makes the path nan."""
    _, ratio = seta_ratio(paths, eta1, eta2)
    bad = np.isnan(ratio).any(axis=1)
    out = np.nanmax(np.where(np.isnan(ratio), -np.inf, ratio), axis=1)
    out[bad] = np.nan
    return out


def _simulate(functional, family, params, grid_size, replications, seed) -> NullSampleSet:
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    if replications < 1:
        raise ValueError("replications must be positive")
    rngs = replication_rngs(seed, replications)
    draws = np.empty(replications)
    redraws = 0
    for i0 in range(0, replications, _CHUNK):
        chunk = rngs[i0 : i0 + _CHUNK]
        z = np.stack([r.standard_normal(grid_size) for r in chunk])
        vals = functional(_paths(z))
        for i in np.flatnonzero(~np.isfinite(vals)):
            # probability-zero event on the continuum; redraw from the same stream
            while not np.isfinite(vals[i]):
                redraws += 1
                vals[i] = functional(_paths(chunk[i].standard_normal(grid_size)[None]))[0]
        draws[i0 : i0 + len(chunk)] = vals
    return NullSampleSet(family, params, grid_size, replications, seed, draws, redraws)


def draw_deta(eta: float, grid_size: int = DEFAULT_GRID, replications: int = DEFAULT_REPS,
              seed: int = DEFAULT_SEED) -> NullSampleSet:
    """Simulate the two-sample null law for trimming ``eta``."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    return _simulate(lambda p: deta_functional(p, eta), "Deta", (eta,), grid_size, replications, seed)


def draw_seta(eta1: float, eta2: float, grid_size: int = DEFAULT_GRID,
              replications: int = DEFAULT_REPS, seed: int = DEFAULT_SEED) -> NullSampleSet:
    """Simulate the change-point null law for trimming ``(eta1, eta2)``."""
    if not 0.0 < eta1 < 0.5:
        raise ValueError("eta1 must lie in (0, 1/2)")
    if not 0.0 < eta2 < 0.5:
        raise ValueError("eta2 must lie in (0, 1/2)")
    return _simulate(
        lambda p: seta_functional(p, eta1, eta2), "Seta", (eta1, eta2), grid_size, replications, seed
    )


def draw(family: str, params, grid_size=DEFAULT_GRID, replications=DEFAULT_REPS, seed=DEFAULT_SEED):
    params = tuple(params)
    if family == "Deta":
        return draw_deta(*params, grid_size=grid_size, replications=replications, seed=seed)
    if family == "Seta":
        return draw_seta(*params, grid_size=grid_size, replications=replications, seed=seed)
    raise ValueError(f"unknown family {family!r}")


# --- quantiles and p-values -------------------------------------------------


def quantile(null: NullSampleSet, level: float) -> float:
    """Order-statistic quantile: the ceil(level * R)-th smallest draw."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    return float(np.quantile(null.draws, level, method="inverted_cdf"))


def pvalue(null: NullSampleSet, x: float) -> float:
    """Right-tail p-value (#{draws >= x} + 1) / (R + 1)."""
    ge = null.replications - int(np.searchsorted(null.draws, x, side="left"))
    return (ge + 1) / (null.replications + 1)


def critical_value_table(null: NullSampleSet, alphas=(0.10, 0.05, 0.01, 0.005)) -> CriticalValueTable:
    pairs = tuple((float(a), quantile(null, 1.0 - a)) for a in alphas)
    return CriticalValueTable(null.family, null.params, pairs)


# --- disk cache -------------------------------------------------------------


def cache_filename(family: str, params, grid_size: int, replications: int, seed: int) -> str:
    ps = "_".join(f"{float(p):g}" for p in params)
    return f"{family}_{ps}_G{grid_size}_R{replications}_s{seed}.txt"


def default_cache_dir() -> Path:
    env = os.environ.get("SNMETRIC_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "snmetric"


def cache_store(null: NullSampleSet, path) -> Path:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    if path.is_dir():
        path = path / cache_filename(null.family, null.params, null.grid_size, null.replications, null.seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = dict(null.metadata(), count=int(null.draws.size))
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".txt")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(f"{CACHE_MAGIC} v{CACHE_VERSION}\n")
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            fh.writelines(f"{float(x)!r}\n" for x in null.draws)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _read_cache(path: Path) -> NullSampleSet:
    try:
        with open(path) as fh:
            magic = fh.readline().strip()
            if not magic.startswith(CACHE_MAGIC):
                raise CacheError(f"{path}: not a null-sample cache file")
            header = json.loads(fh.readline())
            draws = np.array([float(line) for line in fh if line.strip()])
    except (ValueError, json.JSONDecodeError) as exc:
        raise CacheError(f"{path}: corrupt cache ({exc})") from exc
    if header.get("version") != CACHE_VERSION:
        raise CacheError(f"{path}: unsupported cache version {header.get('version')}")
    if draws.size != header.get("count") or draws.size != header.get("replications"):
        raise CacheError(f"{path}: expected {header.get('count')} draws, found {draws.size}")
    try:
        return NullSampleSet(
            header["family"],
            tuple(header["params"]),
            int(header["grid_size"]),
            int(header["replications"]),
            int(header["seed"]),
            draws,
            int(header.get("redraws", 0)),
        )
    except (KeyError, ValueError) as exc:
        raise CacheError(f"{path}: invalid cache contents ({exc})") from exc


def cache_load(family: str, params, grid_size: int, replications: int, seed: int, path) -> NullSampleSet:
    """Load a cache file (or the matching file inside a directory) and verify its metadata."""
    path = Path(path)
    if path.is_dir():
        path = path / cache_filename(family, params, grid_size, replications, seed)
    if not path.exists():
        raise FileNotFoundError(path)
    null = _read_cache(path)
    if not (null.matches(family, params) and null.grid_size == grid_size
            and null.replications == replications and null.seed == seed):
        raise CacheError(
            f"{path}: metadata mismatch; file has {null.metadata()}, requested "
            f"{family}{tuple(params)} G={grid_size} R={replications} seed={seed}"
        )
    return null


def load_or_simulate(family: str, params, grid_size=DEFAULT_GRID, replications=DEFAULT_REPS,
                     seed=DEFAULT_SEED, cache_dir=None) -> NullSampleSet:
    """Return a cached null set, simulating and storing it on a miss."""
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    path = cache_dir / cache_filename(family, params, grid_size, replications, seed)
    try:
        return cache_load(family, params, grid_size, replications, seed, path)
    except FileNotFoundError:
        pass
    null = draw(family, params, grid_size, replications, seed)
    cache_dir.mkdir(parents=True, exist_ok=True)
    cache_store(null, path)
    return null
