import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from snmetric.frechet import ObjectSeries
from snmetric.spaces import SpaceDescriptor, SpaceKind, gaussian_quantiles

settings.register_profile(
    "snmetric", suppress_health_check=[HealthCheck.function_scoped_fixture], deadline=None
)
settings.load_profile("snmetric")

ALL_KINDS = [
    SpaceKind.SCALAR,
    SpaceKind.L2_FUNCTION,
    SpaceKind.WASSERSTEIN_1D,
    SpaceKind.FROBENIUS,
    SpaceKind.GRAPH_LAPLACIAN,
    SpaceKind.LOG_EUCLIDEAN,
]


def descriptor_for(kind: SpaceKind) -> SpaceDescriptor:
    if kind is SpaceKind.SCALAR:
        return SpaceDescriptor.scalar()
    if kind is SpaceKind.L2_FUNCTION:
        return SpaceDescriptor.l2_function(12)
    if kind is SpaceKind.WASSERSTEIN_1D:
        return SpaceDescriptor.wasserstein(16)
    if kind is SpaceKind.FROBENIUS:
        return SpaceDescriptor.frobenius(3)
    if kind is SpaceKind.GRAPH_LAPLACIAN:
        return SpaceDescriptor.graph_laplacian(4)
    return SpaceDescriptor.log_euclidean(3)


def random_payloads(desc: SpaceDescriptor, n: int, rng: np.random.Generator, shift: float = 0.0,
                    scale: float = 1.0) -> np.ndarray:
    """n random valid payloads; ``shift``/``scale`` perturb location and spread."""
    kind = desc.kind
    if kind is SpaceKind.SCALAR:
        return shift + scale * rng.standard_normal(n)
    if kind is SpaceKind.L2_FUNCTION:
        t = desc.grid
        a = rng.standard_normal((n, 3)) * scale
        return shift + a[:, :1] + a[:, 1:2] * np.sin(2 * np.pi * t) + a[:, 2:] * t * t
    if kind is SpaceKind.WASSERSTEIN_1D:
        m = shift + 0.5 * rng.standard_normal(n)
        s = scale * np.exp(0.3 * rng.standard_normal(n))
        return gaussian_quantiles(m, s, desc.grid_size)
    p = desc.matrix_dim
    if kind is SpaceKind.FROBENIUS:
        a = rng.standard_normal((n, p, p)) * scale + shift
        return a + np.swapaxes(a, 1, 2)
    if kind is SpaceKind.GRAPH_LAPLACIAN:
        w = rng.uniform(0.1, 1.0, (n, p, p)) * scale + abs(shift)
        w = 0.5 * (w + np.swapaxes(w, 1, 2))
        idx = np.arange(p)
        w[:, idx, idx] = 0.0
        lap = -w
        lap[:, idx, idx] = w.sum(axis=2)
        return lap
    a = rng.standard_normal((n, p, p)) * 0.5 * scale
    return a @ np.swapaxes(a, 1, 2) + (1.0 + abs(shift)) * np.eye(p)


def random_series(kind: SpaceKind, n: int, seed: int = 0, **kw) -> ObjectSeries:
    desc = descriptor_for(kind)
    return ObjectSeries(desc, random_payloads(desc, n, np.random.default_rng(seed), **kw))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=ALL_KINDS, ids=lambda k: k.value)
def kind(request):
    return request.param


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("SNMETRIC_CACHE_DIR", str(tmp_path / "null-cache"))


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[str, str] = {}


def record_acceptance(cid: str, ok: bool, detail: str) -> None:
    line = f"{cid} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[cid] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        terminalreporter.write_line(ACCEPTANCE[cid])
