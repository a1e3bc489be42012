"""The compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest

from snmetric import _kernels_py, kernels
from snmetric.frechet import ObjectSeries, build_prefix
from snmetric.spaces import SpaceKind

from conftest import random_series

try:
    from snmetric import _kernels
except ImportError:  # pragma: no cover - extension not built
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


def _prefix(kind=SpaceKind.SCALAR, n=120, seed=0):
    return build_prefix(random_series(kind, n, seed=seed))


class TestBackendSelection:
    def test_backend_name(self):
        assert kernels.BACKEND in ("cython", "python")

    def test_forced_fallback(self, monkeypatch):
        import importlib

        monkeypatch.setenv("SNMETRIC_PURE_PYTHON", "1")
        mod = importlib.reload(kernels)
        try:
            assert mod.BACKEND == "python"
            assert mod.cp_curve is _kernels_py.cp_curve
        finally:
            monkeypatch.delenv("SNMETRIC_PURE_PYTHON")
            importlib.reload(kernels)


@needs_ext
class TestEquivalence:
    @pytest.mark.parametrize("sn2", [False, True])
    @pytest.mark.parametrize("kind", [SpaceKind.SCALAR, SpaceKind.WASSERSTEIN_1D, SpaceKind.LOG_EUCLIDEAN],
                             ids=lambda k: k.value)
    def test_cp_curve(self, kind, sn2):
        p = _prefix(kind, 90, seed=5)
        args = (p.gram, p.cum_sq, 7, 83, 11, 65, 3, sn2)
        v1, d1 = _kernels.cp_curve(*args)
        v2, d2 = _kernels_py.cp_curve(*args)
        np.testing.assert_allclose(v1, v2, rtol=1e-10, atol=1e-12)
        np.testing.assert_array_equal(d1, d2)

    def test_interval_maxima(self):
        p = _prefix(n=150, seed=2)
        s = np.array([0, 10, 40, 100])
        e = np.array([150, 60, 120, 130])
        L = e - s
        klo = (L * 0.15).astype(int)
        h = (L * 0.05).astype(int)
        a = _kernels.interval_maxima(p.gram, p.cum_sq, s, e, klo, L - klo, h, True)
        b = _kernels_py.interval_maxima(p.gram, p.cum_sq, s, e, klo, L - klo, h, True)
        np.testing.assert_allclose(a[0], b[0], rtol=1e-10)
        np.testing.assert_array_equal(a[1], b[1])
        np.testing.assert_array_equal(a[2], b[2])

    def test_degenerate_flags(self):
        p = build_prefix(ObjectSeries.scalars(np.ones(40)))
        v1, d1 = _kernels.cp_curve(p.gram, p.cum_sq, 0, 40, 6, 34, 2, True)
        v2, d2 = _kernels_py.cp_curve(p.gram, p.cum_sq, 0, 40, 6, 34, 2, True)
        assert d1.all() and d2.all()
        assert not v1.any() and not v2.any()

    def test_kahan(self):
        x = np.random.default_rng(1).standard_normal((500, 3)) + 1e8
        np.testing.assert_array_equal(_kernels.kahan_cumsum(x), _kernels_py.kahan_cumsum(x))


class TestKahan:
    def test_leading_zero_row(self):
        out = kernels.kahan_cumsum(np.arange(4.0))
        np.testing.assert_array_equal(out, [0, 0, 1, 3, 6])

    def test_compensation_beats_naive(self):
        x = np.full(100_000, 0.1)
        exact = 10_000.0
        k = kernels.kahan_cumsum(x)[-1]
        assert abs(k - exact) <= abs(np.cumsum(x)[-1] - exact)
        assert abs(k - exact) < 1e-9
