"""Statistical invariants and seeded Monte Carlo calibration checks.

The Monte Carlo classes carry the ``slow`` marker; each runs in a few seconds.
"""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from snmetric.changepoint import WbsConfig, contrast_curve, run_cp_test, wbs_detect, wbs_threshold
from snmetric.dgp import CpSpec, DgpSpec, MultiCpSpec, gen_multicp_series, gen_two_samples
from snmetric.errors import DegenerateNormalizer
from snmetric.experiments import ChangePointDesign, TwoSampleDesign, size_power_experiment
from snmetric.frechet import ObjectSeries
from snmetric.null import (
    _paths,
    deta_functional,
    draw_deta,
    pvalue,
    quantile,
    replication_rngs,
    seta_functional,
    seta_ratio,
    simulate_brownian_path,
)
from snmetric.spaces import SpaceKind
from snmetric.two_sample import (
    d1_statistic,
    d2_statistic,
    pairwise_pvalue_matrix,
    profiles,
    run_two_sample_test,
)

from conftest import descriptor_for, random_payloads, random_series

# kinds whose payload space is closed under positive scaling and adding a constant
AFFINE_KINDS = [SpaceKind.SCALAR, SpaceKind.L2_FUNCTION, SpaceKind.WASSERSTEIN_1D, SpaceKind.FROBENIUS]


@pytest.fixture(scope="module")
def deta_default():
    return draw_deta(0.15, seed=0)


def _pair(kind, n, seed):
    desc = descriptor_for(kind)
    rng = np.random.default_rng(seed)
    return desc, random_payloads(desc, n, rng), random_payloads(desc, n, rng, shift=0.3, scale=1.4)


class TestTwoSampleInvariants:
    def test_hand_rolled_shift(self):
        # equal spreads: T vanishes and TC = r * 2 * 5^2, so both normalizers are zero
        x = np.arange(1.0, 21.0)
        p = profiles(ObjectSeries.scalars(x), ObjectSeries.scalars(x + 5), 0.15)
        r = p.k / 40
        np.testing.assert_allclose(p.T, 0.0, atol=1e-12)
        np.testing.assert_allclose(p.TC, 50.0 * r, rtol=1e-12)
        with pytest.raises(DegenerateNormalizer):
            d1_statistic(p)
        with pytest.raises(DegenerateNormalizer):
            d2_statistic(p)

    def test_hand_rolled_scale(self):
        x = np.arange(1.0, 21.0)
        y = 2 * x + 5
        p = profiles(ObjectSeries.scalars(x), ObjectSeries.scalars(y), 0.15)
        T, C = [], []
        for k in p.k:
            m = k // 2
            a, b = x[:m], y[:m]
            T.append(k / 40 * (a.var() - b.var()))
            C.append(k / 40 * 2 * (a.mean() - b.mean()) ** 2)
        T, C, r = np.array(T), np.array(C), p.k / 40
        d1 = 40 * T[-1] ** 2 / np.sum((T - r * T[-1]) ** 2)
        d2 = 40 * (T[-1] ** 2 + C[-1] ** 2) / (np.sum((T - r * T[-1]) ** 2) + np.sum((C - r * C[-1]) ** 2))
        assert d1_statistic(p) == pytest.approx(d1, rel=1e-10)
        assert d2_statistic(p) == pytest.approx(d2, rel=1e-10)

    @settings(max_examples=25)
    @given(st.sampled_from(AFFINE_KINDS), st.floats(0.05, 20.0), st.integers(0, 10_000))
    def test_scale_invariance(self, kind, c, seed):
        desc, a, b = _pair(kind, 24, seed)
        p = profiles(ObjectSeries(desc, a), ObjectSeries(desc, b), 0.15)
        q = profiles(ObjectSeries(desc, c * a), ObjectSeries(desc, c * b), 0.15)
        assert d1_statistic(q) == pytest.approx(d1_statistic(p), rel=1e-8)
        assert d2_statistic(q) == pytest.approx(d2_statistic(p), rel=1e-8)

    @settings(max_examples=25)
    @given(st.sampled_from(AFFINE_KINDS), st.floats(-50.0, 50.0), st.integers(0, 10_000))
    def test_translation_invariance(self, kind, shift, seed):
        desc, a, b = _pair(kind, 24, seed)
        p = profiles(ObjectSeries(desc, a), ObjectSeries(desc, b), 0.15)
        q = profiles(ObjectSeries(desc, a + shift), ObjectSeries(desc, b + shift), 0.15)
        assert d1_statistic(q) == pytest.approx(d1_statistic(p), rel=1e-8)
        assert d2_statistic(q) == pytest.approx(d2_statistic(p), rel=1e-8)

    def test_d2_equals_d1_when_tc_vanishes(self):
        # windows start at 3 observations; the samples differ only inside the first
        # three with equal sums, so every window mean agrees while spreads differ
        rest = np.random.default_rng(1).standard_normal(17)
        x = np.concatenate([[0.0, 0.0, 0.0], rest])
        y = np.concatenate([[-1.0, 0.0, 1.0], rest])
        p = profiles(ObjectSeries.scalars(x), ObjectSeries.scalars(y), 0.15)
        assert not p.TC.any()
        assert d2_statistic(p) == d1_statistic(p)

    @pytest.mark.parametrize("kind", [SpaceKind.WASSERSTEIN_1D, SpaceKind.LOG_EUCLIDEAN], ids=lambda k: k.value)
    def test_d2_numerator_dominates(self, kind):
        p = profiles(random_series(kind, 30, seed=1), random_series(kind, 30, seed=2, scale=1.3), 0.15)
        assert p.T[-1] ** 2 + p.TC[-1] ** 2 >= p.T[-1] ** 2

    def test_pvalue_band_when_below_all_draws(self, deta_default):
        x = ObjectSeries.scalars(np.random.default_rng(0).standard_normal(200))
        rep = run_two_sample_test(x[:100], x[100:], 0.15, 0.05, "D1", deta_default)
        if rep.statistic < deta_default.draws[0]:
            assert rep.p_value >= 1 - 1 / deta_default.replications and not rep.reject
        assert pvalue(deta_default, -1.0) == 1.0

    def test_pairwise_matches_individual_runs(self, deta_default):
        xs = [random_series(SpaceKind.WASSERSTEIN_1D, 50, seed=s, shift=0.2 * s) for s in range(3)]
        res = pairwise_pvalue_matrix(xs, 0.15, "D2", deta_default)
        for i in range(3):
            for j in range(3):
                if i != j:
                    rep = run_two_sample_test(xs[i], xs[j], 0.15, 0.05, "D2", deta_default)
                    assert res.pvalues[i, j] == rep.p_value


class TestChangePointInvariants:
    @settings(max_examples=20)
    @given(st.floats(0.05, 20.0), st.integers(0, 10_000))
    def test_curve_scale_invariance(self, c, seed):
        desc = descriptor_for(SpaceKind.L2_FUNCTION)
        a = random_payloads(desc, 40, np.random.default_rng(seed))
        a[20:] *= 1.5
        c1 = contrast_curve(ObjectSeries(desc, a), 0.15, 0.05, "SN2")
        c2 = contrast_curve(ObjectSeries(desc, c * a), 0.15, 0.05, "SN2")
        np.testing.assert_allclose(c2.values, c1.values, rtol=1e-8)
        assert c1.argmax() == c2.argmax()


class TestNullInvariants:
    def test_endpoint_moments(self):
        rngs = replication_rngs(5, 10_000)
        b1 = np.array([simulate_brownian_path(100, r)[-1] for r in rngs])
        se = 1 / np.sqrt(10_000)
        assert abs(b1.mean()) < 3 * se
        assert abs(b1.var() - 1.0) < 3 * np.sqrt(2) * se

    def test_reproducible_path(self):
        np.testing.assert_array_equal(simulate_brownian_path(300, 4), simulate_brownian_path(300, 4))

    def test_quantiles_increase_as_alpha_falls(self, deta_default):
        qs = [quantile(deta_default, 1 - a) for a in (0.10, 0.05, 0.01, 0.005)]
        assert qs == sorted(qs)

    def test_singleton_grid_is_pointwise_ratio(self):
        paths = _paths(np.random.default_rng(2).standard_normal((4, 100)))
        j, ratio = seta_ratio(paths, 0.495, 0.05)
        assert j.tolist() == [50]
        np.testing.assert_array_equal(seta_functional(paths, 0.495, 0.05), ratio[:, 0])

    @settings(max_examples=20)
    @given(st.integers(0, 10_000))
    def test_seta_dominates_interior_ratio(self, seed):
        paths = _paths(np.random.default_rng(seed).standard_normal((2, 200)))
        _, ratio = seta_ratio(paths, 0.15, 0.05)
        assert np.all(seta_functional(paths, 0.15, 0.05)[:, None] >= ratio)

    def test_sign_flip_symmetry(self):
        z = np.random.default_rng(3).standard_normal((5000, 500))
        a = deta_functional(_paths(z), 0.15)
        b = deta_functional(_paths(-z), 0.15)
        assert ks_2samp(a, b).statistic < 0.05

    @pytest.mark.slow
    @pytest.mark.parametrize("family,reps", [("Deta", 10_000), ("Seta", 4_000)])
    def test_grid_refinement(self, family, reps):
        # coupled paths: the G = 2500 path is the G = 5000 path read at every other node
        fn = (lambda p: deta_functional(p, 0.15)) if family == "Deta" else (lambda p: seta_functional(p, 0.15, 0.05))
        rngs = replication_rngs(0, reps)
        fine, coarse = [], []
        for i0 in range(0, reps, 500):
            paths = _paths(np.stack([r.standard_normal(5000) for r in rngs[i0 : i0 + 500]]))
            fine.append(fn(paths))
            coarse.append(fn(paths[:, ::2]))
        qf = np.quantile(np.concatenate(fine), 0.95, method="inverted_cdf")
        qc = np.quantile(np.concatenate(coarse), 0.95, method="inverted_cdf")
        assert abs(qf - qc) / qf < 0.02

    @pytest.mark.slow
    def test_seed_independence(self):
        # share of seed-12 draws above the seed-11 95% quantile; both quantile and
        # share fluctuate, so the binomial variance is doubled
        a = draw_deta(0.15, replications=10_000, seed=11)
        b = draw_deta(0.15, replications=10_000, seed=12)
        share = np.mean(b.draws > quantile(a, 0.95))
        assert abs(share - 0.05) < 4 * np.sqrt(2 * 0.05 * 0.95 / 10_000)


class TestDgpInvariants:
    def test_covariance_eigenvalues_above_spd_floor(self):
        # 2I + Z can approach singularity when arctan terms cancel the offset, so the
        # usable guarantee is strict positive definiteness above the log-Euclidean floor
        x1, x2 = gen_two_samples(DgpSpec("covariance", 10_000, delta1=0.3, delta2=1.0, seed=0))
        lam = np.linalg.eigvalsh(np.concatenate([x1.values, x2.values]))[:, 0]
        assert lam.min() > x1.descriptor.spd_floor

    def test_graph_weight_band(self):
        x1, x2 = gen_two_samples(DgpSpec("graph", 500, delta1=0.3, delta2=0.7, rho=0.5, seed=0))
        for s in (x1, x2):
            off = -s.values[:, ~np.eye(10, dtype=bool)]
            assert off.min() >= 0.2 - np.pi / 2 and off.max() <= 0.4 + np.pi / 2


def _naive_variance_z(s1, s2):
    """Variance-difference z statistic with iid standard errors (ignores serial dependence)."""
    parts = []
    for s in (s1, s2):
        e = s.values.reshape(len(s), -1)
        d2 = np.mean((e - e.mean(axis=0)) ** 2, axis=1)
        parts.append((d2.mean(), d2.var(ddof=1) / len(d2)))
    return (parts[0][0] - parts[1][0]) / np.sqrt(parts[0][1] + parts[1][1])


@pytest.mark.slow
class TestMonteCarloCalibration:
    def test_two_sample_null_scalar(self, deta_default):
        crit = quantile(deta_default, 0.95)
        r1 = r2 = 0
        for i in range(2000):
            g = np.random.default_rng([8, i])
            p = profiles(ObjectSeries.scalars(g.standard_normal(100)), ObjectSeries.scalars(g.standard_normal(100)), 0.15)
            r1 += d1_statistic(p) > crit
            r2 += d2_statistic(p) > crit
        assert 0.03 <= r1 / 2000 <= 0.07
        assert 0.03 <= r2 / 2000 <= 0.07

    def test_two_sample_power(self, deta_default):
        rej = 0
        for i in range(100):
            s1, s2 = gen_two_samples(DgpSpec("gaussian", 400, delta1=0.3, delta2=0.7, seed=(21, i)))
            rej += run_two_sample_test(s1, s2, 0.15, 0.05, "D2", deta_default).reject
        assert rej >= 95

    @pytest.mark.parametrize("dgp", ["gaussian", "graph", "covariance"])
    def test_dgp_null_size(self, deta_default, dgp):
        res = size_power_experiment(TwoSampleDesign(DgpSpec(dgp, 100)), 500, 0.05, 0, deta_default)
        for v in ("D1", "D2"):
            assert 0.02 <= res[v].rejection_rate <= 0.09, (v, res[v].rejection_rate)

    @pytest.mark.parametrize("dgp", ["gaussian", "graph", "covariance"])
    def test_robust_to_strong_dependence(self, deta_default, dgp):
        res = size_power_experiment(TwoSampleDesign(DgpSpec(dgp, 100, rho=0.7)), 500, 0.05, 0, deta_default)
        for v in ("D1", "D2"):
            assert 0.02 <= res[v].rejection_rate <= 0.12, (v, res[v].rejection_rate)

    def test_naive_baseline_oversized(self):
        spec = DgpSpec("gaussian", 100, rho=0.7)
        rej = 0
        for i in range(500):
            s1, s2 = gen_two_samples(replace(spec, seed=(0, i)))
            rej += abs(_naive_variance_z(s1, s2)) > 1.959963984540054
        assert rej / 500 > 0.15

    def test_power_exceeds_size(self, deta_default):
        null = size_power_experiment(TwoSampleDesign(DgpSpec("gaussian", 100)), 200, 0.05, 0, deta_default)
        alt = size_power_experiment(TwoSampleDesign(DgpSpec("gaussian", 100, delta1=0.3)), 200, 0.05, 0,
                                    deta_default)
        assert alt["D2"].rejection_rate > null["D2"].rejection_rate

    def test_change_point_null_scalar(self):
        from snmetric.null import draw_seta

        seta = draw_seta(0.15, 0.05, seed=0)
        rej = 0
        for i in range(2000):
            x = ObjectSeries.scalars(np.random.default_rng([7, i]).standard_normal(200))
            rej += run_cp_test(x, 0.15, 0.05, 0.05, "SN1", seta).reject
        assert 0.035 <= rej / 2000 <= 0.065

    def test_sn2_beats_sn1_under_mean_shift(self):
        from snmetric.null import draw_seta

        seta = draw_seta(0.15, 0.05, seed=0)
        res = size_power_experiment(ChangePointDesign(CpSpec("gaussian", 400, delta1=0.3)), 100, 0.05, 0, seta)
        assert res["SN1"].rejection_rate <= 0.10
        assert res["SN2"].rejection_rate > res["SN1"].rejection_rate

    def test_location_concentration(self):
        from snmetric.experiments import location_experiment

        tau = location_experiment(CpSpec("gaussian", 800, delta1=0.3, delta2=0.7), 100, 0)
        assert np.nanmedian(np.abs(tau - 0.5)) <= 0.05

    def test_wbs_no_change_calibration(self):
        cfg = WbsConfig(M=50, J=200, seed=0)
        xi, iv = wbs_threshold(300, cfg)
        zero = sum(
            len(wbs_detect(ObjectSeries.scalars(np.random.default_rng([9, i]).standard_normal(300)), cfg, xi, iv)) == 0
            for i in range(100)
        )
        assert zero >= 88

    def test_wbs_stationary_design(self):
        cfg = WbsConfig(M=100, J=200, seed=0)
        xi, iv = wbs_threshold(500, cfg)
        spec = MultiCpSpec("gaussian", a_vec=(0.0,) * 4, b_vec=(1.0,) * 4, rho=0.3)
        zero = sum(len(wbs_detect(gen_multicp_series(replace(spec, seed=(0, i))), cfg, xi, iv)) == 0
                   for i in range(40))
        assert zero >= 34

    def test_wbs_variance_shift(self):
        cfg = WbsConfig(seed=0)
        xi, iv = wbs_threshold(300, cfg)
        good = 0
        for i in range(30):
            x = np.random.default_rng([10, i]).standard_normal(300)
            x[150:] *= 6.0
            seg = wbs_detect(ObjectSeries.scalars(x), cfg, xi, iv)
            good += len(seg) == 1 and abs(seg.points[0] - 150) <= 10
        assert good >= 27
