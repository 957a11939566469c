import numpy as np
import pytest
from pydantic import ValidationError

from graphlearn.distance import (
    DistanceReport,
    absolute_correlation,
    bhattacharyya_distance,
    compare_traces,
    delta_metric,
    global_scale,
    hellinger_distance,
    log_odds_divergence,
    model_uncertainty,
    network_distance,
    network_hellinger,
    scaled_values,
)
from graphlearn.errors import DimensionMismatch, EmptyTrace, LengthMismatch, ScaleRangeError, ZeroUncertainty
from graphlearn.settings import DistanceConfig


def _block_correlation(blocks, p, within):
    corr = np.eye(p)
    for block in blocks:
        for i in block:
            for j in block:
                if i != j:
                    corr[i, j] = within
    return corr


class TestScale:
    def test_global_scale(self):
        assert global_scale(np.array([1.0, 3.0]), np.array([5.0, 2.0])) == 5.0

    def test_empty(self):
        with pytest.raises(EmptyTrace):
            global_scale(np.array([]), np.array([1.0]))

    def test_shift_puts_maximum_at_one(self):
        values = scaled_values(np.array([-3.0, -1.0]), -1.0)
        np.testing.assert_allclose(values, [np.exp(-2.0), 1.0])

    def test_divide_overshoots_at_the_maximum(self):
        # exp(s / s) = e at the argmax of ln u, whatever the sign of s
        for log_u in (np.array([1.0, 2.0, 5.0]), np.array([-10.0, -20.0])):
            s = log_u.max()
            with pytest.raises(ScaleRangeError):
                scaled_values(log_u, s, "divide")
            values = scaled_values(log_u, s, "verbatim")
            assert values[np.argmax(log_u)] == pytest.approx(np.e)

    def test_divide_peaks_at_smallest_log_u_when_negative(self):
        log_u = np.array([-10.0, -20.0, -15.0])
        s = log_u.max()
        values = scaled_values(log_u, s, "verbatim")
        assert values.max() == pytest.approx(np.exp(log_u.min() / s))
        assert values.max() == pytest.approx(np.e ** 2)
        assert np.all(values >= np.e * (1.0 - 1e-12))


class TestTraceDistances:
    def test_identical_traces(self, rng):
        t = rng.normal(-40.0, 2.0, size=101)
        assert hellinger_distance(t, t) == 0.0
        assert bhattacharyya_distance(t, t, s=t.max()) == pytest.approx(-np.log(np.mean(np.exp(t[1:] - t.max()))))

    def test_hellinger_constant_traces(self):
        t1 = np.zeros(11)
        t2 = np.full(11, np.log(0.25))
        assert hellinger_distance(t1, t2) == pytest.approx(0.5, abs=1e-14)

    def test_bhattacharyya_constant_traces(self):
        t1 = np.zeros(11)
        t2 = np.full(11, -2.0)
        assert bhattacharyya_distance(t1, t2) == pytest.approx(1.0, abs=1e-14)

    def test_burnin_drops_leading_iterations(self):
        t1 = np.array([0.0, -5.0, 0.0, 0.0])
        t2 = np.array([0.0, 0.0, 0.0, 0.0])
        assert hellinger_distance(t1, t2, n_burnin=1) == 0.0
        assert hellinger_distance(t1, t2, n_burnin=0) > 0.0

    def test_length_mismatch(self, rng):
        a, b = rng.normal(size=21), rng.normal(size=31)
        with pytest.raises(LengthMismatch):
            hellinger_distance(a, b)
        assert hellinger_distance(a, b, truncate_min=True) >= 0.0

    def test_per_trace_burnin(self, rng):
        a, b = rng.normal(size=21), rng.normal(size=31)
        assert hellinger_distance(a, b, n_burnin=0, n_burnin2=10) == pytest.approx(
            hellinger_distance(a, b[10:], n_burnin=0, s=max(a.max(), b.max()))
        )

    def test_log_odds(self):
        t1 = np.zeros(101)
        t2 = np.full(101, -2.0)
        assert log_odds_divergence(t1, t1) == (0.0, 0.0)
        total, mean = log_odds_divergence(t1, t2)
        assert total == pytest.approx(200.0)
        assert mean == pytest.approx(2.0)


class TestUncertaintyAndDelta:
    def test_constant_trace(self):
        assert model_uncertainty(np.full(10, -3.0), s=-3.0) == 0.0

    def test_includes_burnin(self):
        t = np.array([-1.0, 0.0, 0.0])
        assert model_uncertainty(t, s=0.0) == pytest.approx(1.0 - np.exp(-1.0))

    def test_duplicate_entries_do_not_matter(self):
        t = np.array([-2.0, -1.0, 0.0])
        assert model_uncertainty(np.append(t, -1.0), 0.0) == model_uncertainty(t, 0.0)

    def test_delta(self):
        assert delta_metric(0.3, 0.2, 0.2) == 0.0
        assert delta_metric(0.1153, 0.0694, 0.05521) == pytest.approx(0.427, abs=1e-3)
        assert delta_metric(0.1, 0.2, 0.5) == delta_metric(0.1, 0.5, 0.2)

    def test_zero_uncertainty(self):
        with pytest.raises(ZeroUncertainty):
            delta_metric(0.1, 0.0, 0.5)

    def test_absolute_correlation(self):
        assert absolute_correlation(0.0) == 1.0
        assert absolute_correlation(np.log(2.0)) == pytest.approx(0.5)
        assert absolute_correlation(0.427) == pytest.approx(0.6525, abs=1e-3)

    def test_delta_behaves_like_a_distance(self, rng):
        for _ in range(100):
            a = rng.normal(-50.0, 2.0, size=101)
            b = rng.normal(-50.0, 3.0, size=101)
            assert compare_traces(a, a).delta == 0.0
            ab, ba = compare_traces(a, b), compare_traces(b, a)
            assert ab.delta >= 0.0
            assert ab.delta == pytest.approx(ba.delta, rel=1e-15)


class TestReport:
    def test_self_comparison(self, rng):
        t = rng.normal(-20.0, 1.0, size=51)
        report = compare_traces(t, t, DistanceConfig(n_burnin=10))
        assert report.delta == 0.0
        assert report.abs_corr == 1.0
        assert report.n_post == 40
        assert report.scale == t.max()
        assert "delta" in report.summary()

    def test_divide_mode_rejected(self, rng):
        t = rng.normal(-20.0, 1.0, size=51)
        with pytest.raises(ScaleRangeError):
            compare_traces(t, t, DistanceConfig(scale_mode="divide"))

    def test_inconsistent_report(self):
        with pytest.raises(ValidationError):
            DistanceReport(
                scale=0.0, scale_mode="shift", n_post=10, d_hellinger=0.1, d_bhattacharyya=0.1,
                d_max=(0.2, 0.5), delta=0.5, abs_corr=np.exp(-0.5), log_odds_total=0.0, log_odds_mean=0.0,
            )


class TestNetworkHellinger:
    def test_identical(self):
        m = np.array([[0.0, 0.3], [0.3, 0.0]])
        assert network_hellinger(m, m) == 0.0

    def test_single_pair(self):
        a = np.array([[0.0, 0.81], [0.81, 0.0]])
        b = np.array([[0.0, 0.36], [0.36, 0.0]])
        assert network_hellinger(a, b) == pytest.approx(0.3, abs=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            network_hellinger(np.zeros((2, 2)), np.zeros((3, 3)))

    def test_rearranged_blocks_are_farther_than_perturbed_copy(self):
        a = _block_correlation([(0, 1, 2), (3, 4, 5)], 6, 0.8)
        b = _block_correlation([(0, 2, 4), (1, 3, 5)], 6, 0.8)
        a_close = _block_correlation([(0, 1, 2), (3, 4, 5)], 6, 0.78)
        near = network_distance(a, a_close)
        assert 0.0 < near < network_distance(a, b)
