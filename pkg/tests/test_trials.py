"""Segmentation, strike metrics, and best-k aggregation tests."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from flexhammer import (HammerParams, StrikeMetrics, StrikeProfile,
                        UnextractableStrike, metrics_from_csv, metrics_to_csv,
                        resonance_frequency, rigid_hammer, segment_strikes,
                        simulate_hammer, strike_metrics, strike_profile,
                        summarize_condition)

DT = 1e-3
NOMINAL = HammerParams(m=0.0025875, b=0.003, k=2.23)


def one_strike(freq=4.8, amplitude=2.0, onset=0.5, duration=2.0):
    return strike_profile(StrikeProfile(amplitude, freq, onset), DT, duration)


class TestSegmentStrikes:
    def test_single_strike_single_segment(self):
        v = one_strike(freq=4.0, onset=0.5)
        segments = segment_strikes(v)
        assert len(segments) == 1
        start, stop = segments[0]
        lo, hi = int(0.5 / DT), int((0.5 + 1 / 4.0) / DT)
        assert lo <= start < stop <= hi + 1
        assert (stop - start) >= 0.95 * (hi - lo)

    def test_five_jittered_strikes_with_gaps(self):
        rng = np.random.default_rng(11)
        parts = []
        for _ in range(5):
            f = 4.8 * np.exp(rng.normal(0, 0.08))
            parts.append(one_strike(freq=f, onset=0.0, duration=1.0 / f + DT))
            parts.append(np.zeros(int(1.0 / DT)))
        v = np.concatenate(parts)
        assert len(segment_strikes(v)) == 5

    def test_all_zero_gives_empty_list(self):
        assert segment_strikes(np.zeros(1000)) == []

    def test_orders_and_does_not_overlap(self):
        v = np.concatenate([one_strike(onset=0.2, duration=1.0),
                            one_strike(onset=0.3, duration=1.2)])
        segments = segment_strikes(v)
        for (a0, a1), (b0, b1) in zip(segments, segments[1:]):
            assert a1 <= b0

    def test_rejects_max_before_min_blob(self):
        # forward swing first: not a valid backward-then-forward strike
        v = -one_strike(freq=4.0, onset=0.1, duration=0.5)
        assert segment_strikes(v) == []


class TestStrikeMetrics:
    def test_rigid_gain_is_one(self):
        v = one_strike()
        trace = simulate_hammer(rigid_hammer(), v)
        (start, stop), = segment_strikes(trace["v_in"])
        m = strike_metrics(trace["v_in"][start:stop],
                           trace["v_out"][start:], DT)
        assert abs(m.gain - 1.0) <= 1e-9

    @pytest.mark.parametrize("freq", [4.0, 4.8])
    def test_frequency_round_trip(self, freq):
        v = one_strike(freq=freq)
        trace = simulate_hammer(NOMINAL, v)
        (start, stop), = segment_strikes(trace["v_in"])
        m = strike_metrics(trace["v_in"][start:stop],
                           trace["v_out"][start:], DT)
        # min/max of the sampled sinusoid land within one sample each
        df = 2.0 * freq**2 * DT
        assert abs(m.freq_hz - freq) <= df

    def test_resonant_gain_exceeds_two(self):
        fres = resonance_frequency(NOMINAL, "approx")
        v = one_strike(freq=fres)
        trace = simulate_hammer(NOMINAL, v)
        (start, stop), = segment_strikes(trace["v_in"])
        m = strike_metrics(trace["v_in"][start:stop],
                           trace["v_out"][start:], DT)
        assert m.gain > 2.0
        assert m.vhat > 2.0 * m.vhat_in

    def test_gain_scale_invariance(self):
        v = one_strike()
        trace = simulate_hammer(NOMINAL, v)
        (start, stop), = segment_strikes(trace["v_in"])
        m1 = strike_metrics(trace["v_in"][start:stop],
                            trace["v_out"][start:], DT)
        m2 = strike_metrics(7.0 * trace["v_in"][start:stop],
                            7.0 * trace["v_out"][start:], DT)
        assert_allclose(m2.gain, m1.gain, rtol=1e-12)
        assert_allclose(m2.freq_hz, m1.freq_hz, rtol=1e-12)

    def test_reversed_swing_is_unextractable(self):
        v = one_strike(freq=4.0, onset=0.0, duration=0.26)
        with pytest.raises(UnextractableStrike, match="half-period"):
            strike_metrics(-v, -v, DT)

    def test_short_segment_is_unextractable(self):
        with pytest.raises(UnextractableStrike):
            strike_metrics(np.array([0.0, 1.0]), np.array([0.0, 1.0]), DT)


class TestSummarizeCondition:
    def make(self, gains):
        return [StrikeMetrics(vhat_in=1.0, vhat=g, gain=g, freq_hz=4.8)
                for g in gains]

    def test_identical_metrics(self):
        s = summarize_condition(self.make([2.0] * 20), k=10)
        assert s.median_gain == 2.0
        assert s.median_vhat == 2.0
        assert s.median_freq_hz == 4.8
        assert s.n_used == 10
        assert not s.shortfall

    def test_best_ten_of_twenty(self):
        s = summarize_condition(self.make(range(1, 21)), k=10)
        assert s.median_gain == 15.5          # median of {11..20}
        assert s.n_used == 10

    def test_shortfall_flagged(self):
        s = summarize_condition(self.make([1, 2, 3, 4, 5, 6, 7]), k=10)
        assert s.n_used == 7
        assert s.shortfall

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="no valid trials"):
            summarize_condition([], k=10)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        gains = list(rng.uniform(0.5, 4.0, 25))
        a = summarize_condition(self.make(gains), k=10)
        rng.shuffle(gains)
        b = summarize_condition(self.make(gains), k=10)
        assert a.median_gain == b.median_gain
        assert a.median_vhat == b.median_vhat

    def test_tie_break_is_deterministic(self):
        metrics = self.make([3.0, 3.0, 3.0])
        s = summarize_condition(metrics, k=2)
        assert s.n_used == 2

    def test_discard_count_recorded(self):
        s = summarize_condition(self.make([1.0]), k=10, n_discarded=3)
        assert s.n_discarded == 3


class TestMetricsCsv:
    def test_round_trip(self, tmp_path):
        metrics = [StrikeMetrics(1.0, 2.5, 2.5, 4.7),
                   StrikeMetrics(1.2, 3.0, 2.5, 4.9)]
        path = tmp_path / "metrics.csv"
        metrics_to_csv(metrics, path)
        assert path.read_text().splitlines()[0] == \
            "trial_id,vhat_in,vhat,gain,freq_hz"
        back = metrics_from_csv(path)
        assert back == metrics
