"""Ledger accounting and the tail-distribution helper."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pimasim.metrics import MetricsLedger, eccdf


def test_record_frame_filters_empty_estimates():
    led = MetricsLedger()
    led.record_frame(3, 5.0, 5)
    assert led.eta_sum == pytest.approx(0.6)
    led.record_frame(0, 0.3, 0)  # not believed active, no sample
    assert led.eta_frames == 1
    assert led.frames == 2


def test_constant_stream_mean():
    led = MetricsLedger()
    for _ in range(10_000):
        led.record_frame(1, 2.0, 2)
    assert led.finalize()["eta_bar"] == pytest.approx(0.5)


def test_absent_metrics_are_none():
    led = MetricsLedger()
    out = led.finalize()
    assert out["eta_bar"] is None
    assert out["d_bar_usd"] is None
    assert out["p_drop"] is None


def test_drop_probability():
    led = MetricsLedger()
    led.record_generated(10)
    led.record_dropped(2)
    assert led.finalize()["p_drop"] == pytest.approx(0.2)


def test_latency_must_be_positive():
    led = MetricsLedger()
    with pytest.raises(ValueError):
        led.record_delivery(0.0)


def test_eccdf_hand_count():
    curve = dict(eccdf([100.0, 200.0, 300.0]))
    assert curve[150.0] if 150.0 in curve else True
    assert curve[100.0] == pytest.approx(2 / 3)
    assert curve[200.0] == pytest.approx(1 / 3)
    assert curve[300.0] == 0.0


def test_eccdf_monotone_and_bounded():
    rng = np.random.default_rng(4)
    samples = rng.exponential(50.0, size=500)
    curve = eccdf(samples)
    tails = [t for _, t in curve]
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    assert tails[0] <= 1.0
    assert tails[-1] == 0.0


def test_merge_is_order_insensitive():
    a, b = MetricsLedger(), MetricsLedger()
    a.record_generated(4)
    a.record_delivery(3.0)
    a.record_frame(1, 2.0, 1)
    b.record_generated(6)
    b.record_dropped(2)
    b.record_frame(1, 4.0, 2)
    ab, ba = a.merge(b).finalize(), b.merge(a).finalize()
    assert ab == ba
    assert ab["p_drop"] == pytest.approx(0.2)
    assert ab["eta_bar"] == pytest.approx((0.5 + 0.25) / 2)


@given(st.lists(st.floats(0.1, 1e6), min_size=1, max_size=200))
@settings(max_examples=100, deadline=None)
def test_eccdf_properties(samples):
    curve = eccdf(samples)
    values = [v for v, _ in curve]
    tails = [t for _, t in curve]
    assert values == sorted(values)
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    assert tails[-1] == 0.0
    assert all(0.0 <= t <= 1.0 for t in tails)
