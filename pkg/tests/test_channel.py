"""Erasure-channel and loss-estimator tests."""

import math

import numpy as np
import pytest

from lrfcodes.channel import (BurstModel, Channel, ChannelConfig,
                              LossRateEstimator, LossReport, estimate_loss,
                              loss_mask, transmit)
from lrfcodes.errors import InvalidInputError, InvalidParameterError


# ---------------------------------------------------------------------------
# Channel basics


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        ChannelConfig(loss_rate=-0.1)
    with pytest.raises(InvalidParameterError):
        ChannelConfig(loss_rate=1.5)
    with pytest.raises(InvalidParameterError):
        BurstModel(p_good_to_bad=2.0, p_bad_to_good=0.5)


def test_loss_mask_deterministic():
    cfg = ChannelConfig(0.3, seed=42)
    np.testing.assert_array_equal(loss_mask(1000, cfg), loss_mask(1000, cfg))


def test_loss_mask_differs_across_seeds():
    a = loss_mask(1000, ChannelConfig(0.3, seed=1))
    b = loss_mask(1000, ChannelConfig(0.3, seed=2))
    assert (a != b).any()


def test_loss_mask_extremes():
    assert not loss_mask(500, ChannelConfig(0.0, seed=3)).any()
    assert loss_mask(500, ChannelConfig(1.0, seed=3)).all()


def test_loss_rate_concentrates():
    # Binomial concentration: observed rate within 5 sigma of p.
    p, n = 0.05, 200_000
    mask = loss_mask(n, ChannelConfig(p, seed=9))
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(mask.mean() - p) < 5 * sigma


def test_stateful_channel_continues_stream():
    cfg = ChannelConfig(0.2, seed=5)
    chan = Channel(cfg)
    parts = np.concatenate([chan.loss_mask(100) for _ in range(5)])
    whole = Channel(cfg).loss_mask(500)
    np.testing.assert_array_equal(parts, whole)


def test_transmit_partitions_symbols():
    symbols = [bytes([i]) for i in range(100)]
    delivered, mask = transmit(symbols, ChannelConfig(0.3, seed=7))
    assert len(delivered) + int(mask.sum()) == 100
    for i, payload in delivered.items():
        assert payload == symbols[i]
        assert not mask[i]


def test_negative_count_rejected():
    with pytest.raises(InvalidParameterError):
        Channel(ChannelConfig(0.1)).loss_mask(-1)


# ---------------------------------------------------------------------------
# Burst model


def test_burst_model_produces_correlated_losses():
    burst = BurstModel(p_good_to_bad=0.02, p_bad_to_good=0.2,
                       loss_good=0.0, loss_bad=1.0)
    cfg = ChannelConfig(0.0, seed=11, burst=burst)
    mask = Channel(cfg).loss_mask(100_000).astype(float)
    rate = mask.mean()
    assert 0.0 < rate < 1.0
    # Lag-1 autocorrelation is clearly positive for a two-state chain.
    a, b = mask[:-1], mask[1:]
    corr = np.corrcoef(a, b)[0, 1]
    assert corr > 0.3


def test_burst_mask_deterministic():
    burst = BurstModel(p_good_to_bad=0.05, p_bad_to_good=0.3)
    cfg = ChannelConfig(0.0, seed=4, burst=burst)
    np.testing.assert_array_equal(Channel(cfg).loss_mask(2000),
                                  Channel(cfg).loss_mask(2000))


# ---------------------------------------------------------------------------
# Estimation


def test_estimate_loss_plain_ratio():
    report = estimate_loss([True, False, False, True, False])
    assert report.observed_window == 5
    assert report.lost == 2
    assert math.isclose(report.estimate, 0.4)


def test_estimate_loss_empty_rejected():
    with pytest.raises(InvalidInputError):
        estimate_loss([])


def test_loss_report_validation():
    with pytest.raises(InvalidParameterError):
        LossReport(observed_window=5, lost=6, estimate=1.2)


def test_estimator_reports_every_window():
    est = LossRateEstimator(window=100)
    reports = []
    for i in range(350):
        r = est.observe(i % 10 == 0)
        if r is not None:
            reports.append(r)
    assert len(reports) == 3
    for r in reports:
        assert r.observed_window == 100
        assert math.isclose(r.estimate, 0.1)


def test_estimator_is_unbiased():
    rng = np.random.default_rng(17)
    p = 0.03
    est = LossRateEstimator(window=1000)
    reports = []
    for outcome in rng.random(50_000) < p:
        r = est.observe(bool(outcome))
        if r is not None:
            reports.append(r.estimate)
    mean = sum(reports) / len(reports)
    sigma = math.sqrt(p * (1 - p) / 1000 / len(reports))
    assert abs(mean - p) < 5 * sigma


def test_estimator_early_report_on_rate_jump():
    est = LossRateEstimator(window=1000, relative_change=0.5,
                           min_observations=50)
    for _ in range(1000):
        est.observe(False)  # first report: rate 0... emitted at the window
    assert est.estimate == 0.0
    # A sudden burst triggers a report before the next full window.
    emitted = None
    for i in range(1000):
        r = est.observe(True)
        if r is not None:
            emitted = (i, r)
            break
    assert emitted is not None
    assert emitted[0] < 999
    assert emitted[1].estimate > 0.0


def test_estimator_ewma_smooths():
    # relative_change is large so only the fixed window cadence reports.
    est = LossRateEstimator(window=100, ewma=0.5, relative_change=100.0,
                           min_observations=10_000)
    for _ in range(100):
        est.observe(False)
    assert est.estimate == 0.0
    for _ in range(100):
        est.observe(True)
    # One fully lossy window moves the EWMA halfway, not all the way.
    assert math.isclose(est.estimate, 0.5)


def test_estimator_validation():
    with pytest.raises(InvalidParameterError):
        LossRateEstimator(window=0)
    with pytest.raises(InvalidParameterError):
        LossRateEstimator(ewma=1.5)
