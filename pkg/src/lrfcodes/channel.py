"""Seedable erasure channel and destination-side loss-rate estimation.

The default channel drops each symbol independently with probability p
(Bernoulli erasures). A two-state burst model is available behind a flag for
experimentation; it is excluded from the acceptance metrics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError


@dataclass(frozen=True)
class BurstModel:
    """Gilbert-Elliott two-state loss model (good/bad)."""

    p_good_to_bad: float
    p_bad_to_good: float
    loss_good: float = 0.0
    loss_bad: float = 1.0

    def __post_init__(self):
        for name in ("p_good_to_bad", "p_bad_to_good", "loss_good", "loss_bad"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParameterError(f"{name} {v} outside [0, 1]")


@dataclass(frozen=True)
class ChannelConfig:
    loss_rate: float
    seed: int = 0
    burst: BurstModel | None = None

    def __post_init__(self):
        if not 0.0 <= self.loss_rate <= 1.0:
            raise InvalidParameterError(f"loss rate {self.loss_rate} outside [0, 1]")


class Channel:
    """Stateful channel whose generator advances across calls, for sessions
    that transmit in multiple batches."""

    def __init__(self, cfg: ChannelConfig):
        self.cfg = cfg
        self._rng = np.random.default_rng(cfg.seed)
        self._bad = False

    def loss_mask(self, count: int) -> np.ndarray:
        """Boolean mask of length ``count``; True marks a dropped symbol."""
        if count < 0:
            raise InvalidParameterError(f"count must be >= 0, got {count}")
        if self.cfg.burst is None:
            return self._rng.random(count) < self.cfg.loss_rate
        b = self.cfg.burst
        u_state = self._rng.random(count)
        u_loss = self._rng.random(count)
        mask = np.empty(count, dtype=bool)
        bad = self._bad
        for i in range(count):
            if bad:
                if u_state[i] < b.p_bad_to_good:
                    bad = False
            else:
                if u_state[i] < b.p_good_to_bad:
                    bad = True
            mask[i] = u_loss[i] < (b.loss_bad if bad else b.loss_good)
        self._bad = bad
        return mask


def loss_mask(count: int, cfg: ChannelConfig) -> np.ndarray:
    """Stateless mask: deterministic for a fixed config."""
    return Channel(cfg).loss_mask(count)


def transmit(symbols: Sequence, cfg: ChannelConfig):
    """Drop each symbol independently with probability p.

    Returns:
        (delivered, mask): ``delivered`` maps position -> symbol for the
        surviving symbols; ``mask`` is True at dropped positions.
    """
    mask = loss_mask(len(symbols), cfg)
    delivered = {int(i): symbols[i] for i in np.flatnonzero(~mask)}
    return delivered, mask


@dataclass(frozen=True)
class LossReport:
    """Windowed loss estimate fed back from destination to source."""

    observed_window: int
    lost: int
    estimate: float

    def __post_init__(self):
        if not 0 <= self.lost <= self.observed_window:
            raise InvalidParameterError(
                f"lost {self.lost} outside 0..{self.observed_window}")


def estimate_loss(outcomes) -> LossReport:
    """Plain windowed ratio over a sequence of outcomes (True = lost)."""
    outcomes = list(outcomes)
    if not outcomes:
        raise InvalidInputError("empty observation window")
    lost = sum(bool(o) for o in outcomes)
    return LossReport(observed_window=len(outcomes), lost=lost,
                      estimate=lost / len(outcomes))


class LossRateEstimator:
    """Streaming estimator emitting a report every ``window`` symbols, or
    earlier when the running window rate moves >= ``relative_change`` away
    from the last reported estimate (after a minimum of observations).

    The default estimate is the plain windowed ratio; pass ``ewma`` in (0, 1]
    to smooth reports exponentially instead.
    """

    def __init__(self, window: int = 1000, relative_change: float = 0.5,
                 min_observations: int = 50, ewma: float | None = None):
        if window < 1:
            raise InvalidParameterError(f"window must be >= 1, got {window}")
        if ewma is not None and not 0.0 < ewma <= 1.0:
            raise InvalidParameterError(f"ewma {ewma} outside (0, 1]")
        self.window = window
        self.relative_change = relative_change
        self.min_observations = min_observations
        self.ewma = ewma
        self.estimate: float | None = None
        self._observed = 0
        self._lost = 0

    def observe(self, lost: bool) -> LossReport | None:
        """Record one delivery outcome; returns a report when triggered."""
        self._observed += 1
        self._lost += int(lost)
        if self._observed >= self.window:
            return self._emit()
        if self.estimate is not None and self._observed >= self.min_observations:
            rate = self._lost / self._observed
            reference = self.estimate
            if reference > 0 and abs(rate - reference) >= self.relative_change * reference:
                return self._emit()
            if reference == 0 and rate > 0:
                return self._emit()
        return None

    def _emit(self) -> LossReport:
        rate = self._lost / self._observed
        if self.ewma is not None and self.estimate is not None:
            rate = self.ewma * rate + (1.0 - self.ewma) * self.estimate
        report = LossReport(observed_window=self._observed, lost=self._lost, estimate=rate)
        self.estimate = rate
        self._observed = 0
        self._lost = 0
        return report
