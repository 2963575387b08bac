"""Windowed transfer over an erasure channel with proactive repair symbols.

Source and destination are explicit state machines driven by an event loop
with a global symbol clock (no real sockets). Per window of w symbols the
source emits the natives plus, for the loss-aware schemes, ceil((1+eps) * m)
encoding symbols sized from the latest fed-back loss estimate. The
destination buffers repair symbols in a pool, peels when losses are
detected, slides the window on full recovery and acks it, and feeds loss
reports back to the source.

Schemes:
    LT        -- pure fountain baseline: robust-soliton encoding symbols
                 only, streamed until the window decodes.
    LRF       -- natives plus loss-aware truncated-soliton repair symbols.
    Raptor    -- systematic precode; natives plus robust-soliton symbols
                 over the intermediate block, streamed on demand.
    LR-Raptor -- systematic precode; natives plus capped loss-aware repair
                 symbols over the intermediate block.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import Channel, ChannelConfig, LossRateEstimator, LossReport
from .codec import (EncodingSymbol, PeelDecoder, SourceBlock, derive_seed,
                    encode_stream, resolve_neighbors)
from .distributions import (DegreeDistribution, LossContext, lr_raptor_dist,
                            lrf_ideal, robust_soliton)
from .errors import InvalidParameterError, SessionFailure
from .precode import PrecodeConfig, precode_expand, precode_solve

SCHEMES = ("LT", "LRF", "Raptor", "LR-Raptor")

# Default precode shape fractions relative to k, matching the standard
# (k, s, h) proportions for a ~10k block.
SPARSE_PARITY_FRACTION = 241 / 10017
DENSE_PARITY_FRACTION = 11 / 10017


def default_precode_shape(k: int) -> tuple[int, int]:
    s = max(1, round(SPARSE_PARITY_FRACTION * k))
    h = max(2, round(DENSE_PARITY_FRACTION * k))
    return s, h


def normalize_scheme(scheme: str) -> str:
    for s in SCHEMES:
        if scheme.lower() == s.lower():
            return s
    raise InvalidParameterError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


# ---------------------------------------------------------------------------
# Events


@dataclass(frozen=True)
class NativeSymbol:
    window: int
    index: int
    payload: bytes


@dataclass(frozen=True)
class NativeLoss:
    """Destination-side detection of a missing native (sequence-number gap)."""

    window: int
    index: int


@dataclass(frozen=True)
class RepairSymbol:
    window: int
    symbol: EncodingSymbol


@dataclass(frozen=True)
class Ack:
    window: int


@dataclass(frozen=True)
class WindowNack:
    """The destination cannot finish this window; more repair is needed."""

    window: int
    unresolved: int


@dataclass(frozen=True)
class Feedback:
    report: LossReport


# ---------------------------------------------------------------------------
# Metrics


@dataclass
class SessionMetrics:
    natives_sent: int = 0
    encoding_sent: int = 0
    total_degree_sent: int = 0
    lost: int = 0
    delivered: int = 0
    recovered: int = 0
    windows_completed: int = 0
    encode_time: float = 0.0
    decode_time: float = 0.0
    wall_time: float = 0.0
    bytes_delivered: int = 0

    @property
    def throughput_bytes_per_s(self) -> float:
        return self.bytes_delivered / self.wall_time if self.wall_time > 0 else 0.0


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class SessionConfig:
    window: int
    symbol_bytes: int
    epsilon: float
    scheme: str
    channel: ChannelConfig
    seed: int = 0
    delta: float = 0.5
    c: float = 0.1
    d_max: int | None = None
    precode_s: int | None = None
    precode_h: int | None = None
    # Warm-start loss estimate; None means "assume the channel's configured
    # rate was already fed back before the session".
    initial_loss_rate: float | None = None
    extra_batch_frac: float = 0.25
    budget_factor: float = 3.0
    baseline_extra_factor: float = 3.0
    feedback_lag: int = 0
    rederive_neighbors: bool = False
    trace: object = None

    def __post_init__(self):
        self.scheme = normalize_scheme(self.scheme)
        if self.window < 1 or self.symbol_bytes < 1:
            raise InvalidParameterError("window and symbol_bytes must be >= 1")
        if self.epsilon < 0:
            raise InvalidParameterError(f"epsilon must be >= 0, got {self.epsilon}")

    @property
    def uses_precode(self) -> bool:
        return self.scheme in ("Raptor", "LR-Raptor")

    def precode_config(self) -> PrecodeConfig:
        k = self.window
        s, h = default_precode_shape(k)
        if self.precode_s is not None:
            s = self.precode_s
        if self.precode_h is not None:
            h = self.precode_h
        return PrecodeConfig(k=k, s=s, h=h, seed=derive_seed(self.seed, 0x9C0DE))


# ---------------------------------------------------------------------------
# Source


@dataclass
class _RepairPlan:
    block: SourceBlock               # block repairs are encoded over
    dist: DegreeDistribution | None
    base_seed: int
    next_id: int = 0
    proactive: int = 0
    extra_sent: int = 0
    extra_budget: int = 0
    batch: int = 1
    m_hat: int = 0                   # predicted loss the dist was sized for


class SourceState:
    """Source side: emits natives and repair symbols per window, re-sizes the
    repair distribution from fed-back loss estimates."""

    def __init__(self, cfg: SessionConfig, metrics: SessionMetrics):
        self.cfg = cfg
        self.metrics = metrics
        self.known_loss_rate = (cfg.initial_loss_rate if cfg.initial_loss_rate is not None
                                else cfg.channel.loss_rate)
        self.plans: dict[int, _RepairPlan] = {}
        self.acked: set[int] = set()

    # -- helpers

    def _encode(self, plan: _RepairPlan, count: int, window: int) -> list[RepairSymbol]:
        t0 = time.perf_counter()
        symbols = encode_stream(plan.block, plan.dist, plan.base_seed, count,
                                start_id=plan.next_id)
        self.metrics.encode_time += time.perf_counter() - t0
        plan.next_id += count
        self.metrics.encoding_sent += count
        self.metrics.total_degree_sent += sum(s.degree for s in symbols)
        return [RepairSymbol(window, s) for s in symbols]

    def _loss_aware_dist(self, total: int, m_hat: int) -> DegreeDistribution:
        ctx = LossContext(total, min(m_hat, total))
        if self.cfg.scheme == "LR-Raptor":
            cap = self.cfg.d_max if self.cfg.d_max is not None else total
            cap = min(cap, total)
            return lr_raptor_dist(ctx, cap)
        return lrf_ideal(ctx)

    def _sizing(self, m_hat: int) -> tuple[int, int, int]:
        """(proactive count, batch size, extra budget) for a predicted loss."""
        m_prime = math.ceil((1.0 + self.cfg.epsilon) * m_hat)
        batch = max(1, math.ceil(self.cfg.extra_batch_frac * max(m_prime, 1)))
        budget = math.ceil(self.cfg.budget_factor * max(m_prime, 1))
        return m_prime, batch, budget

    # -- protocol surface

    def start_window(self, index: int, block: SourceBlock) -> list:
        cfg = self.cfg
        emissions: list = []
        p_hat = self.known_loss_rate

        if cfg.scheme == "LT":
            dist = robust_soliton(block.w, cfg.delta, cfg.c)
            plan = _RepairPlan(block=block, dist=dist,
                               base_seed=derive_seed(cfg.seed, index))
            initial = math.ceil(block.w / max(1.0 - min(p_hat, 0.5), 0.5))
            plan.batch = max(32, block.w // 50)
            plan.extra_budget = math.ceil(cfg.baseline_extra_factor * block.w)
            self.plans[index] = plan
            emissions += self._encode(plan, initial, index)
            return emissions

        if cfg.uses_precode:
            pc = cfg.precode_config()
            inter = precode_expand(block, pc)
            enc_block = inter.as_block()
            total = pc.total
        else:
            pc = None
            enc_block = block
            total = block.w

        # Natives travel for every systematic scheme.
        for i in range(block.w):
            emissions.append(NativeSymbol(index, i, block.symbols[i]))
        self.metrics.natives_sent += block.w

        plan = _RepairPlan(block=enc_block, dist=None,
                           base_seed=derive_seed(cfg.seed, index))
        self.plans[index] = plan

        if cfg.scheme == "Raptor":
            plan.dist = robust_soliton(total, cfg.delta, cfg.c)
            plan.batch = max(16, total // 100)
            plan.extra_budget = math.ceil(cfg.baseline_extra_factor * total)
            return emissions

        # Loss-aware schemes: proactive repair sized from the fed-back rate.
        # Lost natives alone set the size; for the precoded scheme the parity
        # intermediates fall out of the precode constraints at the decoder.
        if p_hat > 0:
            m_hat = max(1, round(p_hat * block.w))
            plan.dist = self._loss_aware_dist(total, m_hat)
            plan.m_hat = m_hat
            m_prime, plan.batch, plan.extra_budget = self._sizing(m_hat)
            plan.proactive = m_prime
            emissions += self._encode(plan, m_prime, index)
        return emissions

    def step(self, events: Sequence) -> list:
        """React to feedback: loss reports retune the estimate, nacks emit
        another repair batch (bounded by the window's extra budget)."""
        emissions: list = []
        for ev in events:
            if isinstance(ev, Feedback):
                self.known_loss_rate = ev.report.estimate
            elif isinstance(ev, Ack):
                self.acked.add(ev.window)
                self.plans.pop(ev.window, None)
            elif isinstance(ev, WindowNack):
                plan = self.plans.get(ev.window)
                if plan is None:
                    continue
                if self.cfg.scheme in ("LRF", "LR-Raptor"):
                    # Size (or re-size) the repair distribution from the
                    # nack's unresolved-native count.
                    m_hat = max(1, ev.unresolved)
                    if plan.dist is None or m_hat > plan.m_hat:
                        plan.dist = self._loss_aware_dist(plan.block.w, m_hat)
                        plan.m_hat = m_hat
                        m_prime, plan.batch, budget = self._sizing(m_hat)
                        plan.extra_budget = max(plan.extra_budget,
                                                plan.extra_sent + budget)
                count = min(plan.batch, plan.extra_budget - plan.extra_sent)
                if count <= 0:
                    raise SessionFailure(
                        f"window {ev.window} undecodable after repair budget "
                        f"({plan.extra_sent} extra symbols)",
                        window=ev.window, unresolved=ev.unresolved)
                plan.extra_sent += count
                emissions += self._encode(plan, count, ev.window)
        return emissions


def source_step(state: SourceState, feedback_events: Sequence) -> list:
    """Feed feedback events to the source; returns new emissions."""
    return state.step(feedback_events)


# ---------------------------------------------------------------------------
# Destination


@dataclass
class _WindowState:
    decoder: PeelDecoder
    precode: PrecodeConfig | None
    natives_expected: int
    natives_seen: int = 0
    losses_seen: int = 0
    complete: bool = False
    recovered: list[bytes] | None = None
    repairs_received: int = 0


class DestinationState:
    """Destination side: buffers repair symbols, peels on detected loss,
    slides and acks windows on full recovery, and emits loss reports."""

    def __init__(self, cfg: SessionConfig, metrics: SessionMetrics):
        self.cfg = cfg
        self.metrics = metrics
        self.estimator = LossRateEstimator()
        self.windows: dict[int, _WindowState] = {}
        self.acked: set[int] = set()
        self.highest_window = -1
        self.protocol_errors = 0

    def _window(self, index: int) -> _WindowState:
        state = self.windows.get(index)
        if state is None:
            cfg = self.cfg
            if cfg.uses_precode:
                pc = cfg.precode_config()
                total = pc.total
            else:
                pc = None
                total = cfg.window
            natives = 0 if cfg.scheme == "LT" else cfg.window
            state = _WindowState(decoder=PeelDecoder(total, cfg.symbol_bytes),
                                 precode=pc, natives_expected=natives)
            self.windows[index] = state
            self.highest_window = max(self.highest_window, index)
        return state

    def step(self, event) -> list:
        """Process one arrival or loss-detection event."""
        out: list = []
        try:
            if isinstance(event, NativeSymbol):
                report = self.estimator.observe(False)
                if report is not None:
                    out.append(Feedback(report))
                state = self._window(event.window)
                state.natives_seen += 1
                self.metrics.delivered += 1
                if not state.complete:
                    t0 = time.perf_counter()
                    state.decoder.add_native(event.index, event.payload)
                    self.metrics.decode_time += time.perf_counter() - t0
            elif isinstance(event, NativeLoss):
                report = self.estimator.observe(True)
                if report is not None:
                    out.append(Feedback(report))
                state = self._window(event.window)
                state.losses_seen += 1
                self.metrics.lost += 1
            elif isinstance(event, RepairSymbol):
                state = self._window(event.window)
                state.repairs_received += 1
                self.metrics.delivered += 1
                if not state.complete:
                    sym = event.symbol
                    t0 = time.perf_counter()
                    if self.cfg.rederive_neighbors or sym.neighbors is None:
                        sym = resolve_neighbors(sym, state.decoder.w)
                    state.decoder.add_symbol(sym)
                    self.metrics.decode_time += time.perf_counter() - t0
            else:
                self.protocol_errors += 1
        except (ValueError, TypeError):
            self.protocol_errors += 1
        return out

    def conclude(self, index: int) -> list:
        """Attempt to finish a window after a delivery phase; emits an Ack on
        full recovery or a WindowNack asking for more repair."""
        state = self._window(index)
        if state.complete:
            return []
        decoder = state.decoder
        t0 = time.perf_counter()
        decoder.run()
        natives: list[bytes] | None = None
        k = self.cfg.window
        if self.cfg.scheme == "LT" or state.precode is None:
            if decoder.success:
                natives = decoder.result().recovered
        else:
            covered = decoder.covered_map()
            if sum(1 for i in covered if i < k) == k:
                natives = [covered[i] for i in range(k)]
            elif state.repairs_received or state.losses_seen:
                try:
                    natives = precode_solve(covered, state.precode,
                                            extra_rows=decoder.pending_rows())
                except Exception:
                    natives = None
        self.metrics.decode_time += time.perf_counter() - t0

        if natives is None:
            unresolved = (decoder.unresolved if state.precode is None
                          else k - sum(1 for i in decoder.covered_map() if i < k))
            return [WindowNack(index, unresolved)]

        state.complete = True
        state.recovered = natives[:k]
        self.acked.add(index)
        self.metrics.windows_completed += 1
        recovered_by_decode = (k - state.natives_seen if state.natives_expected
                               else k)
        self.metrics.recovered += max(0, recovered_by_decode)
        self.metrics.bytes_delivered += k * self.cfg.symbol_bytes
        return [Ack(index)]


def dest_step(state: DestinationState, event) -> list:
    """Process one destination event; returns acks/feedback emissions."""
    return state.step(event)


# ---------------------------------------------------------------------------
# Session driver


def _split_windows(data: bytes, w: int, l: int) -> list[SourceBlock]:
    window_bytes = w * l
    blocks = []
    for off in range(0, len(data), window_bytes):
        chunk = data[off:off + window_bytes]
        if len(chunk) < window_bytes:
            chunk = chunk + b"\x00" * (window_bytes - len(chunk))
        blocks.append(SourceBlock(chunk[i * l:(i + 1) * l] for i in range(w)))
    return blocks


def run_session(data, window: int, symbol_bytes: int, channel_cfg: ChannelConfig,
                epsilon: float, scheme: str, seed: int = 0,
                return_payload: bool = False, **options):
    """Drive one source -> channel -> destination session to completion.

    ``data`` is either the payload bytes or an integer size (deterministic
    pseudo-random payload derived from ``seed``). Returns ``SessionMetrics``
    (or ``(metrics, delivered_bytes)`` with ``return_payload=True``).

    Raises:
        SessionFailure: some window stayed undecodable within its repair
            budget.
    """
    if isinstance(data, int):
        size = data
        rng = np.random.default_rng(derive_seed(seed, 0xDA7A))
        data = rng.integers(0, 256, size=size, dtype=np.uint8).tobytes()
    else:
        data = bytes(data)
        size = len(data)
    if size == 0:
        raise InvalidParameterError("no data to transfer")

    cfg = SessionConfig(window=window, symbol_bytes=symbol_bytes, epsilon=epsilon,
                        scheme=scheme, channel=channel_cfg, seed=seed, **options)
    metrics = SessionMetrics()
    source = SourceState(cfg, metrics)
    dest = DestinationState(cfg, metrics)
    chan = Channel(channel_cfg)
    trace = cfg.trace
    clock = 0

    t_start = time.perf_counter()
    blocks = _split_windows(data, window, symbol_bytes)
    recovered_windows: list[bytes] = []

    for index, block in enumerate(blocks):
        emissions = source.start_window(index, block)
        done = False
        while not done:
            events = []
            mask = chan.loss_mask(len(emissions))
            for em, dropped in zip(emissions, mask):
                clock += 1
                if isinstance(em, NativeSymbol):
                    if dropped:
                        self_ev = NativeLoss(em.window, em.index)
                        events.append(self_ev)
                    else:
                        events.append(em)
                else:  # RepairSymbol
                    if dropped:
                        metrics.lost += 1
                        if trace:
                            trace.write(f"{clock},repair_lost,{em.window},"
                                        f"{em.symbol.id},\n")
                    else:
                        events.append(em)

            responses: list = []
            for ev in events:
                if trace:
                    ident = getattr(ev, "index", getattr(getattr(ev, "symbol", None), "id", ""))
                    trace.write(f"{clock},{type(ev).__name__},{ev.window},{ident},\n")
                responses += dest.step(ev)
            responses += dest.conclude(index)

            acked = any(isinstance(r, Ack) for r in responses)
            emissions = source.step(responses)
            if acked:
                done = True
                recovered_windows.append(b"".join(dest.windows[index].recovered))
                if trace:
                    trace.write(f"{clock},ack,{index},,\n")

    metrics.wall_time = time.perf_counter() - t_start
    delivered = b"".join(recovered_windows)[:size]
    if delivered != data:
        raise SessionFailure("delivered data does not match source data",
                             window=-1, unresolved=0)
    metrics.bytes_delivered = size
    if return_payload:
        return metrics, delivered
    return metrics
