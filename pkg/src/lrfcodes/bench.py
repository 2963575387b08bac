"""Benchmark harness: encoding ratio, degree ratio, timing, and throughput
experiments over the four schemes, emitting CSV rows and summary tables.

Experiments:
    window-sweep   -- loss-aware codec across window lengths and loss rates;
                      ratios are per *lost* symbol.
    lt-compare     -- robust-soliton fountain baseline vs the loss-aware
                      codec; ratios are per *input* symbol.
    raptor-compare -- precoded baseline vs the capped loss-aware variant;
                      ratios are per *input* symbol.
    transfer       -- full windowed transfer sessions; throughput from wall
                      time.

Baseline streams are self-calibrating: encoding symbols are generated
incrementally until the decoder succeeds, so the realized overhead is
measured rather than assumed. Timing columns are filled only when timing is
enabled; without it they stay empty so CSV output is byte-identical across
runs with the same master seed.
"""

from __future__ import annotations

import csv
import math
import statistics
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from .channel import ChannelConfig, loss_mask
from .codec import PeelDecoder, SourceBlock, derive_seed, encode_stream
from .distributions import (LossContext, lr_raptor_dist, lrf_ideal,
                            robust_soliton)
from .errors import InvalidParameterError, SessionFailure
from .precode import PrecodeConfig, precode_expand, precode_solve
from .transfer import run_session

EXPERIMENTS = ("window-sweep", "lt-compare", "raptor-compare", "transfer")

CSV_COLUMNS = (
    "experiment", "scheme", "window_len", "loss_rate", "trials",
    "encoding_ratio", "degree_ratio", "encode_ns_per_lost",
    "decode_ns_per_lost", "throughput_MBps", "success_rate", "master_seed",
)


@dataclass
class ExperimentSpec:
    experiment: str
    schemes: tuple[str, ...] = ()
    window_lengths: tuple[int, ...] = (1000,)
    loss_rates: tuple[float, ...] = (0.01,)
    trials: int = 30
    master_seed: int = 1
    symbol_bytes: int = 64
    total_symbols: int = 100_000
    epsilon: float = 0.1
    delta: float = 0.5
    c: float = 0.1
    precode_k: int = 1024
    precode_s: int = 25
    precode_h: int = 2
    d_max: int | None = None
    timing: bool = False
    trace: object = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidParameterError(
                f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1")
        if not self.window_lengths or not self.loss_rates:
            raise InvalidParameterError("window_lengths and loss_rates must be non-empty")


@dataclass
class ResultRow:
    experiment: str
    scheme: str
    window_len: int
    loss_rate: float
    trials: int
    encoding_ratio: float
    degree_ratio: float
    encode_ns_per_lost: float | None
    decode_ns_per_lost: float | None
    throughput_MBps: float | None
    success_rate: float
    master_seed: int


@dataclass
class _Trial:
    enc_sent: int = 0
    total_degree: int = 0
    lost: int = 0
    encode_ns: int = 0
    decode_ns: int = 0
    success: bool = True
    skipped: bool = False


def _trial_seed(master: int, *parts: int) -> int:
    s = master
    for p in parts:
        s = derive_seed(s, p)
    return s


def _trace(spec: ExperimentSpec, line: str) -> None:
    if spec.trace is not None:
        spec.trace.write(line + "\n")


# ---------------------------------------------------------------------------
# Single-trial codec experiments


def _lrf_trial(w: int, l: int, p: float, eps: float, seed: int) -> _Trial:
    """Loss-aware codec round: lose natives, repair with truncated-soliton
    symbols sized (1+eps)*m, topping up in quarter batches if peeling stalls."""
    t = _Trial()
    block = SourceBlock.random(w, l, derive_seed(seed, 0))
    mask = loss_mask(w, ChannelConfig(p, derive_seed(seed, 1)))
    m = int(mask.sum())
    if m == 0:
        t.skipped = True
        return t
    t.lost = m
    natives = {int(i): block.symbols[i] for i in np.flatnonzero(~mask)}
    dist = lrf_ideal(LossContext(w, m))
    m_prime = math.ceil((1.0 + eps) * m)
    batch = max(1, math.ceil(0.25 * m_prime))
    budget = 3 * m_prime

    decoder = PeelDecoder(w, l, natives)
    count = m_prime
    extra = 0
    while True:
        t0 = time.perf_counter_ns()
        symbols = encode_stream(block, dist, derive_seed(seed, 2), count,
                                start_id=t.enc_sent)
        t.encode_ns += time.perf_counter_ns() - t0
        t.enc_sent += count
        t.total_degree += sum(s.degree for s in symbols)
        t0 = time.perf_counter_ns()
        for sym in symbols:
            decoder.add_symbol(sym)
        decoder.run()
        t.decode_ns += time.perf_counter_ns() - t0
        if decoder.success:
            return t
        if extra >= budget:
            t.success = False
            return t
        count = min(batch, budget - extra)
        extra += count


def _lt_trial(w: int, l: int, delta: float, c: float, seed: int) -> _Trial:
    """Fountain baseline: stream robust-soliton symbols (no natives) until
    the peeling decoder succeeds; the realized overhead is the measurement."""
    t = _Trial()
    block = SourceBlock.random(w, l, derive_seed(seed, 0))
    dist = robust_soliton(w, delta, c)
    decoder = PeelDecoder(w, l)
    count = w
    cap = 3 * w
    while True:
        t0 = time.perf_counter_ns()
        symbols = encode_stream(block, dist, derive_seed(seed, 2), count,
                                start_id=t.enc_sent)
        t.encode_ns += time.perf_counter_ns() - t0
        t.enc_sent += count
        t.total_degree += sum(s.degree for s in symbols)
        t0 = time.perf_counter_ns()
        for sym in symbols:
            decoder.add_symbol(sym)
        decoder.run()
        t.decode_ns += time.perf_counter_ns() - t0
        if decoder.success:
            return t
        if t.enc_sent >= cap:
            t.success = False
            return t
        count = min(max(32, w // 50), cap - t.enc_sent)


def _precoded_trial(cfg: PrecodeConfig, l: int, p: float, seed: int,
                    dist, proactive: int, batch: int, budget_extra: int) -> _Trial:
    """Shared machinery for the precoded schemes: lose natives, stream inner
    encoding symbols over the intermediate block, finish via the parity
    constraints when peeling alone is not enough."""
    t = _Trial()
    block = SourceBlock.random(cfg.k, l, derive_seed(seed, 0))
    inter = precode_expand(block, cfg)
    enc_block = inter.as_block()
    mask = loss_mask(cfg.k, ChannelConfig(p, derive_seed(seed, 1)))
    m = int(mask.sum())
    t.lost = m
    natives = {int(i): block.symbols[i] for i in np.flatnonzero(~mask)}
    if m == 0:
        # Nothing lost: natives alone complete the window.
        return t

    decoder = PeelDecoder(cfg.total, l, natives)
    count = proactive
    extra = 0
    while True:
        if count > 0:
            t0 = time.perf_counter_ns()
            symbols = encode_stream(enc_block, dist, derive_seed(seed, 2), count,
                                    start_id=t.enc_sent)
            t.encode_ns += time.perf_counter_ns() - t0
            t.enc_sent += count
            t.total_degree += sum(s.degree for s in symbols)
            t0 = time.perf_counter_ns()
            for sym in symbols:
                decoder.add_symbol(sym)
            decoder.run()
            t.decode_ns += time.perf_counter_ns() - t0
        else:
            t0 = time.perf_counter_ns()
            decoder.run()
            t.decode_ns += time.perf_counter_ns() - t0

        if not decoder.success:
            covered = decoder.covered_map()
            if sum(1 for i in covered if i < cfg.k) < cfg.k:
                t0 = time.perf_counter_ns()
                try:
                    precode_solve(covered, cfg, extra_rows=decoder.pending_rows())
                    solved = True
                except Exception:
                    solved = False
                t.decode_ns += time.perf_counter_ns() - t0
            else:
                solved = True
        else:
            solved = True
        if solved:
            return t
        if extra >= budget_extra:
            t.success = False
            return t
        count = min(batch, budget_extra - extra)
        extra += count


def _raptor_trial(cfg: PrecodeConfig, l: int, p: float, delta: float, c: float,
                  seed: int) -> _Trial:
    dist = robust_soliton(cfg.total, delta, c)
    batch = max(8, cfg.total // 200)
    return _precoded_trial(cfg, l, p, seed, dist, proactive=0, batch=batch,
                           budget_extra=2 * cfg.total)


def _lr_raptor_trial(cfg: PrecodeConfig, l: int, p: float, eps: float,
                     d_max: int | None, seed: int) -> _Trial:
    mask = loss_mask(cfg.k, ChannelConfig(p, derive_seed(seed, 1)))
    m = int(mask.sum())
    if m == 0:
        t = _Trial()
        t.skipped = True
        return t
    # Size from the lost natives alone: the parity intermediates fall out of
    # the precode constraints during the residual solve.
    cap = min(d_max, cfg.total) if d_max is not None else cfg.total
    dist = lr_raptor_dist(LossContext(cfg.total, m), cap)
    m_prime = math.ceil((1.0 + eps) * m)
    batch = max(1, math.ceil(0.25 * m_prime))
    return _precoded_trial(cfg, l, p, seed, dist, proactive=m_prime,
                           batch=batch, budget_extra=3 * m_prime)


# ---------------------------------------------------------------------------
# Aggregation


def _aggregate(spec: ExperimentSpec, scheme: str, w: int, p: float,
               trials: list[_Trial], per_input: bool) -> ResultRow:
    used = [t for t in trials if not t.skipped]
    skipped = len(trials) - len(used)
    if skipped:
        _trace(spec, f"{spec.experiment},{scheme},{w},{p},"
                     f"skipped_zero_loss_trials={skipped}")
    if not used:
        return ResultRow(spec.experiment, scheme, w, p, 0, 0.0, 0.0,
                         None, None, None, 1.0, spec.master_seed)
    ok = [t for t in used if t.success]
    for i, t in enumerate(used):
        if not t.success:
            _trace(spec, f"{spec.experiment},{scheme},{w},{p},trial={i},"
                         f"failure unresolved_after_budget enc_sent={t.enc_sent}")
    denom = (lambda t: w) if per_input else (lambda t: t.lost)
    sample = ok if ok else used
    enc_ratio = statistics.fmean(t.enc_sent / denom(t) for t in sample)
    deg_ratio = statistics.fmean(t.total_degree / denom(t) for t in sample)
    if spec.timing:
        enc_ns = statistics.fmean(t.encode_ns / denom(t) for t in sample)
        dec_ns = statistics.fmean(t.decode_ns / denom(t) for t in sample)
    else:
        enc_ns = dec_ns = None
    return ResultRow(spec.experiment, scheme, w, p, len(used), enc_ratio,
                     deg_ratio, enc_ns, dec_ns, None, len(ok) / len(used),
                     spec.master_seed)


# ---------------------------------------------------------------------------
# Experiment drivers


def run_window_sweep(spec: ExperimentSpec) -> list[ResultRow]:
    """Loss-aware codec across (window, loss-rate) pairs; per-lost ratios."""
    rows = []
    for wi, w in enumerate(spec.window_lengths):
        for pi, p in enumerate(spec.loss_rates):
            trials = [
                _lrf_trial(w, spec.symbol_bytes, p, spec.epsilon,
                           _trial_seed(spec.master_seed, 1, wi, pi, t))
                for t in range(spec.trials)
            ]
            rows.append(_aggregate(spec, "LRF", w, p, trials, per_input=False))
    return rows


def run_lt_compare(spec: ExperimentSpec) -> list[ResultRow]:
    """Fountain baseline vs loss-aware codec; per-input-symbol ratios."""
    rows = []
    schemes = spec.schemes or ("LT", "LRF")
    for wi, w in enumerate(spec.window_lengths):
        for pi, p in enumerate(spec.loss_rates):
            for si, scheme in enumerate(schemes):
                trials = []
                for t in range(spec.trials):
                    seed = _trial_seed(spec.master_seed, 2, wi, pi, si, t)
                    if scheme == "LT":
                        trials.append(_lt_trial(w, spec.symbol_bytes,
                                                spec.delta, spec.c, seed))
                    else:
                        trials.append(_lrf_trial(w, spec.symbol_bytes, p,
                                                 spec.epsilon, seed))
                rows.append(_aggregate(spec, scheme, w, p, trials, per_input=True))
    return rows


def run_raptor_compare(spec: ExperimentSpec) -> list[ResultRow]:
    """Precoded baseline vs capped loss-aware variant; per-input ratios."""
    rows = []
    cfg = PrecodeConfig(k=spec.precode_k, s=spec.precode_s, h=spec.precode_h,
                        seed=derive_seed(spec.master_seed, 0x9C0DE))
    schemes = spec.schemes or ("Raptor", "LR-Raptor")
    for pi, p in enumerate(spec.loss_rates):
        for si, scheme in enumerate(schemes):
            trials = []
            for t in range(spec.trials):
                seed = _trial_seed(spec.master_seed, 3, pi, si, t)
                if scheme == "Raptor":
                    trials.append(_raptor_trial(cfg, spec.symbol_bytes, p,
                                                spec.delta, spec.c, seed))
                else:
                    trials.append(_lr_raptor_trial(cfg, spec.symbol_bytes, p,
                                                   spec.epsilon, spec.d_max, seed))
            rows.append(_aggregate(spec, scheme, cfg.k, p, trials, per_input=True))
    return rows


def run_transfer(spec: ExperimentSpec) -> list[ResultRow]:
    """Full windowed sessions for each scheme and loss rate."""
    rows = []
    schemes = spec.schemes or ("LT", "LRF", "Raptor", "LR-Raptor")
    w = spec.window_lengths[0]
    data_size = spec.total_symbols * spec.symbol_bytes
    for pi, p in enumerate(spec.loss_rates):
        for si, scheme in enumerate(schemes):
            metrics_list = []
            failures = 0
            for t in range(spec.trials):
                seed = _trial_seed(spec.master_seed, 4, pi, si, t)
                try:
                    metrics_list.append(run_session(
                        data_size, w, spec.symbol_bytes,
                        ChannelConfig(p, derive_seed(seed, 7)),
                        spec.epsilon, scheme, seed=seed,
                        delta=spec.delta, c=spec.c, d_max=spec.d_max))
                except SessionFailure as exc:
                    failures += 1
                    _trace(spec, f"transfer,{scheme},{w},{p},trial={t},"
                                 f"session_failure window={exc.window} "
                                 f"unresolved={exc.unresolved}")
            if not metrics_list:
                rows.append(ResultRow("transfer", scheme, w, p, spec.trials,
                                      0.0, 0.0, None, None, None, 0.0,
                                      spec.master_seed))
                continue
            enc_ratio = statistics.fmean(
                (m.encoding_sent / m.lost if m.lost else float(m.encoding_sent))
                for m in metrics_list)
            deg_ratio = statistics.fmean(
                (m.total_degree_sent / m.lost if m.lost else float(m.total_degree_sent))
                for m in metrics_list)
            if spec.timing:
                tput = statistics.fmean(m.throughput_bytes_per_s
                                        for m in metrics_list) / 1e6
                enc_ns = statistics.fmean(
                    m.encode_time * 1e9 / max(m.lost, 1) for m in metrics_list)
                dec_ns = statistics.fmean(
                    m.decode_time * 1e9 / max(m.lost, 1) for m in metrics_list)
            else:
                tput = enc_ns = dec_ns = None
            total = failures + len(metrics_list)
            rows.append(ResultRow("transfer", scheme, w, p, total, enc_ratio,
                                  deg_ratio, enc_ns, dec_ns, tput,
                                  len(metrics_list) / total, spec.master_seed))
    return rows


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    driver = {
        "window-sweep": run_window_sweep,
        "lt-compare": run_lt_compare,
        "raptor-compare": run_raptor_compare,
        "transfer": run_transfer,
    }[spec.experiment]
    return driver(spec)


# ---------------------------------------------------------------------------
# Output


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows: list[ResultRow], path) -> None:
    """Write rows with the fixed 12-column schema (RFC 4180, header row)."""
    if not rows:
        raise InvalidParameterError("no result rows to emit")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(_format_cell(getattr(row, col)) for col in CSV_COLUMNS)


def load_csv(path) -> list[ResultRow]:
    """Parse a CSV produced by ``emit_csv`` back into rows."""
    types = {f.name: f.type for f in fields(ResultRow)}
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise InvalidParameterError(f"unexpected CSV header in {path}")
        for rec in reader:
            kwargs = {}
            for col in CSV_COLUMNS:
                raw = rec[col]
                ty = types[col]
                if raw == "" and "None" in str(ty):
                    kwargs[col] = None
                elif ty is int or ty == "int":
                    kwargs[col] = int(raw)
                elif ty is str or ty == "str":
                    kwargs[col] = raw
                else:
                    kwargs[col] = float(raw)
            rows.append(ResultRow(**kwargs))
    return rows


def emit_summary(rows: list[ResultRow], file=None) -> None:
    """Per-experiment/scheme medians on stdout (or the given file)."""
    if not rows:
        raise InvalidParameterError("no result rows to summarize")
    out = file if file is not None else sys.stdout
    groups: dict[tuple[str, str], list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.experiment, row.scheme), []).append(row)
    out.write(f"{'experiment':<15} {'scheme':<10} {'rows':>5} "
              f"{'med_enc_ratio':>14} {'med_deg_ratio':>14} {'med_success':>12}\n")
    for (exp, scheme), grp in groups.items():
        enc = statistics.median(r.encoding_ratio for r in grp)
        deg = statistics.median(r.degree_ratio for r in grp)
        suc = statistics.median(r.success_rate for r in grp)
        out.write(f"{exp:<15} {scheme:<10} {len(grp):>5} "
                  f"{enc:>14.6g} {deg:>14.6g} {suc:>12.3f}\n")
