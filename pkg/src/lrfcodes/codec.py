"""XOR fountain encoder and ripple-based peeling decoder.

An encoding symbol is the XOR of a degree-d subset of a window's input
symbols. Degree and neighbor set are both derived deterministically from the
symbol's seed, so only (id, seed, degree) need to travel on the wire; the
decoder re-derives the neighbor set. Explicit neighbor arrays are kept on
in-memory symbols so benchmarks time pure decode work.
"""

from __future__ import annotations

import random
import struct
from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .distributions import DegreeDistribution, sample
from .errors import InvalidInputError, InvalidParameterError

_MASK64 = (1 << 64) - 1
# Degree sampling uses a salted stream so the decoder can re-derive the
# neighbor set from (seed, degree) alone without replaying the degree draw.
_DEGREE_SALT = 0xD6E8FEB86659FD93


def derive_seed(base_seed: int, index: int) -> int:
    """Per-symbol seed from a stream base seed and symbol index (splitmix64)."""
    z = (base_seed + 0x9E3779B97F4A7C15 * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class SourceBlock:
    """Ordered window of w input symbols, each exactly l bytes."""

    __slots__ = ("symbols", "w", "l", "_ints")

    def __init__(self, symbols):
        symbols = tuple(bytes(s) for s in symbols)
        if not symbols:
            raise InvalidParameterError("block must contain at least one symbol")
        l = len(symbols[0])
        if l < 1:
            raise InvalidParameterError("symbol length must be >= 1 byte")
        if any(len(s) != l for s in symbols):
            raise InvalidParameterError("all symbols must have identical length")
        self.symbols = symbols
        self.w = len(symbols)
        self.l = l
        self._ints = None

    @classmethod
    def random(cls, w: int, l: int, seed: int) -> "SourceBlock":
        """Deterministic pseudo-random block, for tests and benchmarks."""
        data = np.random.default_rng(seed).integers(0, 256, size=(w, l), dtype=np.uint8)
        return cls(data[i].tobytes() for i in range(w))

    def payload_ints(self) -> list[int]:
        """Symbols as little-endian integers, cached for the encode hot loop."""
        if self._ints is None:
            self._ints = [int.from_bytes(s, "little") for s in self.symbols]
        return self._ints


@dataclass(frozen=True, eq=False)
class EncodingSymbol:
    """One XOR-combined output symbol.

    ``neighbors`` is a sorted array of input-symbol indices; it may be None
    for symbols freshly read off the wire (see ``resolve_neighbors``).
    """

    id: int
    seed: int
    degree: int
    neighbors: np.ndarray | None
    payload: bytes


def xor_combine(a: bytes, b: bytes) -> bytes:
    """Bytewise XOR, word-at-a-time via Python's big integers."""
    if len(a) != len(b):
        raise InvalidInputError(f"payload length mismatch: {len(a)} != {len(b)}")
    return (int.from_bytes(a, "little") ^ int.from_bytes(b, "little")).to_bytes(len(a), "little")


def select_neighbors(seed: int, w: int, degree: int) -> np.ndarray:
    """Degree distinct indices, uniform over all C(w, degree) subsets,
    fully determined by the seed."""
    if not 1 <= degree <= w:
        raise InvalidParameterError(f"degree {degree} outside 1..{w}")
    if degree == w:
        return np.arange(w, dtype=np.int64)
    picks = random.Random(seed).sample(range(w), degree)
    picks.sort()
    return np.array(picks, dtype=np.int64)


def derive_degree(seed: int, dist: DegreeDistribution) -> int:
    """The degree an encoder at this seed will draw from ``dist``."""
    return sample(dist, random.Random(seed ^ _DEGREE_SALT))


def encode_symbol(block: SourceBlock, dist: DegreeDistribution, seed: int,
                  symbol_id: int = 0) -> EncodingSymbol:
    """Draw a degree from ``dist`` and XOR that many uniformly chosen symbols."""
    if dist.w != block.w:
        raise InvalidParameterError(f"distribution is over {dist.w} symbols, block has {block.w}")
    degree = derive_degree(seed, dist)
    neighbors = select_neighbors(seed, block.w, degree)
    ints = block.payload_ints()
    acc = 0
    for j in neighbors.tolist():
        acc ^= ints[j]
    return EncodingSymbol(id=symbol_id, seed=seed, degree=degree,
                          neighbors=neighbors, payload=acc.to_bytes(block.l, "little"))


def encode_stream(block: SourceBlock, dist: DegreeDistribution, base_seed: int,
                  count: int, start_id: int = 0) -> list[EncodingSymbol]:
    """``count`` symbols with consecutive ids and per-symbol derived seeds."""
    if count < 0:
        raise InvalidParameterError(f"count must be >= 0, got {count}")
    return [encode_symbol(block, dist, derive_seed(base_seed, start_id + i), start_id + i)
            for i in range(count)]


# Wire format: little-endian {id: u64, seed: u64, degree: u32, payload_len: u32}
# followed by payload bytes. Bit-exact so dumps are replayable across runs.
WIRE_HEADER = struct.Struct("<QQII")


def pack_symbol(sym: EncodingSymbol) -> bytes:
    return WIRE_HEADER.pack(sym.id, sym.seed, sym.degree, len(sym.payload)) + sym.payload


def unpack_symbol(buf: bytes, offset: int = 0) -> tuple[EncodingSymbol, int]:
    """Parse one symbol; returns (symbol, next offset). Neighbors are left
    unresolved (None) until ``resolve_neighbors`` is called."""
    if len(buf) - offset < WIRE_HEADER.size:
        raise InvalidInputError("truncated symbol header")
    sym_id, seed, degree, payload_len = WIRE_HEADER.unpack_from(buf, offset)
    start = offset + WIRE_HEADER.size
    end = start + payload_len
    if len(buf) < end:
        raise InvalidInputError("truncated symbol payload")
    return EncodingSymbol(id=sym_id, seed=seed, degree=degree, neighbors=None,
                          payload=bytes(buf[start:end])), end


def resolve_neighbors(sym: EncodingSymbol, w: int) -> EncodingSymbol:
    """Re-derive the neighbor set of a wire-format symbol for a w-symbol window."""
    if sym.neighbors is not None:
        return sym
    return EncodingSymbol(id=sym.id, seed=sym.seed, degree=sym.degree,
                          neighbors=select_neighbors(sym.seed, w, sym.degree),
                          payload=sym.payload)


@dataclass
class DecodeResult:
    """Outcome of a peeling pass: recovered payloads plus bookkeeping.

    ``recovered`` is the full ordered list of w payloads on success, or a
    partial mapping index -> payload otherwise. ``encoding_used`` counts the
    encoding symbols consumed to cover a previously uncovered input symbol.
    """

    recovered: list[bytes] | dict[int, bytes]
    success: bool
    unresolved: int
    encoding_used: int


class _Pending:
    __slots__ = ("data", "remaining")

    def __init__(self, data: np.ndarray, remaining: set[int]):
        self.data = data
        self.remaining = remaining


class PeelDecoder:
    """Incremental ripple decoder over a window of w symbols of l bytes.

    Covered payloads live in one (w, l) uint8 matrix so the per-symbol
    reduction is a vectorized gather + XOR. Encoding symbols with more than
    one uncovered neighbor wait in per-index adjacency lists; symbols that
    reach exactly one uncovered neighbor join the ripple queue and are
    processed FIFO (the fixpoint does not depend on the order).
    """

    def __init__(self, w: int, l: int, natives=None):
        if w < 1 or l < 1:
            raise InvalidParameterError(f"need w >= 1 and l >= 1, got w={w}, l={l}")
        self.w = w
        self.l = l
        self._payloads = np.zeros((w, l), dtype=np.uint8)
        self._covered = np.zeros(w, dtype=bool)
        self._adj: dict[int, list[_Pending]] = {}
        self._ripple: deque[_Pending] = deque()
        self._uncovered = w
        self.encoding_used = 0
        if natives is not None:
            items = natives.items() if isinstance(natives, Mapping) else natives
            for idx, payload in items:
                self.add_native(idx, payload)

    @property
    def success(self) -> bool:
        return self._uncovered == 0

    @property
    def unresolved(self) -> int:
        return self._uncovered

    def add_native(self, idx: int, payload: bytes) -> None:
        if not 0 <= idx < self.w:
            raise InvalidInputError(f"native index {idx} outside 0..{self.w - 1}")
        if self._covered[idx]:
            raise InvalidInputError(f"duplicate native index {idx}")
        if len(payload) != self.l:
            raise InvalidInputError(f"native payload length {len(payload)} != {self.l}")
        self._covered[idx] = True
        self._payloads[idx] = np.frombuffer(payload, dtype=np.uint8)
        self._uncovered -= 1

    def add_symbol(self, sym: EncodingSymbol) -> None:
        """Queue one encoding symbol, XOR-ing out already covered neighbors.

        Call ``run()`` afterwards (or after a batch) to drain the ripple.
        """
        if sym.neighbors is None:
            raise InvalidInputError("symbol neighbors unresolved; call resolve_neighbors first")
        if len(sym.payload) != self.l:
            raise InvalidInputError(f"payload length {len(sym.payload)} != {self.l}")
        nb = sym.neighbors
        cov = self._covered[nb]
        if cov.all():
            return
        data = np.frombuffer(sym.payload, dtype=np.uint8)
        if cov.any():
            data = data ^ np.bitwise_xor.reduce(self._payloads[nb[cov]], axis=0)
        else:
            data = data.copy()
        pending = _Pending(data, set(nb[~cov].tolist()))
        if len(pending.remaining) == 1:
            self._ripple.append(pending)
        else:
            for j in pending.remaining:
                self._adj.setdefault(j, []).append(pending)

    def run(self) -> None:
        """Peel to fixpoint: repeatedly release symbols with one uncovered
        neighbor. Linear in the total edge count."""
        ripple = self._ripple
        adj = self._adj
        covered = self._covered
        payloads = self._payloads
        while ripple:
            pending = ripple.popleft()
            if len(pending.remaining) != 1:
                continue
            (idx,) = pending.remaining
            if covered[idx]:
                continue
            covered[idx] = True
            payloads[idx] = pending.data
            self._uncovered -= 1
            self.encoding_used += 1
            for other in adj.pop(idx, ()):
                # A symbol released through the adjacency path stays listed
                # under its last neighbor; skip it here or the self-XOR would
                # zero ``pending.data`` while later siblings still need it.
                if other is pending:
                    continue
                rem = other.remaining
                if idx in rem:
                    rem.discard(idx)
                    other.data ^= pending.data
                    if len(rem) == 1:
                        ripple.append(other)

    def pending_rows(self) -> list[tuple[tuple[int, ...], int]]:
        """Undischarged encoding symbols as GF(2) equations.

        Each row is (uncovered neighbor indices, little-endian RHS integer);
        the XOR of those input symbols equals the RHS. Lets a caller finish
        with dense elimination what peeling alone could not."""
        seen: set[int] = set()
        rows: list[tuple[tuple[int, ...], int]] = []
        for lst in self._adj.values():
            for p in lst:
                if id(p) in seen:
                    continue
                seen.add(id(p))
                if p.remaining:
                    rows.append((tuple(sorted(p.remaining)),
                                 int.from_bytes(p.data.tobytes(), "little")))
        return rows

    def covered_map(self) -> dict[int, bytes]:
        return {int(i): self._payloads[i].tobytes() for i in np.flatnonzero(self._covered)}

    def payload(self, idx: int) -> bytes:
        if not self._covered[idx]:
            raise InvalidInputError(f"symbol {idx} not recovered")
        return self._payloads[idx].tobytes()

    def result(self) -> DecodeResult:
        if self.success:
            recovered: list[bytes] | dict[int, bytes] = [
                self._payloads[i].tobytes() for i in range(self.w)
            ]
        else:
            recovered = self.covered_map()
        return DecodeResult(recovered=recovered, success=self.success,
                            unresolved=self._uncovered, encoding_used=self.encoding_used)


def peel_decode(natives, encoding, w: int, l: int) -> DecodeResult:
    """One-shot peeling decode: seed coverage with natives, add every
    encoding symbol, peel to fixpoint."""
    decoder = PeelDecoder(w, l, natives)
    for sym in encoding:
        decoder.add_symbol(sym)
    decoder.run()
    return decoder.result()
