"""Loss-rate-aware fountain coding with LT and Raptor-style baselines.

Subpackages/modules:
    distributions -- soliton-family degree distributions and analysis helpers
    codec         -- XOR fountain encoder and ripple peeling decoder
    precode       -- systematic sparse+dense precode and its composition
    channel       -- seedable erasure channel and loss-rate estimation
    transfer      -- windowed transfer state machines
    bench         -- CSV-emitting benchmark harness (CLI: lrf-bench)
"""

from .channel import Channel, ChannelConfig, LossRateEstimator, LossReport
from .codec import (DecodeResult, EncodingSymbol, PeelDecoder, SourceBlock,
                    encode_stream, encode_symbol, peel_decode, select_neighbors,
                    xor_combine)
from .distributions import (DegreeDistribution, LossContext, average_degree,
                            ideal_soliton, lr_raptor_dist, lrf_ideal,
                            min_degree, recovery_probability,
                            required_symbols_bound, robust_soliton, sample)
from .errors import (DecodeFailure, InfeasibleCapError, InvalidInputError,
                     InvalidParameterError, NoLossError, SessionFailure)
from .precode import (IntermediateBlock, PrecodeConfig, precode_expand,
                      precode_solve, raptor_decode, raptor_encode)
from .transfer import SessionMetrics, run_session

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
