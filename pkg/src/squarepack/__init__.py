"""Perfect packing of a square by squares of sidelength n^-t, 1/2 < t < 1."""

from .block import BlockResult, BlockSpec, PreconditionViolation, pack_block
from .certificate import PackingCertificate
from .engine import PackingState, RunReport, WidthTooSmall, init, run, step
from .geometry import Family, PlacedSquare, Rect
from .series import Params, SeriesValue, partial_sum, perimeter_budget, side_length, tail_sum
from .verify import verify_certificate

__all__ = [
    "BlockResult",
    "BlockSpec",
    "Family",
    "PackingCertificate",
    "PackingState",
    "Params",
    "PlacedSquare",
    "PreconditionViolation",
    "Rect",
    "RunReport",
    "SeriesValue",
    "WidthTooSmall",
    "init",
    "pack_block",
    "partial_sum",
    "perimeter_budget",
    "run",
    "side_length",
    "step",
    "tail_sum",
    "verify_certificate",
]
