# dostbc/bounds.py — data-rate bounds, noise-covariance partition and per-block rate checks

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .code_core import DistributedCode
from .verify import DEFAULT_DRAWS, DEFAULT_TOL, check_dostbc_cpi, relay_grams

log = logging.getLogger(__name__)

SOURCE_DOSTBC = "Theorem2"
SOURCE_CPI = "Theorem5"
SOURCE_ALAMOUTI = "Alamouti-K2"
SOURCE_GOD = "GOD-4/5"


class PartitionPremiseError(ValueError):
    """Raised when R is not diagonal or a block is not itself a valid CPI code."""


class BoundViolationError(AssertionError):
    """Raised when a verified code beats a proven rate bound."""


def fraction_text(x: Fraction) -> str:
    """Fraction as text: 1/2, or 1 for whole numbers."""
    return str(Fraction(x))


# --------------------------------- BOUNDS ------------------------------------
def dostbc_rate_bound(n: int, k: int) -> Fraction:
    """N / ceil(NK/2)."""
    if n < 1 or k < 1:
        raise ValueError("N and K must be positive")
    return Fraction(n, ceil(n * k / 2))


def cpi_rate_bound(k: int) -> Fraction:
    """1 for K <= 2 (Alamouti reaches it), 1/2 for every K > 2."""
    if k < 1:
        raise ValueError("K must be positive")
    return Fraction(1) if k <= 2 else Fraction(1, 2)


def generalized_design_rate_bound(k: int) -> Fraction:
    """Rate ceiling of generalized complex orthogonal designs used as co-located codes."""
    if k < 1:
        raise ValueError("K must be positive")
    return Fraction(1) if k <= 2 else Fraction(4, 5)


def spectral_efficiency(rate: Fraction, bits_per_symbol: int) -> Fraction:
    """Information bits per channel use (bps/Hz)."""
    return Fraction(rate) * int(bits_per_symbol)


@dataclass
class RateReport:
    kind: str
    rate: Fraction
    bound: Fraction
    bound_source: str
    achieves_bound: bool
    verified: bool = False
    reference_bounds: Dict[str, Fraction] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "rate": fraction_text(self.rate),
            "bound": fraction_text(self.bound),
            "bound_source": self.bound_source,
            "achieves_bound": self.achieves_bound,
            "verified": self.verified,
            "reference_bounds": {k: fraction_text(v) for k, v in self.reference_bounds.items()},
        }


def rate_report(code: DistributedCode, kind: str = "cpi", verified: bool = False) -> RateReport:
    """Compare the code's rate with the bound for ``kind`` ('dostbc' or 'cpi').

    A verified code above its bound raises BoundViolationError.
    """
    n, k = code.n_symbols, code.n_relays
    if kind == "dostbc":
        bound, source = dostbc_rate_bound(n, k), SOURCE_DOSTBC
    elif kind == "cpi":
        bound = cpi_rate_bound(k)
        source = SOURCE_ALAMOUTI if k <= 2 else SOURCE_CPI
    else:
        raise ValueError(f"kind must be 'dostbc' or 'cpi', got {kind!r}")

    rate = code.data_rate
    if verified and rate > bound:
        raise BoundViolationError(f"verified {kind} code has rate {fraction_text(rate)} above {fraction_text(bound)}")
    return RateReport(
        kind=kind,
        rate=rate,
        bound=bound,
        bound_source=source,
        achieves_bound=rate == bound,
        verified=verified,
        reference_bounds={SOURCE_GOD: generalized_design_rate_bound(k)},
    )


# -------------------------------- PARTITION ----------------------------------
@dataclass
class PartitionBlock:
    """One group of columns; indices are 1-based, sub_code is None for all-zero columns."""

    columns: Tuple[int, ...]
    relays: Tuple[int, ...]
    symbols: Tuple[int, ...]
    coefficients: Tuple[int, ...]
    sub_code: Optional[DistributedCode]

    @property
    def dims(self) -> Tuple[int, int, int]:
        """(K_w, T_w, N_w)."""
        return len(self.relays), len(self.columns), len(self.symbols)

    @property
    def rate(self) -> Fraction:
        k_w, t_w, n_w = self.dims
        return Fraction(n_w, t_w)


@dataclass
class PartitionResult:
    code: DistributedCode
    blocks: List[PartitionBlock]

    @property
    def groups(self) -> List[Tuple[int, ...]]:
        return [b.columns for b in self.blocks]

    @property
    def sub_codes(self) -> List[Optional[DistributedCode]]:
        return [b.sub_code for b in self.blocks]

    @property
    def block_dims(self) -> List[Tuple[int, int, int]]:
        return [b.dims for b in self.blocks]


def column_coefficients(code: DistributedCode) -> List[Tuple[int, ...]]:
    """c_t = ([A_k^H A_k + B_k^H B_k]_{tt})_k for every slot t, exactly."""
    diags = [g.diagonal() for g in relay_grams(code)]
    return [tuple(int(diags[k][t].real) for k in range(code.n_relays)) for t in range(code.n_slots)]


def partition(code: DistributedCode) -> PartitionResult:
    """Group slots whose R diagonal entries agree for every channel realization."""
    grams = relay_grams(code)
    for k, g in enumerate(grams, start=1):
        off = g.off_diagonal_nonzero()
        if off:
            i, j = off[0]
            raise PartitionPremiseError(
                f"R is not diagonal: relay {k} couples slots {i + 1} and {j + 1}"
            )

    coeffs = column_coefficients(code)
    order: Dict[Tuple[int, ...], List[int]] = {}
    for t, c in enumerate(coeffs):
        order.setdefault(c, []).append(t)

    a_all = code.a_arrays()
    b_all = code.b_arrays()
    blocks = []
    for c, cols in order.items():
        relays = [k for k in range(code.n_relays) if c[k] != 0]
        sub_a = a_all[np.ix_(relays, range(code.n_symbols), cols)]
        sub_b = b_all[np.ix_(relays, range(code.n_symbols), cols)]
        used = np.nonzero((np.abs(sub_a) + np.abs(sub_b)).sum(axis=(0, 2)) > 0)[0]
        sub_code = None
        if relays and used.size:
            sub_code = DistributedCode.from_arrays(sub_a[:, used, :], sub_b[:, used, :])
        blocks.append(
            PartitionBlock(
                columns=tuple(t + 1 for t in cols),
                relays=tuple(k + 1 for k in relays),
                symbols=tuple(int(n) + 1 for n in used),
                coefficients=c,
                sub_code=sub_code,
            )
        )
    log.debug("partition: %d block(s) over %d slots", len(blocks), code.n_slots)
    return PartitionResult(code, blocks)


@dataclass
class BlockVerdict:
    index: int
    rate: Fraction
    k_w: int
    verdict: str

    def to_dict(self) -> Dict[str, Any]:
        return {"block": self.index, "rate": fraction_text(self.rate), "k_w": self.k_w, "verdict": self.verdict}


def block_rate_check(
    pr: PartitionResult, draws: int = DEFAULT_DRAWS, tol: float = DEFAULT_TOL
) -> List[BlockVerdict]:
    """Each block must be a CPI code; more than two relays force rate exactly 1/2."""
    out = []
    for i, block in enumerate(pr.blocks, start=1):
        if block.sub_code is None:
            continue
        report = check_dostbc_cpi(block.sub_code, draws=draws, tol=tol)
        if not report.verdict:
            raise PartitionPremiseError(f"block {i} is not a row-monomial CPI code: {report.failed_condition}")
        k_w = block.dims[0]
        rate = block.rate
        if k_w > 2:
            if rate != Fraction(1, 2):
                raise BoundViolationError(f"block {i} with K_w={k_w} has rate {fraction_text(rate)}, expected 1/2")
            verdict = "equals 1/2 as required"
        else:
            if rate > 1:
                raise BoundViolationError(f"block {i} with K_w={k_w} has rate {fraction_text(rate)} above 1")
            verdict = "at most 1 allowed"
        out.append(BlockVerdict(i, rate, k_w, verdict))
    return out


def partition_report(code: DistributedCode, kind: str = "cpi", verified: bool = False) -> Dict[str, Any]:
    """Rate, bound, partition and block verdicts as one JSON-ready dict."""
    rr = rate_report(code, kind, verified)
    pr = partition(code)
    verdicts = block_rate_check(pr)
    return {
        "rate": fraction_text(rr.rate),
        "bound": fraction_text(rr.bound),
        "bound_source": rr.bound_source,
        "partition": [
            {"columns": list(b.columns), "relays": list(b.relays), "n_w": b.dims[2]} for b in pr.blocks
        ],
        "verdicts": [v.to_dict() for v in verdicts],
    }

