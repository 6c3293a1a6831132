# dostbc/oracle.py — exhaustive search over small structured code spaces

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from multiprocessing import Pool
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .bounds import cpi_rate_bound, dostbc_rate_bound, fraction_text, rate_report
from .code_core import DistributedCode, serialize_code
from .verify import check_dostbc, check_dostbc_cpi, check_gram_conditions

log = logging.getLogger(__name__)

ROW_MONOMIAL_CPI = "row_monomial_cpi"
COLUMN_MONOMIAL_DOSTBC = "column_monomial_dostbc"
STRUCTURES = (ROW_MONOMIAL_CPI, COLUMN_MONOMIAL_DOSTBC)

DEFAULT_BUDGET = 10**9
PROGRESS_EVERY = 10**6

# choice c > 0 encodes (position, unit) = divmod(c - 1, 4)
UNITS = np.array([1, -1, 1j, -1j], dtype=complex)
_UNIT_CONJ = (0, 1, 3, 2)
_UNIT_MUL = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 1, 0], [3, 2, 0, 1]]


class BudgetExceededError(RuntimeError):
    """Raised before any output when a space holds more raw candidates than the budget allows."""

    def __init__(self, raw: int, budget: int):
        super().__init__(f"search space holds {raw} raw candidates, budget is {budget}")
        self.raw = raw
        self.budget = budget


@dataclass(frozen=True)
class SearchSpace:
    n: int
    k: int
    t: int
    structure: str = ROW_MONOMIAL_CPI
    canonicalize: bool = False

    def __post_init__(self):
        if min(self.n, self.k, self.t) < 1:
            raise ValueError("n, k and t must be positive")
        if self.structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {STRUCTURES}, got {self.structure!r}")

    @property
    def is_cpi(self) -> bool:
        return self.structure == ROW_MONOMIAL_CPI

    @property
    def choices_per_cell(self) -> int:
        """Row space: a slot or none per row; column space: a symbol or none per column."""
        return 4 * self.t + 1 if self.is_cpi else 4 * self.n + 1

    @property
    def cells_per_relay(self) -> int:
        return 2 * self.n if self.is_cpi else 2 * self.t

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "t": self.t,
            "structure": self.structure,
            "canonicalize": self.canonicalize,
        }


def raw_count(space: SearchSpace) -> int:
    return space.choices_per_cell ** (space.cells_per_relay * space.k)


def _check_budget(space: SearchSpace, budget: int) -> int:
    raw = raw_count(space)
    if raw > budget:
        raise BudgetExceededError(raw, budget)
    return raw


# ------------------------------- DECODING ------------------------------------
def _relay_arrays(space: SearchSpace, cells: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """(A, B) of one relay, each N x T, from its 2N (row space) or 2T (column space) choices."""
    n, t = space.n, space.t
    a = np.zeros((n, t), dtype=complex)
    b = np.zeros((n, t), dtype=complex)
    if space.is_cpi:
        for idx, c in enumerate(cells):
            if c:
                pos, u = divmod(c - 1, 4)
                target = a if idx < n else b
                target[idx % n, pos] = UNITS[u]
    else:
        for idx, c in enumerate(cells):
            if c:
                pos, u = divmod(c - 1, 4)
                target = a if idx < t else b
                target[pos, idx % t] = UNITS[u]
    return a, b


def decode_candidate(space: SearchSpace, choice: Sequence[int]) -> DistributedCode:
    per = space.cells_per_relay
    a = np.zeros((space.k, space.n, space.t), dtype=complex)
    b = np.zeros_like(a)
    for k in range(space.k):
        a[k], b[k] = _relay_arrays(space, choice[k * per:(k + 1) * per])
    return DistributedCode.from_arrays(a, b)


def _is_degenerate(space: SearchSpace, choice: Sequence[int]) -> bool:
    """Some symbol appears in no relay at all."""
    present = [False] * space.n
    if space.is_cpi:
        for idx, c in enumerate(choice):
            if c:
                present[idx % space.n] = True
    else:
        for c in choice:
            if c:
                present[(c - 1) // 4] = True
    return not all(present)


# ---------------------------- CANONICAL FORMS --------------------------------
def _transform(space: SearchSpace, choice: Sequence[int], perm: Sequence[int], rot: Sequence[int]) -> Tuple[int, ...]:
    """Apply a slot permutation and a per-symbol unit rotation to an encoded candidate.

    Symbol n scaled by unit u multiplies A row n by u and B row n by conj(u).
    """
    out = []
    n_sym = space.n
    if space.is_cpi:
        for idx, c in enumerate(choice):
            if not c:
                out.append(0)
                continue
            pos, u = divmod(c - 1, 4)
            sym = idx % n_sym
            is_b = (idx // n_sym) % 2 == 1
            r = _UNIT_CONJ[rot[sym]] if is_b else rot[sym]
            out.append(4 * perm[pos] + _UNIT_MUL[u][r] + 1)
        return tuple(out)

    t = space.t
    per = space.cells_per_relay
    moved = [0] * len(choice)
    for idx, c in enumerate(choice):
        relay, cell = divmod(idx, per)
        is_b, slot = divmod(cell, t)
        if c:
            sym, u = divmod(c - 1, 4)
            r = _UNIT_CONJ[rot[sym]] if is_b else rot[sym]
            c = 4 * sym + _UNIT_MUL[u][r] + 1
        moved[relay * per + is_b * t + perm[slot]] = c
    return tuple(moved)


def canonical_form(space: SearchSpace, choice: Sequence[int]) -> Tuple[int, ...]:
    """Lexicographically smallest image of the candidate under slot permutations and symbol rotations."""
    best = tuple(choice)
    for perm in itertools.permutations(range(space.t)):
        for rot in itertools.product(range(4), repeat=space.n):
            img = _transform(space, choice, perm, rot)
            if img < best:
                best = img
    return best


def _is_canonical(space: SearchSpace, choice: Tuple[int, ...]) -> bool:
    for perm in itertools.permutations(range(space.t)):
        for rot in itertools.product(range(4), repeat=space.n):
            if _transform(space, choice, perm, rot) < choice:
                return False
    return True


# ------------------------------- ENUMERATION ---------------------------------
def _choices(space: SearchSpace, first: Optional[Sequence[int]] = None) -> Iterator[Tuple[int, ...]]:
    width = space.cells_per_relay * space.k
    digits = range(space.choices_per_cell)
    if first is None:
        yield from itertools.product(digits, repeat=width)
        return
    for head in first:
        for tail in itertools.product(digits, repeat=width - 1):
            yield (head,) + tail


def _stream(space: SearchSpace, first: Optional[Sequence[int]] = None) -> Iterator[Tuple[int, ...]]:
    seen = 0
    for choice in _choices(space, first):
        seen += 1
        if seen % PROGRESS_EVERY == 0:
            log.info("oracle %s: %d candidates scanned", _label(space), seen)
        if _is_degenerate(space, choice):
            continue
        if space.canonicalize and not _is_canonical(space, choice):
            continue
        yield choice


def enumerate_codes(space: SearchSpace, budget: int = DEFAULT_BUDGET) -> Iterator[DistributedCode]:
    """Every non-degenerate structured candidate in lexicographic order.

    With ``space.canonicalize`` only orbit-minimal candidates are produced.
    The budget is checked before anything is yielded.
    """
    _check_budget(space, budget)
    return (decode_candidate(space, c) for c in _stream(space))


def _label(space: SearchSpace) -> str:
    return f"{space.structure} N={space.n} K={space.k} T={space.t}"


# -------------------------------- VERIFYING ----------------------------------
def verify_candidate(space: SearchSpace, code: DistributedCode) -> bool:
    if space.is_cpi:
        return check_dostbc_cpi(code).verdict
    return check_gram_conditions(code).verdict and check_dostbc(code).verdict


@dataclass
class SearchResult:
    space: SearchSpace
    raw_count: int
    enumerated: int
    verdict: bool
    witness: Optional[DistributedCode] = None
    method: str = "clique"

    @property
    def witnesses(self) -> List[DistributedCode]:
        return [self.witness] if self.witness is not None else []

    def to_dict(self) -> Dict[str, Any]:
        return {
            "space": self.space.to_dict(),
            "raw_count": self.raw_count,
            "enumerated": self.enumerated,
            "witnesses": [serialize_code(w) for w in self.witnesses],
            "verdict": self.verdict,
            "method": self.method,
        }


def _scan_range(args) -> Tuple[int, Optional[Tuple[int, ...]]]:
    space, first = args
    count = 0
    for choice in _stream(space, first):
        count += 1
        if verify_candidate(space, decode_candidate(space, choice)):
            return count, choice
    return count, None


def _brute_force(space: SearchSpace, raw: int, workers: int) -> SearchResult:
    digits = list(range(space.choices_per_cell))
    if workers <= 1:
        count, found = _scan_range((space, None))
    else:
        ranges = [list(chunk) for chunk in np.array_split(digits, min(workers, len(digits))) if len(chunk)]
        with Pool(min(workers, len(ranges))) as pool:
            results = pool.map(_scan_range, [(space, [int(d) for d in r]) for r in ranges])
        count = sum(c for c, _ in results)
        found = next((w for _, w in results if w is not None), None)
    witness = decode_candidate(space, found) if found is not None else None
    return SearchResult(space, raw, count, found is not None, witness, "brute_force")


# ------------------------------ CLIQUE SEARCH --------------------------------
def _relay_candidates(space: SearchSpace) -> Tuple[np.ndarray, np.ndarray]:
    """All single-relay (A, B) pairs that can sit in a valid code on their own."""
    keep_a, keep_b = [], []
    for cells in itertools.product(range(space.choices_per_cell), repeat=space.cells_per_relay):
        a, b = _relay_arrays(space, cells)
        if _self_ok(space, a, b):
            keep_a.append(a)
            keep_b.append(b)
    shape = (0, space.n, space.t)
    return (
        np.array(keep_a).reshape(-1, space.n, space.t) if keep_a else np.zeros(shape, complex),
        np.array(keep_b).reshape(-1, space.n, space.t) if keep_b else np.zeros(shape, complex),
    )


def _self_ok(space: SearchSpace, a: np.ndarray, b: np.ndarray) -> bool:
    occupied = (a != 0).astype(int) + (b != 0).astype(int)
    if (occupied.sum(axis=0) > 1).any():
        return False
    if space.is_cpi:
        gram = a @ a.conj().T + (b @ b.conj().T).T
    else:
        gram = a @ a.conj().T + b.conj() @ b.T
    if np.any(gram - np.diag(np.diag(gram))) or np.any(np.diag(gram).real <= 0):
        return False
    ab = a @ b.conj().T
    ba = b @ a.conj().T
    return not (np.any(ab + ab.T) or np.any(ba + ba.T))


def _compatibility(space: SearchSpace, a: np.ndarray, b: np.ndarray, chunk: int = 256) -> np.ndarray:
    """compat[i, j]: relays i and j satisfy every pairwise channel-free condition."""
    m = a.shape[0]
    compat = np.zeros((m, m), dtype=bool)
    ac, bc = a.conj(), b.conj()
    for lo in range(0, m, chunk):
        ai, bi = a[lo:lo + chunk], b[lo:lo + chunk]
        aa = np.einsum("int,jmt->ijnm", ai, ac)
        bb = np.einsum("int,jmt->ijnm", bi, bc)
        ab = np.einsum("int,jmt->ijnm", ai, bc)
        ba = np.einsum("int,jmt->ijnm", bi, ac)
        ok = ~np.any(ab + ab.transpose(0, 1, 3, 2), axis=(2, 3))
        ok &= ~np.any(ba + ba.transpose(0, 1, 3, 2), axis=(2, 3))
        if space.is_cpi:
            ok &= ~np.any(aa + bb.transpose(0, 1, 3, 2), axis=(2, 3))
        else:
            ok &= ~np.any(aa, axis=(2, 3)) & ~np.any(bb, axis=(2, 3))
        compat[lo:lo + chunk] = ok
    return compat


def _clique_search(space: SearchSpace, raw: int) -> SearchResult:
    a, b = _relay_candidates(space)
    compat = _compatibility(space, a, b) if a.shape[0] else np.zeros((0, 0), dtype=bool)
    log.info("oracle %s: %d single-relay candidates survive", _label(space), a.shape[0])
    tried = 0

    def extend(chosen: List[int], allowed: np.ndarray) -> Optional[DistributedCode]:
        nonlocal tried
        if len(chosen) == space.k:
            tried += 1
            code = DistributedCode.from_arrays(a[chosen], b[chosen])
            return code if verify_candidate(space, code) else None
        for i in np.nonzero(allowed)[0]:
            nxt = allowed & compat[i]
            nxt[: i + 1] = False
            found = extend(chosen + [int(i)], nxt)
            if found is not None:
                return found
        return None

    witness = extend([], np.ones(a.shape[0], dtype=bool)) if a.shape[0] else None
    return SearchResult(space, raw, tried, witness is not None, witness, "clique")


# ------------------------------- PUBLIC API ----------------------------------
def exists_code(
    space: SearchSpace,
    budget: int = DEFAULT_BUDGET,
    method: str = "clique",
    workers: int = 1,
) -> SearchResult:
    """Whether the space holds a verified code, with the first witness found.

    ``clique`` builds codes relay by relay from pairwise-compatible single-relay
    candidates; ``brute_force`` verifies every enumerated candidate. Both are
    exhaustive and return the same verdict.
    """
    raw = _check_budget(space, budget)
    if method == "clique":
        result = _clique_search(space, raw)
    elif method == "brute_force":
        result = _brute_force(space, raw, workers)
    else:
        raise ValueError(f"method must be 'clique' or 'brute_force', got {method!r}")

    if result.witness is not None:
        kind = "cpi" if space.is_cpi else "dostbc"
        rate_report(result.witness, kind, verified=True)
    log.info("oracle %s: %s", _label(space), "found" if result.verdict else "none")
    return result


def bound_for(structure: str, n: int, k: int) -> Fraction:
    return cpi_rate_bound(k) if structure == ROW_MONOMIAL_CPI else dostbc_rate_bound(n, k)


@dataclass
class MaxRateResult:
    n: int
    k: int
    t_max: int
    structure: str
    minimal_t: Optional[int]
    witness: Optional[DistributedCode]
    per_t: Dict[int, str] = field(default_factory=dict)

    @property
    def rate(self) -> Optional[Fraction]:
        return Fraction(self.n, self.minimal_t) if self.minimal_t else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "t_max": self.t_max,
            "structure": self.structure,
            "minimal_t": self.minimal_t,
            "rate": fraction_text(self.rate) if self.rate is not None else None,
            "verdict": "found" if self.minimal_t else f"none <= T_max={self.t_max}",
            "bound": fraction_text(bound_for(self.structure, self.n, self.k)),
            "per_t": {str(t): v for t, v in self.per_t.items()},
            "witnesses": [serialize_code(self.witness)] if self.witness is not None else [],
        }


def max_rate(
    n: int,
    k: int,
    t_max: int,
    structure: str = ROW_MONOMIAL_CPI,
    budget: int = DEFAULT_BUDGET,
    method: str = "clique",
    workers: int = 1,
    canonicalize: bool = False,
) -> MaxRateResult:
    """Sweep T = 1..t_max and stop at the smallest T that admits a code.

    ``method``, ``workers`` and ``canonicalize`` apply to every T of the sweep.
    """
    per_t: Dict[int, str] = {}
    for t in range(1, t_max + 1):
        space = SearchSpace(n, k, t, structure, canonicalize)
        try:
            res = exists_code(space, budget=budget, method=method, workers=workers)
        except BudgetExceededError as e:
            per_t[t] = f"budget exceeded ({e.raw} > {e.budget})"
            log.warning("oracle %s: %s", _label(space), per_t[t])
            continue
        per_t[t] = "found" if res.verdict else "none"
        if res.verdict:
            return MaxRateResult(n, k, t_max, structure, t, res.witness, per_t)
    return MaxRateResult(n, k, t_max, structure, None, None, per_t)


SEARCH_PRESETS: Dict[str, SearchSpace] = {
    "cpi-n1k2t1": SearchSpace(1, 2, 1, ROW_MONOMIAL_CPI),
    "cpi-n1k2t2": SearchSpace(1, 2, 2, ROW_MONOMIAL_CPI),
    "cpi-n1k3t1": SearchSpace(1, 3, 1, ROW_MONOMIAL_CPI),
    "cpi-n1k3t2": SearchSpace(1, 3, 2, ROW_MONOMIAL_CPI),
    "cpi-n2k2t1": SearchSpace(2, 2, 1, ROW_MONOMIAL_CPI),
    "dostbc-n1k2t1": SearchSpace(1, 2, 1, COLUMN_MONOMIAL_DOSTBC),
    "dostbc-n1k2t2": SearchSpace(1, 2, 2, COLUMN_MONOMIAL_DOSTBC),
}
