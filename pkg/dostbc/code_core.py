# dostbc/code_core.py — symbolic code representation, exact arithmetic, code files, constructions

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


class CodeFormatError(ValueError):
    """Raised when a code file or a code description is malformed."""


class UnsupportedSizeError(ValueError):
    """Raised when a construction is asked for a size it cannot build."""


# --------------------------- MONOMIAL COEFFICIENTS ---------------------------
class MonoCoeff(Enum):
    """One entry of an associated matrix: 0, +1, -1, +j or -j."""

    ZERO = "0"
    PLUS_ONE = "1"
    MINUS_ONE = "-1"
    PLUS_J = "j"
    MINUS_J = "-j"

    @property
    def re(self) -> int:
        return _PARTS[self][0]

    @property
    def im(self) -> int:
        return _PARTS[self][1]

    @property
    def token(self) -> str:
        return self.value

    def is_zero(self) -> bool:
        return self is MonoCoeff.ZERO

    def to_complex(self) -> complex:
        return complex(self.re, self.im)

    def conjugate(self) -> "MonoCoeff":
        return MonoCoeff.from_parts(self.re, -self.im)

    def __neg__(self) -> "MonoCoeff":
        return MonoCoeff.from_parts(-self.re, -self.im)

    def __mul__(self, other: "MonoCoeff") -> "MonoCoeff":
        a, b = self.re, self.im
        c, d = other.re, other.im
        return MonoCoeff.from_parts(a * c - b * d, a * d + b * c)

    @classmethod
    def from_parts(cls, re: int, im: int) -> "MonoCoeff":
        try:
            return _BY_PARTS[(int(re), int(im))]
        except KeyError:
            raise ValueError(f"{re}{im:+d}j is not in {{0, ±1, ±j}}") from None

    @classmethod
    def from_token(cls, token: str) -> "MonoCoeff":
        tok = token.strip().lower().replace("+", "")
        if tok in ("-0",):
            tok = "0"
        for c in cls:
            if c.value == tok:
                return c
        raise CodeFormatError(f"unknown entry token {token!r}")


_PARTS: Dict[MonoCoeff, Tuple[int, int]] = {
    MonoCoeff.ZERO: (0, 0),
    MonoCoeff.PLUS_ONE: (1, 0),
    MonoCoeff.MINUS_ONE: (-1, 0),
    MonoCoeff.PLUS_J: (0, 1),
    MonoCoeff.MINUS_J: (0, -1),
}
_BY_PARTS: Dict[Tuple[int, int], MonoCoeff] = {v: k for k, v in _PARTS.items()}

UNIT_COEFFS: Tuple[MonoCoeff, ...] = (
    MonoCoeff.PLUS_ONE,
    MonoCoeff.MINUS_ONE,
    MonoCoeff.PLUS_J,
    MonoCoeff.MINUS_J,
)

Grid = Tuple[Tuple[MonoCoeff, ...], ...]


# ------------------------- EXACT GAUSSIAN INTEGERS ---------------------------
class GaussianIntMatrix:
    """Matrix of Gaussian integers held as two int64 arrays; all arithmetic is exact."""

    __slots__ = ("re", "im")

    def __init__(self, re: np.ndarray, im: Optional[np.ndarray] = None):
        re = np.asarray(re, dtype=np.int64)
        im = np.zeros_like(re) if im is None else np.asarray(im, dtype=np.int64)
        if re.shape != im.shape or re.ndim != 2:
            raise ValueError("real and imaginary parts must be 2-D arrays of equal shape")
        self.re = re
        self.im = im

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "GaussianIntMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def from_grid(cls, grid: Sequence[Sequence[MonoCoeff]]) -> "GaussianIntMatrix":
        re = np.array([[c.re for c in row] for row in grid], dtype=np.int64)
        im = np.array([[c.im for c in row] for row in grid], dtype=np.int64)
        return cls(re, im)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.re.shape  # type: ignore[return-value]

    @property
    def T(self) -> "GaussianIntMatrix":
        return GaussianIntMatrix(self.re.T.copy(), self.im.T.copy())

    @property
    def H(self) -> "GaussianIntMatrix":
        return GaussianIntMatrix(self.re.T.copy(), -self.im.T)

    def conj(self) -> "GaussianIntMatrix":
        return GaussianIntMatrix(self.re.copy(), -self.im)

    def __add__(self, other: "GaussianIntMatrix") -> "GaussianIntMatrix":
        return GaussianIntMatrix(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "GaussianIntMatrix") -> "GaussianIntMatrix":
        return GaussianIntMatrix(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "GaussianIntMatrix":
        return GaussianIntMatrix(-self.re, -self.im)

    def __matmul__(self, other: "GaussianIntMatrix") -> "GaussianIntMatrix":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        re = self.re @ other.re - self.im @ other.im
        im = self.re @ other.im + self.im @ other.re
        return GaussianIntMatrix(re, im)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GaussianIntMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and bool(np.array_equal(self.re, other.re))
            and bool(np.array_equal(self.im, other.im))
        )

    __hash__ = None  # type: ignore[assignment]

    def is_zero(self) -> bool:
        return not (self.re.any() or self.im.any())

    def off_diagonal_nonzero(self) -> List[Tuple[int, int]]:
        """Positions (i, j), i != j, holding a non-zero entry."""
        mask = (self.re != 0) | (self.im != 0)
        np.fill_diagonal(mask, False)
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(mask))]

    def is_diagonal(self) -> bool:
        return not self.off_diagonal_nonzero()

    def diagonal(self) -> List[complex]:
        return [complex(int(r), int(i)) for r, i in zip(np.diag(self.re), np.diag(self.im))]

    def to_complex(self) -> np.ndarray:
        return self.re.astype(float) + 1j * self.im.astype(float)

    def to_lists(self) -> List[List[str]]:
        out = []
        for r_row, i_row in zip(self.re.tolist(), self.im.tolist()):
            out.append([_fmt_gaussian(r, i) for r, i in zip(r_row, i_row)])
        return out

    def __repr__(self) -> str:
        return f"GaussianIntMatrix({self.to_lists()})"


def _fmt_gaussian(re: int, im: int) -> str:
    if im == 0:
        return str(re)
    if re == 0:
        return f"{im}j"
    return f"{re}{im:+d}j"


# ------------------------------- CODE TYPES ----------------------------------
@dataclass(frozen=True)
class AssociatedPair:
    """A_k and B_k of one relay: entry (n, t) scales s_n (A) or s_n* (B) in slot t."""

    a: Grid
    b: Grid

    def __post_init__(self):
        a = _freeze_grid(self.a)
        b = _freeze_grid(self.b)
        if _grid_shape(a) != _grid_shape(b):
            raise CodeFormatError(f"A is {_grid_shape(a)} but B is {_grid_shape(b)}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def shape(self) -> Tuple[int, int]:
        return _grid_shape(self.a)

    def a_matrix(self) -> GaussianIntMatrix:
        return GaussianIntMatrix.from_grid(self.a) if self.a else GaussianIntMatrix.zeros(0, 0)

    def b_matrix(self) -> GaussianIntMatrix:
        return GaussianIntMatrix.from_grid(self.b) if self.b else GaussianIntMatrix.zeros(0, 0)


@dataclass(frozen=True)
class DistributedCode:
    """K associated pairs of size N x T; the complete description of a distributed code."""

    n_symbols: int
    n_relays: int
    n_slots: int
    relays: Tuple[AssociatedPair, ...]

    def __post_init__(self):
        relays = tuple(self.relays)
        object.__setattr__(self, "relays", relays)
        for name in ("n_symbols", "n_relays", "n_slots"):
            if int(getattr(self, name)) < 1:
                raise CodeFormatError(f"{name} must be a positive integer")
        if len(relays) != self.n_relays:
            raise CodeFormatError(f"header declares K={self.n_relays} but {len(relays)} relays given")
        for k, pair in enumerate(relays, start=1):
            if pair.shape != (self.n_symbols, self.n_slots):
                raise CodeFormatError(
                    f"relay {k}: matrices are {pair.shape[0]}x{pair.shape[1]}, "
                    f"expected {self.n_symbols}x{self.n_slots}"
                )

    @property
    def data_rate(self) -> Fraction:
        return Fraction(self.n_symbols, self.n_slots)

    def a_arrays(self) -> np.ndarray:
        """A_k stacked as a complex (K, N, T) array."""
        return np.array([p.a_matrix().to_complex() for p in self.relays]).reshape(
            self.n_relays, self.n_symbols, self.n_slots
        )

    def b_arrays(self) -> np.ndarray:
        """B_k stacked as a complex (K, N, T) array."""
        return np.array([p.b_matrix().to_complex() for p in self.relays]).reshape(
            self.n_relays, self.n_symbols, self.n_slots
        )

    @classmethod
    def from_arrays(cls, a: np.ndarray, b: np.ndarray) -> "DistributedCode":
        """Build a code from (K, N, T) arrays whose entries lie in {0, ±1, ±j}."""
        a = np.asarray(a)
        b = np.asarray(b)
        if a.shape != b.shape or a.ndim != 3:
            raise CodeFormatError(f"A stack {a.shape} and B stack {b.shape} must both be (K, N, T)")
        k, n, t = a.shape
        relays = tuple(AssociatedPair(_grid_from_array(a[i]), _grid_from_array(b[i])) for i in range(k))
        return cls(n, k, t, relays)


def _freeze_grid(grid) -> Grid:
    rows = []
    for row in grid:
        rows.append(tuple(c if isinstance(c, MonoCoeff) else MonoCoeff.from_token(str(c)) for c in row))
    return tuple(rows)


def _grid_shape(grid: Grid) -> Tuple[int, int]:
    widths = {len(r) for r in grid}
    if len(widths) > 1:
        raise CodeFormatError(f"ragged matrix with row widths {sorted(widths)}")
    return len(grid), (widths.pop() if widths else 0)


def _grid_from_array(m: np.ndarray) -> Grid:
    return tuple(
        tuple(MonoCoeff.from_parts(int(round(z.real)), int(round(z.imag))) for z in row)
        for row in np.asarray(m, dtype=complex)
    )


def _zero_grid(n: int, t: int) -> Grid:
    return tuple(tuple(MonoCoeff.ZERO for _ in range(t)) for _ in range(n))


# ------------------------------- CODE FILES ----------------------------------
HEADER_TAG = "dostbc"
RELAY_TAG = "relay"
SPLIT_TAG = "--"


def parse_code(text: str) -> DistributedCode:
    """Parse the line-oriented code-file format into a validated DistributedCode."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append((lineno, body))
    if not lines:
        raise CodeFormatError("empty code file")

    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 4 or parts[0] != HEADER_TAG:
        raise CodeFormatError(f"line {lineno}: expected header 'dostbc N K T', got {header!r}")
    try:
        n, k, t = (int(p) for p in parts[1:])
    except ValueError:
        raise CodeFormatError(f"line {lineno}: N, K, T must be integers") from None
    if min(n, k, t) < 1:
        raise CodeFormatError(f"line {lineno}: N, K, T must be positive")

    pos = 1
    relays: List[AssociatedPair] = []
    while pos < len(lines):
        lineno, body = lines[pos]
        tag = body.split()
        if len(tag) != 2 or tag[0] != RELAY_TAG:
            raise CodeFormatError(f"line {lineno}: expected 'relay {len(relays) + 1}', got {body!r}")
        if tag[1] != str(len(relays) + 1):
            raise CodeFormatError(f"line {lineno}: relays must be numbered 1..K in order")
        pos += 1
        a_rows, pos = _read_rows(lines, pos, t)
        if pos >= len(lines) or lines[pos][1] != SPLIT_TAG:
            raise CodeFormatError(f"relay {len(relays) + 1}: missing '--' between A and B")
        pos += 1
        b_rows, pos = _read_rows(lines, pos, t)
        if len(a_rows) != n or len(b_rows) != n:
            raise CodeFormatError(
                f"relay {len(relays) + 1}: dimension mismatch, A has {len(a_rows)} rows and "
                f"B has {len(b_rows)} rows, header says N={n}"
            )
        relays.append(AssociatedPair(tuple(a_rows), tuple(b_rows)))

    if len(relays) != k:
        raise CodeFormatError(f"header declares K={k} but the file holds {len(relays)} relays")
    return DistributedCode(n, k, t, tuple(relays))


def _read_rows(lines, pos: int, width: int):
    rows = []
    while pos < len(lines):
        lineno, body = lines[pos]
        if body == SPLIT_TAG or body.split()[0] == RELAY_TAG:
            break
        tokens = body.split()
        if len(tokens) != width:
            raise CodeFormatError(f"line {lineno}: dimension mismatch, {len(tokens)} entries where T={width}")
        try:
            rows.append(tuple(MonoCoeff.from_token(tok) for tok in tokens))
        except CodeFormatError as e:
            raise CodeFormatError(f"line {lineno}: {e}") from None
        pos += 1
    return rows, pos


def serialize_code(code: DistributedCode) -> str:
    """Canonical code-file text; parse_code(serialize_code(c)) == c."""
    out = [f"{HEADER_TAG} {code.n_symbols} {code.n_relays} {code.n_slots}"]
    for k, pair in enumerate(code.relays, start=1):
        out.append(f"{RELAY_TAG} {k}")
        out.extend(" ".join(c.token for c in row) for row in pair.a)
        out.append(SPLIT_TAG)
        out.extend(" ".join(c.token for c in row) for row in pair.b)
    return "\n".join(out) + "\n"


# ------------------------------- RENDERING -----------------------------------
def render_code_matrix(
    code: DistributedCode,
    cpi: bool,
    channels=None,
    symbols: Optional[Sequence[complex]] = None,
):
    """Render the K x T code matrix.

    Without ``symbols`` the result is a list of lists of strings built from the
    tokens s_n, s_n*, h_k, h_k*. With ``symbols`` the result is a complex numpy
    array; the no-CSI form then needs ``channels`` (anything with an ``h``).
    """
    if symbols is None:
        return [
            [_render_entry(pair, t, k, cpi) for t in range(code.n_slots)]
            for k, pair in enumerate(code.relays, start=1)
        ]
    s = np.asarray(symbols, dtype=complex).reshape(-1)
    if s.size != code.n_symbols:
        raise ValueError(f"expected {code.n_symbols} symbols, got {s.size}")
    if cpi:
        h = np.ones(code.n_relays, dtype=complex)
    else:
        if channels is None:
            raise ValueError("numeric no-CSI rendering needs the first-hop channels h_k")
        h = np.asarray(channels.h, dtype=complex).reshape(-1)
        if h.size != code.n_relays:
            raise ValueError(f"expected {code.n_relays} channel gains, got {h.size}")
    a = code.a_arrays()
    b = code.b_arrays()
    return h[:, None] * np.einsum("n,knt->kt", s, a) + np.conj(h)[:, None] * np.einsum("n,knt->kt", np.conj(s), b)


def _render_entry(pair: AssociatedPair, t: int, k: int, cpi: bool) -> str:
    terms = []
    for n, row in enumerate(pair.a, start=1):
        c = row[t]
        if not c.is_zero():
            terms.append(_term(c, f"s{n}", None if cpi else f"h{k}"))
    for n, row in enumerate(pair.b, start=1):
        c = row[t]
        if not c.is_zero():
            terms.append(_term(c, f"s{n}*", None if cpi else f"h{k}*"))
    if not terms:
        return "0"
    text = terms[0]
    for term in terms[1:]:
        text += f" - {term[1:]}" if term.startswith("-") else f" + {term}"
    return text


def _term(c: MonoCoeff, sym: str, gain: Optional[str]) -> str:
    prefix = {"1": "", "-1": "-", "j": "j", "-j": "-j"}[c.token]
    if gain is None:
        return f"{prefix}{sym}"
    if prefix in ("j", "-j"):
        return f"{prefix} {gain} {sym}"
    return f"{prefix}{gain} {sym}"


# ------------------------------ CONSTRUCTIONS --------------------------------
# Square real orthogonal designs, time-major: entry (t, k) = sign * x_index.
# Relay k of a distributed code reads column k of the design.
_REAL_DESIGNS: Dict[int, Tuple[Tuple[int, ...], ...]] = {
    2: (
        (1, 2),
        (-2, 1),
    ),
    4: (
        (1, 2, 3, 4),
        (-2, 1, -4, 3),
        (-3, 4, 1, -2),
        (-4, -3, 2, 1),
    ),
    8: (
        (1, 2, 3, 4, 5, 6, 7, 8),
        (-2, 1, 4, -3, 6, -5, -8, 7),
        (-3, -4, 1, 2, 7, 8, -5, -6),
        (-4, 3, -2, 1, 8, -7, 6, -5),
        (-5, -6, -7, -8, 1, 2, 3, 4),
        (-6, 5, -8, 7, -2, 1, -4, 3),
        (-7, 8, 5, -6, -3, 4, 1, -2),
        (-8, -7, 6, 5, -4, -3, 2, 1),
    ),
}


def design_order_for(k: int) -> int:
    """Smallest square real orthogonal design that has at least k columns."""
    for order in sorted(_REAL_DESIGNS):
        if k <= order:
            return order
    raise UnsupportedSizeError(f"no rate-one real orthogonal design with {k} columns")


def construct_alamouti() -> DistributedCode:
    """Relay 1 sends [s1, s2], relay 2 sends [-s2*, s1*]."""
    one, zero, neg = MonoCoeff.PLUS_ONE, MonoCoeff.ZERO, MonoCoeff.MINUS_ONE
    relay1 = AssociatedPair(((one, zero), (zero, one)), _zero_grid(2, 2))
    relay2 = AssociatedPair(_zero_grid(2, 2), ((zero, one), (neg, zero)))
    return DistributedCode(2, 2, 2, (relay1, relay2))


def construct_rate_halving(n: int, k: int) -> DistributedCode:
    """[G(s), G(s)*] built on a square real orthogonal design; rate exactly 1/2.

    k in 2..8 is supported; n must equal the order of the design the k columns
    are taken from (2 for k=2, 4 for k=3..4, 8 for k=5..8).
    """
    if k < 2 or k > max(_REAL_DESIGNS):
        raise UnsupportedSizeError(f"rate-halving codes are built for 2 <= K <= 8, got K={k}")
    order = design_order_for(k)
    if n != order:
        raise UnsupportedSizeError(f"K={k} uses the order-{order} design, so N must be {order}, got N={n}")
    design = _REAL_DESIGNS[order]
    t_half = order
    relays = []
    for col in range(k):
        a = np.zeros((n, 2 * t_half), dtype=complex)
        b = np.zeros((n, 2 * t_half), dtype=complex)
        for t in range(t_half):
            entry = design[t][col]
            sym = abs(entry) - 1
            sign = 1 if entry > 0 else -1
            a[sym, t] = sign
            b[sym, t_half + t] = sign
        relays.append(AssociatedPair(_grid_from_array(a), _grid_from_array(b)))
    return DistributedCode(n, k, 2 * t_half, tuple(relays))


def construct_repetition(k: int) -> DistributedCode:
    """One symbol, relay k forwards it alone in slot k; rate 1/K."""
    if k < 1:
        raise UnsupportedSizeError("repetition needs at least one relay")
    relays = []
    for i in range(k):
        a = np.zeros((1, k), dtype=complex)
        a[0, i] = 1
        relays.append(AssociatedPair(_grid_from_array(a), _zero_grid(1, k)))
    return DistributedCode(1, k, k, tuple(relays))


def construct_paired_alamouti(n: int, k: int) -> DistributedCode:
    """No-CSI code for even n and k: one Alamouti block per (relay pair, symbol pair).

    T = n*k/2, which meets N / ceil(NK/2) for even N and K.
    """
    if n < 2 or k < 2 or n % 2 or k % 2:
        raise UnsupportedSizeError(f"paired-Alamouti codes need even N and K, got N={n}, K={k}")
    t_total = n * k // 2
    a = np.zeros((k, n, t_total), dtype=complex)
    b = np.zeros((k, n, t_total), dtype=complex)
    for p in range(k // 2):
        first, second = 2 * p, 2 * p + 1
        for q in range(n // 2):
            s_a, s_b = 2 * q, 2 * q + 1
            t0 = 2 * (p * (n // 2) + q)
            a[first, s_a, t0] = 1
            a[first, s_b, t0 + 1] = 1
            b[second, s_b, t0] = -1
            b[second, s_a, t0 + 1] = 1
    return DistributedCode.from_arrays(a, b)


CONSTRUCTIONS = {
    "alamouti": lambda n, k: construct_alamouti(),
    "rate-halving": construct_rate_halving,
    "repetition": lambda n, k: construct_repetition(k),
    "paired-alamouti": construct_paired_alamouti,
}


def construct(family: str, n: int, k: int) -> DistributedCode:
    """Dispatch by family name (alamouti, rate-halving, repetition, paired-alamouti)."""
    try:
        builder = CONSTRUCTIONS[family]
    except KeyError:
        raise UnsupportedSizeError(f"unknown construction {family!r}; choose from {sorted(CONSTRUCTIONS)}") from None
    return builder(n, k)
