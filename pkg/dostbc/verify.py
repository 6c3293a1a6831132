# dostbc/verify.py — structural and orthogonality checks on distributed codes

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .code_core import DistributedCode, GaussianIntMatrix, MonoCoeff

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_DRAWS = 20
BORDERLINE_FACTOR = 1e3


class ChannelMismatchError(ValueError):
    """Raised when a channel realization does not have one entry per relay."""


# --------------------------------- REPORTS -----------------------------------
@dataclass
class DiagonalProfile:
    """Per-symbol, per-relay diagonal coefficients; values[n][k] is symbol n+1, relay k+1."""

    kind: str
    values: List[List[Any]]

    def to_dict(self) -> Dict[str, Any]:
        vals = [[v if isinstance(v, int) else float(v) for v in row] for row in self.values]
        return {"kind": self.kind, "values": vals}


@dataclass
class VerificationReport:
    verdict: bool
    failed_condition: str = ""
    witness: Any = None
    profiles: Dict[str, DiagonalProfile] = field(default_factory=dict)
    failures: List[Tuple[str, Any]] = field(default_factory=list)
    families: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    subject: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subject": self.subject,
            "verdict": "pass" if self.verdict else "fail",
            "failed_condition": self.failed_condition,
            "witness": _jsonable(self.witness),
            "profiles": {k: p.to_dict() for k, p in self.profiles.items()},
            "failures": [{"condition": c, "witness": _jsonable(w)} for c, w in self.failures],
            "families": list(self.families),
            "notes": list(self.notes),
        }


class _Collector:
    """Keeps the first violation per condition family; every family is still evaluated."""

    def __init__(self, subject: str):
        self.subject = subject
        self.failures: List[Tuple[str, Any]] = []
        self.families: List[str] = []
        self.notes: List[str] = []
        self._failed_families: set = set()

    def family(self, name: str) -> None:
        self.families.append(name)

    def fail(self, family: str, condition: str, witness: Any) -> None:
        if family in self._failed_families:
            return
        self._failed_families.add(family)
        self.failures.append((condition, witness))

    def has_failed(self, family: str) -> bool:
        return family in self._failed_families

    def report(self, profiles: Dict[str, DiagonalProfile]) -> VerificationReport:
        if self.failures:
            cond, wit = self.failures[0]
            return VerificationReport(False, cond, wit, profiles, self.failures, self.families, self.notes, self.subject)
        return VerificationReport(True, "", None, profiles, [], self.families, self.notes, self.subject)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, GaussianIntMatrix):
        return obj.to_lists()
    if isinstance(obj, np.ndarray):
        return [[str(complex(z)) for z in row] for row in np.atleast_2d(obj)]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


# ------------------------------ MONOMIAL SHAPES ------------------------------
def _nonzero_mask(m) -> np.ndarray:
    if isinstance(m, GaussianIntMatrix):
        return (m.re != 0) | (m.im != 0)
    if len(m) and len(m[0]) and isinstance(m[0][0], MonoCoeff):
        return _nonzero_mask(GaussianIntMatrix.from_grid(m))
    return np.atleast_2d(np.asarray(m) != 0)


def is_row_monomial(m) -> bool:
    """True iff every row holds at most one non-zero entry."""
    mask = _nonzero_mask(m)
    return bool((mask.sum(axis=1) <= 1).all()) if mask.size else True


def is_column_monomial(m) -> bool:
    """True iff every column holds at most one non-zero entry."""
    mask = _nonzero_mask(m)
    return bool((mask.sum(axis=0) <= 1).all()) if mask.size else True


def single_term_violation(code: DistributedCode) -> Optional[Tuple[int, int]]:
    """First (relay, slot), 1-based, whose code-matrix entry mixes more than one term."""
    for k, pair in enumerate(code.relays, start=1):
        counts = _nonzero_mask(pair.a).sum(axis=0) + _nonzero_mask(pair.b).sum(axis=0)
        bad = np.nonzero(counts > 1)[0]
        if bad.size:
            return k, int(bad[0]) + 1
    return None


def _sym(m: GaussianIntMatrix) -> GaussianIntMatrix:
    return m + m.T


def _mats(code: DistributedCode) -> Tuple[List[GaussianIntMatrix], List[GaussianIntMatrix]]:
    return [p.a_matrix() for p in code.relays], [p.b_matrix() for p in code.relays]


def slot_classes(code: DistributedCode) -> List[Tuple[Tuple[int, ...], List[int]]]:
    """Slots grouped by the set of relays transmitting in them, ordered by first slot.

    Under column-monomial matrices R is diagonal and its slot-t entry depends
    only on that set, so the channel-free conditions must hold class by class.
    """
    groups: Dict[Tuple[int, ...], List[int]] = {}
    for t in range(code.n_slots):
        active = tuple(
            k for k, pair in enumerate(code.relays)
            if any(not row[t].is_zero() for row in pair.a) or any(not row[t].is_zero() for row in pair.b)
        )
        if active:
            groups.setdefault(active, []).append(t)
    return list(groups.items())


def _columns(m: GaussianIntMatrix, cols: Sequence[int]) -> GaussianIntMatrix:
    return GaussianIntMatrix(m.re[:, list(cols)], m.im[:, list(cols)])


# --------------------------- UNWEIGHTED CONDITIONS ---------------------------
def check_gram_conditions(code: DistributedCode) -> VerificationReport:
    """Exact channel-free conditions a no-CSI code must meet (profile E).

    Column-monomial associated matrices and single-term entries are checked
    first as prerequisites. The cross, mixed and self-diagonal families are
    then evaluated on every slot class (see ``slot_classes``); a code whose
    slots all share one relay set is checked on the whole matrices.
    """
    col = _Collector("gram-conditions")
    a, b = _mats(code)
    k_total = code.n_relays

    col.family("column-monomial")
    for k in range(k_total):
        for name, m in (("A", a[k]), ("B", b[k])):
            if not is_column_monomial(m):
                col.fail("column-monomial", f"column-monomial relay {k + 1} {name}", m)

    col.family("single-term")
    bad = single_term_violation(code)
    if bad:
        col.fail("single-term", f"single-term entry ({bad[0]},{bad[1]})", None)

    for fam in ("cross-A", "cross-B", "mixed-AB", "mixed-BA", "self-diagonal"):
        col.family(fam)
    classes = slot_classes(code)
    for _, cols in classes:
        where = f" slots {[t + 1 for t in cols]}" if len(classes) > 1 else ""
        ac = [_columns(m, cols) for m in a]
        bc = [_columns(m, cols) for m in b]
        for k1 in range(k_total):
            for k2 in range(k1 + 1, k_total):
                prod = ac[k1] @ ac[k2].H
                if not prod.is_zero():
                    col.fail("cross-A", f"cross-A k1={k1 + 1} k2={k2 + 1}{where}", prod)
                prod = bc[k1] @ bc[k2].H
                if not prod.is_zero():
                    col.fail("cross-B", f"cross-B k1={k1 + 1} k2={k2 + 1}{where}", prod)
        for k1 in range(k_total):
            for k2 in range(k_total):
                term = ac[k1] @ bc[k2].H + bc[k2].conj() @ ac[k1].T
                if not term.is_zero():
                    col.fail("mixed-AB", f"mixed-AB k1={k1 + 1} k2={k2 + 1}{where}", term)
                term = bc[k1] @ ac[k2].H + ac[k2].conj() @ bc[k1].T
                if not term.is_zero():
                    col.fail("mixed-BA", f"mixed-BA k1={k1 + 1} k2={k2 + 1}{where}", term)
        for k in range(k_total):
            gram = ac[k] @ ac[k].H + bc[k].conj() @ bc[k].T
            off = gram.off_diagonal_nonzero()
            if off:
                i, j = off[0]
                col.fail("self-diagonal", f"self-diagonal k={k + 1} entry ({i + 1},{j + 1}){where}", gram)

    e_values = [[0] * k_total for _ in range(code.n_symbols)]
    if not col.has_failed("self-diagonal"):
        for k in range(k_total):
            gram = a[k] @ a[k].H + b[k].conj() @ b[k].T
            _self_profile(col, "self-diagonal", gram, k, e_values)

    profiles = {}
    if not col.has_failed("self-diagonal"):
        profiles["E"] = DiagonalProfile("E", e_values)
    return col.report(profiles)


def _self_profile(col: _Collector, family: str, gram: GaussianIntMatrix, k: int, values: List[List[int]]) -> None:
    off = gram.off_diagonal_nonzero()
    if off:
        col.fail(family, f"{family} k={k + 1} entry ({off[0][0] + 1},{off[0][1] + 1})", gram)
        return
    for n, z in enumerate(gram.diagonal()):
        values[n][k] = int(z.real)
        if z.imag != 0 or z.real <= 0:
            col.fail(family, f"{family} k={k + 1} symbol {n + 1} not strictly positive", gram)
            return


def gram_polynomial_terms(
    a1: GaussianIntMatrix, b1: GaussianIntMatrix, a2: GaussianIntMatrix, b2: GaussianIntMatrix
) -> Tuple[GaussianIntMatrix, GaussianIntMatrix, GaussianIntMatrix]:
    """Coefficients of row_1 . row_2^H in the channel-free code matrix.

    Returns (s_n s_m* coefficients, s_n s_m coefficients, s_n* s_m* coefficients).
    """
    hermitian = a1 @ a2.H + (b1 @ b2.H).T
    plain = _sym(a1 @ b2.H)
    conj = _sym(b1 @ a2.H)
    return hermitian, plain, conj


def _check_gram_diagonal(col: _Collector, code: DistributedCode) -> List[List[int]]:
    a, b = _mats(code)
    k_total = code.n_relays
    g_values = [[0] * k_total for _ in range(code.n_symbols)]

    col.family("gram-offdiagonal")
    for k1 in range(k_total):
        for k2 in range(k1 + 1, k_total):
            for label, term in zip(("hermitian", "plain", "conjugate"), gram_polynomial_terms(a[k1], b[k1], a[k2], b[k2])):
                if not term.is_zero():
                    col.fail("gram-offdiagonal", f"gram-offdiagonal k1={k1 + 1} k2={k2 + 1} ({label} terms)", term)

    col.family("gram-diagonal")
    for k in range(k_total):
        hermitian, plain, conj = gram_polynomial_terms(a[k], b[k], a[k], b[k])
        if not plain.is_zero() or not conj.is_zero():
            col.fail("gram-diagonal", f"gram-diagonal k={k + 1} (non-modulus terms)", plain if not plain.is_zero() else conj)
            continue
        _self_profile(col, "gram-diagonal", hermitian, k, g_values)
    return g_values


# ------------------------------ NOISE COVARIANCE -----------------------------
@dataclass
class NoiseCovariance:
    """Destination noise covariance R (T x T Hermitian) for one channel realization."""

    matrix: np.ndarray

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    def is_diagonal(self, tol: float = 0.0) -> bool:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return bool(np.abs(off).max(initial=0.0) <= tol)


def relay_grams(code: DistributedCode) -> List[GaussianIntMatrix]:
    """A_k^H A_k + B_k^H B_k per relay, exactly."""
    return [p.a_matrix().H @ p.a_matrix() + p.b_matrix().H @ p.b_matrix() for p in code.relays]


def noise_is_uncorrelated(code: DistributedCode) -> bool:
    """R is diagonal for every channel realization."""
    return all(g.is_diagonal() for g in relay_grams(code))


def covariance_matrix(code: DistributedCode, f: np.ndarray, rho: float) -> np.ndarray:
    grams = np.array([g.to_complex() for g in relay_grams(code)])
    weights = np.abs(rho * np.asarray(f, dtype=complex)) ** 2
    return np.eye(code.n_slots, dtype=complex) + np.einsum("k,kts->ts", weights, grams)


def noise_covariance(code: DistributedCode, channels, rho: float) -> NoiseCovariance:
    """R = sum_k |rho f_k|^2 (A_k^H A_k + B_k^H B_k) + I, shared by the CPI and no-CSI paths."""
    if rho <= 0:
        raise ValueError("amplifying coefficient rho must be positive")
    f = np.asarray(channels.f, dtype=complex).reshape(-1)
    if f.size != code.n_relays:
        raise ChannelMismatchError(f"code has K={code.n_relays} relays but {f.size} second-hop gains were given")
    return NoiseCovariance(covariance_matrix(code, f, rho))


# ----------------------------- WEIGHTED CONDITIONS ---------------------------
def _draw_gains(rng: np.random.Generator, k: int) -> np.ndarray:
    while True:
        g = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)
        if np.all(np.isfinite(g)):
            return g


def _weighted_checks(
    col: _Collector, code: DistributedCode, draws: int, tol: float, rho: float, seed: int, cpi: bool
) -> Optional[List[List[float]]]:
    """Numeric X R^-1 X^H = sum_n |s_n|^2 diag(...) over random channel draws."""
    a = code.a_arrays()
    b = code.b_arrays()
    n_sym = code.n_symbols
    profile: Optional[List[List[float]]] = None
    for fam in ("weighted-offdiagonal", "weighted-diagonal", "nonzero-profile"):
        col.family(fam)

    for d in range(draws):
        rng = np.random.default_rng([seed, d])
        h = _draw_gains(rng, code.n_relays)
        f = _draw_gains(rng, code.n_relays)
        r_inv = np.linalg.inv(covariance_matrix(code, f, rho))
        gain = np.ones(code.n_relays, dtype=complex) if cpi else h
        p = gain[None, :, None] * a.transpose(1, 0, 2)
        q = np.conj(gain)[None, :, None] * b.transpose(1, 0, 2)

        coeffs = np.empty((n_sym, code.n_relays))
        for n in range(n_sym):
            xn = p[n] + q[n]
            coeffs[n] = np.real(np.diag(xn @ r_inv @ xn.conj().T))

        for _ in range(2):
            s = _draw_gains(rng, n_sym)
            x = np.einsum("n,nkt->kt", s, p) + np.einsum("n,nkt->kt", np.conj(s), q)
            m = x @ r_inv @ x.conj().T
            scale = max(1.0, float(np.sum(np.abs(x) ** 2)))
            off = m - np.diag(np.diag(m))
            worst = np.unravel_index(np.argmax(np.abs(off)), off.shape) if off.size else (0, 0)
            if off.size and np.abs(off[worst]) > tol * scale:
                col.fail(
                    "weighted-offdiagonal",
                    f"weighted-offdiagonal draw {d + 1} entry ({worst[0] + 1},{worst[1] + 1})",
                    float(np.abs(off[worst]) / scale),
                )
            expected = (np.abs(s) ** 2) @ coeffs
            resid = np.abs(np.diag(m) - expected)
            if resid.max(initial=0.0) > tol * scale:
                k_bad = int(np.argmax(resid))
                col.fail(
                    "weighted-diagonal",
                    f"weighted-diagonal draw {d + 1} relay {k_bad + 1}",
                    float(resid[k_bad] / scale),
                )

        values = coeffs if cpi else coeffs / (np.abs(h) ** 2)[None, :]
        peak = float(np.abs(values).max(initial=0.0))
        floor = tol * peak if peak > 0 else tol
        small = np.argwhere(np.abs(values) <= floor)
        if small.size:
            n_bad, k_bad = small[0]
            col.fail(
                "nonzero-profile",
                f"nonzero-profile draw {d + 1} symbol {n_bad + 1} relay {k_bad + 1}",
                float(values[n_bad, k_bad]),
            )
        else:
            near = np.argwhere(np.abs(values) <= BORDERLINE_FACTOR * floor)
            for n_bad, k_bad in near[:3]:
                col.notes.append(
                    f"borderline profile value {values[n_bad, k_bad]:.3e} at draw {d + 1} "
                    f"symbol {n_bad + 1} relay {k_bad + 1}"
                )
        profile = values.tolist()
    return profile


def _validate_draws(draws: int, tol: float) -> None:
    if draws < 1:
        raise ValueError("draws must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")


def check_dostbc(
    code: DistributedCode,
    draws: int = DEFAULT_DRAWS,
    tol: float = DEFAULT_TOL,
    rho: float = 1.0,
    seed: int = 0,
) -> VerificationReport:
    """No-CSI membership: single-term entries plus X_D R^-1 X_D^H = sum |s_n|^2 D_n (profile D)."""
    _validate_draws(draws, tol)
    col = _Collector("dostbc")
    col.family("single-term")
    bad = single_term_violation(code)
    if bad:
        col.fail("single-term", f"single-term entry ({bad[0]},{bad[1]})", None)
    profile = _weighted_checks(col, code, draws, tol, rho, seed, cpi=False)
    profiles = {"D": DiagonalProfile("D", profile)} if profile is not None else {}
    report = col.report(profiles)
    log.debug("dostbc check: %s", report.failed_condition or "pass")
    return report


def check_dostbc_cpi(
    code: DistributedCode,
    draws: int = DEFAULT_DRAWS,
    tol: float = DEFAULT_TOL,
    rho: float = 1.0,
    seed: int = 0,
) -> VerificationReport:
    """Row-monomial CPI membership: row-monomial, single-term, exact X_C X_C^H profile G, numeric profile F."""
    _validate_draws(draws, tol)
    col = _Collector("dostbc-cpi")
    col.family("row-monomial")
    for k, pair in enumerate(code.relays, start=1):
        for name, grid in (("A", pair.a), ("B", pair.b)):
            if not is_row_monomial(grid):
                col.fail("row-monomial", f"row-monomial relay {k} {name}", GaussianIntMatrix.from_grid(grid))

    col.family("single-term")
    bad = single_term_violation(code)
    if bad:
        col.fail("single-term", f"single-term entry ({bad[0]},{bad[1]})", None)

    g_values = _check_gram_diagonal(col, code)
    profile = _weighted_checks(col, code, draws, tol, rho, seed, cpi=True)

    profiles: Dict[str, DiagonalProfile] = {}
    if not (col.has_failed("gram-diagonal") or col.has_failed("gram-offdiagonal")):
        profiles["G"] = DiagonalProfile("G", g_values)
    if profile is not None:
        profiles["F"] = DiagonalProfile("F", profile)
    return col.report(profiles)


def verify_any(
    code: DistributedCode,
    draws: int = DEFAULT_DRAWS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    kind: str = "any",
) -> Dict[str, VerificationReport]:
    """Reports for ``kind`` ("cpi", "dostbc" or "any"), keyed by check name."""
    if kind not in ("cpi", "dostbc", "any"):
        raise ValueError(f"unknown kind {kind!r}")
    reports: Dict[str, VerificationReport] = {}
    if kind in ("cpi", "any"):
        reports["dostbc-cpi"] = check_dostbc_cpi(code, draws=draws, tol=tol, seed=seed)
    if kind in ("dostbc", "any"):
        reports["gram-conditions"] = check_gram_conditions(code)
        reports["dostbc"] = check_dostbc(code, draws=draws, tol=tol, seed=seed)
    return reports
