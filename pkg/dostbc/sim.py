# dostbc/sim.py — Monte Carlo link-level simulation of the two-hop amplify-and-forward network

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .bounds import spectral_efficiency
from .code_core import DistributedCode
from .verify import ChannelMismatchError, relay_grams

log = logging.getLogger(__name__)

SCHEMES = ("dostbc", "dostbc_cpi", "repetition")
DECODERS = ("single", "joint")
HYPOTHESIS_BUDGET = 10**6
_JOINT_CHUNK = 1 << 22


class HypothesisBudgetError(ValueError):
    """Raised when joint ML decoding would enumerate more than the hypothesis budget."""


def scheme_uses_cpi(scheme: str) -> bool:
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    return scheme == "dostbc_cpi"


# ------------------------------ CONSTELLATIONS -------------------------------
@dataclass(frozen=True)
class Constellation:
    """Unit-average-energy square QAM with per-axis Gray labels; labels[i] are the bits of points[i]."""

    name: str
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def bits_per_symbol(self) -> int:
        return int(self.labels.shape[1])


CONSTELLATION_ORDERS = {"qpsk": 4, "qam16": 16, "qam64": 64, "qam256": 256}


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def square_qam(order: int, name: Optional[str] = None) -> Constellation:
    bits = int(round(np.log2(order)))
    if order < 4 or 2 ** bits != order or bits % 2:
        raise ValueError(f"square QAM needs an order of 4^m, got {order}")
    half = bits // 2
    levels = 2 ** half
    amps = 2 * np.arange(levels) - (levels - 1)
    points = np.empty(order, dtype=complex)
    labels = np.empty((order, bits), dtype=np.uint8)
    for i_re in range(levels):
        for i_im in range(levels):
            idx = i_re * levels + i_im
            points[idx] = amps[i_re] + 1j * amps[i_im]
            code = (_gray(i_re) << half) | _gray(i_im)
            labels[idx] = [(code >> (bits - 1 - b)) & 1 for b in range(bits)]
    points /= np.sqrt(2.0 * (levels ** 2 - 1) / 3.0)
    return Constellation(name or f"qam{order}", points, labels)


def get_constellation(name: str) -> Constellation:
    try:
        order = CONSTELLATION_ORDERS[name]
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}; choose from {sorted(CONSTELLATION_ORDERS)}") from None
    return square_qam(order, name)


# -------------------------------- CHANNELS -----------------------------------
def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex).reshape(-1)
        f = np.asarray(self.f, dtype=complex).reshape(-1)
        if h.size != f.size:
            raise ValueError(f"{h.size} first-hop gains but {f.size} second-hop gains")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "f", f)

    @property
    def theta(self) -> np.ndarray:
        return np.angle(self.h)

    @property
    def n_relays(self) -> int:
        return int(self.h.size)

    @classmethod
    def draw(cls, rng: np.random.Generator, k: int) -> "ChannelRealization":
        return cls(complex_normal(rng, k), complex_normal(rng, k))


@dataclass(frozen=True)
class PowerConfig:
    es: float
    er: float

    @property
    def rho(self) -> float:
        return float(np.sqrt(self.er / (1.0 + self.es)))

    @classmethod
    def from_snr(cls, snr_db: float, bits_per_symbol: int, n_relays: int) -> "PowerConfig":
        """SNR per bit is E_r / bits; the source gets E_s = K * E_r."""
        er = 10.0 ** (snr_db / 10.0) * bits_per_symbol
        return cls(es=n_relays * er, er=er)


# ---------------------------- SIGNAL PROCESSING ------------------------------
def relay_process(
    code: DistributedCode,
    k: int,
    y_k: np.ndarray,
    cpi: bool,
    theta_k: float,
    rho: float,
) -> np.ndarray:
    """T-vector sent by relay ``k`` (0-based): rho (y A_k + y* B_k), after removing theta_k under CPI."""
    y = np.asarray(y_k, dtype=complex).reshape(-1)
    if y.size != code.n_symbols:
        raise ValueError(f"relay input must have N={code.n_symbols} entries, got {y.size}")
    if cpi:
        y = np.exp(-1j * theta_k) * y
    pair = code.relays[k]
    a = pair.a_matrix().to_complex()
    b = pair.b_matrix().to_complex()
    return rho * (y @ a + np.conj(y) @ b)


def destination_receive(
    code: DistributedCode,
    x: np.ndarray,
    f: np.ndarray,
    noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """sum_k f_k x_k plus destination noise."""
    x = np.asarray(x, dtype=complex).reshape(code.n_relays, code.n_slots)
    f = np.asarray(f, dtype=complex).reshape(-1)
    y = f @ x
    if noise is not None:
        y = y + np.asarray(noise, dtype=complex).reshape(-1)
    return y


class Instances(NamedTuple):
    """A batch of transmitted codewords; arrays lead with the batch axis."""

    symbols: np.ndarray
    h: np.ndarray
    f: np.ndarray
    y: np.ndarray


def draw_instances(
    code: DistributedCode,
    power: PowerConfig,
    constellation: Constellation,
    rng: np.random.Generator,
    batch: int,
    cpi: bool,
    noiseless: bool = False,
) -> Instances:
    """Draw symbols, channels and noise and push them through both hops."""
    k, n = code.n_relays, code.n_symbols
    symbols = rng.integers(0, constellation.size, size=(batch, n))
    s = np.sqrt(power.es) * constellation.points[symbols]
    h = complex_normal(rng, (batch, k))
    f = complex_normal(rng, (batch, k))
    relay_noise = complex_normal(rng, (batch, k, n))
    dest_noise = complex_normal(rng, (batch, code.n_slots))
    if noiseless:
        relay_noise[:] = 0
        dest_noise[:] = 0

    y_r = h[:, :, None] * s[:, None, :] + relay_noise
    if cpi:
        y_r = np.exp(-1j * np.angle(h))[:, :, None] * y_r
    x = power.rho * (
        np.einsum("bkn,knt->bkt", y_r, code.a_arrays()) + np.einsum("bkn,knt->bkt", np.conj(y_r), code.b_arrays())
    )
    y = np.einsum("bk,bkt->bt", f, x) + dest_noise
    return Instances(symbols, h, f, y)


# -------------------------------- DECODING -----------------------------------
class _Model(NamedTuple):
    u: np.ndarray
    v: np.ndarray
    r_inv: np.ndarray


def _effective_model(code: DistributedCode, h: np.ndarray, f: np.ndarray, rho: float, cpi: bool) -> _Model:
    """y = sum_n (s_n u_n + s_n* v_n) + n with E[n^H n] = R, batched."""
    w = rho * f
    if cpi:
        gu = gv = np.abs(h).astype(complex)
    else:
        gu, gv = h, np.conj(h)
    u = np.einsum("bk,knt->bnt", w * gu, code.a_arrays())
    v = np.einsum("bk,knt->bnt", w * gv, code.b_arrays())
    grams = np.array([g.to_complex() for g in relay_grams(code)])
    r = np.eye(code.n_slots)[None] + np.einsum("bk,kts->bts", np.abs(w) ** 2, grams)
    return _Model(u, v, np.linalg.inv(r))


def _ss_decode_batch(y: np.ndarray, model: _Model, candidates: np.ndarray) -> np.ndarray:
    u, v, q = model
    alpha = np.einsum("bt,bts,bns->bn", y, q, np.conj(u))
    beta = np.einsum("bt,bts,bns->bn", y, q, np.conj(v))
    uu = np.einsum("bnt,bts,bns->bn", u, q, np.conj(u)).real
    vv = np.einsum("bnt,bts,bns->bn", v, q, np.conj(v)).real
    uv = np.einsum("bnt,bts,bns->bn", u, q, np.conj(v))
    c = candidates[None, None, :]
    metric = (
        -2.0 * np.real(np.conj(c) * alpha[..., None] + c * beta[..., None])
        + np.abs(c) ** 2 * (uu + vv)[..., None]
        + 2.0 * np.real(c ** 2 * uv[..., None])
    )
    return np.argmin(metric, axis=-1)


def _hypotheses(n: int, m: int) -> np.ndarray:
    if m ** n > HYPOTHESIS_BUDGET:
        raise HypothesisBudgetError(f"{m}^{n} hypotheses exceed the joint decoding budget of {HYPOTHESIS_BUDGET}")
    return np.array(list(itertools.product(range(m), repeat=n)), dtype=np.int64).reshape(-1, n)


def _joint_decode_batch(y: np.ndarray, model: _Model, candidates: np.ndarray) -> np.ndarray:
    u, v, q = model
    hyps = _hypotheses(u.shape[1], candidates.size)
    s = candidates[hyps]
    out = np.empty((y.shape[0], u.shape[1]), dtype=np.int64)
    step = max(1, _JOINT_CHUNK // (hyps.shape[0] * max(1, y.shape[1])))
    for lo in range(0, y.shape[0], step):
        sl = slice(lo, lo + step)
        signal = np.einsum("hn,bnt->bht", s, u[sl]) + np.einsum("hn,bnt->bht", np.conj(s), v[sl])
        e = y[sl, None, :] - signal
        metric = np.einsum("bht,bts,bhs->bh", e, q[sl], np.conj(e)).real
        out[sl] = hyps[np.argmin(metric, axis=1)]
    return out


def _as_batch(y, channels: ChannelRealization) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (
        np.asarray(y, dtype=complex).reshape(1, -1),
        channels.h.reshape(1, -1),
        channels.f.reshape(1, -1),
    )


def _check_channels(code: DistributedCode, channels: ChannelRealization) -> None:
    if channels.n_relays != code.n_relays:
        raise ChannelMismatchError(f"code has K={code.n_relays} relays, channels have {channels.n_relays}")


def ss_ml_decode(
    y: np.ndarray,
    channels: ChannelRealization,
    code: DistributedCode,
    power: PowerConfig,
    cpi: bool,
    constellation: Constellation,
) -> np.ndarray:
    """Constellation indices of the N symbols, each decoded on its own.

    Only maximum likelihood when the code is single-symbol decodable for the
    given mode (it passed the matching verification).
    """
    _check_channels(code, channels)
    yb, h, f = _as_batch(y, channels)
    model = _effective_model(code, h, f, power.rho, cpi)
    return _ss_decode_batch(yb, model, np.sqrt(power.es) * constellation.points)[0]


def joint_ml_decode(
    y: np.ndarray,
    channels: ChannelRealization,
    code: DistributedCode,
    power: PowerConfig,
    cpi: bool,
    constellation: Constellation,
) -> np.ndarray:
    """Exhaustive ML over all |constellation|^N hypotheses; ties go to the lexicographically first."""
    _check_channels(code, channels)
    yb, h, f = _as_batch(y, channels)
    model = _effective_model(code, h, f, power.rho, cpi)
    return _joint_decode_batch(yb, model, np.sqrt(power.es) * constellation.points)[0]


def decode_instances(
    inst: Instances,
    code: DistributedCode,
    power: PowerConfig,
    cpi: bool,
    constellation: Constellation,
    decoder: str = "single",
) -> np.ndarray:
    model = _effective_model(code, inst.h, inst.f, power.rho, cpi)
    candidates = np.sqrt(power.es) * constellation.points
    if decoder == "single":
        return _ss_decode_batch(inst.y, model, candidates)
    if decoder == "joint":
        return _joint_decode_batch(inst.y, model, candidates)
    raise ValueError(f"decoder must be one of {DECODERS}, got {decoder!r}")


# ------------------------------- MONTE CARLO ---------------------------------
@dataclass
class SimConfig:
    scheme: str
    code: DistributedCode
    constellation: str = "qpsk"
    snr_db_points: Sequence[float] = (0.0, 5.0, 10.0, 15.0, 20.0)
    min_trials: int = 10**4
    min_bit_errors: int = 100
    max_trials: int = 10**6
    batch_size: int = 1000
    workers: int = 1
    seed: int = 0
    decoder: str = "single"
    noiseless: bool = False
    construction: str = "user-supplied"

    def __post_init__(self):
        scheme_uses_cpi(self.scheme)
        get_constellation(self.constellation)
        if self.decoder not in DECODERS:
            raise ValueError(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.batch_size < 1 or self.workers < 1:
            raise ValueError("batch_size and workers must be positive")
        if self.min_trials < 0 or self.min_bit_errors < 0 or self.max_trials < 1:
            raise ValueError("trial and error targets must be non-negative and max_trials positive")

    @property
    def cpi(self) -> bool:
        return scheme_uses_cpi(self.scheme)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scheme": self.scheme,
            "construction": self.construction,
            "n_symbols": self.code.n_symbols,
            "n_relays": self.code.n_relays,
            "n_slots": self.code.n_slots,
            "constellation": self.constellation,
            "snr_db": [float(x) for x in self.snr_db_points],
            "min_trials": self.min_trials,
            "min_bit_errors": self.min_bit_errors,
            "max_trials": self.max_trials,
            "batch_size": self.batch_size,
            "workers": self.workers,
            "seed": self.seed,
            "decoder": self.decoder,
            "noiseless": self.noiseless,
        }


@dataclass(frozen=True)
class BerPoint:
    scheme: str
    snr_db: float
    trials: int
    bit_errors: int
    bits_per_trial: int

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.trials * self.bits_per_trial) if self.trials else 0.0

    def to_row(self) -> Dict[str, Any]:
        return {
            "scheme": self.scheme,
            "snr_db": self.snr_db,
            "trials": self.trials,
            "bit_errors": self.bit_errors,
            "ber": self.ber,
        }


def _batch_len(cfg: SimConfig, index: int) -> int:
    return max(0, min(cfg.batch_size, cfg.max_trials - index * cfg.batch_size))


def _run_batch(args) -> Tuple[int, int]:
    cfg, snr_idx, batch_idx = args
    size = _batch_len(cfg, batch_idx)
    const = get_constellation(cfg.constellation)
    power = PowerConfig.from_snr(cfg.snr_db_points[snr_idx], const.bits_per_symbol, cfg.code.n_relays)
    rng = np.random.default_rng([cfg.seed, snr_idx, batch_idx])
    inst = draw_instances(cfg.code, power, const, rng, size, cfg.cpi, cfg.noiseless)
    decoded = decode_instances(inst, cfg.code, power, cfg.cpi, const, cfg.decoder)
    errors = int(np.count_nonzero(const.labels[inst.symbols] != const.labels[decoded]))
    return size, errors


def _done(cfg: SimConfig, trials: int, errors: int) -> bool:
    if trials >= cfg.max_trials:
        return True
    return trials >= cfg.min_trials and errors >= cfg.min_bit_errors


def _simulate_point(cfg: SimConfig, snr_idx: int, pool: Optional[Any]) -> Tuple[int, int]:
    trials = errors = 0
    batch_idx = 0
    wave = cfg.workers if pool is not None else 1
    while True:
        jobs = [(cfg, snr_idx, batch_idx + i) for i in range(wave)]
        results = pool.map(_run_batch, jobs) if pool is not None else [_run_batch(jobs[0])]
        for size, err in results:
            trials += size
            errors += err
            batch_idx += 1
            if _done(cfg, trials, errors):
                return trials, errors


def run_ber(cfg: SimConfig) -> List[BerPoint]:
    """BER per SNR point; batch b at SNR index i uses the RNG stream (seed, i, b).

    Batches are accumulated in index order and the stop rule is applied after
    each one, so the result is the same for any number of workers.
    """
    const = get_constellation(cfg.constellation)
    bits_per_trial = cfg.code.n_symbols * const.bits_per_symbol
    points = []
    pool = Pool(cfg.workers) if cfg.workers > 1 else None
    try:
        for i, snr in enumerate(cfg.snr_db_points):
            trials, errors = _simulate_point(cfg, i, pool)
            point = BerPoint(cfg.scheme, float(snr), trials, errors, bits_per_trial)
            log.info(
                "%s %s: SNR %.1f dB, %d trials, %d bit errors, BER %.3e",
                cfg.scheme, cfg.construction, snr, trials, errors, point.ber,
            )
            points.append(point)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return points


# --------------------------- EMPIRICAL DIAGNOSTICS ---------------------------
def sample_noise_covariance(
    code: DistributedCode,
    channels: ChannelRealization,
    rho: float,
    draws: int,
    rng: np.random.Generator,
    cpi: bool = False,
) -> np.ndarray:
    """Sample estimate of E[n^H n] for the destination noise with fixed channels."""
    _check_channels(code, channels)
    relay_noise = complex_normal(rng, (draws, code.n_relays, code.n_symbols))
    if cpi:
        relay_noise = np.exp(-1j * channels.theta)[None, :, None] * relay_noise
    forwarded = np.einsum("dkn,knt->dkt", relay_noise, code.a_arrays()) + np.einsum(
        "dkn,knt->dkt", np.conj(relay_noise), code.b_arrays()
    )
    n = rho * np.einsum("k,dkt->dt", channels.f, forwarded) + complex_normal(rng, (draws, code.n_slots))
    return np.einsum("dt,ds->ts", np.conj(n), n) / draws


def diversity_slope(points: Sequence[BerPoint]) -> List[float]:
    """-d log10(BER) / d(SNR/10) between consecutive points; nan where a BER is zero."""
    slopes = []
    for p, q in zip(points, points[1:]):
        if p.ber <= 0 or q.ber <= 0 or q.snr_db == p.snr_db:
            slopes.append(float("nan"))
            continue
        slopes.append(-(np.log10(q.ber) - np.log10(p.ber)) / ((q.snr_db - p.snr_db) / 10.0))
    return slopes


# --------------------------------- PRESETS -----------------------------------
@dataclass(frozen=True)
class PresetScheme:
    scheme: str
    construction: str
    n_symbols: int
    n_relays: int
    constellation: str


SIM_PRESETS: Dict[str, Dict[str, Any]] = {
    "fig1-trend": {
        "snr_db": (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
        "schemes": (
            PresetScheme("dostbc", "paired-alamouti", 4, 4, "qam16"),
            PresetScheme("dostbc_cpi", "rate-halving", 4, 4, "qam16"),
            PresetScheme("repetition", "repetition", 1, 4, "qam256"),
        ),
    },
    "fig2-trend": {
        "snr_db": (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
        "schemes": (
            PresetScheme("dostbc", "paired-alamouti", 8, 6, "qam64"),
            PresetScheme("dostbc_cpi", "rate-halving", 8, 6, "qam16"),
        ),
    },
}
# size-named aliases
SIM_PRESETS["n4k4-trend"] = SIM_PRESETS["fig1-trend"]
SIM_PRESETS["n8k6-trend"] = SIM_PRESETS["fig2-trend"]


def preset_efficiencies(codes: Sequence[Tuple[str, DistributedCode, str]]) -> Dict[str, float]:
    """bps/Hz per scheme; logs a warning when the schemes are not bandwidth matched."""
    eff = {
        scheme: float(spectral_efficiency(code.data_rate, get_constellation(const).bits_per_symbol))
        for scheme, code, const in codes
    }
    if len(set(eff.values())) > 1:
        log.warning("schemes are not bandwidth matched: %s", ", ".join(f"{s} {e:g} bps/Hz" for s, e in eff.items()))
    return eff
