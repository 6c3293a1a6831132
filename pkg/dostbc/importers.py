# dostbc/importers.py — code files and run configs (key = value text or JSON) with env overrides
import json
import os
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

from .code_core import DistributedCode, parse_code
from .oracle import DEFAULT_BUDGET

ENV_PREFIX = "DOSTBC_"


class ConfigError(ValueError):
    """Raised for unknown keys or values that cannot be read."""


def load_code_file(path) -> DistributedCode:
    """Read and parse a code file; OSError and CodeFormatError propagate."""
    return parse_code(Path(path).read_text(encoding="utf-8"))


# --------------------------- VALUE CONVERSION ---------------------------
def _to_bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _to_int(v: Any) -> int:
    if isinstance(v, bool):
        raise ValueError(f"not an integer: {v!r}")
    if isinstance(v, (int, float)) and float(v).is_integer():
        return int(v)
    s = str(v).strip().replace("_", "")
    return int(float(s)) if "e" in s.lower() else int(s)


def _to_floats(v: Any) -> list:
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    return [float(x) for x in str(v).replace(";", ",").split(",") if x.strip()]


def _to_str(v: Any) -> str:
    return str(v).strip()


def _opt_str(v: Any) -> Optional[str]:
    s = "" if v is None else str(v).strip()
    return s or None


def _to_float(v: Any) -> float:
    if isinstance(v, bool):
        raise ValueError(f"not a number: {v!r}")
    return float(v)


CONFIG_KEYS: Dict[str, Callable[[Any], Any]] = {
    "preset": _opt_str,
    "scheme": _to_str,
    "construction": _to_str,
    "code": _opt_str,
    "n_symbols": _to_int,
    "n_relays": _to_int,
    "constellation": _to_str,
    "snr_db": _to_floats,
    "min_trials": _to_int,
    "min_bit_errors": _to_int,
    "max_trials": _to_int,
    "batch_size": _to_int,
    "workers": _to_int,
    "seed": _to_int,
    "decoder": _to_str,
    "noiseless": _to_bool,
    # verify / partition
    "code_file": _to_str,
    "draws": _to_int,
    "tol": _to_float,
    "kind": _to_str,
    # search / bounds / construct
    "n": _to_int,
    "k": _to_int,
    "t": _to_int,
    "t_max": _to_int,
    "structure": _to_str,
    "canonicalize": _to_bool,
    "method": _to_str,
    "budget": _to_int,
    "witness_dir": _opt_str,
    "family": _to_str,
    # every command
    "out": _opt_str,
    "format": _to_str,
}

DEFAULTS: Dict[str, Any] = {
    "preset": None,
    "scheme": "dostbc_cpi",
    "construction": "alamouti",
    "code": None,
    "n_symbols": 2,
    "n_relays": 2,
    "constellation": "qpsk",
    "snr_db": [0.0, 5.0, 10.0, 15.0, 20.0],
    "min_trials": 10_000,
    "min_bit_errors": 100,
    "max_trials": 1_000_000,
    "batch_size": 1000,
    "workers": 1,
    "seed": 0,
    "decoder": "single",
    "noiseless": False,
}

GLOBAL_DEFAULTS: Dict[str, Any] = {"seed": 0, "out": None, "format": "text"}

COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "verify": {"code_file": None, "draws": 20, "tol": 1e-9, "kind": "any"},
    "bounds": {"n": None, "k": None},
    "construct": {"family": None, "n": None, "k": None},
    "partition": {"code_file": None, "kind": "cpi"},
    "search": {
        "n": None,
        "k": None,
        "t": None,
        "t_max": None,
        "structure": "cpi",
        "preset": None,
        "canonicalize": False,
        "method": "clique",
        "workers": 1,
        "budget": DEFAULT_BUDGET,
        "witness_dir": None,
    },
    "simulate": DEFAULTS,
}

KEY_CHOICES: Dict[str, tuple] = {
    "format": ("text", "json", "csv", "xlsx"),
    "structure": ("cpi", "dostbc"),
    "method": ("clique", "brute_force"),
    "decoder": ("single", "joint"),
}
KIND_CHOICES = {"verify": ("cpi", "dostbc", "any"), "partition": ("cpi", "dostbc")}


def command_defaults(command: str) -> Dict[str, Any]:
    """Every key the command reads, with its built-in default."""
    try:
        specific = COMMAND_DEFAULTS[command]
    except KeyError:
        raise ConfigError(f"unknown command {command!r}") from None
    return {**GLOBAL_DEFAULTS, **specific}


def coerce(raw: Mapping[str, Any], origin: str) -> Dict[str, Any]:
    """Validate keys and convert values; ``origin`` names the layer in error messages."""
    out = {}
    for key, value in raw.items():
        name = key.strip().lower()
        if name not in CONFIG_KEYS:
            raise ConfigError(f"{origin}: unknown key {key!r}")
        try:
            out[name] = CONFIG_KEYS[name](value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{origin}: bad value for {name}: {e}") from None
    return out


# ------------------------------- READING --------------------------------
def parse_key_values(text: str, origin: str = "config") -> Dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin} line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def load_run_config(path) -> Dict[str, Any]:
    """Read a run config; JSON when the text starts with '{', key = value lines otherwise."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{p.name}: invalid JSON ({e.msg} at line {e.lineno})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{p.name}: top level must be an object")
    else:
        raw = parse_key_values(text, p.name)
    return coerce(raw, p.name)


def env_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """DOSTBC_<KEY> variables; unknown DOSTBC_ names are rejected like unknown file keys."""
    env = os.environ if environ is None else environ
    raw = {k[len(ENV_PREFIX):].lower(): v for k, v in env.items() if k.startswith(ENV_PREFIX)}
    return coerce(raw, "environment")


def _check_choices(command: str, resolved: Mapping[str, Any]) -> None:
    choices = dict(KEY_CHOICES)
    if command in KIND_CHOICES:
        choices["kind"] = KIND_CHOICES[command]
    for key, allowed in choices.items():
        if key in resolved and resolved[key] not in allowed:
            raise ConfigError(f"{key} must be one of {allowed}, got {resolved[key]!r}")


def resolve_config(
    path=None,
    cli: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
    presets: Optional[Mapping[str, Mapping[str, Any]]] = None,
    command: str = "simulate",
) -> Dict[str, Any]:
    """Every key ``command`` reads: defaults < preset < config file < environment < command line.

    DOSTBC_ variables for keys the command does not read are ignored; the
    same keys in a config file are an error.
    """
    known = command_defaults(command)
    layers = []
    if path is not None:
        from_file = load_run_config(path)
        extra = sorted(set(from_file) - set(known))
        if extra:
            raise ConfigError(f"{Path(path).name}: unknown key {extra[0]!r} for {command}")
        layers.append(from_file)
    layers.append({k: v for k, v in env_overrides(environ).items() if k in known})
    layers.append(coerce({k: v for k, v in (cli or {}).items() if v is not None}, "command line"))

    resolved = dict(known)
    if command == "simulate":
        chosen = None
        for layer in layers:
            if "preset" in layer:
                chosen = layer["preset"]
        if chosen is not None:
            if presets is None or chosen not in presets:
                raise ConfigError(f"unknown preset {chosen!r}; choose from {sorted(presets or {})}")
            resolved["preset"] = chosen
            resolved["snr_db"] = list(presets[chosen]["snr_db"])
    for layer in layers:
        resolved.update(layer)
    _check_choices(command, resolved)
    return resolved
