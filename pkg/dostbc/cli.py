# dostbc/cli.py — command-line front end: verify, bounds, search, simulate, construct, partition
from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .bounds import (
    BoundViolationError,
    PartitionPremiseError,
    cpi_rate_bound,
    dostbc_rate_bound,
    fraction_text,
    generalized_design_rate_bound,
    partition_report,
    rate_report,
)
from .code_core import CodeFormatError, UnsupportedSizeError, construct, render_code_matrix, serialize_code
from .exporters import (
    dumps_json,
    ber_csv_text,
    ensure_output_dir,
    export_ber_csv,
    export_ber_xlsx,
    export_json,
    sidecar_path,
    write_code_files,
    write_plot_script,
)
from .importers import ConfigError, command_defaults, load_code_file, resolve_config
from .narratives import (
    render_bounds,
    render_config,
    render_partition,
    render_search,
    render_simulation,
    render_verify_summary,
)
from .oracle import (
    COLUMN_MONOMIAL_DOSTBC,
    ROW_MONOMIAL_CPI,
    SEARCH_PRESETS,
    BudgetExceededError,
    SearchSpace,
    exists_code,
    max_rate,
)
from .sim import SIM_PRESETS, SimConfig, preset_efficiencies, run_ber
from .verify import check_dostbc, check_dostbc_cpi, verify_any

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2

STRUCTURE_NAMES = {"cpi": ROW_MONOMIAL_CPI, "dostbc": COLUMN_MONOMIAL_DOSTBC}


# --------------------------------- CONFIG ----------------------------------
def resolve_cli_config(args) -> Dict[str, Any]:
    """The command's full configuration; flags left unset fall back to env, file and defaults."""
    keys = command_defaults(args.command)
    cli = {k: getattr(args, k, None) for k in keys}
    if args.command == "simulate":
        presets = {name: {"snr_db": p["snr_db"]} for name, p in SIM_PRESETS.items()}
        return resolve_config(args.config, cli, presets=presets, command="simulate")
    return resolve_config(None, cli, command=args.command)


# --------------------------------- OUTPUT ----------------------------------
def _emit(cfg: Dict[str, Any], text: str, data: Dict[str, Any]) -> None:
    """Write text (headed by the config) or JSON (embedding it) to ``out`` or stdout."""
    data = {**data, "config": cfg}
    if cfg["format"] == "json":
        body = dumps_json(data)
    else:
        body = render_config(cfg) + text
    if cfg["out"]:
        if cfg["format"] == "json":
            export_json(data, cfg["out"])
        else:
            ensure_output_dir(cfg["out"]).write_text(body, encoding="utf-8")
        log.info("wrote %s", cfg["out"])
    else:
        sys.stdout.write(body)


# --------------------------------- VERIFY ----------------------------------
def cmd_verify(cfg: Dict[str, Any]) -> int:
    code = load_code_file(cfg["code_file"])
    reports = verify_any(code, draws=cfg["draws"], tol=cfg["tol"], seed=cfg["seed"], kind=cfg["kind"])

    cpi_ok = "dostbc-cpi" in reports and reports["dostbc-cpi"].verdict
    dostbc_ok = "dostbc" in reports and reports["dostbc"].verdict and reports["gram-conditions"].verdict
    passed = cpi_ok or dostbc_ok

    rates = {}
    if "dostbc-cpi" in reports:
        rates["cpi"] = rate_report(code, "cpi", verified=cpi_ok).to_dict()
    if "dostbc" in reports:
        rates["dostbc"] = rate_report(code, "dostbc", verified=dostbc_ok).to_dict()

    as_dicts = {name: r.to_dict() for name, r in reports.items()}
    data = {
        "source": cfg["code_file"],
        "n": code.n_symbols,
        "k": code.n_relays,
        "t": code.n_slots,
        "kind": cfg["kind"],
        "verdict": "pass" if passed else "fail",
        "reports": as_dicts,
        "rates": rates,
    }
    matrix = render_code_matrix(code, cpi=cfg["kind"] == "cpi")
    text = render_verify_summary(cfg["code_file"], (code.n_symbols, code.n_relays, code.n_slots), as_dicts, matrix)
    text += f"\noverall: {'PASS' if passed else 'FAIL'}\n"
    _emit(cfg, text, data)
    return EXIT_OK if passed else EXIT_NEGATIVE


# --------------------------------- BOUNDS ----------------------------------
def cmd_bounds(cfg: Dict[str, Any]) -> int:
    n, k = cfg["n"], cfg["k"]
    if n < 1 or k < 1:
        raise ConfigError("N and K must be positive")
    data = {
        "n": n,
        "k": k,
        "dostbc_bound": fraction_text(dostbc_rate_bound(n, k)),
        "cpi_bound": fraction_text(cpi_rate_bound(k)),
        "god_bound": fraction_text(generalized_design_rate_bound(k)),
    }
    _emit(cfg, render_bounds(data), data)
    return EXIT_OK


# --------------------------------- SEARCH ----------------------------------
def _write_witnesses(folder: Optional[str], texts: List[str], stem: str) -> None:
    if not folder or not texts:
        return
    named = [(f"{stem}_witness{i}.code", text) for i, text in enumerate(texts, start=1)]
    for path in write_code_files(named, folder):
        log.info("wrote %s", path)


def _search_method(cfg: Dict[str, Any]) -> str:
    # the canonical stream and worker ranges only exist in brute force
    return "brute_force" if cfg["canonicalize"] or cfg["workers"] > 1 else cfg["method"]


def cmd_search(cfg: Dict[str, Any]) -> int:
    if cfg["preset"]:
        try:
            space = SEARCH_PRESETS[cfg["preset"]]
        except KeyError:
            raise ConfigError(f"unknown search preset {cfg['preset']!r}; choose from {sorted(SEARCH_PRESETS)}") from None
        n, k, t, structure = space.n, space.k, space.t, space.structure
    else:
        if cfg["n"] is None or cfg["k"] is None or (cfg["t"] is None and cfg["t_max"] is None):
            raise ConfigError("search needs --n, --k and --t (or --t-max), or a --preset")
        n, k, t, structure = cfg["n"], cfg["k"], cfg["t"], STRUCTURE_NAMES[cfg["structure"]]
    if cfg["workers"] < 1:
        raise ConfigError("workers must be at least 1")
    method = _search_method(cfg)

    if cfg["t_max"] is not None:
        result = max_rate(
            n, k, cfg["t_max"], structure,
            budget=cfg["budget"], method=method, workers=cfg["workers"], canonicalize=cfg["canonicalize"],
        )
        data = result.to_dict()
        found = result.minimal_t is not None
        stem = f"n{n}k{k}"
    else:
        space = SearchSpace(n, k, t, structure, cfg["canonicalize"])
        res = exists_code(space, budget=cfg["budget"], method=method, workers=cfg["workers"])
        data = res.to_dict()
        found = res.verdict
        stem = f"n{n}k{k}t{t}"

    _write_witnesses(cfg["witness_dir"], data.get("witnesses", []), stem)
    _emit(cfg, render_search(data), data)
    return EXIT_OK if found else EXIT_NEGATIVE


# -------------------------------- SIMULATE ---------------------------------
def build_sim_configs(resolved: Dict[str, Any]) -> List[SimConfig]:
    """One SimConfig per scheme: the preset's list, or the single scheme described by the keys."""
    common = dict(
        snr_db_points=tuple(resolved["snr_db"]),
        min_trials=resolved["min_trials"],
        min_bit_errors=resolved["min_bit_errors"],
        max_trials=resolved["max_trials"],
        batch_size=resolved["batch_size"],
        workers=resolved["workers"],
        seed=resolved["seed"],
        decoder=resolved["decoder"],
        noiseless=resolved["noiseless"],
    )
    if resolved.get("preset"):
        out = []
        for ps in SIM_PRESETS[resolved["preset"]]["schemes"]:
            code = construct(ps.construction, ps.n_symbols, ps.n_relays)
            out.append(SimConfig(ps.scheme, code, ps.constellation, construction=ps.construction, **common))
        return out

    scheme = resolved["scheme"]
    if resolved.get("code"):
        code = load_code_file(resolved["code"])
        label = "user-supplied"
    else:
        family = "repetition" if scheme == "repetition" else resolved["construction"]
        code = construct(family, resolved["n_symbols"], resolved["n_relays"])
        label = family
    return [SimConfig(scheme, code, resolved["constellation"], construction=label, **common)]


def _warn_if_unverified(sim: SimConfig) -> None:
    report = check_dostbc_cpi(sim.code) if sim.cpi else check_dostbc(sim.code)
    if not report.verdict:
        log.warning(
            "%s code (%s) fails verification at %s; single-symbol decoding is not ML for it",
            sim.scheme, sim.construction, report.failed_condition,
        )


def cmd_simulate(cfg: Dict[str, Any], dry_run: bool = False, plot: bool = False) -> int:
    try:
        sims = build_sim_configs(cfg)
    except ValueError as e:
        if isinstance(e, (CodeFormatError, UnsupportedSizeError)):
            raise
        raise ConfigError(str(e)) from None

    eff = preset_efficiencies([(s.scheme, s.code, s.constellation) for s in sims])
    runs = []
    for s in sims:
        run = s.to_dict()
        run["bps_hz"] = eff[s.scheme]
        runs.append(run)

    if dry_run:
        text = "".join(f"# run: {r['scheme']} ({r['construction']})\n" for r in runs)
        _emit(cfg, text, {"runs": runs})
        return EXIT_OK

    rows = []
    for s in sims:
        _warn_if_unverified(s)
        rows.extend(p.to_row() for p in run_ber(s))

    if cfg["format"] in ("csv", "xlsx"):
        out = cfg["out"]
        if out:
            if cfg["format"] == "csv":
                _, path = export_ber_csv(rows, out)
            else:
                _, path = export_ber_xlsx(rows, cfg, out)
            export_json({"config": cfg, "runs": runs}, sidecar_path(out))
            if plot:
                write_plot_script(path, title=cfg.get("preset") or runs[0]["scheme"])
            log.info("wrote %s", path)
        else:
            sys.stdout.write(ber_csv_text(rows))
        return EXIT_OK

    _emit(cfg, render_simulation(runs, rows), {"runs": runs, "points": rows})
    return EXIT_OK


# -------------------------------- CONSTRUCT --------------------------------
def cmd_construct(cfg: Dict[str, Any]) -> int:
    code = construct(cfg["family"], cfg["n"], cfg["k"])
    text = serialize_code(code)
    data = {
        "family": cfg["family"],
        "n": code.n_symbols,
        "k": code.n_relays,
        "t": code.n_slots,
        "rate": fraction_text(code.data_rate),
        "code": text,
    }
    _emit(cfg, text, data)
    return EXIT_OK


# -------------------------------- PARTITION --------------------------------
def cmd_partition(cfg: Dict[str, Any]) -> int:
    code = load_code_file(cfg["code_file"])
    try:
        data = partition_report(code, kind=cfg["kind"])
    except (PartitionPremiseError, BoundViolationError) as e:
        log.error("%s", e)
        _emit(cfg, f"partition rejected: {e}\n", {"source": cfg["code_file"], "error": str(e)})
        return EXIT_NEGATIVE
    data["source"] = cfg["code_file"]
    _emit(cfg, render_partition(data), data)
    return EXIT_OK


# --------------------------------- PARSER ----------------------------------
def build_parser() -> argparse.ArgumentParser:
    # option defaults stay None so the environment and config files can fill them
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("text", "json", "csv", "xlsx"), default=None, help="default text")
    common.add_argument("--quiet", action="store_true", help="only warnings and errors on stderr")

    parser = argparse.ArgumentParser(prog="dostbc", description="Distributed orthogonal space-time block codes toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="check a code file against the code definitions")
    p.add_argument("code_file")
    p.add_argument("--draws", type=int, default=None, help="default 20")
    p.add_argument("--tol", type=float, default=None, help="default 1e-9")
    p.add_argument("--kind", choices=("cpi", "dostbc", "any"), default=None, help="default any")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", parents=[common], help="rate upper bounds for N symbols and K relays")
    p.add_argument("n", type=int)
    p.add_argument("k", type=int)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("search", parents=[common], help="exhaustive search over a small code space")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--t-max", dest="t_max", type=int, default=None, help="sweep T = 1..T_max for the best rate")
    p.add_argument("--structure", choices=sorted(STRUCTURE_NAMES), default=None, help="default cpi")
    p.add_argument("--preset", choices=sorted(SEARCH_PRESETS), default=None)
    p.add_argument("--canonicalize", action="store_true", default=None)
    p.add_argument("--method", choices=("clique", "brute_force"), default=None, help="default clique")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--witness-dir", dest="witness_dir", default=None, help="write witness code files here")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo BER simulation")
    p.add_argument("--config", default=None, help="run config (key = value text or JSON)")
    p.add_argument("--preset", choices=sorted(SIM_PRESETS), default=None)
    p.add_argument("--scheme", choices=("dostbc", "dostbc_cpi", "repetition"), default=None)
    p.add_argument("--construction", default=None)
    p.add_argument("--code", default=None, help="code file to simulate instead of a construction")
    p.add_argument("--n-symbols", dest="n_symbols", type=int, default=None)
    p.add_argument("--n-relays", dest="n_relays", type=int, default=None)
    p.add_argument("--constellation", default=None)
    p.add_argument("--snr-db", dest="snr_db", default=None, help="comma separated list")
    p.add_argument("--min-trials", dest="min_trials", type=int, default=None)
    p.add_argument("--min-bit-errors", dest="min_bit_errors", type=int, default=None)
    p.add_argument("--max-trials", dest="max_trials", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--decoder", choices=("single", "joint"), default=None)
    p.add_argument("--noiseless", action="store_true", default=None)
    p.add_argument("--dry-run", dest="dry_run", action="store_true", help="validate and print the config only")
    p.add_argument("--plot", action="store_true", help="emit <out>.plot.py next to the CSV/XLSX output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("construct", parents=[common], help="write a code file for a known construction")
    p.add_argument("family", choices=("alamouti", "rate-halving", "repetition", "paired-alamouti"))
    p.add_argument("n", type=int)
    p.add_argument("k", type=int)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("partition", parents=[common], help="slot partition and per-block rate checks")
    p.add_argument("code_file")
    p.add_argument("--kind", choices=("cpi", "dostbc"), default=None, help="default cpi")
    p.set_defaults(func=cmd_partition)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.format in ("csv", "xlsx") and args.command != "simulate":
        parser.error(f"--format {args.format} is only available for simulate")
    try:
        cfg = resolve_cli_config(args)
        if cfg["format"] in ("csv", "xlsx") and args.command != "simulate":
            raise ConfigError(f"format {cfg['format']} is only available for simulate")
        if args.command == "simulate":
            return cmd_simulate(cfg, dry_run=args.dry_run, plot=args.plot)
        return args.func(cfg)
    except (OSError, CodeFormatError, ConfigError, UnsupportedSizeError, BudgetExceededError) as e:
        sys.stderr.write(f"dostbc {args.command}: {e}\n")
        return EXIT_USAGE
