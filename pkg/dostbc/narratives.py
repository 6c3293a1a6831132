# dostbc/narratives.py — plain-text rendering of reports (ASCII only)
from typing import Any, Dict, List, Optional, Sequence


def _bullet_lines(items: List[str], prefix: str = "- ") -> str:
    lines = []
    for it in (items or []):
        it = str(it).strip()
        if not it:
            continue
        lines.append(f"{prefix}{it}")
    return "\n".join(lines)


def _grid(rows: Sequence[Sequence[Any]], indent: str = "    ") -> str:
    cells = [[_cell(v) for v in row] for row in rows]
    if not cells:
        return f"{indent}(empty)"
    width = max(len(c) for row in cells for c in row)
    return "\n".join(indent + "  ".join(c.rjust(width) for c in row) for row in cells)


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_config(config: Dict[str, Any]) -> str:
    lines = [f"{k} = {config[k]}" for k in sorted(config)]
    return "# resolved configuration\n" + _bullet_lines(lines, prefix="# ") + "\n"


# ------------------------------- VERIFICATION -------------------------------
def render_verification(name: str, report: Dict[str, Any]) -> str:
    verdict = report.get("verdict", "fail").upper()
    out = [f"{name}: {verdict}"]
    if report.get("failed_condition"):
        out.append(f"  failed condition: {report['failed_condition']}")
    extra = [f"{c['condition']}" for c in report.get("failures", [])[1:]]
    if extra:
        out.append("  other violated families:")
        out.append(_bullet_lines(extra, prefix="    - "))
    for key, prof in sorted(report.get("profiles", {}).items()):
        out.append(f"  profile {key} (rows: symbols, columns: relays)")
        out.append(_grid(prof["values"]))
    if report.get("notes"):
        out.append("  notes:")
        out.append(_bullet_lines(report["notes"], prefix="    - "))
    return "\n".join(out)


def render_verify_summary(
    source: str,
    dims: Sequence[int],
    reports: Dict[str, Dict[str, Any]],
    matrix: Optional[Sequence[Sequence[str]]] = None,
) -> str:
    n, k, t = dims
    head = f"# {source}\nN={n} K={k} T={t}\n"
    body = "\n\n".join(render_verification(name, rep) for name, rep in reports.items())
    mat = ""
    if matrix is not None:
        mat = "\ncode matrix (rows: relays, columns: slots)\n" + _grid(matrix) + "\n"
    return head + mat + "\n" + body + "\n"


# ---------------------------------- BOUNDS ----------------------------------
def render_bounds(data: Dict[str, Any]) -> str:
    lines = [
        f"N={data['n']} K={data['k']}",
        f"no-CSI rate bound:              {data['dostbc_bound']}",
        f"phase-information rate bound:   {data['cpi_bound']}",
        f"generalized design ceiling:     {data['god_bound']}",
    ]
    return "\n".join(lines) + "\n"


def render_partition(data: Dict[str, Any]) -> str:
    out = [f"rate {data['rate']} (bound {data['bound']}, {data['bound_source']})"]
    blocks = []
    for i, part in enumerate(data["partition"], start=1):
        blocks.append(f"block {i}: slots {part['columns']}, relays {part['relays']}, N_w={part['n_w']}")
    out.append(_bullet_lines(blocks))
    verdicts = [f"block {v['block']}: rate {v['rate']}, K_w={v['k_w']}, {v['verdict']}" for v in data["verdicts"]]
    if verdicts:
        out.append("per-block rate checks")
        out.append(_bullet_lines(verdicts))
    return "\n".join(out) + "\n"


# ---------------------------------- SEARCH ----------------------------------
def render_search(data: Dict[str, Any]) -> str:
    if "per_t" in data:
        head = f"{data['structure']} N={data['n']} K={data['k']}, T swept 1..{data['t_max']}"
        sweep = [f"T={t}: {v}" for t, v in sorted(data["per_t"].items(), key=lambda kv: int(kv[0]))]
        tail = (
            f"minimal T = {data['minimal_t']}, rate {data['rate']} (bound {data['bound']})"
            if data.get("minimal_t")
            else data["verdict"]
        )
        out = [head, _bullet_lines(sweep), tail]
    else:
        sp = data["space"]
        out = [
            f"{sp['structure']} N={sp['n']} K={sp['k']} T={sp['t']}"
            + (" (canonical)" if sp.get("canonicalize") else ""),
            f"raw candidates: {data['raw_count']}, verified: {data['enumerated']} ({data.get('method', '')})",
            "verdict: " + ("a code exists" if data["verdict"] else "no code in this space"),
        ]
    for i, w in enumerate(data.get("witnesses", []), start=1):
        out.append(f"witness {i}:")
        out.append(w.rstrip("\n"))
    return "\n".join(out) + "\n"


# -------------------------------- SIMULATION --------------------------------
def render_ber_table(rows: List[Dict[str, Any]]) -> str:
    lines = [f"{'scheme':<12} {'snr_db':>7} {'trials':>9} {'bit_errors':>10} {'ber':>12}"]
    for r in rows:
        lines.append(
            f"{r['scheme']:<12} {r['snr_db']:>7.2f} {r['trials']:>9d} {r['bit_errors']:>10d} {r['ber']:>12.4e}"
        )
    return "\n".join(lines) + "\n"


def render_simulation(runs: List[Dict[str, Any]], rows: List[Dict[str, Any]]) -> str:
    header = []
    for run in runs:
        header.append(
            f"{run['scheme']}: construction {run['construction']}, N={run['n_symbols']} K={run['n_relays']} "
            f"T={run['n_slots']}, {run['constellation']}, {run['bps_hz']:g} bps/Hz"
        )
    return _bullet_lines(header) + "\n\n" + render_ber_table(rows)
