# dostbc/exporters.py — JSON / CSV / XLSX writers and the plotly BER figure

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import pandas as pd
import plotly.graph_objects as go

try:
    from openpyxl import Workbook
    HAVE_XLSX = True
except Exception:
    HAVE_XLSX = False

BER_COLUMNS = ["scheme", "snr_db", "trials", "bit_errors", "ber"]

# fixed workbook metadata keeps reruns free of wall-clock values
_FIXED_STAMP = datetime(2000, 1, 1)


def ensure_output_dir(path) -> Path:
    """Create the parent folder of an output file and return the path."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def dumps_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def export_json(data: Any, path) -> Tuple[bytes, str]:
    p = ensure_output_dir(path)
    text = dumps_json(data)
    p.write_text(text, encoding="utf-8")
    return text.encode("utf-8"), str(p)


# ------------------------------ BER TABLES ------------------------------
def ber_frame(rows: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=BER_COLUMNS)


def ber_csv_text(rows: Iterable[Dict[str, Any]]) -> str:
    return ber_frame(rows).to_csv(index=False, lineterminator="\n")


def export_ber_csv(rows: Iterable[Dict[str, Any]], path) -> Tuple[bytes, str]:
    p = ensure_output_dir(path)
    text = ber_csv_text(rows)
    p.write_text(text, encoding="utf-8")
    return text.encode("utf-8"), str(p)


def export_ber_xlsx(rows: Iterable[Dict[str, Any]], config: Dict[str, Any], path) -> Tuple[bytes, str]:
    """Workbook with a BER sheet and a Config sheet; CSV next to it when openpyxl is missing."""
    rows = list(rows)
    p = ensure_output_dir(path)
    if HAVE_XLSX:
        wb = Workbook()
        wb.properties.created = _FIXED_STAMP
        wb.properties.modified = _FIXED_STAMP
        ws = wb.active
        ws.title = "BER"
        ws.append(BER_COLUMNS)
        for r in rows:
            ws.append([r[c] for c in BER_COLUMNS])
        cfg = wb.create_sheet("Config")
        cfg.append(["key", "value"])
        for k in sorted(config):
            v = config[k]
            cfg.append([k, v if isinstance(v, (int, float, str)) else json.dumps(v)])
        wb.save(p)
        return p.read_bytes(), str(p)

    csv_path = p.with_suffix(".csv")
    return export_ber_csv(rows, csv_path)


def sidecar_path(path) -> Path:
    """<out>.config.json next to a CSV or XLSX output."""
    p = Path(path)
    return p.with_name(p.name + ".config.json")


# -------------------------------- FIGURES --------------------------------
def ber_figure(data, title: Optional[str] = None) -> go.Figure:
    """BER vs SNR, one trace per scheme, log-scaled y axis."""
    df = data if isinstance(data, pd.DataFrame) else ber_frame(data)
    fig = go.Figure()
    for scheme, part in df.groupby("scheme", sort=False):
        part = part[part["ber"] > 0]
        fig.add_trace(go.Scatter(x=part["snr_db"], y=part["ber"], mode="lines+markers", name=str(scheme)))
    fig.update_layout(
        title=title or "Bit error rate",
        xaxis=dict(title="SNR per bit (dB)"),
        yaxis=dict(title="BER", type="log"),
        margin=dict(l=40, r=20, t=40, b=40),
    )
    return fig


_PLOT_TEMPLATE = '''"""Plot {csv_name}: BER vs SNR per scheme."""
from pathlib import Path

import pandas as pd

from dostbc.exporters import ber_figure

here = Path(__file__).resolve().parent
df = pd.read_csv(here / "{csv_name}")
fig = ber_figure(df, title="{title}")
fig.write_html(str(here / "{html_name}"))
'''


def write_plot_script(csv_path, title: str = "Bit error rate") -> Tuple[bytes, str]:
    """Emit <out>.plot.py, which renders the CSV to <out>.html."""
    csv_path = Path(csv_path)
    script = csv_path.with_name(csv_path.name + ".plot.py")
    text = _PLOT_TEMPLATE.format(
        csv_name=csv_path.name,
        html_name=csv_path.stem + ".html",
        title=title.replace('"', "'"),
    )
    ensure_output_dir(script).write_text(text, encoding="utf-8")
    return text.encode("utf-8"), str(script)


def write_code_files(codes: List[Tuple[str, str]], folder) -> List[str]:
    """Write (file name, code text) pairs into ``folder``."""
    base = Path(folder)
    base.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in codes:
        p = base / name
        p.write_text(text, encoding="utf-8")
        written.append(str(p))
    return written
