"""CSV/JSON data behind the benchmark plots. No rendering happens here."""

from __future__ import annotations

import csv
import io
import os
from collections import defaultdict
from typing import Sequence

from ..errors import EmptyInput
from ..indicators import nondominated
from .runner import dumps
from .stats import LEVELS, aggregate, delta_net_surplus, ecdf, win_rate

LATENCY_FILES = frozenset({"ecdf_latency.csv"})


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _pareto_rows(records: Sequence[dict]):
    pts = []
    for r in records:
        g = r["methods"].get("ga", {})
        if g.get("found"):
            pts.append((r["instance_id"], r["stratum"], g["net_surplus"], g["gas_eth"]))
    front = set(nondominated([(net, -gas) for _, _, net, gas in pts])) if pts else set()
    return [(iid, st, net, gas, int((net, -gas) in front)) for iid, st, net, gas in pts]


def _winrate_rows(records, key):
    groups = defaultdict(list)
    for r in records:
        groups[r[key]].append(r)
    rows = []
    for level in [lv for lv in LEVELS if lv in groups] + sorted(set(groups) - set(LEVELS)):
        rs = groups[level]
        wins = sum(1 for r in rs if (delta_net_surplus(r) or 0.0) > 0)
        rows.append((level, len(rs), wins, win_rate(rs)))
    return rows


def figure_files(records: Sequence[dict], summary: dict | None = None) -> dict[str, str]:
    """File name to contents for every figure data file."""
    if not records:
        raise EmptyInput("no records to plot")
    summary = summary or aggregate(records)
    files: dict[str, str] = {}
    regimes = [lv for lv in LEVELS if any(r["gas_regime"] == lv for r in records)]
    for reg in regimes:
        sel = [r for r in records if r["gas_regime"] == reg]
        files[f"pareto_{reg}.csv"] = _csv(("instance_id", "stratum", "net_surplus", "gas_eth", "frontier"),
                                          _pareto_rows(sel))
        deltas = [d for d in map(delta_net_surplus, sel) if d is not None]
        files[f"ecdf_delta_{reg}.csv"] = _csv(("delta_net_surplus", "F"), ecdf(deltas) if deltas else [])
    lat = [r["methods"]["ga"]["elapsed_ms"] for r in records if r["methods"].get("ga", {}).get("found")]
    files["ecdf_latency.csv"] = _csv(("elapsed_ms", "F"), ecdf(lat) if lat else [])
    files["winrate_by_fragmentation.csv"] = _csv(("fragmentation", "n", "wins", "win_rate"),
                                                 _winrate_rows(records, "fragmentation"))
    files["winrate_by_gas.csv"] = _csv(("gas_regime", "n", "wins", "win_rate"), _winrate_rows(records, "gas_regime"))
    cols = ("stratum", "n", "n_paired", "mean", "ci_lo", "ci_hi", "wilcoxon_p", "cohens_d", "win_rate")
    files["stratum_table.csv"] = _csv(cols, ([s[c] for c in cols] for s in summary["strata"]))
    files["summary.json"] = dumps(summary)
    return files


def emit_figures(records: Sequence[dict], out_dir, summary: dict | None = None) -> list[str]:
    """Write all figure data into ``out_dir``; nothing is written on error."""
    files = figure_files(records, summary)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in sorted(files):
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            fh.write(files[name])
        written.append(path)
    return written
