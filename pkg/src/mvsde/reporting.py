"""Result serialization: unified CSV, summary JSON, optional SVG plots.

The results CSV is byte-stable for a fixed (config, seed): floats are
written with ``repr`` and row order is the deterministic check order.
Timestamps and environment notes live in a separate metadata file so reruns
diff clean.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

__all__ = ["CheckResult", "PlotSeries", "write_results_csv", "write_summary_json", "write_meta", "render_svg", "parallel_map"]

CSV_FIELDS = ["check", "metric", "value", "param", "seed", "dt", "n", "resolution"]


@dataclass
class PlotSeries:
    """One line with optional confidence band, for the SVG renderer."""

    label: str
    x: list
    y: list
    lo: list | None = None
    hi: list | None = None
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False


@dataclass
class CheckResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    series: list = field(default_factory=list)

    def provenance_rows(self, seed: int, dt: float, n: int, resolution: int):
        """Rows padded with provenance columns, deterministic order."""
        out = []
        for row in self.rows:
            base = {
                "check": self.name,
                "metric": row.get("metric", ""),
                "value": _fmt(row.get("value", "")),
                "param": row.get("param", ""),
                "seed": str(seed),
                "dt": _fmt(row.get("dt", dt)),
                "n": str(row.get("n", n)),
                "resolution": str(row.get("resolution", resolution)),
            }
            out.append(base)
        return out


def _fmt(v) -> str:
    if isinstance(v, float):  # includes numpy scalars, which subclass float
        return repr(float(v))
    return str(v)


def write_results_csv(path, results, seed: int, dt: float, n: int, resolution: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for res in results:
            w.writerows(res.provenance_rows(seed, dt, n, resolution))


def write_summary_json(path, results) -> None:
    payload = [
        {"name": r.name, "pass": bool(r.passed), "metrics": {k: _json_safe(v) for k, v in r.metrics.items()}}
        for r in results
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _json_safe(v):
    try:
        json.dumps(v)
        return v
    except TypeError:
        if hasattr(v, "tolist"):
            return v.tolist()
        return str(v)


def write_meta(path, **info) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(info, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def render_svg(out_dir, check_name: str, series_list) -> list:
    """Render each check's series as a standalone SVG; returns file paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    for i, s in enumerate(series_list):
        fig, ax = plt.subplots(figsize=(5.5, 3.6))
        ax.plot(s.x, s.y, marker="o", lw=1.2, label=s.label)
        if s.lo is not None and s.hi is not None:
            ax.fill_between(s.x, s.lo, s.hi, alpha=0.25, lw=0)
        if s.logx:
            ax.set_xscale("log")
        if s.logy:
            ax.set_yscale("log")
        ax.set_xlabel(s.xlabel)
        ax.set_ylabel(s.ylabel)
        ax.set_title(f"{check_name}: {s.label}")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fname = os.path.join(out_dir, f"{check_name}_{i}_{_slug(s.label)}.svg")
        fig.savefig(fname, format="svg")
        plt.close(fig)
        paths.append(fname)
    return paths


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in text)[:40]


def parallel_map(fn, items, threads: int = 0):
    """Map preserving input order; results never depend on the thread count
    because every item's computation is keyed by its own random stream."""
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    workers = threads if threads > 0 else min(len(items), os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
