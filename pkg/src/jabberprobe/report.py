"""Evaluation reports.

The CSV is the source of truth: long-format rows keyed by model, layer,
probe, dataset, and metric, preceded by a comment line carrying the config
hash and seed. Figures are derived from the CSV alone: per-metric grouped
bars, one group per scored system, normal vs. Jabberwocky side by side with
the Jabberwocky bar hatched, and the layer-0 score of each contextual model
drawn as a white sub-bar inside its best-layer bar.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.ticker import FormatStrFormatter

from .errors import DataError

CSV_COLUMNS = ("model", "layer", "probe", "dataset", "metric", "value", "n_sentences")
BASELINE_MODEL = "baseline"
DATASETS = ("normal", "jabberwocky")


@dataclass(frozen=True)
class MetricRow:
    model: str
    layer: Optional[int]  # None for lexical-blind baselines
    probe: str
    dataset: str
    metric: str
    value: float
    n_sentences: int

    def sort_key(self) -> tuple:
        return (
            self.model,
            -1 if self.layer is None else self.layer,
            self.probe,
            self.dataset,
            self.metric,
        )


def format_rows(rows: List[MetricRow], config_hash: str, seed: int) -> str:
    """Render rows as CSV text with the provenance comment first."""
    buffer = io.StringIO()
    buffer.write(f"# config_hash={config_hash} seed={seed}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in sorted(rows, key=MetricRow.sort_key):
        writer.writerow(
            [
                row.model,
                "" if row.layer is None else row.layer,
                row.probe,
                row.dataset,
                row.metric,
                f"{row.value:.6f}",
                row.n_sentences,
            ]
        )
    return buffer.getvalue()


def write_metrics_csv(rows: List[MetricRow], path, config_hash: str, seed: int) -> None:
    Path(path).write_text(format_rows(rows, config_hash, seed), encoding="utf-8")


def read_metrics_csv(path) -> Tuple[List[MetricRow], Dict[str, str]]:
    """Parse a metrics CSV back into rows plus its provenance comment."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise DataError(f"metrics file {path} is empty")
    meta: Dict[str, str] = {}
    if lines[0].startswith("#"):
        for part in lines[0].lstrip("#").split():
            if "=" in part:
                key, _, value = part.partition("=")
                meta[key] = value
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != list(CSV_COLUMNS):
        raise DataError(f"metrics file {path} has unexpected header {header}")
    rows = []
    for record in reader:
        if not record:
            continue
        if len(record) != len(CSV_COLUMNS):
            raise DataError(f"metrics row has {len(record)} fields: {record}")
        rows.append(
            MetricRow(
                model=record[0],
                layer=None if record[1] == "" else int(record[1]),
                probe=record[2],
                dataset=record[3],
                metric=record[4],
                value=float(record[5]),
                n_sentences=int(record[6]),
            )
        )
    return rows, meta


def _bar_systems(rows: List[MetricRow], metric: str) -> List[dict]:
    """Collapse per-layer rows into one bar spec per (model, probe).

    The bar height is the best layer's score; the layer-0 score, when a
    distinct layer 0 row exists, becomes the white sub-bar.
    """
    grouped: Dict[Tuple[str, str, str], List[MetricRow]] = {}
    for row in rows:
        if row.metric != metric:
            continue
        grouped.setdefault((row.model, row.probe, row.dataset), []).append(row)
    systems: Dict[Tuple[str, str], dict] = {}
    for (model, probe, dataset), members in sorted(grouped.items()):
        best = max(members, key=lambda r: (r.value, -(r.layer or 0)))
        layer0 = next((r.value for r in members if r.layer == 0), None)
        spec = systems.setdefault(
            (model, probe), {"label": f"{model}\n{probe}", "datasets": {}}
        )
        spec["datasets"][dataset] = {
            "value": best.value,
            "layer0": layer0 if best.layer not in (None, 0) else None,
        }
    return [systems[key] for key in sorted(systems)]


def render_metric_figure(rows: List[MetricRow], metric: str, path) -> None:
    """Draw the grouped-bar figure for one metric and save it."""
    systems = _bar_systems(rows, metric)
    if not systems:
        raise DataError(f"no rows carry metric {metric!r}")
    plt.rcParams["svg.hashsalt"] = "jabberprobe"
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(systems)), 3.2))
    width = 0.38
    for index, spec in enumerate(systems):
        for offset, dataset in enumerate(DATASETS):
            entry = spec["datasets"].get(dataset)
            if entry is None:
                continue
            x = index + (offset - 0.5) * width
            ax.bar(
                x,
                entry["value"],
                width=width,
                color="C0" if dataset == "normal" else "C1",
                hatch=None if dataset == "normal" else "//",
                edgecolor="black",
                linewidth=0.6,
            )
            if entry["layer0"] is not None:
                ax.bar(
                    x,
                    entry["layer0"],
                    width=width,
                    color="white",
                    edgecolor="black",
                    linewidth=0.6,
                )
    ax.set_xticks(range(len(systems)))
    ax.set_xticklabels([spec["label"] for spec in systems], fontsize=7)
    ax.yaxis.set_major_formatter(FormatStrFormatter("%.2f"))
    ax.set_ylabel(metric)
    handles = [
        plt.Rectangle((0, 0), 1, 1, color="C0", ec="black"),
        plt.Rectangle((0, 0), 1, 1, color="C1", ec="black", hatch="//"),
        plt.Rectangle((0, 0), 1, 1, color="white", ec="black"),
    ]
    ax.legend(
        handles,
        ["normal", "jabberwocky", "layer 0"],
        fontsize=7,
        loc="upper right",
    )
    fig.tight_layout()
    fig.savefig(path, format=Path(path).suffix.lstrip(".") or "svg", metadata={"Date": None})
    plt.close(fig)


def render_report(rows: List[MetricRow], out_dir, fmt: str = "svg") -> List[Path]:
    """One figure per metric present in the rows; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in sorted({row.metric for row in rows}):
        path = out_dir / f"report_{metric}.{fmt}"
        render_metric_figure(rows, metric, path)
        written.append(path)
    return written
