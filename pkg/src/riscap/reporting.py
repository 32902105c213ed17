"""CSV and figure emission.

CSV is the canonical output: RFC-4180 with CRLF line endings, a header row,
and 17-significant-digit floats.  Figures are rendered to standalone SVG 1.1
next to each CSV; a fixed hash salt and stripped date metadata keep the SVG
byte-identical across runs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "riscap"

import matplotlib.pyplot as plt  # noqa: E402


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return f"{float(value):.16e}"


def write_csv(path, header: list[str], rows: list[tuple]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def save_figure(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def line_figure(curves: dict[str, tuple], xlabel: str, ylabel: str, title: str, logy: bool = False):
    """One axes with a line per curve; ``curves`` maps label -> (x, y)."""
    fig, ax = plt.subplots(figsize=(7.5, 5.0))
    for label in sorted(curves):
        x, y = curves[label]
        ax.plot(x, y, marker=".", markersize=4, linewidth=1.2, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if logy:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    if curves:
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig
