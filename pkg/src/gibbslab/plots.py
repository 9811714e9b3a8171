"""SVG line plots for the run directories."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed ids and no timestamp, so reruns produce the same file
matplotlib.rcParams["svg.hashsalt"] = "gibbslab"


@dataclass
class Figure:
    filename: str
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)  # (xs, ys, label, style)

    def add(self, xs, ys, label: str | None = None, style: str = "-o"):
        self.series.append((list(xs), list(ys), label, style))
        return self


def save(fig: Figure, directory: Path) -> Path:
    f, ax = plt.subplots(figsize=(6, 4))
    for xs, ys, label, style in fig.series:
        ax.plot(xs, ys, style, label=label, markersize=3, linewidth=1)
    ax.set_title(fig.title)
    ax.set_xlabel(fig.xlabel)
    ax.set_ylabel(fig.ylabel)
    if any(s[2] for s in fig.series):
        ax.legend(fontsize=7)
    f.tight_layout()
    path = Path(directory) / fig.filename
    f.savefig(path, format="svg", metadata={"Date": None})
    plt.close(f)
    return path
