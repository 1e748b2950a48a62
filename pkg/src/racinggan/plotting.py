"""SVG figures: loss curves per run and generated curves per checkpoint."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .synthdata import CurveBand  # noqa: E402
from .trainer import LossTrace  # noqa: E402

# D red, G1 green, G2 blue; extra generators continue the cycle
SERIES_COLORS = ["red", "green", "blue", "orange", "purple", "brown", "gray"]

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 0.8,
    "svg.hashsalt": "racinggan",
    "svg.fonttype": "none",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no timestamp so identical inputs give identical files
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def series_labels(k: int) -> list[str]:
    if k == 1:
        return ["D", "G"]
    return ["D"] + [f"G{i + 1}" for i in range(k)]


def plot_loss_trace(trace: LossTrace, path, title: str | None = None) -> Path:
    """Raw loss per iteration for D and every generator."""
    if len(trace) == 0:
        raise ValueError("cannot plot an empty trace")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        xs = np.asarray(trace.iterations)
        cols = [trace.loss_d, *trace.loss_g]
        for n, (col, label) in enumerate(zip(cols, series_labels(trace.k))):
            ax.plot(xs, col, color=SERIES_COLORS[n % len(SERIES_COLORS)], label=label)
        ax.set_xlabel("iteration")
        ax.set_ylabel("loss")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        return _save(fig, path)


def plot_checkpoint_curves(checkpoints: dict[tuple[int, int], np.ndarray], band: CurveBand,
                           path, title: str | None = None, max_curves: int = 16) -> Path:
    """Grid of generated curves: one row per generator, one column per checkpoint."""
    iters = sorted({t for t, _ in checkpoints})
    gens = sorted({i for _, i in checkpoints})
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(gens), len(iters), squeeze=False, sharex=True, sharey=True,
                                 figsize=(2.4 * len(iters), 2.0 * len(gens)))
        for r, i in enumerate(gens):
            for c, t in enumerate(iters):
                ax = axes[r][c]
                ys = checkpoints.get((t, i))
                ax.fill_between(band.xs, band.lower_y, band.upper_y, color="0.9")
                ax.plot(band.xs, band.lower_y, color="black")
                ax.plot(band.xs, band.upper_y, color="black")
                if ys is not None:
                    for y in ys[:max_curves]:
                        ax.plot(band.xs, y, color=SERIES_COLORS[1 + i % 6], alpha=0.6)
                if r == 0:
                    ax.set_title(f"iteration {t}")
                if c == 0:
                    ax.set_ylabel(f"G{i + 1}")
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_trace_file(csv_path, out_path=None) -> Path:
    trace = LossTrace.read_csv(csv_path)
    csv_path = Path(csv_path)
    out_path = Path(out_path) if out_path else csv_path.with_suffix(".svg")
    return plot_loss_trace(trace, out_path, title=csv_path.stem)
