"""Report figures: match-rate plots, blend tables, E-distance curves,
and segment contact sheets in a neutral tile palette.

All figures are written as PNG with stripped metadata so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .corpus import Segment
from .labeling import BLEND_GAMES
from .tilemaps import TileVocab

_SAVE_KW = {"dpi": 130, "metadata": {"Software": None}, "bbox_inches": "tight"}

# neutral palette keyed by tile tag, checked in priority order
_TAG_COLORS = [
    ("void", "#111111"),
    ("enemy", "#d62728"),
    ("hazard", "#b71c3c"),
    ("pipe", "#2ca02c"),
    ("coin", "#ffd700"),
    ("collectable", "#ffb000"),
    ("question", "#ff7f0e"),
    ("breakable", "#a0522d"),
    ("door", "#9467bd"),
    ("ladder", "#c49c48"),
    ("moving-platform", "#6baed6"),
    ("fixed-platform", "#4477aa"),
    ("cannon", "#555555"),
    ("ground", "#4f4f4f"),
    ("solid", "#7f7f7f"),
    ("empty", "#eaf2fb"),
]


def tile_color(tags) -> str:
    tagset = set(tags)
    for tag, color in _TAG_COLORS:
        if tag in tagset:
            return color
    return "#cccccc"


def _segment_rgb(segment: Segment, vocab: TileVocab) -> np.ndarray:
    img = np.zeros((16, 16, 3))
    for r, row in enumerate(segment.grid.rows):
        for c, ch in enumerate(row):
            color = tile_color(vocab.tile(ch).tags)
            img[r, c] = tuple(int(color[i:i + 2], 16) / 255 for i in (1, 3, 5))
    return img


def segment_sheet(segments: list[Segment], vocab: TileVocab, path: str | Path,
                  titles: list[str] | None = None, cols: int = 8) -> None:
    """Contact sheet of segments as colored tile grids."""
    n = len(segments)
    cols = min(cols, max(n, 1))
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(1.6 * cols, 1.8 * rows), squeeze=False)
    for i in range(rows * cols):
        ax = axes[i // cols][i % cols]
        ax.axis("off")
        if i < n:
            ax.imshow(_segment_rgb(segments[i], vocab), interpolation="nearest")
            if titles:
                ax.set_title(titles[i], fontsize=7)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def match_figure(reports: dict, freq: dict[int, int], path: str | Path,
                 top_k: int = 16) -> None:
    """Exact-match percentages per label with training frequencies below.

    `reports` maps source name ("random"/"training") to a MatchReport;
    labels shown are the top_k most frequent in the training data, x-axis
    labeled with the integer encoding of each label.
    """
    order = sorted(freq, key=lambda n: (-freq[n], n))[:top_k]
    fig, (ax_top, ax_bot) = plt.subplots(
        2, 1, figsize=(7.5, 5.2), sharex=True,
        gridspec_kw={"height_ratios": [3, 2]},
    )
    xs = np.arange(len(order))
    width = 0.38
    for i, (name, report) in enumerate(sorted(reports.items())):
        by_int = {r.label_int: r for r in report.rows}
        ys = [by_int[n].exact_pct for n in order]
        ax_top.bar(xs + (i - (len(reports) - 1) / 2) * width, ys, width, label=name)
    ax_top.set_ylabel("exact match %")
    ax_top.set_ylim(0, 100)
    ax_top.legend(fontsize=8)
    ax_top.grid(axis="y", alpha=0.3)

    ax_bot.bar(xs, [freq[n] for n in order], 0.6, color="#777777")
    ax_bot.set_ylabel("training count")
    ax_bot.set_xlabel("label (integer encoding)")
    ax_bot.set_xticks(xs)
    ax_bot.set_xticklabels([str(n) for n in order], fontsize=8)
    ax_bot.grid(axis="y", alpha=0.3)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def blend_figure(table: dict[str, dict[str, float]], path: str | Path) -> None:
    """Heatmap: share of each predicted game per blend conditioning label."""
    labels = sorted(k for k in table if not k.startswith("train:"))
    data = np.array([[table[lab][g] for g in BLEND_GAMES] for lab in labels])
    fig, ax = plt.subplots(figsize=(4.4, 0.5 * len(labels) + 1.2))
    im = ax.imshow(data, cmap="Blues", vmin=0, vmax=100, aspect="auto")
    ax.set_xticks(range(len(BLEND_GAMES)))
    ax.set_xticklabels(BLEND_GAMES)
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels, family="monospace")
    for i in range(data.shape[0]):
        for j in range(data.shape[1]):
            ax.text(j, i, f"{data[i, j]:.1f}", ha="center", va="center",
                    fontsize=8, color="black" if data[i, j] < 60 else "white")
    ax.set_xlabel("classified as")
    ax.set_ylabel("conditioning label")
    fig.colorbar(im, ax=ax, shrink=0.8, label="%")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def edist_figure(table: dict[str, dict[str, float]], path: str | Path) -> None:
    """E-distance of generations under each blend label vs training games."""
    labels = sorted(k for k in table if not k.startswith("train:"))
    xs = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(7, 3.6))
    for game in BLEND_GAMES:
        ax.plot(xs, [table[lab][game] for lab in labels], marker="o", label=f"vs {game}")
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, family="monospace")
    ax.set_xlabel("blend conditioning label")
    ax.set_ylabel("E-distance")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def training_curve(history: list[dict], path: str | Path) -> None:
    epochs = [h["epoch"] for h in history]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(epochs, [h["recon"] for h in history], label="reconstruction")
    ax.plot(epochs, [h["kl"] for h in history], label="KL")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
