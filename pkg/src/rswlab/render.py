"""Configuration rendering: binary PPM (bit-exact) and matplotlib views.

The PPM output is the canonical artifact: one pixel per vertex, positive
white, negative black, with the largest positive cluster highlighted in red
when requested.  A PNG twin is rendered through matplotlib for quick
inspection in reports.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .topology import Configuration

_POS = (255, 255, 255)
_NEG = (0, 0, 0)
_HILITE = (200, 30, 30)


def largest_positive_cluster(config: Configuration) -> np.ndarray:
    """Mask of the largest connected component of positive vertices."""
    g = config.grid
    remaining = config.signs == 1
    best = np.zeros_like(remaining)
    best_size = 0
    while remaining.any():
        ix, iy = np.argwhere(remaining)[0]
        seed = np.zeros_like(remaining)
        seed[ix, iy] = True
        comp = g.flood(seed, remaining)
        size = int(comp.sum())
        if size > best_size:
            best, best_size = comp, size
        remaining &= ~comp
    return best


def config_to_rgb(config: Configuration, highlight_cluster: bool = True) -> np.ndarray:
    """(ny, nx, 3) uint8 image, y increasing upward (row 0 = top)."""
    pos = config.signs == 1
    img = np.empty(pos.shape + (3,), dtype=np.uint8)
    img[pos] = _POS
    img[~pos] = _NEG
    if highlight_cluster and pos.any():
        img[largest_positive_cluster(config)] = _HILITE
    # array is [ix, iy]; flip to image rows top-to-bottom
    return np.transpose(img, (1, 0, 2))[::-1]


def write_ppm(path: str | Path, rgb: np.ndarray) -> None:
    """Binary P6, zero-dependency and byte-stable."""
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def write_png(path: str | Path, rgb: np.ndarray, title: str = "") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    dpi = 100
    h, w, _ = rgb.shape
    fig, ax = plt.subplots(figsize=(max(w / dpi, 2.5), max(h / dpi, 2.5)), dpi=dpi)
    ax.imshow(rgb, interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_estimate_figure(path: str | Path, labels: list[str],
                          values: list[float], errors: list[float],
                          title: str, ylabel: str = "frequency") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(max(3.0, 1.1 * len(labels) + 1.5), 3.2), dpi=120)
    xs = np.arange(len(labels))
    ax.errorbar(xs, values, yerr=errors, fmt="o", capsize=3)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
