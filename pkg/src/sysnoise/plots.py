"""Matplotlib figures for reports; always rendered off-screen to files."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import format_std, robustness_report  # noqa: E402


def accuracy_heatmap(table, path, title=None):
    """Train x test accuracy grid with a mean / std annotation per row."""
    values = np.asarray(table.values)
    summary = robustness_report(table)
    fig, ax = plt.subplots(figsize=(1.3 * len(table.columns) + 3.5, 0.55 * len(table.rows) + 1.8))
    im = ax.imshow(values, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(table.columns)))
    ax.set_xticklabels([c + ("*" if c in table.excluded else "") for c in table.columns],
                       rotation=35, ha="right", fontsize=8)
    ax.set_yticks(range(len(table.rows)))
    ax.set_yticklabels([f"{s.label}  ({s.mean:.2f} +/- {format_std(s.std)})" for s in summary], fontsize=8)
    mid = (values.max() + values.min()) / 2
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            ax.text(j, i, f"{values[i, j]:.1f}", ha="center", va="center", fontsize=7,
                    color="black" if values[i, j] > mid else "white")
    fig.colorbar(im, ax=ax, label="accuracy (%)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def diff_histogram(stats, path, title=None):
    """Log-scale histogram of absolute pixel differences."""
    hist = np.asarray(stats.histogram)
    top = max(1, int(np.nonzero(hist)[0].max()) if hist.any() else 1)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(np.arange(top + 1), hist[:top + 1], color="tab:blue")
    ax.set_yscale("log")
    ax.set_xlabel("|a - b|")
    ax.set_ylabel("samples")
    ax.set_title(title or f"L-inf {stats.linf}, mean L1 {stats.mean_l1:.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def image_grid(images, labels, path, scale=1):
    """Side-by-side panels, nearest-upscaled by ``scale`` so small outputs stay visible."""
    fig, axes = plt.subplots(1, len(images), figsize=(2.4 * len(images), 2.7))
    axes = np.atleast_1d(axes)
    for ax, img, label in zip(axes, images, labels):
        img = np.asarray(img)
        if scale > 1:
            img = img.repeat(scale, axis=0).repeat(scale, axis=1)
        ax.imshow(img.squeeze(), cmap="gray", vmin=0, vmax=255, interpolation="nearest")
        ax.set_title(label, fontsize=9)
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
