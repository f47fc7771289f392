"""Report figures written to files (Agg backend, no display needed)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .pipeline import STAGES  # noqa: E402


def _middle_slice(arr: np.ndarray) -> np.ndarray:
    """2-D view of an image; 3-D volumes show their central slice."""
    while arr.ndim > 2:
        arr = arr[..., arr.shape[-1] // 2]
    return arr


def plot_benchmark(report, path) -> None:
    """Stacked stage medians per arm and calibration size, with the speedup curve beside it."""
    sizes = sorted({r["calib_size"] for r in report.rows})
    arms = list(report.arms)
    fig, (ax_t, ax_s) = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.8 / max(len(arms), 1)
    x = np.arange(len(sizes))
    colors = plt.cm.tab10(np.linspace(0, 1, 10))
    for k, arm in enumerate(arms):
        bottom = np.zeros(len(sizes))
        for j, stage in enumerate(STAGES):
            vals = np.array([report.cells.get(f"{c}/{arm}", {}).get("stage_median_seconds", {}).get(stage, 0.0)
                             for c in sizes])
            ax_t.bar(x + k * width, vals, width, bottom=bottom, color=colors[j],
                     label=stage if k == 0 else None, edgecolor="white", linewidth=0.3)
            bottom += vals
        for xi, total in zip(x, bottom):
            ax_t.text(xi + k * width, total, arm, ha="center", va="bottom", fontsize=7, rotation=90)
    ax_t.set_xticks(x + width * (len(arms) - 1) / 2, [str(c) for c in sizes])
    ax_t.set_xlabel("calibration size")
    ax_t.set_ylabel("median seconds")
    ax_t.set_yscale("log")
    ax_t.legend(fontsize=7, ncol=2)

    if report.speedups:
        by_pair = {}
        for key, val in report.speedups.items():
            c, a, b = key.split("/")
            by_pair.setdefault(f"{a} / {b}", []).append((int(c), val))
        for label, pts in by_pair.items():
            pts.sort()
            ax_s.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=label)
        ax_s.axhline(1.0, color="gray", lw=0.8, ls="--")
        ax_s.legend(fontsize=8)
    ax_s.set_xlabel("calibration size")
    ax_s.set_ylabel("speedup (median total time ratio)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_spectrum(spectrum: np.ndarray, threshold_ratio: float, path) -> None:
    """Normalized singular values of the calibration matrix with the nullspace cut-off."""
    s = np.asarray(spectrum, dtype=float)
    s = s / s[0] if s.size and s[0] > 0 else s
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(np.arange(1, s.size + 1), np.maximum(s, 1e-17), ".", ms=3)
    ax.axhline(threshold_ratio, color="tab:red", lw=1, ls="--", label=f"cut-off {threshold_ratio:g}")
    ax.set_xlabel("index")
    ax.set_ylabel("sigma / sigma_1")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_maps(result, path) -> None:
    """Map magnitudes and phases for every channel, plus the lambda map and mask."""
    maps = result.maps.data
    Q = maps.shape[0]
    fig, axes = plt.subplots(3, max(Q, 2), figsize=(1.8 * max(Q, 2), 5.6), squeeze=False)
    for q in range(Q):
        img = _middle_slice(maps[q])
        axes[0, q].imshow(np.abs(img).T, cmap="gray", vmin=0, vmax=1, origin="lower")
        axes[1, q].imshow(np.angle(img).T, cmap="twilight", vmin=-np.pi, vmax=np.pi, origin="lower")
        axes[0, q].set_title(f"ch {q}", fontsize=8)
    lam = _middle_slice(np.asarray(result.lambda_min_map))
    im = axes[2, 0].imshow(lam.T, cmap="viridis", origin="lower")
    fig.colorbar(im, ax=axes[2, 0], fraction=0.046)
    axes[2, 0].set_title("lambda", fontsize=8)
    axes[2, 1].imshow(_middle_slice(result.support_mask).T, cmap="gray", origin="lower")
    axes[2, 1].set_title("mask", fontsize=8)
    for ax in axes.ravel():
        ax.set_xticks([])
        ax.set_yticks([])
    for ax in axes[2, 2:]:
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
