"""Static SVG renderings of decay curves, learnable bars and feasible regions.

matplotlib is optional; importing this module without it raises a clear error.
"""

from __future__ import annotations

import io
from typing import Sequence

import numpy as np

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError as exc:  # pragma: no cover - depends on the environment
    raise ImportError("SVG output needs matplotlib (pip install 'artifact[plot]')") from exc

__all__ = ["decay_svg", "bars_svg", "region_svg"]

# fixed metadata keeps repeated renders byte-identical
_SVG_META = {"Date": None, "Creator": None}


def _to_svg(fig) -> str:
    buf = io.StringIO()
    plt.rcParams["svg.hashsalt"] = "paulilearn"
    fig.savefig(buf, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return buf.getvalue()


def decay_svg(curves: Sequence[dict]) -> str:
    """curves: dicts with key, x, means, amplitude, rate."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in curves:
        x = np.asarray(c["x"], dtype=float)
        line = ax.plot(x, c["means"], "o", ms=3, label=c["key"])[0]
        if np.isfinite(c["rate"]):
            xs = np.linspace(0, x.max(), 200)
            ax.plot(xs, c["amplitude"] * c["rate"] ** xs, "-", lw=1, color=line.get_color())
    ax.set_xlabel("sequence length")
    ax.set_ylabel("mean Pauli expectation")
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    return _to_svg(fig)


def bars_svg(names: Sequence[str], values: Sequence[float], errors: Sequence[float]) -> str:
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(names)), 4))
    pos = np.arange(len(names))
    ax.bar(pos, values, yerr=errors, capsize=2)
    ax.set_xticks(pos, names, rotation=70, fontsize=7)
    lo = min(v - e for v, e in zip(values, errors)) if values else 0.0
    ax.set_ylim(max(0.0, lo - 0.02), 1.01)
    ax.set_ylabel("fidelity")
    fig.tight_layout()
    return _to_svg(fig)


def region_svg(axes: Sequence[np.ndarray], mask: np.ndarray, labels: Sequence[str],
               truth: Sequence[float] | None = None) -> str:
    if len(axes) != 2:
        raise ValueError("region plots need exactly two coordinates")
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.contourf(axes[0], axes[1], mask.T.astype(float), levels=[0.5, 1.5], alpha=0.6)
    ax.contour(axes[0], axes[1], mask.T.astype(float), levels=[0.5], linewidths=1)
    if truth is not None:
        ax.plot([truth[0]], [truth[1]], "k*", ms=8)
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    fig.tight_layout()
    return _to_svg(fig)
