"""Figure rendering for the report path.

Every experiment that emits a CSV can also render a PNG next to it.  The
plots are deliberately plain diagnostics: metric against n (or against the
x-like parameter present), one series per remaining parameter combination,
error bars where a stderr column exists.
"""

from __future__ import annotations

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _series_label(params: dict, exclude: tuple) -> str:
    items = [(k, v) for k, v in sorted(params.items()) if k not in exclude]
    return ", ".join(f"{k}={v}" for k, v in items) or "all"


def render_report(rows, png_path, title: str = "") -> str | None:
    """Render report rows grouped by metric; returns the path or None.

    Rows without a numeric `n` parameter are drawn as labeled points.
    """
    metrics = sorted({r.metric for r in rows})
    if not metrics:
        return None
    fig, axes = plt.subplots(
        len(metrics), 1, figsize=(7.0, 2.6 * len(metrics)), squeeze=False
    )
    for ax, metric in zip(axes[:, 0], metrics):
        series = defaultdict(list)
        for r in rows:
            if r.metric != metric:
                continue
            x = r.params.get("n")
            series[_series_label(r.params, ("n", "seed"))].append(
                (x, r.value, r.stderr)
            )
        for label, pts in sorted(series.items()):
            xs = [p[0] for p in pts]
            if any(x is None for x in xs):
                ax.plot(range(len(pts)), [p[1] for p in pts], "o", label=label)
            else:
                pts = sorted(pts)
                xs = [p[0] for p in pts]
                ys = [p[1] for p in pts]
                es = [p[2] if p[2] is not None else 0.0 for p in pts]
                finite = [
                    (x, y, e) for x, y, e in zip(xs, ys, es) if math.isfinite(y)
                ]
                if not finite:
                    continue
                xs, ys, es = zip(*finite)
                if any(es):
                    ax.errorbar(xs, ys, yerr=es, marker="o", capsize=2, label=label)
                else:
                    ax.plot(xs, ys, marker="o", label=label)
        ax.set_ylabel(metric)
        ax.grid(True, alpha=0.3)
        if len(series) > 1:
            ax.legend(fontsize=7)
    axes[-1, 0].set_xlabel("n")
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=130)
    plt.close(fig)
    return str(png_path)
