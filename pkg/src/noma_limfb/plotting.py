"""Series files and matplotlib figures for rate-loss / sum-rate sweeps."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "figure.dpi": 150,
}


def _get(row, key, default=math.nan):
    if isinstance(row, dict):
        alias = {"b": "B", "b_prime": "Bprime"}
        return row.get(key, row.get(alias.get(key, key), default))
    return getattr(row, key, default)


def _curves(rows):
    """Group rows by B' with each curve sorted by B."""
    curves = {}
    for r in rows:
        curves.setdefault(int(_get(r, "b_prime")), []).append(r)
    return {bp: sorted(rs, key=lambda r: int(_get(r, "b"))) for bp, rs in sorted(curves.items())}


def emit_plot_data(rows, out_dir) -> list[Path]:
    """Write whitespace-separated ``B value ci`` files, one per fixed-B' curve.

    Produces ``rate_loss_bprime<k>.dat`` and ``sum_rate_lf_bprime<k>.dat`` for
    every B', and ``sum_rate_full.dat`` as the full-CSI reference.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no summary rows to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def write(name, pts):
        path = out / name
        lines = ["# B value ci"] + [f"{b:d} {v:.6g} {ci:.6g}" for b, v, ci in pts]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    full_pts = {}
    for bp, rs in _curves(rows).items():
        write(f"rate_loss_bprime{bp}.dat",
              [(int(_get(r, "b")), _get(r, "mean_rate_loss"), _get(r, "ci_rate_loss")) for r in rs])
        write(f"sum_rate_lf_bprime{bp}.dat",
              [(int(_get(r, "b")), _get(r, "mean_sum_rate_lf"), _get(r, "ci_sum_rate_lf"))
               for r in rs])
        for r in rs:
            full_pts.setdefault(int(_get(r, "b")), (_get(r, "mean_sum_rate_full"),
                                                    _get(r, "ci_sum_rate_full")))
    write("sum_rate_full.dat", [(b, v, ci) for b, (v, ci) in sorted(full_pts.items())])
    return written


def render_figures(rows, out_dir) -> list[Path]:
    """Rate loss and average sum rate versus B, one curve per B'."""
    rows = list(rows)
    if not rows:
        raise ValueError("no summary rows to plot")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves = _curves(rows)
    paths = []
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(3.5, 2.6))
        for bp, rs in curves.items():
            ax.errorbar([_get(r, "b") for r in rs], [_get(r, "mean_rate_loss") for r in rs],
                        yerr=[_get(r, "ci_rate_loss") for r in rs], marker="o", capsize=2,
                        label=f"B'={bp}")
        ax.set_xlabel("CQI bits B")
        ax.set_ylabel("average rate loss (bit/s/Hz)")
        ax.grid(alpha=0.3)
        ax.legend(ncol=2)
        fig.tight_layout()
        paths.append(out / "rate_loss.png")
        fig.savefig(paths[-1])
        plt.close(fig)

        fig, ax = plt.subplots(figsize=(3.5, 2.6))
        full_b, full_v = {}, {}
        for bp, rs in curves.items():
            ax.plot([_get(r, "b") for r in rs], [_get(r, "mean_sum_rate_lf") for r in rs],
                    marker="o", label=f"LF, B'={bp}")
            for r in rs:
                full_b[int(_get(r, "b"))] = _get(r, "mean_sum_rate_full")
        xs = sorted(full_b)
        ax.plot(xs, [full_b[x] for x in xs], "k--", label="full CSI")
        ax.set_xlabel("CQI bits B")
        ax.set_ylabel("average sum rate (bit/s/Hz)")
        ax.grid(alpha=0.3)
        ax.legend(ncol=2)
        fig.tight_layout()
        paths.append(out / "sum_rate.png")
        fig.savefig(paths[-1])
        plt.close(fig)
    return paths
