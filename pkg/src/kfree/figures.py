"""Headless matplotlib renderings of the report tables."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .circle_method import L2Row  # noqa: E402
from .variance_lab import ScalingReport, VarianceStats  # noqa: E402


def fig_scaling(report: ScalingReport, path: str) -> str:
    """Log-log variance growth against both bound shapes, plus ratios."""
    xs = [r.x for r in report.rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.5, 4.2))
    ax1.loglog(xs, [r.Y for r in report.rows], "o-", label="Y(x, Q)")
    label_new = "new shape" + (" (reference)" if report.reference_only else "")
    ax1.loglog(xs, [r.bound_new for r in report.rows], "s--", label=label_new)
    ax1.loglog(xs, [r.bound_old for r in report.rows], "^:", label="old shape")
    ax1.set_xlabel("x")
    ax1.set_ylabel("variance")
    ax1.set_title(f"k = {report.k}, {report.q_rule}")
    ax1.grid(True, which="both", alpha=0.3)
    ax1.legend()
    ax2.semilogx(xs, [r.ratio_new for r in report.rows], "s--", label="Y / new")
    ax2.semilogx(xs, [r.ratio_old for r in report.rows], "^:", label="Y / old")
    ax2.set_xlabel("x")
    ax2.set_ylabel("ratio")
    ax2.set_title("ratios against the bound shapes")
    ax2.grid(True, which="both", alpha=0.3)
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fig_l2(rows: list[L2Row], x: int, k: int, path: str) -> str:
    """Arc-integral mass of |Δ|² against the bound shape, per arc scale T."""
    ts = [r.T for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.loglog(ts, [r.integral for r in rows], "o-", label="∫ |Δ|² over arcs")
    ax.loglog(ts, [r.bound_shape for r in rows], "s--", label="bound shape")
    ax.set_xlabel("arc scale T")
    ax.set_ylabel("mass")
    ax.set_title(f"major-arc defect, x = {x}, k = {k}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fig_variance(rows: list[VarianceStats], path: str) -> str:
    """Variance and its decomposition pieces across a Q sweep (fixed x)."""
    qs = [r.Q for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.loglog(qs, [r.Y for r in rows], "o-", label="Y")
    ax.loglog(qs, [r.S1 for r in rows], "s--", label="S1")
    ax.loglog(
        qs, [r.x**2 * r.S3 for r in rows], "^:", label="x² S3"
    )
    x = rows[0].x if rows else 0
    k = rows[0].k if rows else 0
    ax.set_xlabel("Q")
    ax.set_ylabel("mass")
    ax.set_title(f"variance decomposition, x = {x}, k = {k}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
