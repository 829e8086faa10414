"""Figure rendering for the benchmark report path.

Everything draws through the Agg backend and saves straight to files, so
the report command works headless. Figures share one small style: method
colors are fixed across plots and axes carry plain-language labels.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .broadcast import BenchmarkResult, StaticCaseReport, StrategyProbe

METHOD_COLORS = {
    "unconstrained": "#9aa0a6",
    "constrained": "#5b8dbf",
    "recommendation": "#c2571a",
}

CLASS_COLORS = {
    "fair": "#2d7f5e",
    "asymmetric": "#c2571a",
    "over_capacity": "#8a4f9e",
}


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_benchmark_figure(result: BenchmarkResult, path: str | Path) -> Path:
    """Grouped bars: expected totals per beneficiary, one bar per method."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    groups = ("designer", "agent1", "agent2")
    rows = (result.designer, result.agent1, result.agent2)
    width = 0.26
    base = np.arange(len(groups))
    for k, method in enumerate(METHOD_COLORS):
        vals = [row[k] for row in rows]
        bars = ax.bar(
            base + (k - 1) * width,
            vals,
            width,
            label=method,
            color=METHOD_COLORS[method],
        )
        ax.bar_label(bars, fmt="%.2f", fontsize=7, padding=2)
    ax.set_xticks(base, groups)
    ax.set_ylabel("expected total")
    ax.set_title("Expected totals by control mode")
    ax.legend(fontsize=8, frameon=False)
    ax.spines[["top", "right"]].set_visible(False)
    return _finish(fig, path)


def save_trajectory_figure(
    probes: list[StrategyProbe], state: str, path: str | Path
) -> Path:
    """Class masses of the recommended joint send over time at one state."""
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    ts = [p.t for p in probes]
    for name, pick in (
        ("fair", lambda p: p.fair_mass),
        ("asymmetric", lambda p: p.asymmetric_mass),
        ("over_capacity", lambda p: p.over_capacity_mass),
    ):
        ax.plot(
            ts,
            [pick(p) for p in probes],
            marker="o",
            markersize=3.5,
            linewidth=1.4,
            label=name.replace("_", " "),
            color=CLASS_COLORS[name],
        )
    ax.set_xlabel("time slot")
    ax.set_ylabel("probability mass")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xticks(ts)
    ax.set_title(f"Recommendation mix at state {state}")
    ax.legend(fontsize=8, frameon=False)
    ax.spines[["top", "right"]].set_visible(False)
    return _finish(fig, path)


def save_static_figure(reports: list[StaticCaseReport], path: str | Path) -> Path:
    """Support of both one-slot optima, one panel per fairness weight."""
    fig, axes = plt.subplots(
        1, len(reports), figsize=(3.3 * len(reports), 3.2), squeeze=False
    )
    for ax, report in zip(axes[0], reports):
        pairs = sorted(
            {(a, b) for a, b, _ in report.recommendation_support}
            | {(a, b) for a, b, _ in report.dictation_support}
        )
        labels = [f"({a},{b})" for a, b in pairs]
        base = np.arange(len(pairs))
        width = 0.36
        for off, support, method in (
            (-width / 2, report.dictation_support, "unconstrained"),
            (width / 2, report.recommendation_support, "recommendation"),
        ):
            mass = {(a, b): p for a, b, p in support}
            ax.bar(
                base + off,
                [mass.get(pair, 0.0) for pair in pairs],
                width,
                label=method,
                color=METHOD_COLORS[method],
            )
        ax.set_xticks(base, labels)
        ax.set_ylim(0, 1.1)
        ax.set_ylabel("probability")
        ax.set_xlabel("joint send")
        marker = "above" if report.condition_holds else "below"
        ax.set_title(
            f"weight {report.alpha:g} ({marker} threshold {report.threshold:.3g})",
            fontsize=9,
        )
        ax.legend(fontsize=7, frameon=False)
        ax.spines[["top", "right"]].set_visible(False)
    return _finish(fig, path)
