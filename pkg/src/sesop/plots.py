"""Figure rendering for traces, sweeps, and comparisons.

Uses the Agg backend so report generation works headless; every figure is
written atomically next to its delimited counterpart.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import ComparisonReport, SweepReport  # noqa: E402
from .solvers import EXACT_RESIDUAL_TOL, IterationTrace  # noqa: E402


def _atomic_savefig(fig, path) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=path.suffix or ".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=120)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    finally:
        plt.close(fig)


def _threshold(trace: IterationTrace) -> float:
    if trace.delta > 0.0:
        return trace.tau * trace.delta
    return EXACT_RESIDUAL_TOL


def plot_trace(trace: IterationTrace, path, title: str = "") -> None:
    """Residual and error history on a log scale, doubles marked."""
    ns = [rec.n for rec in trace.records]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(ns, [rec.residual_norm for rec in trace.records], label="residual norm")
    ax.semilogy(
        ns, [rec.error_norm for rec in trace.records], linestyle="--", label="error norm"
    )
    doubles = [(rec.n, rec.residual_norm) for rec in trace.records if rec.step_type == "double"]
    if doubles:
        ax.plot(*zip(*doubles), "o", markersize=3.5, linestyle="none", label="double steps")
    ax.axhline(_threshold(trace), color="gray", linewidth=0.9, label="stopping threshold")
    ax.set_xlabel("iteration n")
    ax.set_ylabel("norm")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _atomic_savefig(fig, path)


def plot_sweep(report: SweepReport, path) -> None:
    """Final error and residual against the noise level, delta decreasing
    to the right."""
    deltas = [row.delta for row in report.rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(deltas, [row.final_error for row in report.rows], "o-", label="final error")
    ax.loglog(
        deltas, [row.final_residual for row in report.rows], "s--", label="final residual"
    )
    ax.loglog(deltas, [report.tau * d for d in deltas], color="gray", linewidth=0.9,
              label="stopping threshold")
    ax.invert_xaxis()
    ax.set_xlabel("noise level delta")
    ax.set_ylabel("norm at stopping index")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.set_title(f"{report.problem} / {report.solver}")
    fig.tight_layout()
    _atomic_savefig(fig, path)


def plot_compare(report: ComparisonReport, path) -> None:
    """Residual histories of all compared solvers on shared noisy data."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, trace in report.traces.items():
        ax.semilogy(
            [rec.n for rec in trace.records],
            [rec.residual_norm for rec in trace.records],
            label=name,
        )
    if report.delta > 0.0:
        ax.axhline(report.tau * report.delta, color="gray", linewidth=0.9,
                   label="stopping threshold")
    ax.set_xlabel("iteration n")
    ax.set_ylabel("residual norm")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.set_title(f"{report.problem}, delta={report.delta:g}")
    fig.tight_layout()
    _atomic_savefig(fig, path)
