"""Figure rendering for CLI reports.

Every subcommand that writes a JSON report also renders a small set of
matplotlib figures next to it (<report stem>_<name>.png).  Figures are
written with fixed metadata so repeated runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 120
_SAVE_KW = {"dpi": DPI, "metadata": {"Software": None}}


def _finish(fig, path: Path) -> str:
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return str(path)


def weight_figure(weights: np.ndarray, lo: float, hi: float, path: str | Path) -> str:
    """Histogram of slot weights with the selection box marked."""
    weights = np.asarray(weights, dtype=np.float64)
    m = weights.shape[0]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.hist(weights * m, bins=60, color="#4878d0", edgecolor="none")
    for x, label in ((lo * m, "lower bound"), (1.0, "uniform"), (hi * m, "upper bound")):
        ax.axvline(x, color="#d65f5f" if label != "uniform" else "#6acc64",
                   linestyle="--", linewidth=1.0, label=label)
    ax.set_xlabel("slot weight (multiples of 1/m)")
    ax.set_ylabel("slots")
    ax.set_title("selected density over the reduced space")
    ax.legend(fontsize=8)
    return _finish(fig, Path(path))


def accuracy_figure(errors_by_degree: dict[int, list[float]], path: str | Path) -> str:
    """Histogram of per-query marginal errors, split by query dimension."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    all_errors = [e for errs in errors_by_degree.values() for e in errs]
    upper = max(all_errors) if all_errors else 1.0
    bins = np.linspace(0.0, max(upper, 1e-12), 50)
    for dim, errs in sorted(errors_by_degree.items()):
        ax.hist(errs, bins=bins, alpha=0.6, label=f"dimension {dim}")
    ax.set_xlabel("absolute marginal error")
    ax.set_ylabel("queries")
    ax.set_title("marginal errors by query dimension")
    ax.legend(fontsize=8)
    return _finish(fig, Path(path))


def audit_figure(distances: list[float], eta: float, path: str | Path) -> str:
    """Observed density distances across audited pairs against the bound."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(sorted(distances), marker=".", linestyle="none", color="#4878d0",
            label="observed distance")
    ax.axhline(eta, color="#d65f5f", linestyle="--", linewidth=1.0, label="bound")
    ax.set_yscale("log")
    ax.set_xlabel("pair (sorted)")
    ax.set_ylabel("density distance (infinity norm)")
    ax.set_title("neighboring-pair sensitivity audit")
    ax.legend(fontsize=8)
    return _finish(fig, Path(path))


def calibration_figure(
    gammas: np.ndarray, ms: np.ndarray, ks: np.ndarray | None,
    chosen_gamma: float, path: str | Path,
) -> str:
    """Recommended sizes across the failure budget, chosen point marked."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(gammas, ms, color="#4878d0", label="reduced-space size m")
    if ks is not None:
        ax.plot(gammas, ks, color="#6acc64", label="sample count k")
    ax.axvline(chosen_gamma, color="#d65f5f", linestyle="--", linewidth=1.0,
               label="requested budget")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("failure budget")
    ax.set_ylabel("recommended size")
    ax.set_title("calibration")
    ax.legend(fontsize=8)
    return _finish(fig, Path(path))
