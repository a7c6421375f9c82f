"""Matplotlib figure emission for the report paths (PNG files next to the
delimited outputs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def fig_hydrograph(path, rows) -> None:
    """Rainfall rate and boundary discharge rate over time."""
    rows = np.asarray(rows, dtype=np.float64)
    fig, ax1 = plt.subplots(figsize=(7, 4))
    ax1.plot(rows[:, 0], rows[:, 2] * 1000.0, color="tab:blue", lw=1.2, label="rainfall")
    ax1.set_xlabel("time [s]")
    ax1.set_ylabel("rainfall rate [mm/s]", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(rows[:, 0], rows[:, 1], color="tab:red", lw=1.2, label="discharge")
    ax2.set_ylabel("discharge rate [m$^3$/s]", color="tab:red")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def fig_profiles(path, curves, xlabel="x [m]", ylabel="h [m]", title=None, shade=None) -> None:
    """Overlay longitudinal profiles; ``curves`` is a list of
    (x, y, label, style) tuples.  ``shade`` optionally marks a reach
    (x0, x1) with a light band (vegetated zone)."""
    fig, ax = plt.subplots(figsize=(7, 4))
    if shade is not None:
        ax.axvspan(shade[0], shade[1], color="palegreen", alpha=0.4, lw=0)
    for x, y, label, style in curves:
        ax.plot(x, y, style, label=label, lw=1.2, ms=2.5)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def fig_error_vs_time(path, times, errors, label="sup-norm relative error") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(times, errors, "o-", lw=1.2)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(label)
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def fig_error_surface(path, grid_s, grid_p, surface, minimum=None) -> None:
    """Contour map of the pooled gauge error over the friction box."""
    fig, ax = plt.subplots(figsize=(6.5, 5))
    S, P = np.meshgrid(grid_s, grid_p, indexing="ij")
    cs = ax.contourf(S, P, surface, levels=24, cmap="viridis")
    fig.colorbar(cs, ax=ax, label=r"$\chi$ [mm]")
    if minimum is not None:
        ax.plot([minimum[0]], [minimum[1]], "r*", ms=12, label="minimum")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel(r"soil friction $\alpha_s$")
    ax.set_ylabel(r"plant friction $\alpha_p$")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def fig_sensitivity(path, table) -> None:
    """delta_s and delta_p versus discharge, one curve per (theta, slope).

    ``table`` rows: (q, theta_v, slope, delta_s, delta_p).
    """
    rows = np.asarray(table, dtype=np.float64)
    fig, axes = plt.subplots(2, 1, figsize=(6.5, 7), sharex=True)
    groups = {}
    for q, th, m, ds, dp in rows:
        groups.setdefault((th, m), []).append((q, ds, dp))
    for (th, m), pts in sorted(groups.items()):
        pts = np.asarray(sorted(pts))
        label = f"theta={th:g}, m={m:g}"
        axes[0].plot(pts[:, 0], pts[:, 1], "o-", label=label, lw=1.1, ms=3)
        axes[1].plot(pts[:, 0], pts[:, 2], "o-", label=label, lw=1.1, ms=3)
    axes[0].set_ylabel(r"$\delta_s$")
    axes[1].set_ylabel(r"$\delta_p$")
    axes[1].set_xlabel(r"discharge q [m$^2$/s]")
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
