"""Figure rendering for the report path (PNG files next to the CSV output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_META = {"Software": "hillkit"}


def save_rho_grid_figure(report, path):
    """Both determinant sides and their defect along the unit circle."""
    angles, lhs, rhs, res = [], [], [], []
    for rho, a, b, r in zip(
        report.rho_grid, report.det_monodromy_side, report.det_hessian_side, report.residuals
    ):
        if abs(abs(rho) - 1.0) < 1e-12:
            angles.append(np.angle(rho) % (2 * np.pi))
            lhs.append(abs(a))
            rhs.append(abs(b))
            res.append(r)
    order = np.argsort(angles)
    angles = np.asarray(angles)[order]
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6.4, 5.6), sharex=True)
    ax0.plot(angles, np.asarray(lhs)[order], "o-", ms=3, label="|det(P - rho I)|")
    ax0.plot(angles, np.asarray(rhs)[order], "x--", ms=4, label="|det H_rho / det B_rho|")
    ax0.set_ylabel("determinant magnitude")
    ax0.set_yscale("log")
    ax0.legend(loc="best", fontsize=8)
    ax1.semilogy(angles, np.maximum(np.asarray(res)[order], 1e-18), ".-", color="tab:red")
    ax1.set_xlabel("arg rho")
    ax1.set_ylabel("relative defect")
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)


def save_multiplier_figure(report, path):
    """Multipliers in the complex plane against the unit circle."""
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    ts = np.linspace(0, 2 * np.pi, 256)
    ax.plot(np.cos(ts), np.sin(ts), "-", color="0.7", lw=1)
    pts = np.asarray(report.multipliers, dtype=complex)
    ax.plot(pts.real, pts.imag, "o", color="tab:blue", ms=6)
    ax.axhline(0, color="0.85", lw=0.5)
    ax.axvline(0, color="0.85", lw=0.5)
    ax.set_aspect("equal")
    ax.set_xlabel("Re rho")
    ax.set_ylabel("Im rho")
    ax.set_title(f"multipliers (sigma={report.sigma}, index={report.morse_index})", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)


def save_convergence_figure(results, path):
    """Raw truncation defect per order for each rho, with the extrapolated value."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for res in results:
        label = f"rho={res.rho:.2f}" if len(results) <= 6 else None
        ax.loglog(res.ladder, np.maximum(res.raw_residuals, 1e-18), "o-", ms=3, label=label)
    if results:
        ax.axhline(
            max(r.residual for r in results),
            color="tab:red",
            ls="--",
            lw=1,
            label="extrapolated defect",
        )
    ax.set_xlabel("truncation order")
    ax.set_ylabel("identity defect")
    if len(results) <= 7:
        ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_META)
    plt.close(fig)
