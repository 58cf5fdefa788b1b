"""Figure rendering for the experiment reports.

Each experiment writes a PNG next to its CSV output. The CSV stays the
canonical record; figures are a reading aid and carry no extra data.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_FIG_DPI = 150


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=_FIG_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def qfi_scan_figure(rows: dict, path: str) -> str:
    """Estimator second moments and the QFI cap (top), excess cost (bottom)."""
    fig, (ax_g, ax_err) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    eta = np.asarray(rows["eta"])
    ax_g.plot(eta, rows["g2_sqrt_LD"], "o-", label="LD")
    ax_g.plot(eta, rows["g2_sqrt_SLD"], "s-", label="SLD")
    ax_g.plot(eta, rows["qfi_bound"], "k--", label="QFI bound")
    ax_g.set_yscale("log")
    ax_g.set_ylabel(r"$\max_\theta\,\sqrt{E[\|g\|_2^2]}$")
    ax_g.legend()
    ax_err.plot(eta, rows["err_opt"], "d-", color="tab:red")
    ax_err.set_xlabel(r"noise strength $\eta$")
    ax_err.set_ylabel("excess cost at optimum")
    return _save(fig, path)


def landscape_figure(gammas, betas, arms: dict, path: str) -> str:
    """Cost (top) and variance (bottom) heat maps, noiseless vs noisy."""
    fig, axes = plt.subplots(2, 2, figsize=(9, 7), sharex=True, sharey=True)
    titles = ["noiseless", "noisy"]
    for col, arm in enumerate(("noiseless", "noisy")):
        cost, var = arms[arm]
        for row, (grid, label) in enumerate(((cost, "cost"), (var, "variance"))):
            ax = axes[row, col]
            img = ax.pcolormesh(gammas, betas, grid.T, shading="auto")
            fig.colorbar(img, ax=ax)
            ax.set_title(f"{label}, {titles[col]}")
            if row == 1:
                ax.set_xlabel(r"$\gamma_1$")
            if col == 0:
                ax.set_ylabel(r"$\beta_1$")
    return _save(fig, path)


def convergence_figure(factors: dict, path: str) -> str:
    """One panel per noise scale: faded trials, trial means, 95% bands."""
    n = len(factors)
    fig, axes = plt.subplots(1, n, figsize=(4.5 * n, 3.6), sharey=True)
    if n == 1:
        axes = [axes]
    colors = {"noiseless": "tab:red", "noisy": "tab:blue"}
    for ax, (factor, arms) in zip(axes, sorted(factors.items())):
        for arm, (trials, summary) in arms.items():
            color = colors[arm]
            iters = np.arange(1, len(summary.mean) + 1)
            for trace in trials:
                ax.plot(iters, trace.costs_sampled, color=color, alpha=0.15, lw=0.7)
            ax.plot(iters, summary.mean, color=color, lw=1.8, label=arm)
            ax.fill_between(iters, summary.ci_low, summary.ci_high,
                            color=color, alpha=0.25)
        ax.set_title(f"noise scale f = {factor}")
        ax.set_xlabel("iteration")
        ax.legend()
    axes[0].set_ylabel("sampled cost")
    return _save(fig, path)


def bounds_audit_figure(rows, path: str) -> str:
    """Minimum slack per audited inequality (positive = satisfied)."""
    names = [r[0] for r in rows]
    slacks = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(names) + 1.5))
    colors = ["tab:green" if s >= -1e-9 else "tab:red" for s in slacks]
    ax.barh(range(len(names)), slacks, color=colors)
    ax.set_yticks(range(len(names)), names, fontsize=8)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("minimum slack")
    ax.set_xscale("symlog", linthresh=1e-12)
    return _save(fig, path)


def channel_validate_figure(rows: dict, path: str) -> str:
    """Closed-form vs quadrature and Monte-Carlo agreement per generator."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for gen in sorted(set(rows["generator"])):
        sel = [i for i, g in enumerate(rows["generator"]) if g == gen]
        sig = [rows["sigma"][i] for i in sel]
        ax.plot(sig, [max(rows["quad_maxdiff"][i], 1e-18) for i in sel],
                "o-", label=f"{gen}: quadrature gap")
        ax.plot(sig, [rows["mc_distance"][i] for i in sel],
                "s--", label=f"{gen}: MC distance")
    ax.set_yscale("log")
    ax.set_xlabel(r"$\sigma$")
    ax.set_ylabel("deviation")
    ax.legend(fontsize=8)
    return _save(fig, path)
