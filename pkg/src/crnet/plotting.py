"""Figures written next to the CSV reports."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_separation(summary, path, baseline=None):
    """Median L2(mu) error with interquartile bars against the parameter budget.

    ``summary`` maps family -> list of (params, median, q1, q3).
    """
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for fam, rows in sorted(summary.items()):
        rows = sorted(rows)
        x = np.array([r[0] for r in rows], dtype=float)
        med = np.array([r[1] for r in rows])
        lo = med - np.array([r[2] for r in rows])
        hi = np.array([r[3] for r in rows]) - med
        ax.errorbar(x, med, yerr=np.vstack([lo, hi]), marker="o", capsize=4, label=fam)
    if baseline is not None:
        ax.axhline(baseline, color="gray", ls="--", lw=1, label="zero predictor")
    ax.set_xlabel("real parameters")
    ax.set_ylabel("squared L2(mu) error")
    ax.legend()
    return _save(fig, path)


def plot_flow(traces, path):
    """Loss and squared row scales along integrated flows.

    ``traces`` maps a label to a FlowTrace.
    """
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    for label, tr in sorted(traces.items()):
        t = np.array(tr.times)
        axes[0].plot(t, tr.losses, label=label)
        g2 = tr.gammas() ** 2
        axes[1].plot(t, g2 - g2[0], lw=0.6, alpha=0.6)
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("exponential loss")
    axes[0].legend(fontsize=7)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("gamma^2 - gamma^2(0)")
    return _save(fig, path)


def plot_density(grid, cdf, radii, path, label="n"):
    """Quadrature radial CDF against the empirical CDF of sampled radii."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(grid, cdf, label="quadrature")
    r = np.sort(radii)
    ax.step(r, np.arange(1, r.size + 1) / r.size, where="post", lw=0.8, label="samples")
    ax.set_xscale("symlog", linthresh=1.0)
    ax.set_xlabel("radius")
    ax.set_ylabel("CDF")
    ax.set_title(label)
    ax.legend()
    return _save(fig, path)


def plot_construction(rows, path):
    """Achieved error against requested error, sized by width."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    req = np.array([r[0] for r in rows])
    got = np.array([r[1] for r in rows])
    ax.loglog(req, got, "o")
    lim = [min(req.min(), got[got > 0].min() if np.any(got > 0) else req.min()), req.max()]
    ax.plot(lim, lim, "k--", lw=1, label="achieved = requested")
    for r in rows:
        ax.annotate(f"w={r[2]}", (r[0], max(r[1], lim[0])), fontsize=7)
    ax.set_xlabel("requested sup error")
    ax.set_ylabel("achieved sup error")
    ax.legend()
    return _save(fig, path)


def plot_symmetry(before, after, imag, path):
    """Gradient norm after each move against the imaginary part of rho."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    floor = 1e-18
    ax.scatter(np.abs(imag), np.maximum(after, floor), s=12, label="after")
    ax.scatter(np.abs(imag), np.maximum(before, floor), s=12, marker="x", label="before")
    ax.set_yscale("log")
    ax.set_xlabel("|Im rho|")
    ax.set_ylabel("loss gradient norm")
    ax.legend()
    return _save(fig, path)
