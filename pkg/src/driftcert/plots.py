"""Report figures rendered with matplotlib, written next to the tables.

Figures are saved as SVG with a fixed hash salt and no embedded date so
repeated runs produce stable files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "driftcert"

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_phase_heatmap",
    "plot_histogram_density",
    "plot_margin_bars",
    "plot_blowup_scatter",
    "plot_tv_decay",
]

_SAVE_KW = dict(metadata={"Date": None}, bbox_inches="tight")


def plot_phase_heatmap(pd, path):
    frac = pd.fractions()
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    extent = [pd.alpha1s[0], pd.alpha1s[-1], pd.alpha2s[0], pd.alpha2s[-1]]
    im = ax.imshow(frac.T, origin="lower", extent=extent, aspect="auto",
                   vmin=0.0, vmax=1.0, cmap="viridis")
    ax.plot(extent[:2], extent[2:], "w--", lw=1)
    ax.set_xlabel(r"$\alpha_1$")
    ax.set_ylabel(r"$\alpha_2$")
    ax.set_title("explosion fraction")
    fig.colorbar(im, ax=ax)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_histogram_density(h, path, title=""):
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    im = ax.pcolormesh(h.x_edges, h.y_edges, h.mass.T, cmap="viridis",
                       shading="flat")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="occupation mass")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_margin_bars(labels, margins, path):
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    xs = np.arange(len(labels))
    colors = ["tab:green" if m >= 0 else "tab:red" for m in margins]
    ax.bar(xs, margins, color=colors)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("min margin")
    ax.set_yscale("symlog", linthresh=1e-6)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_blowup_scatter(bounds, t_nums, path):
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    b = np.asarray(bounds)
    t = np.asarray(t_nums)
    ax.scatter(b, t, s=12, alpha=0.8)
    lim = [0.0, float(max(b.max(), t.max()) * 1.1)]
    ax.plot(lim, lim, "k--", lw=0.8, label="bound")
    ax.plot(lim, [1.05 * v for v in lim], "r:", lw=0.8, label="1.05 x bound")
    ax.set_xlabel("1 / (C |x0|)")
    ax.set_ylabel("numerical blow-up time")
    ax.legend(fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_tv_decay(times, tvs, path):
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    ax.semilogy(times, tvs, "o-")
    ax.set_xlabel("t")
    ax.set_ylabel("TV distance to long-run histogram")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
