"""Static SVG figures for experiment reports.

Figures are built on :class:`matplotlib.figure.Figure` directly (no pyplot
state) and saved with a fixed hash salt and no date stamp, so identical data
gives byte-identical files.
"""

from __future__ import annotations

import math

import matplotlib
import numpy as np
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "pwkit",
    "svg.fonttype": "path",
}


def figsize(scale=1.0):
    width = 6.0 * scale
    return (width, width * (math.sqrt(5.0) - 1.0) / 2.0)


def _save(fig: Figure, path, description: str):
    with matplotlib.rc_context(STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None, "Description": description})


def _new(nrows=1, ncols=1, scale=1.0):
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=figsize(scale))
        axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def plot_cut(x, y, path, description="", label="|f|"):
    with matplotlib.rc_context(STYLE):
        fig, axes = _new()
        ax = axes[0, 0]
        ax.plot(x, np.abs(y), label=label)
        ax.set_xlabel("t")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
        fig.tight_layout()
    _save(fig, path, description)


def plot_spectrum(spectrum, path, radius=None, description=""):
    """Log power: a line for 1-D spectra, an image for 2-D (first two axes otherwise)."""
    with matplotlib.rc_context(STYLE):
        fig, axes = _new()
        ax = axes[0, 0]
        power = spectrum.power
        floor = max(power.max(), 1e-300) * 1e-16
        if spectrum.dim == 1:
            ax.semilogy(spectrum.frequencies[0], power + floor)
            if radius is not None:
                for s in (-radius, radius):
                    ax.axvline(s, color="k", ls="--", lw=0.8)
            ax.set_xlabel("u")
            ax.set_ylabel("power")
        else:
            img = power
            while img.ndim > 2:
                img = img.sum(axis=-1)
            u1, u2 = spectrum.frequencies[0], spectrum.frequencies[1]
            im = ax.imshow(np.log10(img.T + floor), origin="lower", aspect="auto",
                           extent=(u1[0], u1[-1], u2[0], u2[-1]))
            fig.colorbar(im, ax=ax, label="log10 power")
            if radius is not None:
                th = np.linspace(0, 2 * np.pi, 256)
                ax.plot(radius * np.cos(th), radius * np.sin(th), "w--", lw=0.8)
            ax.set_xlabel("u1")
            ax.set_ylabel("u2")
        fig.tight_layout()
    _save(fig, path, description)


def plot_phase_profile(profile, path, description="", title=None):
    with matplotlib.rc_context(STYLE):
        fig, axes = _new(2, 1, scale=1.2)
        keep = ~profile.mask
        x = profile.abscissas
        ax = axes[0, 0]
        ax.plot(x[keep], profile.phase[keep], ".", ms=2, label="unwrapped phase")
        ax.plot(x, profile.fitted(), "-", lw=0.8, label="affine fit")
        ax.set_ylabel("phase [rad]")
        ax.legend()
        if title:
            ax.set_title(title)
        ax = axes[1, 0]
        ax.plot(x[keep], profile.phase[keep] - profile.fitted()[keep], lw=0.8)
        ax.set_xlabel("x")
        ax.set_ylabel("residual [rad]")
        fig.tight_layout()
    _save(fig, path, description)


def plot_spread(table, path, description=""):
    with matplotlib.rc_context(STYLE):
        fig, axes = _new()
        ax = axes[0, 0]
        eps = [r["eps"] for r in table.rows]
        oob = [max(r["oob"], 1e-300) for r in table.rows]
        ax.semilogy(eps, oob, "o-", label="out-of-band fraction")
        ax.axhline(table.baseline, color="k", ls="--", lw=0.8, label="leakage floor")
        ax.set_xlabel("eps")
        ax.legend()
        fig.tight_layout()
    _save(fig, path, description)


def plot_margins(rows, path, description=""):
    """rows: (|z|, bound, |F|) triples."""
    with matplotlib.rc_context(STYLE):
        fig, axes = _new()
        ax = axes[0, 0]
        data = np.array(rows, dtype=float)
        ax.semilogy(data[:, 0], data[:, 1], ".", ms=2, label="bound")
        ax.semilogy(data[:, 0], np.maximum(data[:, 2], 1e-300), ".", ms=2, label="|F(z)|")
        ax.set_xlabel("|z|")
        ax.legend()
        fig.tight_layout()
    _save(fig, path, description)
