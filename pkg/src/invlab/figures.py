"""Matplotlib renderers for the report path.

Every suite that writes delimited output also drops a small set of PNG
figures next to it.  Rendering is headless (Agg) and uses one shared,
minimal style so the figures stay legible without per-plot fiddling.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 130,
    "savefig.bbox": "tight",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def _save(fig, path):
    fig.savefig(path)
    plt.close(fig)


def cdf_figure(points, path, title="empirical vs normal CDF"):
    """points: rows (x, empirical, normal)."""
    x, emp, norm = (np.asarray(col) for col in zip(*points))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(x, norm, label="normal", lw=1.5)
        ax.step(x, emp, where="post", label="empirical", lw=1.0)
        ax.set_xlabel("z")
        ax.set_ylabel("CDF")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def vseq_figure(v_values, path, stderr=None, title="conditional-sum norms"):
    n = np.arange(1, len(v_values) + 1)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        if stderr is not None:
            ax.errorbar(n, v_values, yerr=3 * np.asarray(stderr), fmt=".", ms=3,
                        elinewidth=0.6, label="V_n (3 se)")
        else:
            ax.plot(n, v_values, ".-", ms=3, lw=0.8, label="V_n")
        ax.set_xlabel("n")
        ax.set_ylabel("V_n")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def series_figure(partial, increments, path, title="weighted series"):
    n = np.arange(1, len(partial) + 1)
    with plt.rc_context(_STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
        ax1.plot(n, partial, lw=1.0)
        ax1.set_xscale("log")
        ax1.set_xlabel("n")
        ax1.set_ylabel("partial sum")
        pos = increments > 0
        ax2.loglog(n[pos], increments[pos], lw=0.8)
        ax2.set_xlabel("n")
        ax2.set_ylabel("increment")
        fig.suptitle(title)
        _save(fig, path)


def quantile_figure(n_list, median, p90, path, title="|S_n|/sqrt(n) quantiles"):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.semilogx(n_list, median, "o-", label="median")
        ax.semilogx(n_list, p90, "s-", label="p90")
        ax.set_xlabel("n")
        ax.set_ylabel("|S_n| / sqrt(n)")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def bounds_figure(reports, path, title="bound checks"):
    names = [f"{r.name}@{r.n}" if r.n else r.name for r in reports]
    lhs = [r.lhs for r in reports]
    rhs = [r.rhs for r in reports]
    idx = np.arange(len(reports))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(max(6.0, 0.6 * len(reports)), 4.0))
        ax.bar(idx - 0.2, lhs, width=0.4, label="lhs")
        ax.bar(idx + 0.2, rhs, width=0.4, label="rhs")
        ax.set_xticks(idx)
        ax.set_xticklabels(names, rotation=45, ha="right", fontsize=7)
        ax.set_yscale("log")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def blocking_figure(m_list, mean_sup, p90_sup, path, title="martingale approximation error"):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.semilogx(m_list, mean_sup, "o-", base=2, label="mean sup error")
        ax.semilogx(m_list, p90_sup, "s-", base=2, label="p90 sup error")
        ax.set_xlabel("block size m")
        ax.set_ylabel("sup_t |S/sqrt(n) - M/sqrt(k)|")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)
