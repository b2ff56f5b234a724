"""Empirical checks of the functional CLT for the built-in families.

All built-in processes are ergodic, so the limiting mixture variable is
the constant sigma^2 = lim E[S_n^2]/n and the rescaled path W_n(t) =
S_[nt]/sqrt(n) should behave like sigma * (Brownian motion):

* the marginal at t = 1 passes a one-sample Kolmogorov-Smirnov test
  against N(0, sigma^2) (threshold: the asymptotic 99% critical value
  1.63/sqrt(paths) plus a fixed 0.01 pre-asymptotic allowance);
* a degenerate family (sigma^2 = 0) instead concentrates:
  P(|S_n|/sqrt(n) > 0.1) < 0.01;
* finite-dimensional covariances match sigma^2 * min(s, t) within 4
  standard errors on a grid;
* the family max_{k<=n} S_k^2 / n is uniformly integrable, probed by the
  truncated tails E[R 1(R > M)] along a threshold ladder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import processes, renewal
from ._parallel import chunk_ranges, map_ordered
from .errors import ParameterError
from .processes import ProcessSpec, RenewalFunctional, simulate_matrix
from .rng import Stream


@dataclass
class EmpiricalDistribution:
    """Sorted sample with exact one-sample KS distance computation."""

    values: np.ndarray
    size: int = field(init=False)

    def __post_init__(self):
        self.values = np.sort(np.asarray(self.values, dtype=np.float64))
        self.size = len(self.values)

    def ks_distance(self, cdf) -> float:
        f = cdf(self.values)
        i = np.arange(1, self.size + 1)
        upper = np.max(i / self.size - f)
        lower = np.max(f - (i - 1) / self.size)
        return float(max(upper, lower))


@dataclass
class CLTReport:
    spec_id: str
    n: int
    paths: int
    seed: int
    sigma2: float
    ks_distance: float | None
    ks_threshold: float | None
    degenerate: bool
    escape_fraction: float | None
    verdict: str
    sample: np.ndarray | None = None


def reference_sigma2(spec: ProcessSpec) -> float:
    """Closed-form sigma^2, or the exact covariance summation for chains."""
    s2 = processes.sigma2_closed_form(spec)
    if s2 is None:
        s2 = renewal.long_run_variance(spec.chain)
    return float(s2)


def _sample_sn(spec: ProcessSpec, n: int, paths: int, seed: int,
               threads: int = 1) -> np.ndarray:
    """S_n across paths.  Renewal functionals count regenerations directly
    (pathwise identical to stepping; see renewal.regeneration_identity_check)."""
    if isinstance(spec, RenewalFunctional):
        chain = spec.chain

        def work_chain(rng_args):
            start, count = rng_args
            out = np.empty(count)
            for j in range(count):
                stream = Stream.substream(seed, start + j)
                times = renewal._renewal_times_one_path(chain, stream, n)
                out[j] = len(times) - n * chain.pi0
            return out

        return np.concatenate(map_ordered(work_chain, chunk_ranges(paths, 64), threads))

    def work(rng_args):
        start, count = rng_args
        x, _ = simulate_matrix(spec, n, seed, start, count)
        return np.sum(x, axis=1)

    return np.concatenate(map_ordered(work, chunk_ranges(paths, n), threads))


def ks_normal_check(spec: ProcessSpec, n: int, paths: int, seed: int,
                    threads: int = 1, keep_sample: bool = False) -> CLTReport:
    """KS of S_n/(sigma sqrt n) against N(0,1), or the concentration check
    when sigma^2 = 0."""
    sigma2 = reference_sigma2(spec)
    sn = _sample_sn(spec, n, paths, seed, threads)
    sid = processes.spec_id(spec)
    if sigma2 == 0.0:
        frac = float(np.mean(np.abs(sn) / math.sqrt(n) > 0.1))
        return CLTReport(spec_id=sid, n=n, paths=paths, seed=seed, sigma2=sigma2,
                         ks_distance=None, ks_threshold=None, degenerate=True,
                         escape_fraction=frac,
                         verdict="PASS" if frac < 0.01 else "FAIL",
                         sample=sn if keep_sample else None)
    z = sn / math.sqrt(sigma2 * n)
    emp = EmpiricalDistribution(z)
    ks = emp.ks_distance(ndtr)
    threshold = 1.63 / math.sqrt(paths) + 0.01
    return CLTReport(spec_id=sid, n=n, paths=paths, seed=seed, sigma2=sigma2,
                     ks_distance=ks, ks_threshold=threshold, degenerate=False,
                     escape_fraction=None,
                     verdict="PASS" if ks < threshold else "FAIL",
                     sample=emp.values if keep_sample else None)


def cdf_plot_points(sample: np.ndarray, max_points: int = 1024):
    """Rows (x, empirical_cdf, normal_cdf) thinned to at most max_points."""
    z = np.sort(np.asarray(sample, float))
    N = len(z)
    step = max(1, N // max_points)
    idx = np.arange(0, N, step)
    emp = (idx + 1) / N
    return list(zip(z[idx], emp, ndtr(z[idx])))


# ---------------------------------------------------------------------------
# finite-dimensional covariances
# ---------------------------------------------------------------------------

def covariance_grid_check(spec: ProcessSpec, n: int, paths: int, seed: int,
                          grid=(0.25, 0.5, 0.75, 1.0), threads: int = 1) -> dict:
    """Empirical Cov(W_n(s), W_n(t)) minus sigma^2 min(s, t) over a grid.

    Every |error| must stay within 4 standard errors (exact zero at s = 0).
    """
    sigma2 = reference_sigma2(spec)
    grid = tuple(float(t) for t in grid)
    cols = np.array([int(math.floor(n * t)) for t in grid])

    def work(rng_args):
        start, count = rng_args
        x, _ = simulate_matrix(spec, n, seed, start, count)
        s = np.concatenate([np.zeros((count, 1)), np.cumsum(x, axis=1)], axis=1)
        return s[:, cols] / math.sqrt(n)

    w = np.concatenate(map_ordered(work, chunk_ranges(paths, n), threads), axis=0)
    mean = np.mean(w, axis=0)
    G = len(grid)
    errors = np.empty((G, G))
    stderrs = np.empty((G, G))
    for i in range(G):
        for j in range(G):
            prod = w[:, i] * w[:, j]
            cov = float(np.mean(prod) - mean[i] * mean[j])
            target = sigma2 * min(grid[i], grid[j])
            errors[i, j] = cov - target
            stderrs[i, j] = float(np.std(prod, ddof=1) / math.sqrt(paths))
    ok = bool(np.all(np.abs(errors) <= 4.0 * stderrs + 1e-15))
    return {"grid": grid, "sigma2": sigma2, "errors": errors,
            "stderrs": stderrs, "ok": ok, "n": n, "paths": paths, "seed": seed}


# ---------------------------------------------------------------------------
# uniform integrability of max_k S_k^2 / n
# ---------------------------------------------------------------------------

def uniform_integrability_profile(spec: ProcessSpec, n_list, paths: int,
                                  seed: int, M_list=(1.0, 4.0, 16.0, 64.0),
                                  threads: int = 1) -> dict:
    """tails[i, j] = E[R_n 1(R_n > M_j)] with R_n = max_{k<=n} S_k^2 / n.

    One simulation at max(n_list); each smaller n is a running-max prefix
    read (same paths across n, which only helps the sup-over-n readout).
    """
    ns = sorted(int(v) for v in n_list)
    n_max = ns[-1]
    cols = np.asarray(ns) - 1

    def work(rng_args):
        start, count = rng_args
        x, _ = simulate_matrix(spec, n_max, seed, start, count)
        s = np.cumsum(x, axis=1)
        run = np.maximum.accumulate(s * s, axis=1)
        return run[:, cols]

    run_at = np.concatenate(map_ordered(work, chunk_ranges(paths, n_max), threads),
                            axis=0)
    r = run_at / np.asarray(ns, dtype=np.float64)[None, :]
    tails = np.empty((len(ns), len(M_list)))
    for j, M in enumerate(M_list):
        tails[:, j] = np.mean(np.where(r > M, r, 0.0), axis=0)
    return {"n": ns, "M": [float(M) for M in M_list], "tails": tails,
            "sup_over_n": np.max(tails, axis=0), "paths": paths, "seed": seed}


# ---------------------------------------------------------------------------
# variance rate
# ---------------------------------------------------------------------------

def variance_rate_profile(spec: ProcessSpec, n_list) -> dict:
    """Exact E[S_n^2]/n along n_list next to the limiting sigma^2."""
    ns = sorted(int(v) for v in n_list)
    if ns[0] < 1:
        raise ParameterError("n must be >= 1")
    s2 = processes.exact_s2_all(spec, ns[-1])
    rates = np.array([s2[n] / n for n in ns])
    return {"n": ns, "rate": rates, "sigma2": reference_sigma2(spec)}
