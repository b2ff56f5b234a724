"""Block-sum martingale approximation of rescaled partial sums.

Split a path into blocks of size m and normalise each block sum:

    X_i^(m) = m^{-1/2} sum_{j=(i-1)m+1}^{im} X_j ,   i = 1..k,  k = floor(n/m)

(the trailing partial block is dropped).  Subtracting the conditional mean
of each block given the state at its left boundary yields a martingale

    M_k^(m) = sum_{i<=k} ( X_i^(m) - E[X_i^(m) | state at (i-1)m] ).

For the built-in families the boundary state makes the conditional mean
exact rather than estimated: the AR1 value itself, the renewal chain
state, or the retained innovations of a finite moving average.  The
limiting increment variance

    eta_m = lim_k k^{-1} sum_i (X_i^(m) - E[...])^2 = (E S_m^2 - V_m^2)/m

is estimated by Monte Carlo and cross-checked against that exact form,
and the rescaled martingale is compared to the rescaled sums through the
lattice supremum of |S_[nt]/sqrt(n) - M_[kt]^(m)/sqrt(k)| (both are step
functions, so the lattice attains the supremum over [0, 1]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import processes, renewal
from ._parallel import chunk_ranges, map_ordered
from .conditional import v_exact
from .errors import ParameterError, UnsupportedSpecError
from .processes import AR1, IID, Linear, PathSample, ProcessSpec, RenewalFunctional


@dataclass
class BlockedPath:
    """Normalised block sums of one path."""

    m: int
    k: int
    block_values: np.ndarray


@dataclass
class ApproxReport:
    """Per-(m, n) approximation diagnostics."""

    m: int
    n: int
    eta_m: float
    eta_stderr: float
    mean_sup_err: float
    p90_sup_err: float


def block_sums(path, m: int) -> BlockedPath:
    """Normalised block sums; raises when m exceeds the path length."""
    values = path.values if isinstance(path, PathSample) else np.asarray(path, float)
    n = len(values)
    if m < 1:
        raise ParameterError("m must be >= 1")
    if m > n:
        raise ParameterError(f"block size {m} exceeds path length {n}")
    k = n // m
    blocks = values[: k * m].reshape(k, m).sum(axis=1) / math.sqrt(m)
    return BlockedPath(m=m, k=k, block_values=blocks)


# ---------------------------------------------------------------------------
# exact conditional block means
# ---------------------------------------------------------------------------

def conditional_block_mean(spec: ProcessSpec, state, m: int) -> float:
    """E[X_1^(m) | time-0 state], exact per family.

    state: AR1 -> the current value x; Renewal -> the chain state k;
    Linear -> the last L retained innovations (time order, newest last);
    IID ignores the state.
    """
    if m < 1:
        raise ParameterError("m must be >= 1")
    if isinstance(spec, IID):
        return 0.0
    if isinstance(spec, AR1):
        rho = spec.rho
        return float(state) * rho * (1.0 - rho ** m) / (1.0 - rho) / math.sqrt(m)
    if isinstance(spec, RenewalFunctional):
        tables = renewal.renewal_tables(spec.chain, m)
        return _renewal_block_mean(spec.chain, tables, np.asarray([state]), m)[0]
    if isinstance(spec, Linear):
        eps = np.asarray(state, dtype=np.float64)
        w = _linear_boundary_weights(spec, m)
        if len(eps) < len(w):
            raise ParameterError(f"need the last {len(w)} innovations")
        recent = eps[len(eps) - len(w):]
        return float(np.dot(w[::-1], recent)) / math.sqrt(m)
    raise UnsupportedSpecError(f"not a process spec: {spec!r}")


def _linear_boundary_weights(spec: Linear, m: int) -> np.ndarray:
    """w[j] = sum_{i=1}^{m} c_{i+j} so that E(S_m | F_0) = sum_j w[j] eps_{-j}."""
    c = np.asarray(spec.coeffs, dtype=np.float64)
    L = len(c) - 1
    suffix = np.concatenate([np.cumsum(c[::-1])[::-1], [0.0]])
    j = np.arange(0, max(L, 1))
    return suffix[np.minimum(j + 1, L + 1)] - suffix[np.minimum(j + 1 + m, L + 1)]


def _renewal_block_mean(chain, tables, states, m: int) -> np.ndarray:
    """E[S_m | Y_0 = k] / sqrt(m) for an int array of states."""
    states = np.asarray(states)
    out = np.full(states.shape, -m * chain.pi0, dtype=np.float64)
    inside = (states >= 1) & (states <= m)
    out[inside] = 1.0 + tables.h[(m - states[inside]).astype(np.int64)] - m * chain.pi0
    at0 = states == 0
    out[at0] = tables.A[m]
    return out / math.sqrt(m)


# ---------------------------------------------------------------------------
# martingale construction
# ---------------------------------------------------------------------------

def _boundary_means_matrix(spec: ProcessSpec, x: np.ndarray, aux: dict, m: int,
                           tables=None) -> np.ndarray:
    """Conditional block means for every block of every path (paths, k)."""
    paths, n = x.shape
    k = n // m
    idx = np.arange(k) * m  # left boundary times (i-1)m
    if isinstance(spec, IID):
        return np.zeros((paths, k))
    if isinstance(spec, AR1):
        states = np.empty((paths, k))
        states[:, 0] = aux["x0"]
        if k > 1:
            states[:, 1:] = x[:, idx[1:] - 1]
        rho = spec.rho
        return states * (rho * (1.0 - rho ** m) / (1.0 - rho) / math.sqrt(m))
    if isinstance(spec, RenewalFunctional):
        chain = spec.chain
        t = tables if tables is not None else renewal.renewal_tables(chain, m)
        states = aux["states"][:, idx]
        flat = _renewal_block_mean(chain, t, states.ravel(), m)
        return flat.reshape(paths, k)
    if isinstance(spec, Linear):
        eps = aux["innovations"]  # eps_{1-L}..eps_n; eps_t sits at column t+L-1
        w = _linear_boundary_weights(spec, m)
        L = len(spec.coeffs) - 1
        out = np.zeros((paths, k))
        for j in range(len(w)):
            if w[j] == 0.0:
                continue
            cols = idx + L - 1 - j  # eps_{boundary - j}
            out += w[j] * eps[:, cols]
        return out / math.sqrt(m)
    raise UnsupportedSpecError(f"not a process spec: {spec!r}")


def martingale_path(path: PathSample, spec: ProcessSpec, m: int) -> np.ndarray:
    """M_1^(m)..M_k^(m) for one simulated path (needs the path's aux state)."""
    blocked = block_sums(path, m)
    x = path.values[None, :]
    aux = {key: (np.asarray(val)[None, :] if np.ndim(val) else np.asarray([val]))
           for key, val in path.aux.items()}
    means = _boundary_means_matrix(spec, x, aux, m)[0]
    return np.cumsum(blocked.block_values - means[: blocked.k])


def _blocked_increments(spec, n, m, master_seed, start, count, tables=None):
    x, aux = processes.simulate_matrix(spec, n, master_seed, start, count,
                                       keep_aux=True)
    k = n // m
    blocks = x[:, : k * m].reshape(count, k, m).sum(axis=2) / math.sqrt(m)
    means = _boundary_means_matrix(spec, x, aux, m, tables=tables)
    return x, blocks - means


# ---------------------------------------------------------------------------
# limiting increment variance
# ---------------------------------------------------------------------------

def block_increment_variance(spec: ProcessSpec, m: int, n: int, paths: int,
                             seed: int, threads: int = 1) -> dict:
    """Monte Carlo eta_m with its exact reference (E S_m^2 - V_m^2)/m."""
    if n // m < 1:
        raise ParameterError("need at least one full block")
    tables = renewal.renewal_tables(spec.chain, m) if isinstance(spec, RenewalFunctional) else None

    def work(rng_args):
        start, count = rng_args
        _, inc = _blocked_increments(spec, n, m, seed, start, count, tables=tables)
        return np.mean(inc * inc, axis=1)

    per_path = np.concatenate(map_ordered(work, chunk_ranges(paths, n), threads))
    est = float(np.mean(per_path))
    se = float(np.std(per_path, ddof=1) / math.sqrt(paths))
    exact = (processes.exact_s2(spec, m) - v_exact(spec, m).at(m) ** 2) / m
    return {"m": m, "n": n, "eta": est, "stderr": se, "exact": float(exact),
            "paths": paths, "seed": seed}


# ---------------------------------------------------------------------------
# path-level approximation error
# ---------------------------------------------------------------------------

def approximation_error(spec: ProcessSpec, m_list, n: int, paths: int,
                        seed: int, threads: int = 1) -> list:
    """Lattice sup of |S_[nt]/sqrt(n) - M_[kt]^(m)/sqrt(k)| per block size.

    The grid is every lattice point t = i/n (both processes are step
    functions, so this attains the true supremum).  The trailing n - km
    remainder stays on the S side.  Same paths across m for a sharper
    cross-m comparison.
    """
    reports = []
    for m in m_list:
        k = n // m
        if k < 32:
            raise ParameterError(f"need floor(n/m) >= 32 full blocks, got {k}")
        tables = (renewal.renewal_tables(spec.chain, m)
                  if isinstance(spec, RenewalFunctional) else None)

        def work(rng_args, m=m, k=k, tables=tables):
            start, count = rng_args
            x, inc = _blocked_increments(spec, n, m, seed, start, count, tables=tables)
            s = np.concatenate([np.zeros((count, 1)), np.cumsum(x, axis=1)], axis=1)
            mart = np.concatenate([np.zeros((count, 1)), np.cumsum(inc, axis=1)], axis=1)
            i = np.arange(n + 1)
            j = (k * i) // n  # [k t] at t = i/n
            diff = s / math.sqrt(n) - mart[:, j] / math.sqrt(k)
            sup = np.max(np.abs(diff), axis=1)
            eta = np.mean(inc * inc, axis=1)
            return sup, eta

        rows = map_ordered(work, chunk_ranges(paths, n), threads)
        sups = np.concatenate([r[0] for r in rows])
        etas = np.concatenate([r[1] for r in rows])
        reports.append(ApproxReport(
            m=int(m), n=int(n),
            eta_m=float(np.mean(etas)),
            eta_stderr=float(np.std(etas, ddof=1) / math.sqrt(paths)),
            mean_sup_err=float(np.mean(sups)),
            p90_sup_err=float(np.percentile(sups, 90.0))))
    return reports


APPROX_CSV_HEADER = ("m", "eta_m", "eta_stderr", "mean_sup_err", "p90_sup_err")


def approx_csv_rows(reports):
    for r in reports:
        yield (r.m, r.eta_m, r.eta_stderr, r.mean_sup_err, r.p90_sup_err)
