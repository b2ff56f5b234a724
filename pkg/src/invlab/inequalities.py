"""Second-moment and maximal inequality checks for partial sums.

The deterministic backbone is the telescoping maximal inequality: with
M_n^+ = max(0, S_1, ..., S_n),

    (M_n^+)^2 <= 4 (S_n^+)^2 - 4 sum_{k=1}^n M_{k-1}^+ X_k,

which holds pathwise for *every* real path (no distributional input), and
its two-sided consequence, with D_k = (M_k^+ - M_{k-1}^+) - (M_k^- - M_{k-1}^-),

    M_n^2 <= 4 S_n^2 - 4 sum_{k=1}^{n-1} D_k (S_n - S_k).

On top sit the moment bounds driven by the dyadic profile Delta_r
(2^{r-1} < n <= 2^r):

    E S_n^2              <= n (||X_1|| + Delta_r / 2)^2
    E max_{i<=n} S_i^2   <= n (2||X_1|| + (1 + sqrt 2) Delta_r)^2

The maximal bound reduces to the sharp Doob constant 4 n ||X_1||^2 when
Delta_r = 0 (martingale differences).  Exact sides are used wherever a
closed form or covariance DP exists; Monte Carlo sides carry a stderr and
the 3-sigma verdict policy of `reporting`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import processes
from ._parallel import chunk_ranges, map_ordered
from .conditional import delta_for_n, dyadic_level
from .errors import ParameterError
from .processes import PathSample, ProcessSpec, simulate_matrix
from .reporting import BoundReport

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# pathwise statistics
# ---------------------------------------------------------------------------

@dataclass
class MaxStats:
    """Running one-sided maxima and their increments for one path."""

    sums: np.ndarray      # S_0..S_n
    m_plus: np.ndarray    # M_0^+..M_n^+
    m_minus: np.ndarray   # M_0^-..M_n^-
    d: np.ndarray         # D_1..D_n

    @property
    def m(self) -> np.ndarray:
        return np.maximum(self.m_plus, self.m_minus)

    @classmethod
    def from_values(cls, values) -> "MaxStats":
        x = np.asarray(values, dtype=np.float64)
        sums = np.concatenate([[0.0], np.cumsum(x)])
        m_plus = np.concatenate([[0.0], np.maximum.accumulate(np.maximum(sums[1:], 0.0))])
        m_minus = np.concatenate([[0.0], np.maximum.accumulate(np.maximum(-sums[1:], 0.0))])
        d = np.diff(m_plus) - np.diff(m_minus)
        return cls(sums=sums, m_plus=m_plus, m_minus=m_minus, d=d)

    def window_check(self) -> bool:
        """|sum_{k=a+1}^b D_k| <= max_{a<=i<=b} |S_i - S_a| for all windows."""
        n = len(self.d)
        pd = np.concatenate([[0.0], np.cumsum(self.d)])
        for a in range(n):
            lhs = np.abs(pd[a + 1:] - pd[a])
            spread = np.maximum.accumulate(np.abs(self.sums[a:] - self.sums[a]))[1:]
            if np.any(lhs > spread + 1e-9 * (spread + 1.0)):
                return False
        return True


def _prefix_inequality_margins(x: np.ndarray):
    """Vectorised over a (paths, n) matrix: slack of the two pathwise
    inequalities at every prefix length, scaled for tolerance checks.

    Returns (slack9, slack10) of shape (paths, n): rhs - lhs at each length.
    """
    s = np.concatenate([np.zeros((x.shape[0], 1)), np.cumsum(x, axis=1)], axis=1)
    m_plus = np.concatenate([np.zeros((x.shape[0], 1)),
                             np.maximum.accumulate(np.maximum(s[:, 1:], 0.0), axis=1)],
                            axis=1)
    m_minus = np.concatenate([np.zeros((x.shape[0], 1)),
                              np.maximum.accumulate(np.maximum(-s[:, 1:], 0.0), axis=1)],
                             axis=1)
    # one-sided form: cumulative sum of M_{k-1}^+ X_k
    t9 = np.cumsum(m_plus[:, :-1] * x, axis=1)
    lhs9 = m_plus[:, 1:] ** 2
    rhs9 = 4.0 * np.maximum(s[:, 1:], 0.0) ** 2 - 4.0 * t9
    # two-sided form via D_k prefix sums
    d = np.diff(m_plus, axis=1) - np.diff(m_minus, axis=1)
    pd = np.cumsum(d, axis=1)
    pds = np.cumsum(d * s[:, 1:], axis=1)
    sn = s[:, 1:]
    cross = sn * (pd - d) - (pds - d * sn)   # sum_{k<n} D_k (S_n - S_k)
    lhs10 = np.maximum(m_plus[:, 1:], m_minus[:, 1:]) ** 2
    rhs10 = 4.0 * sn ** 2 - 4.0 * cross
    return rhs9 - lhs9, rhs10 - lhs10, lhs9, rhs9, lhs10, rhs10


def telescoping_inequalities(values) -> dict:
    """Both pathwise inequalities for one path, at its full length."""
    x = np.asarray(values, dtype=np.float64)
    if isinstance(values, PathSample):
        x = values.values
    s9, s10, lhs9, rhs9, lhs10, rhs10 = _prefix_inequality_margins(x[None, :])
    scale9 = np.maximum(1.0, np.maximum(np.abs(lhs9[0, -1]), np.abs(rhs9[0, -1])))
    scale10 = np.maximum(1.0, np.maximum(np.abs(lhs10[0, -1]), np.abs(rhs10[0, -1])))
    return {
        "one_sided": {"lhs": float(lhs9[0, -1]), "rhs": float(rhs9[0, -1]),
                      "ok": bool(s9[0, -1] >= -1e-9 * scale9)},
        "two_sided": {"lhs": float(lhs10[0, -1]), "rhs": float(rhs10[0, -1]),
                      "ok": bool(s10[0, -1] >= -1e-9 * scale10)},
    }


def telescoping_suite(spec: ProcessSpec, lengths, paths: int, seed: int,
                      threads: int = 1) -> dict:
    """Zero-violation sweep of both pathwise inequalities.

    Simulates once at max(lengths) and checks every requested prefix length
    on every path (the inequalities are deterministic, so a single violation
    beyond 1e-9 relative tolerance fails the suite).
    """
    lengths = sorted(int(n) for n in lengths)
    n_max = lengths[-1]
    cols = np.asarray(lengths) - 1

    def work(rng_args):
        start, count = rng_args
        x, _ = simulate_matrix(spec, n_max, seed, start, count)
        s9, s10, lhs9, rhs9, lhs10, rhs10 = _prefix_inequality_margins(x)
        out = []
        for arr_s, arr_l, arr_r in ((s9, lhs9, rhs9), (s10, lhs10, rhs10)):
            scale = np.maximum(1.0, np.maximum(np.abs(arr_l[:, cols]), np.abs(arr_r[:, cols])))
            rel = arr_s[:, cols] / scale
            out.append((int(np.count_nonzero(rel < -1e-9)), float(np.min(rel))))
        return out

    results = map_ordered(work, chunk_ranges(paths, n_max), threads)
    v9 = sum(r[0][0] for r in results)
    v10 = sum(r[1][0] for r in results)
    worst = min(min(r[0][1], r[1][1]) for r in results)
    return {"lengths": lengths, "paths": paths, "seed": seed,
            "violations_one_sided": v9, "violations_two_sided": v10,
            "worst_relative_slack": worst,
            "ok": v9 == 0 and v10 == 0}


# ---------------------------------------------------------------------------
# moment bounds
# ---------------------------------------------------------------------------

def second_moment_bound(spec: ProcessSpec, n: int) -> BoundReport:
    """E S_n^2 <= n (||X_1|| + Delta_r/2)^2 with both sides exact."""
    lhs = processes.exact_s2(spec, n)
    delta = delta_for_n(spec, n)
    rhs = n * (processes.x1_norm(spec) + 0.5 * delta) ** 2
    return BoundReport(name="second_moment_bound", lhs=lhs, rhs=rhs, n=n,
                       notes={"delta_r": delta, "r": dyadic_level(n)})


def second_moment_suite(spec: ProcessSpec, N: int) -> dict:
    """The second-moment bound at every n <= N (exact sides, vectorised)."""
    s2 = processes.exact_s2_all(spec, N)[1:]
    x1 = processes.x1_norm(spec)
    n_idx = np.arange(1, N + 1, dtype=np.float64)
    deltas = np.array([delta_for_n(spec, 1 << r) if r else 0.0
                       for r in range(dyadic_level(N) + 1)])
    levels = np.array([dyadic_level(n) for n in range(1, N + 1)])
    rhs = n_idx * (x1 + 0.5 * deltas[levels]) ** 2
    slack = rhs - s2
    scale = np.maximum(1.0, np.maximum(np.abs(rhs), np.abs(s2)))
    worst = float(np.min(slack / scale))
    return {"N": N, "worst_relative_margin": worst, "ok": worst >= -1e-9,
            "lhs": s2, "rhs": rhs}


def sigma2_series(spec: ProcessSpec, J_terms: int) -> dict:
    """sigma^2 = E X_1^2 + sum_{j>=0} 2^-j E[S_{2^j}(S_{2^{j+1}} - S_{2^j})].

    Partial sum over j < J_terms, with the last term reported as the tail
    scale (terms converge geometrically once the cross moments stabilise).
    """
    if J_terms < 1:
        raise ParameterError("need at least one term")
    g0 = processes.autocovariances(spec, 0)[0]
    terms = np.array([processes.cross_moment(spec, 1 << j) / 2.0 ** j
                      for j in range(J_terms)])
    value = g0 + float(np.sum(terms))
    return {"value": value, "first_term": g0, "terms": terms,
            "tail_scale": float(abs(terms[-1]))}


def dyadic_doubling_identity(spec: ProcessSpec, r: int) -> float:
    """Relative residual of E S_{2^r}^2 = 2^r (gamma_0 + sum_{j<r} 2^-j cross(2^j)).

    Pure covariance algebra; a residual beyond 1e-9 flags an implementation
    fault rather than a mathematical one.
    """
    lhs = processes.exact_s2(spec, 1 << r)
    g0 = processes.autocovariances(spec, 0)[0]
    rhs = (1 << r) * (g0 + sum(processes.cross_moment(spec, 1 << j) / 2.0 ** j
                               for j in range(r)))
    return abs(lhs - rhs) / max(1.0, abs(lhs))


# ---------------------------------------------------------------------------
# adapted cross-term bound (window-variance hypothesis)
# ---------------------------------------------------------------------------

def adapted_cross_term_bound(spec: ProcessSpec, n: int, paths: int, seed: int,
                             y_choice: str = "x", threads: int = 1) -> BoundReport:
    """|E sum_{l<n} Y_l (S_n - S_l)| <= (1/2) C n Delta_r.

    C is the window-variance constant: the max over windows [a, b] of
    E(sum_a^b Y_l)^2 / (b - a + 1).  With Y = X everything is exact in the
    covariances; with Y = D (the one-sided maxima increments) both the
    left side and C are Monte Carlo estimates.  The headline rhs uses C
    itself; the notes also carry the L2-normalised form (1/2) sqrt(C) n
    Delta_r, which is how the constant enters the maximal-bound recursion.
    """
    delta = delta_for_n(spec, n)
    if y_choice == "x":
        s2 = processes.exact_s2_all(spec, n)
        lhs_signed = 0.5 * (s2[n] - n * s2[1])
        c_const = float(np.max(s2[1:] / np.arange(1, n + 1)))
        rhs = 0.5 * c_const * n * delta
        return BoundReport(
            name="adapted_cross_term_bound_x", lhs=abs(lhs_signed), rhs=rhs, n=n,
            notes={"C": c_const, "delta_r": delta, "lhs_signed": lhs_signed,
                   "rhs_l2_form": 0.5 * math.sqrt(c_const) * n * delta})
    if y_choice != "d":
        raise ParameterError("y_choice must be 'x' or 'd'")

    def work(rng_args):
        start, count = rng_args
        x, _ = simulate_matrix(spec, n, seed, start, count)
        s = np.concatenate([np.zeros((count, 1)), np.cumsum(x, axis=1)], axis=1)
        m_plus = np.maximum.accumulate(np.maximum(s[:, 1:], 0.0), axis=1)
        m_minus = np.maximum.accumulate(np.maximum(-s[:, 1:], 0.0), axis=1)
        mp = np.concatenate([np.zeros((count, 1)), m_plus], axis=1)
        mm = np.concatenate([np.zeros((count, 1)), m_minus], axis=1)
        d = np.diff(mp, axis=1) - np.diff(mm, axis=1)
        pd = np.concatenate([np.zeros((count, 1)), np.cumsum(d, axis=1)], axis=1)
        pds = np.cumsum(d * s[:, 1:], axis=1)
        sn = s[:, n]
        cross = sn * pd[:, n - 1] - pds[:, n - 2] if n >= 2 else np.zeros(count)
        return cross, pd

    chunks = map_ordered(work, chunk_ranges(paths, n), threads)
    cross = np.concatenate([c[0] for c in chunks])
    pd = np.concatenate([c[1] for c in chunks], axis=0)
    lhs_mean = float(np.mean(cross))
    lhs_se = float(np.std(cross, ddof=1) / math.sqrt(len(cross)))
    # window-variance constant over all (a, b]
    best, best_se = 0.0, 0.0
    for a in range(n):
        diffs = pd[:, a + 1:] - pd[:, a:a + 1]
        lens = np.arange(1, n - a + 1, dtype=np.float64)
        means = np.mean(diffs ** 2, axis=0) / lens
        b = int(np.argmax(means))
        if means[b] > best:
            best = float(means[b])
            best_se = float(np.std(diffs[:, b] ** 2 / lens[b], ddof=1)
                            / math.sqrt(diffs.shape[0]))
    rhs = 0.5 * best * n * delta
    rhs_se = 0.5 * best_se * n * delta
    total_se = math.hypot(lhs_se, rhs_se)
    return BoundReport(
        name="adapted_cross_term_bound_d", lhs=abs(lhs_mean), rhs=rhs,
        lhs_stderr=total_se, n=n, paths=paths, seed=seed,
        notes={"C": best, "C_stderr": best_se, "delta_r": delta,
               "lhs_signed": lhs_mean, "lhs_stderr_raw": lhs_se,
               "rhs_l2_form": 0.5 * math.sqrt(best) * n * delta})


# ---------------------------------------------------------------------------
# maximal moment bound
# ---------------------------------------------------------------------------

def maximal_moment_suite(spec: ProcessSpec, n_list, paths: int, seed: int,
                         threads: int = 1) -> list:
    """E max_{i<=n} S_i^2 <= n (2||X_1|| + (1+sqrt2) Delta_r)^2 for each n.

    One simulation at max(n_list); the running maximum makes every smaller
    n a prefix read.  When Delta_r = 0 the bound *is* the Doob constant
    4 n ||X_1||^2, recorded in the notes.
    """
    ns = sorted(int(n) for n in n_list)
    n_max = ns[-1]
    cols = np.asarray(ns) - 1

    def work(rng_args):
        start, count = rng_args
        x, _ = simulate_matrix(spec, n_max, seed, start, count)
        s = np.cumsum(x, axis=1)
        run = np.maximum.accumulate(s * s, axis=1)
        return run[:, cols]

    chunks = map_ordered(work, chunk_ranges(paths, n_max), threads)
    per_path = np.concatenate(chunks, axis=0)
    means = np.mean(per_path, axis=0)
    serrs = np.std(per_path, axis=0, ddof=1) / math.sqrt(paths)
    x1 = processes.x1_norm(spec)
    reports = []
    for i, n in enumerate(ns):
        delta = delta_for_n(spec, n)
        rhs = n * (2.0 * x1 + (1.0 + _SQRT2) * delta) ** 2
        notes = {"delta_r": delta, "r": dyadic_level(n)}
        if delta == 0.0:
            notes["doob_rhs"] = 4.0 * n * x1 ** 2
            notes["doob_equal"] = True
        reports.append(BoundReport(
            name="maximal_moment_bound", lhs=float(means[i]), rhs=rhs,
            lhs_stderr=float(serrs[i]), n=n, paths=paths, seed=seed, notes=notes))
    return reports


def maximal_moment_bound(spec: ProcessSpec, n: int, paths: int, seed: int,
                         threads: int = 1) -> BoundReport:
    return maximal_moment_suite(spec, [n], paths, seed, threads)[0]
