"""Conditional-sum norms V_n = ||E(S_n | F_0)|| and their series diagnostics.

For each built-in family the norm has an exact form:

* IID:     V_n = 0.
* Linear:  E(S_n | F_0) = sum_{j>=0} (sum_{i=1}^{n} c_{i+j}) eps_{-j}, so
           V_n = sd * sqrt( sum_j (sum_{i=1}^n c_{i+j})^2 )  (coefficients
           vanish beyond the list; the inner sums are suffix sums).
* AR1:     E(S_n | X_0) = X_0 * rho (1 - rho^n)/(1 - rho), so
           V_n = sqrt(sd^2/(1-rho^2)) * |rho (1-rho^n)/(1-rho)|.
* Renewal: delegated to `renewal.conditional_norms` (exact DP).

V_n is always subadditive (V_{i+j} <= V_i + V_j): conditioning on the
poorer sigma-field F_{-i} only shrinks the L2 norm.  That single fact
drives every series equivalence here: with the dyadic profile

    Delta_r = sum_{j=0}^{r-1} V_{2^j} / 2^{j/2}

and, for p > 1,

    I = sum_j V_{2^j} / 2^{j(p-1)},   J = sum_n V_n / n^p,
    W = sum_n n^{-p} max_{i<=n} V_i,

one has C_p I <= J <= W <= K_p I with K_p = 1/(1 - 2^{-(p-1)}) and the
proof-derived C_p = [9 (2^{2-p} + 1)]^{-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import renewal
from .errors import (CoverageError, ParameterError, ProvenanceError,
                     UnsupportedSpecError)
from .processes import AR1, IID, Linear, ProcessSpec, RenewalFunctional
from .reporting import BoundReport, INCONCLUSIVE, PASS, verdict_for
from .rng import Stream, normals_matrix, stream_seeds, uniforms_matrix

EXACT = "exact"
MONTE_CARLO = "monte_carlo"


@dataclass
class VSequence:
    """V_1..V_N with provenance; stderr accompanies Monte Carlo values."""

    values: np.ndarray
    provenance: str
    stderr: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if np.any(self.values < 0):
            raise ParameterError("V values must be nonnegative")
        if self.provenance not in (EXACT, MONTE_CARLO):
            raise ParameterError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return len(self.values)

    def at(self, n: int) -> float:
        if not 1 <= n <= len(self.values):
            raise CoverageError(f"V_{n} not covered (have 1..{len(self.values)})")
        return float(self.values[n - 1])

    def csv_rows(self):
        for i, v in enumerate(self.values):
            err = None if self.stderr is None else float(self.stderr[i])
            yield (i + 1, float(v), err, self.provenance)


V_CSV_HEADER = ("n", "v", "stderr", "method")


@dataclass
class DyadicProfile:
    """Delta_1..Delta_R (deltas[r-1] = Delta_r); optionally a G_m profile."""

    deltas: np.ndarray
    g: np.ndarray | None = None


@dataclass
class SeriesTriple:
    """Matched-truncation values of the three series at exponent p > 1.

    i_sum runs over j = 0..R; j_sum and w_sum over n = 1..2^R.
    """

    p: float
    R: int
    i_sum: float
    j_sum: float
    w_sum: float
    tail_bound: float | None = None

    def to_json_dict(self) -> dict:
        return {"p": self.p, "I": self.i_sum, "J": self.j_sum,
                "W": self.w_sum, "R": self.R, "tail_bound": self.tail_bound}


# ---------------------------------------------------------------------------
# exact and Monte Carlo V
# ---------------------------------------------------------------------------

def v_exact(spec: ProcessSpec, N: int) -> VSequence:
    if N < 1:
        raise ParameterError("N must be >= 1")
    if isinstance(spec, IID):
        return VSequence(np.zeros(N), EXACT)
    if isinstance(spec, Linear):
        c = np.asarray(spec.coeffs, dtype=np.float64)
        L = len(c) - 1
        # suffix[j] = sum_{m>=j} c_m (c indexed 0..L)
        suffix = np.concatenate([np.cumsum(c[::-1])[::-1], [0.0]])
        v2 = np.empty(N)
        for n in range(1, N + 1):
            j = np.arange(0, L)  # terms with j >= L vanish (sum starts at c_{j+1})
            b = suffix[np.minimum(j + 1, L + 1)] - suffix[np.minimum(j + 1 + n, L + 1)]
            v2[n - 1] = float(np.dot(b, b))
        return VSequence(spec.innovation_sd * np.sqrt(v2), EXACT)
    if isinstance(spec, AR1):
        rho = spec.rho
        g = rho * (1.0 - rho ** np.arange(1, N + 1, dtype=np.float64)) / (1.0 - rho)
        sd0 = math.sqrt(spec.innovation_sd ** 2 / (1.0 - rho ** 2))
        return VSequence(sd0 * np.abs(g), EXACT)
    if isinstance(spec, RenewalFunctional):
        return VSequence(renewal.conditional_norms(spec.chain, N), EXACT)
    raise UnsupportedSpecError(f"not a process spec: {spec!r}")


def _bootstrap_stderr(state_means_samples, weights, seed, n_boot=200):
    """Bootstrap stderr of V_n = sqrt(sum_k w_k * mean_k^2) over path draws.

    state_means_samples: list per state of (paths, n_count) per-path S_n
    values.  Resampling is deterministic in `seed`.
    """
    n_count = state_means_samples[0].shape[1]
    boots = np.empty((n_boot, n_count))
    stream = Stream.substream(seed, 0x9E3779B9)
    for b in range(n_boot):
        v2 = np.zeros(n_count)
        for w, sample in zip(weights, state_means_samples):
            m = sample.shape[0]
            idx = (stream.uniforms(m) * m).astype(np.int64)
            v2 += w * np.mean(sample[idx], axis=0) ** 2
        boots[b] = np.sqrt(np.maximum(v2, 0.0))
    return np.std(boots, axis=0, ddof=1)


def v_monte_carlo(spec: ProcessSpec, N: int, paths: int, seed: int) -> VSequence:
    """Estimate V_n for Markov-representable specs from frozen initial states.

    E(S_n | F_0) is a function f_n of the time-0 state; f_n is estimated on
    a state grid by forward simulation (the grid is exact for both supported
    families: Gauss-Hermite nodes for the AR1 Gaussian state, all reachable
    states for a renewal chain), then V_n^2 = E_pi[f_n^2].  IID and Linear
    are rejected: an exact path exists and nested conditional estimation is
    out of scope.
    """
    if N < 1 or paths < 2:
        raise ParameterError("need N >= 1 and paths >= 2")
    ns = np.arange(1, N + 1)
    if isinstance(spec, AR1):
        nodes, gh_w = np.polynomial.hermite.hermgauss(8)
        sd0 = math.sqrt(spec.innovation_sd ** 2 / (1.0 - spec.rho ** 2))
        states = math.sqrt(2.0) * sd0 * nodes
        weights = gh_w / math.sqrt(math.pi)
        per_state = max(paths // len(states), 2)
        samples = []
        for i, x0 in enumerate(states):
            seeds = stream_seeds(seed, i * per_state, per_state)
            eps = spec.innovation_sd * normals_matrix(seeds, N)
            zi = np.full((per_state, 1), spec.rho * x0)
            x, _ = lfilter([1.0], [1.0, -spec.rho], eps, axis=1, zi=zi)
            samples.append(np.cumsum(x, axis=1))
        v2 = np.zeros(N)
        for w, sample in zip(weights, samples):
            v2 += w * np.mean(sample, axis=0) ** 2
        stderr = _bootstrap_stderr(samples, weights, seed)
        return VSequence(np.sqrt(np.maximum(v2, 0.0)), MONTE_CARLO, stderr=stderr)
    if isinstance(spec, RenewalFunctional):
        chain = spec.chain
        max_state = int(chain.support[-1]) - 1
        if max_state > 4096:
            raise UnsupportedSpecError(
                "state grid too large for Monte Carlo V; use the exact DP")
        states = list(range(0, max_state + 1))
        weights = renewal.pi_masses(chain, max_state)
        per_state = max(paths // len(states), 2)
        samples = []
        for i, k in enumerate(states):
            seeds = stream_seeds(seed, i * per_state, per_state)
            u = uniforms_matrix(seeds, N)
            y = np.full(per_state, k, dtype=np.int64)
            x = np.empty((per_state, N))
            for t in range(N):
                at0 = y == 0
                if np.any(at0):
                    y = y.copy()
                    y[at0] = renewal.sample_tau(chain, u[at0, t]).astype(np.int64) - 1
                y[~at0] -= 1
                x[:, t] = (y == 0) - chain.pi0
            samples.append(np.cumsum(x, axis=1))
        v2 = np.zeros(N)
        for w, sample in zip(weights, samples):
            v2 += w * np.mean(sample, axis=0) ** 2
        stderr = _bootstrap_stderr(samples, weights, seed)
        return VSequence(np.sqrt(np.maximum(v2, 0.0)), MONTE_CARLO, stderr=stderr)
    raise UnsupportedSpecError(
        "Monte Carlo V supports Markov-representable specs only (AR1, renewal); "
        "IID and Linear have exact paths")


# ---------------------------------------------------------------------------
# dyadic profile and subadditivity
# ---------------------------------------------------------------------------

def dyadic_profile(v: VSequence | np.ndarray, R: int) -> DyadicProfile:
    """Delta_r = sum_{j<r} V_{2^j}/2^{j/2} for r = 1..R; needs V up to 2^{R-1}."""
    values = v.values if isinstance(v, VSequence) else np.asarray(v, float)
    if R < 1:
        raise ParameterError("R must be >= 1")
    if len(values) < 2 ** (R - 1):
        raise CoverageError(f"need V up to 2^{R - 1} = {2 ** (R - 1)}")
    j = np.arange(R)
    terms = values[2 ** j - 1] / 2.0 ** (j / 2.0)
    return DyadicProfile(deltas=np.cumsum(terms))


def delta_for_n(spec: ProcessSpec, n: int) -> float:
    """Delta_r at the dyadic level of n (2^{r-1} < n <= 2^r), from exact V."""
    r = dyadic_level(n)
    if r == 0:
        return 0.0
    v = v_exact(spec, 2 ** (r - 1))
    return float(dyadic_profile(v, r).deltas[-1])


def dyadic_level(n: int) -> int:
    """The r with 2^{r-1} < n <= 2^r (r = 0 for n = 1)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return int(n - 1).bit_length()


def check_subadditive(v: VSequence) -> list:
    """Violating pairs (i, j) with V_{i+j} > V_i + V_j beyond tolerance.

    Monte Carlo sequences are refused: statistical noise breaks a sharp
    inequality, so a scan over noisy values certifies nothing.
    """
    if isinstance(v, VSequence):
        if v.provenance != EXACT:
            raise ProvenanceError("subadditivity scan needs exact provenance")
        values = v.values
    else:
        values = np.asarray(v, float)
    N = len(values)
    bad = []
    for i in range(1, N // 2 + 1):
        j = np.arange(i, N - i + 1)
        tol = 1e-9 * (values[i - 1] + values[j - 1] + 1.0)
        mask = values[i + j - 1] > values[i - 1] + values[j - 1] + tol
        for jj in j[mask]:
            bad.append((i, int(jj)))
    return bad


# ---------------------------------------------------------------------------
# series I, J, W
# ---------------------------------------------------------------------------

def series_triple(v, p: float, R: int) -> SeriesTriple:
    """Truncated I, J, W at matched truncation (I: j <= R; J, W: n <= 2^R)."""
    if p <= 1.0:
        raise ParameterError("p must exceed 1")
    values = v.values if isinstance(v, VSequence) else np.asarray(v, float)
    top = 2 ** R
    if len(values) < top:
        raise CoverageError(f"need V up to 2^R = {top}")
    values = values[:top]
    j = np.arange(R + 1)
    i_sum = float(np.sum(values[2 ** j - 1] / 2.0 ** (j * (p - 1.0))))
    n_idx = np.arange(1, top + 1, dtype=np.float64)
    weights = n_idx ** -p
    j_sum = float(np.dot(values, weights))
    w_sum = float(np.dot(np.maximum.accumulate(values), weights))
    return SeriesTriple(p=p, R=R, i_sum=i_sum, j_sum=j_sum, w_sum=w_sum)


def power_sequence(alpha: float, N: int, scale: float = 1.0) -> np.ndarray:
    """V_n = scale * n^alpha (subadditive for 0 <= alpha <= 1)."""
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError("alpha in [0, 1] keeps the sequence subadditive")
    return scale * np.arange(1, N + 1, dtype=np.float64) ** alpha


def i_tail_power(alpha: float, p: float, R: int, scale: float = 1.0) -> float:
    """Upper bound on sum_{j>R} (scale*2^{j*alpha}) / 2^{j(p-1)} (inf if divergent)."""
    ratio = 2.0 ** (alpha - (p - 1.0))
    if ratio >= 1.0:
        return math.inf
    first = scale * ratio ** (R + 1)
    return first / (1.0 - ratio)


def i_tail_bounded(v_sup: float, p: float, R: int) -> float:
    """Upper bound on the I tail when V is bounded by v_sup."""
    return i_tail_power(0.0, p, R, scale=v_sup)


def kp_constant(p: float) -> float:
    return 1.0 / (1.0 - 2.0 ** -(p - 1.0))


def cp_inverse(p: float) -> float:
    """Proof-derived 1/C_p = 9 (2^{2-p} + 1); the text fixes no numeric C_p."""
    return 9.0 * (2.0 ** (2.0 - p) + 1.0)


def check_series_equivalence(triple: SeriesTriple,
                             i_tail_upper: float | None = None,
                             other: SeriesTriple | None = None) -> list:
    """Three reports: J <= W, W <= K_p I, and the full-series lower bound.

    The first two are exact at matched truncation (the upper-bound proof
    regroups W blockwise over dyadic ranges, so truncating both sides at
    2^R keeps it valid).  The lower bound C_p I <= J only holds for the
    full series (its proof works over blocks of 4^r), so it is checked as
    I_trunc + tail <= (1/C_p) * J_trunc, which is conservative on both
    sides; without a finite tail bound it reports INCONCLUSIVE.
    """
    if other is not None:
        if other.p != triple.p or other.R != triple.R:
            raise ParameterError("mismatched truncation between triples")
        j_sum, w_sum = other.j_sum, other.w_sum
    else:
        j_sum, w_sum = triple.j_sum, triple.w_sum
    p, R = triple.p, triple.R
    kp = kp_constant(p)
    reports = [
        BoundReport(name="series_j_le_w", lhs=j_sum, rhs=w_sum, n=2 ** R,
                    notes={"p": p}),
        BoundReport(name="series_w_le_kp_i", lhs=w_sum, rhs=kp * triple.i_sum,
                    n=2 ** R, notes={"p": p, "K_p": kp}),
    ]
    cpi = cp_inverse(p)
    if i_tail_upper is None or not math.isfinite(i_tail_upper):
        rep = BoundReport(name="series_i_le_cp_j", lhs=triple.i_sum,
                          rhs=cpi * j_sum, n=2 ** R,
                          notes={"p": p, "one_over_C_p": cpi,
                                 "note": "no finite I-tail bound at this truncation; "
                                         "full-series claim not resolvable"})
        rep.verdict = INCONCLUSIVE
        reports.append(rep)
    else:
        reports.append(BoundReport(
            name="series_i_le_cp_j", lhs=triple.i_sum + i_tail_upper,
            rhs=cpi * j_sum, n=2 ** R,
            notes={"p": p, "one_over_C_p": cpi, "i_tail_upper": i_tail_upper,
                   "note": "conservative: truncated J lower-bounds the full J"}))
    return reports


# ---------------------------------------------------------------------------
# combinatorial and tail profiles
# ---------------------------------------------------------------------------

def count_above_half_max(v, N: int):
    """(|{i <= N : V_i >= V_N / 2}|, verdict that it reaches N/2).

    Subadditivity forces at least N/2 such indices: if V_i < V_N/2 then
    V_{N-i} >= V_N - V_i > V_N/2, so the complement injects into the set.
    """
    values = v.values if isinstance(v, VSequence) else np.asarray(v, float)
    if len(values) < N:
        raise CoverageError(f"need V up to {N}")
    count = int(np.count_nonzero(values[:N] >= values[N - 1] / 2.0))
    return count, count >= N / 2.0


def dyadic_tail_profile(v, m_list, K: int, v_sup: float | None = None):
    """G_m = m^{-1/2} sum_{k=0}^{K} V_{m 2^k} / 2^{k/2}, truncated at K.

    Returns (values, tail_bounds); the geometric tail bound needs a uniform
    bound on V and is None without one.  Needs coverage up to m*2^K.
    """
    values = v.values if isinstance(v, VSequence) else np.asarray(v, float)
    out = np.empty(len(m_list))
    for i, m in enumerate(m_list):
        if m * 2 ** K > len(values):
            raise CoverageError(f"need V up to m*2^K = {m * 2 ** K}")
        k = np.arange(K + 1)
        out[i] = float(np.sum(values[m * 2 ** k - 1] / 2.0 ** (k / 2.0))) / math.sqrt(m)
    tails = None
    if v_sup is not None:
        tails = np.array([
            v_sup * 2.0 ** (-(K + 1) / 2.0) / (1.0 - 2.0 ** -0.5) / math.sqrt(m)
            for m in m_list])
    return out, tails
