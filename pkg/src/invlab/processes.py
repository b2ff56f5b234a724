"""Stationary sequence generators with exactly known conditional structure.

Four closed families, all centred with finite second moment by construction:

* ``IID(sd)``            -- independent N(0, sd^2).
* ``Linear(coeffs, sd)`` -- finite moving average X_j = sum_i c_i eps_{j-i}.
* ``AR1(rho, sd)``       -- X_k = rho X_{k-1} + eps_k, |rho| < 1, started
                            from the stationary N(0, sd^2/(1-rho^2)) law.
* ``RenewalFunctional``  -- X_j = 1(Y_j = 0) - pi_0 over a renewal chain
                            started from its stationary law.

Every path is a pure function of (spec, n, seed): path ``i`` of a run uses
the substream ``stream_seed(master, i)`` and a fixed, documented draw
pattern per family (see `simulate_path`), so simulate_matrix rows are
bit-identical to the corresponding single-path calls.

The module also carries the exact second-order quantities the inequality
checkers lean on: autocovariances, E[S_n^2] for every n at once, and the
cross moments E[S_a (S_{2a} - S_a)].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.signal import lfilter

from . import renewal
from .errors import ParameterError, UnsupportedSpecError
from .renewal import RenewalChainSpec
from .rng import Stream, normals_matrix, stream_seeds, uniforms_matrix


# ---------------------------------------------------------------------------
# specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IID:
    sd: float

    def __post_init__(self):
        if not (math.isfinite(self.sd) and self.sd > 0):
            raise ParameterError("IID sd must be a positive real")


@dataclass(frozen=True)
class Linear:
    coeffs: tuple
    innovation_sd: float

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ParameterError("Linear coefficient list must be nonempty")
        if not all(math.isfinite(c) for c in self.coeffs):
            raise ParameterError("Linear coefficients must be finite")
        if not (math.isfinite(self.innovation_sd) and self.innovation_sd > 0):
            raise ParameterError("Linear innovation_sd must be a positive real")


@dataclass(frozen=True)
class AR1:
    rho: float
    innovation_sd: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and abs(self.rho) < 1):
            raise ParameterError("AR1 rho must lie in (-1, 1)")
        if not (math.isfinite(self.innovation_sd) and self.innovation_sd > 0):
            raise ParameterError("AR1 innovation_sd must be a positive real")


@dataclass(frozen=True)
class RenewalFunctional:
    chain: RenewalChainSpec


ProcessSpec = Union[IID, Linear, AR1, RenewalFunctional]


def spec_to_json_dict(spec: ProcessSpec) -> dict:
    if isinstance(spec, IID):
        return {"kind": "iid", "sd": float(spec.sd)}
    if isinstance(spec, Linear):
        return {"kind": "linear", "coeffs": [float(c) for c in spec.coeffs],
                "innovation_sd": float(spec.innovation_sd)}
    if isinstance(spec, AR1):
        return {"kind": "ar1", "rho": float(spec.rho),
                "innovation_sd": float(spec.innovation_sd)}
    if isinstance(spec, RenewalFunctional):
        return {"kind": "renewal", "chain": spec.chain.to_json_dict()}
    raise UnsupportedSpecError(f"not a process spec: {spec!r}")


def spec_from_json_dict(doc: dict) -> ProcessSpec:
    kind = doc.get("kind")
    if kind == "iid":
        return IID(sd=float(doc["sd"]))
    if kind == "linear":
        return Linear(coeffs=tuple(float(c) for c in doc["coeffs"]),
                      innovation_sd=float(doc["innovation_sd"]))
    if kind == "ar1":
        return AR1(rho=float(doc["rho"]), innovation_sd=float(doc["innovation_sd"]))
    if kind == "renewal":
        return RenewalFunctional(chain=RenewalChainSpec.from_json_dict(doc["chain"]))
    raise ParameterError(f"unknown spec kind {kind!r}")


def spec_id(spec: ProcessSpec) -> str:
    return json.dumps(spec_to_json_dict(spec), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass
class PathSample:
    """One realization X_1..X_n plus the hidden state needed to condition on it.

    aux holds, per family:
      AR1       -- "x0": the stationary initial value (the Markov state at 0)
      Linear    -- "innovations": eps_{1-L}..eps_n (burn-in included)
      Renewal   -- "states": Y_0..Y_n
    """

    spec_id: str
    seed: int
    values: np.ndarray
    aux: dict


@dataclass
class PartialSumPath:
    """Running sums S_0..S_n with S_0 = 0."""

    sums: np.ndarray


def simulate_matrix(spec: ProcessSpec, n: int, master_seed: int,
                    start: int, count: int, keep_aux: bool = False):
    """Simulate paths start..start+count-1 as a (count, n) matrix.

    Draw pattern per family (counters within each path's substream):
      IID      n normals
      Linear   n + L normals (eps_{1-L}..eps_n in time order)
      AR1      n + 1 normals (X_0 first, then innovations)
      Renewal  n + 1 uniforms (Y_0 first, then one per step, consumed
               whether or not the step regenerates)
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    seeds = stream_seeds(master_seed, start, count)
    aux: dict = {}
    if isinstance(spec, IID):
        x = spec.sd * normals_matrix(seeds, n)
    elif isinstance(spec, Linear):
        L = len(spec.coeffs) - 1
        eps = spec.innovation_sd * normals_matrix(seeds, n + L)
        x = lfilter(np.asarray(spec.coeffs, dtype=np.float64), [1.0], eps, axis=1)[:, L:]
        if keep_aux:
            aux["innovations"] = eps
    elif isinstance(spec, AR1):
        z = normals_matrix(seeds, n + 1)
        x0 = math.sqrt(spec.innovation_sd ** 2 / (1.0 - spec.rho ** 2)) * z[:, 0]
        eps = spec.innovation_sd * z[:, 1:]
        zi = (spec.rho * x0)[:, None]
        x, _ = lfilter([1.0], [1.0, -spec.rho], eps, axis=1, zi=zi)
        aux["x0"] = x0
    elif isinstance(spec, RenewalFunctional):
        chain = spec.chain
        u = uniforms_matrix(seeds, n + 1)
        y = renewal.sample_stationary_state(chain, u[:, 0])
        x = np.empty((count, n))
        states = np.empty((count, n + 1), dtype=np.int64) if keep_aux else None
        if states is not None:
            states[:, 0] = y
        for t in range(1, n + 1):
            at0 = y == 0
            if np.any(at0):
                y = y.copy()
                y[at0] = renewal.sample_tau(chain, u[at0, t]).astype(np.int64) - 1
            y[~at0] -= 1
            x[:, t - 1] = (y == 0) - chain.pi0
            if states is not None:
                states[:, t] = y
        if states is not None:
            aux["states"] = states
    else:
        raise UnsupportedSpecError(f"not a process spec: {spec!r}")
    return x, aux


def simulate_path(spec: ProcessSpec, n: int, seed: int) -> PathSample:
    """One path, deterministic in (spec, n, seed); path index 0 of `seed`."""
    x, aux = simulate_matrix(spec, n, seed, 0, 1, keep_aux=True)
    flat = {k: v[0] for k, v in aux.items()}
    if "x0" in flat:
        flat["x0"] = float(flat["x0"])
    return PathSample(spec_id=spec_id(spec), seed=seed, values=x[0], aux=flat)


def partial_sums(path) -> PartialSumPath:
    """Prefix sums S_0..S_n of a PathSample or raw value array."""
    values = path.values if isinstance(path, PathSample) else np.asarray(path, float)
    if len(values) == 0:
        raise ParameterError("path is empty")
    sums = np.empty(len(values) + 1)
    sums[0] = 0.0
    np.cumsum(values, out=sums[1:])
    return PartialSumPath(sums=sums)


def scaled_partial_sum(sums: PartialSumPath, t: float) -> float:
    """S_[n t] / sqrt(n) at a time fraction t in [0, 1] ([.] = integer part)."""
    if not 0.0 <= t <= 1.0:
        raise ParameterError("t must lie in [0, 1]")
    s = sums.sums if isinstance(sums, PartialSumPath) else np.asarray(sums, float)
    n = len(s) - 1
    return float(s[int(math.floor(n * t))] / math.sqrt(n))


# ---------------------------------------------------------------------------
# exact second-order structure
# ---------------------------------------------------------------------------

def sigma2_closed_form(spec: ProcessSpec):
    """Long-run variance lim E[S_n^2]/n, or None when only the covariance
    summation applies (renewal functional: use `renewal.long_run_variance`)."""
    if isinstance(spec, IID):
        return spec.sd ** 2
    if isinstance(spec, Linear):
        return spec.innovation_sd ** 2 * float(sum(spec.coeffs)) ** 2
    if isinstance(spec, AR1):
        return spec.innovation_sd ** 2 / (1.0 - spec.rho) ** 2
    if isinstance(spec, RenewalFunctional):
        return None
    raise UnsupportedSpecError(f"not a process spec: {spec!r}")


def x1_norm(spec: ProcessSpec) -> float:
    """||X_1|| = sqrt(Var X_1)."""
    return math.sqrt(autocovariances(spec, 0)[0])


def autocovariances(spec: ProcessSpec, H: int) -> np.ndarray:
    """gamma(0..H) with gamma(h) = Cov(X_0, X_h).

    Renewal chains use gamma(h) = pi0*(r_h - pi0) with r the renewal mass
    function; the others are closed forms.
    """
    if isinstance(spec, IID):
        g = np.zeros(H + 1)
        g[0] = spec.sd ** 2
        return g
    if isinstance(spec, Linear):
        c = np.asarray(spec.coeffs, dtype=np.float64)
        L = len(c) - 1
        g = np.zeros(H + 1)
        for h in range(min(H, L) + 1):
            g[h] = spec.innovation_sd ** 2 * float(np.dot(c[: L + 1 - h], c[h:]))
        return g
    if isinstance(spec, AR1):
        g0 = spec.innovation_sd ** 2 / (1.0 - spec.rho ** 2)
        return g0 * spec.rho ** np.arange(H + 1, dtype=np.float64)
    if isinstance(spec, RenewalFunctional):
        chain = spec.chain
        r = renewal.renewal_masses(chain, H)
        g = chain.pi0 * (r - chain.pi0)
        g[0] = chain.pi0 * (1.0 - chain.pi0)
        return g
    raise UnsupportedSpecError(f"not a process spec: {spec!r}")


def _cov_horizon(spec: ProcessSpec, needed: int) -> int:
    """Lag beyond which gamma is negligible (exact cut for finite MAs)."""
    if isinstance(spec, IID):
        return 0
    if isinstance(spec, Linear):
        return min(needed, len(spec.coeffs) - 1)
    if isinstance(spec, AR1):
        if spec.rho == 0.0:
            return 0
        cut = int(math.ceil(math.log(1e-24) / math.log(abs(spec.rho)))) + 1
        return min(needed, cut)
    return needed


def exact_s2_all(spec: ProcessSpec, N: int) -> np.ndarray:
    """E[S_n^2] for n = 0..N, from the autocovariances.

    E[S_n^2] = n*gamma(0) + 2*sum_{h<n} (n-h)*gamma(h).
    """
    H = _cov_horizon(spec, max(N - 1, 0))
    g = autocovariances(spec, H)
    n_idx = np.arange(N + 1, dtype=np.float64)
    out = n_idx * g[0]
    if H >= 1 and N >= 2:
        cg = np.concatenate([[0.0], np.cumsum(g[1:])])    # cg[k] = sum_{h<=k} g_h
        chg = np.concatenate([[0.0], np.cumsum(np.arange(1, H + 1) * g[1:])])
        k = np.clip(np.arange(N + 1) - 1, 0, H)           # cross lags run to min(n-1, H)
        out += 2.0 * (n_idx * cg[k] - chg[k])
    return out


def exact_s2(spec: ProcessSpec, n: int) -> float:
    return float(exact_s2_all(spec, n)[n])


def cross_moment(spec: ProcessSpec, a: int) -> float:
    """E[S_a (S_{2a} - S_a)] = sum_{h=1}^{2a-1} min(h, 2a-h) gamma(h)."""
    if a < 1:
        raise ParameterError("a must be >= 1")
    H = _cov_horizon(spec, 2 * a - 1)
    if H < 1:
        return 0.0
    g = autocovariances(spec, H)
    h = np.arange(1, H + 1, dtype=np.float64)
    w = np.minimum(h, np.maximum(2.0 * a - h, 0.0))
    return float(np.dot(w, g[1:]))


# ---------------------------------------------------------------------------
# path dumps
# ---------------------------------------------------------------------------

def path_csv_rows(path: PathSample):
    """Rows (k, x, s) for the `k,x,s` dump; x is empty at k = 0."""
    sums = partial_sums(path).sums
    yield (0, None, 0.0)
    for k in range(1, len(sums)):
        yield (k, float(path.values[k - 1]), float(sums[k]))
