"""Config-driven experiment runner (`invlab` console entry point).

Usage:
    invlab <suite> --config <file.json> [--out <dir>] [--seed <u64>]
                   [--threads <k>] [--format csv|json]

Suites: paths, vseq, series, inequalities, blocking, invariance,
counterexample, all.  Every run writes `<out>/report.json` (bytes are a
pure function of the semantic config: keys are sorted, floats carry 17
significant digits, and out_dir/threads/format are excluded from the
echo), per-table delimited files, and PNG figures.

Exit codes: 0 all checks PASS, 1 any FAIL, 2 any INCONCLUSIVE (no FAIL),
64 usage error (unknown suite, malformed config, missing seed).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, blocking, conditional, figures, inequalities
from . import invariance, processes, renewal, reporting
from .reporting import BOUND_CSV_HEADER, BoundReport, overall_verdict

SUITES = ("paths", "vseq", "series", "inequalities", "blocking",
          "invariance", "counterexample", "all")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class ExperimentConfig:
    """Validated run description; extras stay suite-specific."""

    suite: str
    master_seed: int
    out_dir: str
    fmt: str
    threads: int
    raw: dict

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def require(self, key):
        if key not in self.raw:
            raise UsageError(f"config key {key!r} is required for suite {self.suite!r}")
        return self.raw[key]


def _load_config(args) -> ExperimentConfig:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise UsageError(f"malformed config JSON: {e}")
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    suite = args.suite or raw.get("suite")
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {SUITES}")
    seed = args.seed if args.seed is not None else raw.get("master_seed")
    if seed is None:
        raise UsageError("master_seed is required (no wall-clock seeding)")
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise UsageError("master_seed must be a 64-bit unsigned integer")
    n_list = raw.get("n_list")
    if n_list is not None and list(n_list) != sorted(set(int(v) for v in n_list)):
        raise UsageError("n_list must be strictly increasing")
    out_dir = args.out or raw.get("out_dir") or "."
    fmt = args.format or raw.get("format") or "csv"
    if fmt not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    raw = dict(raw)
    raw["master_seed"] = seed
    raw["suite"] = suite
    return ExperimentConfig(suite=suite, master_seed=seed, out_dir=out_dir,
                            fmt=fmt, threads=max(1, int(args.threads or raw.get("threads", 1))),
                            raw=raw)


def _parse_spec(cfg: ExperimentConfig):
    doc = cfg.get("spec")
    if doc is None:
        raise UsageError("config needs a 'spec' object")
    try:
        return processes.spec_from_json_dict(doc)
    except (KeyError, ValueError) as e:
        raise UsageError(f"malformed spec: {e}")


def _named_decay(cfg_value):
    """Whitelisted decay sequences a_n (strings or small objects)."""
    if isinstance(cfg_value, str):
        if cfg_value == "1/ln(n+2)":
            return lambda n: 1.0 / math.log(n + 2.0)
        raise UsageError(f"unknown decay formula {cfg_value!r}; "
                         "whitelist: '1/ln(n+2)', {'form':'power','beta':b}, "
                         "{'form':'const','value':c}, {'table':[...]}")
    if isinstance(cfg_value, dict):
        if "table" in cfg_value:
            table = [float(v) for v in cfg_value["table"]]
            return lambda n: table[n - 1]
        form = cfg_value.get("form")
        if form == "power":
            beta = float(cfg_value["beta"])
            return lambda n: float(n) ** -beta
        if form == "const":
            c = float(cfg_value["value"])
            return lambda n: c
    raise UsageError(f"cannot interpret decay spec {cfg_value!r}")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _echo_config(cfg: ExperimentConfig) -> dict:
    echo = {k: v for k, v in cfg.raw.items()
            if k not in ("out_dir", "threads", "format")}
    return echo


def _write_table(cfg, name, header, rows):
    rows = list(rows)
    if cfg.fmt == "json":
        path = os.path.join(cfg.out_dir, f"{name}.json")
        doc = [dict(zip(header, row)) for row in rows]
        reporting.write_report_json(path, {"rows": doc})
    else:
        path = os.path.join(cfg.out_dir, f"{name}.csv")
        reporting.write_csv(path, header, rows)
    return os.path.basename(path)


def _subsample(n: int, cap: int = 4096) -> np.ndarray:
    """Deterministic 1..n index subset of size <= cap (always keeps 1 and n)."""
    if n <= cap:
        return np.arange(1, n + 1)
    idx = np.unique(np.geomspace(1, n, cap).astype(np.int64))
    return idx


def emit_plot_data(document: dict, out_dir: str) -> list:
    """Write cdf.csv / quantiles.csv / series.csv from a report document."""
    written = []
    results = document.get("results", {})
    cdf = results.get("cdf_points")
    if cdf:
        p = os.path.join(out_dir, "cdf.csv")
        reporting.write_csv(p, ("x", "empirical", "normal"), cdf)
        written.append("cdf.csv")
    q = results.get("quantiles")
    if q:
        p = os.path.join(out_dir, "quantiles.csv")
        rows = zip(q["n"], q["median"], q["p90"])
        reporting.write_csv(p, ("n", "median", "p90"), rows)
        written.append("quantiles.csv")
    s = results.get("series_points")
    if s:
        p = os.path.join(out_dir, "series.csv")
        reporting.write_csv(p, ("n", "partial_sum", "increment"), s)
        written.append("series.csv")
    return written


def _check(name, ok, **notes):
    entry = {"name": name, "verdict": "PASS" if ok else "FAIL"}
    if notes:
        entry["notes"] = notes
    return entry


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def _suite_paths(cfg: ExperimentConfig) -> dict:
    spec = _parse_spec(cfg)
    n = int(cfg.get("n", 256))
    paths = int(cfg.get("paths", 10000))
    seed = cfg.master_seed
    sample = processes.simulate_path(spec, n, seed)
    files = [_write_table(cfg, "path", ("k", "x", "s"),
                          processes.path_csv_rows(sample))]
    # stationarity probe: mean/variance at k in {1, n/2, n} over many paths
    cols = sorted({1, n // 2, n})
    x_cols = []
    for start, count in __import__("invlab._parallel", fromlist=["chunk_ranges"]).chunk_ranges(paths, n):
        x, _ = processes.simulate_matrix(spec, n, seed, start, count)
        x_cols.append(x[:, np.asarray(cols) - 1])
    xc = np.concatenate(x_cols, axis=0)
    g0 = processes.autocovariances(spec, 0)[0]
    checks = []
    for i, k in enumerate(cols):
        col = xc[:, i]
        se_mean = float(np.std(col, ddof=1) / math.sqrt(paths))
        se_var = float(np.std(col * col, ddof=1) / math.sqrt(paths))
        checks.append(_check(f"stationary_mean_k{k}",
                             abs(float(np.mean(col))) <= 4 * se_mean,
                             mean=float(np.mean(col)), stderr=se_mean))
        checks.append(_check(f"stationary_var_k{k}",
                             abs(float(np.var(col, ddof=1)) - g0) <= 4 * se_var,
                             var=float(np.var(col, ddof=1)), target=g0, stderr=se_var))
    return {"results": {"n": n, "paths": paths, "spec_id": processes.spec_id(spec),
                        "checks": checks},
            "verdicts": [c["verdict"] for c in checks], "files": files}


def _suite_vseq(cfg: ExperimentConfig) -> dict:
    spec = _parse_spec(cfg)
    N = int(cfg.get("n", 64))
    v = conditional.v_exact(spec, N)
    checks = []
    violations = conditional.check_subadditive(v)
    checks.append(_check("v_subadditive", len(violations) == 0,
                         violations=len(violations)))
    mc_doc = None
    if cfg.get("mc_paths"):
        mc = conditional.v_monte_carlo(spec, min(N, int(cfg.get("mc_n", 16))),
                                       int(cfg.get("mc_paths")), cfg.master_seed)
        dev = np.abs(mc.values - v.values[: len(mc.values)])
        ok = bool(np.all(dev <= 3.0 * np.maximum(mc.stderr, 1e-300)))
        checks.append(_check("v_mc_within_3se", ok,
                             max_dev_se=float(np.max(dev / np.maximum(mc.stderr, 1e-300)))))
        mc_doc = {"values": mc.values, "stderr": mc.stderr}
    R = min(conditional.dyadic_level(N) , int(cfg.get("R", 10)))
    prof = conditional.dyadic_profile(v, max(R, 1))
    files = [_write_table(cfg, "vseq", conditional.V_CSV_HEADER, v.csv_rows())]
    figures.vseq_figure(v.values, os.path.join(cfg.out_dir, "vseq.png"))
    files.append("vseq.png")
    results = {"spec_id": processes.spec_id(spec), "N": N,
               "deltas": prof.deltas, "checks": checks}
    if mc_doc is not None:
        results["monte_carlo"] = mc_doc
    return {"results": results, "verdicts": [c["verdict"] for c in checks],
            "files": files}


def _sequence_from_config(cfg: ExperimentConfig, top: int):
    doc = cfg.get("sequence")
    if doc is None:
        spec = _parse_spec(cfg)
        values = conditional.v_exact(spec, top).values
        sup = float(np.max(values)) if not isinstance(spec, processes.RenewalFunctional) else None
        label = processes.spec_id(spec)
        return values, sup, label
    kind = doc.get("kind")
    if kind == "const":
        val = float(doc["value"])
        return np.full(top, val), val, f"const({val})"
    if kind == "power":
        alpha = float(doc["alpha"])
        scale = float(doc.get("scale", 1.0))
        seq = conditional.power_sequence(alpha, top, scale)
        sup = scale if alpha == 0.0 else None
        return seq, sup, f"power(alpha={alpha})"
    if kind == "table":
        vals = np.asarray([float(v) for v in doc["values"]], dtype=np.float64)
        if len(vals) < top:
            raise UsageError(f"sequence table shorter than 2^R = {top}")
        return vals, None, "table"
    raise UsageError(f"unknown sequence kind {kind!r}")


def _suite_series(cfg: ExperimentConfig) -> dict:
    R = int(cfg.get("R", 16))
    p_list = [float(p) for p in cfg.get("p_list", [1.5])]
    top = 2 ** R
    values, v_sup, label = _sequence_from_config(cfg, top)
    doc = cfg.get("sequence") or {}
    reports, triples = [], []
    for p in p_list:
        triple = conditional.series_triple(values, p, R)
        if doc.get("kind") == "power":
            tail = conditional.i_tail_power(float(doc["alpha"]), p, R,
                                            float(doc.get("scale", 1.0)))
        elif v_sup is not None:
            tail = conditional.i_tail_bounded(v_sup, p, R)
        else:
            tail = None
        triple.tail_bound = tail
        triples.append(triple.to_json_dict())
        reports.extend(conditional.check_series_equivalence(triple, i_tail_upper=tail))
    count, ok = conditional.count_above_half_max(values, min(top, 10 ** 4))
    checks = [_check("half_level_count", ok, count=count, N=min(top, 10 ** 4))]
    # J-series partial sums for the plot data
    n_idx = np.arange(1, top + 1, dtype=np.float64)
    inc = values / n_idx ** p_list[0]
    partial = np.cumsum(inc)
    idx = _subsample(top)
    series_points = list(zip(idx, partial[idx - 1], inc[idx - 1]))
    files = [_write_table(cfg, "bounds", BOUND_CSV_HEADER,
                          (r.csv_row() for r in reports))]
    figures.series_figure(partial, inc, os.path.join(cfg.out_dir, "series.png"))
    files.append("series.png")
    verdicts = [r.verdict for r in reports] + [c["verdict"] for c in checks]
    return {"results": {"sequence": label, "R": R, "triples": triples,
                        "reports": [r.to_dict() for r in reports],
                        "checks": checks, "series_points": series_points},
            "verdicts": verdicts, "files": files}


def _suite_inequalities(cfg: ExperimentConfig) -> dict:
    spec = _parse_spec(cfg)
    seed = cfg.master_seed
    paths = int(cfg.get("paths", 10000))
    n_list = [int(v) for v in cfg.get("n_list", [int(cfg.get("n", 64))])]
    lengths = [int(v) for v in cfg.get("pathwise_lengths", n_list)]
    reports = [inequalities.second_moment_bound(spec, n) for n in n_list]
    reports.append(inequalities.adapted_cross_term_bound(spec, max(n_list), 0, 0, "x"))
    reports.extend(inequalities.maximal_moment_suite(spec, n_list, paths, seed,
                                                     threads=cfg.threads))
    sweep = inequalities.telescoping_suite(spec, lengths, paths, seed,
                                           threads=cfg.threads)
    checks = [_check("pathwise_telescoping_zero_violations", sweep["ok"],
                     worst_relative_slack=sweep["worst_relative_slack"],
                     lengths=lengths, paths=paths)]
    ss = inequalities.sigma2_series(spec, int(cfg.get("sigma2_terms", 20)))
    results = {"spec_id": processes.spec_id(spec),
               "reports": [r.to_dict() for r in reports],
               "checks": checks,
               "sigma2_series": {"value": ss["value"], "tail_scale": ss["tail_scale"]}}
    files = [_write_table(cfg, "bounds", BOUND_CSV_HEADER,
                          (r.csv_row() for r in reports))]
    figures.bounds_figure(reports, os.path.join(cfg.out_dir, "bounds.png"))
    files.append("bounds.png")
    verdicts = [r.verdict for r in reports] + [c["verdict"] for c in checks]
    return {"results": results, "verdicts": verdicts, "files": files}


def _suite_blocking(cfg: ExperimentConfig) -> dict:
    spec = _parse_spec(cfg)
    seed = cfg.master_seed
    n = int(cfg.get("n", 2 ** 12))
    paths = int(cfg.get("paths", 200))
    m_list = [int(m) for m in cfg.get("m_list", [4, 16, 64])]
    reports = blocking.approximation_error(spec, m_list, n, paths, seed,
                                           threads=cfg.threads)
    checks = []
    eta_checks = []
    for m in m_list:
        ev = blocking.block_increment_variance(spec, m, n, paths, seed,
                                               threads=cfg.threads)
        ok = abs(ev["eta"] - ev["exact"]) <= 3.0 * ev["stderr"]
        eta_checks.append({"m": m, "eta": ev["eta"], "stderr": ev["stderr"],
                           "exact": ev["exact"]})
        checks.append(_check(f"eta_consistency_m{m}", ok,
                             eta=ev["eta"], exact=ev["exact"], stderr=ev["stderr"]))
    if len(m_list) >= 2:
        checks.append(_check("sup_error_decreasing_in_m",
                             reports[-1].mean_sup_err < reports[0].mean_sup_err,
                             first=reports[0].mean_sup_err,
                             last=reports[-1].mean_sup_err))
    files = [_write_table(cfg, "blocking", blocking.APPROX_CSV_HEADER,
                          blocking.approx_csv_rows(reports))]
    figures.blocking_figure(m_list, [r.mean_sup_err for r in reports],
                            [r.p90_sup_err for r in reports],
                            os.path.join(cfg.out_dir, "blocking.png"))
    files.append("blocking.png")
    results = {"spec_id": processes.spec_id(spec), "n": n, "paths": paths,
               "eta": eta_checks, "checks": checks,
               "approx": [{"m": r.m, "mean_sup_err": r.mean_sup_err,
                           "p90_sup_err": r.p90_sup_err} for r in reports]}
    return {"results": results, "verdicts": [c["verdict"] for c in checks],
            "files": files}


def _suite_invariance(cfg: ExperimentConfig) -> dict:
    spec = _parse_spec(cfg)
    seed = cfg.master_seed
    n = int(cfg.get("n", 2 ** 12))
    paths = int(cfg.get("paths", 4000))
    rep = invariance.ks_normal_check(spec, n, paths, seed, threads=cfg.threads,
                                     keep_sample=True)
    checks = [{"name": "ks_normal" if not rep.degenerate else "degenerate_concentration",
               "verdict": rep.verdict,
               "notes": {"ks": rep.ks_distance, "threshold": rep.ks_threshold,
                         "escape_fraction": rep.escape_fraction,
                         "sigma2": rep.sigma2}}]
    results = {"spec_id": rep.spec_id, "n": n, "paths": paths,
               "sigma2": rep.sigma2, "degenerate": rep.degenerate,
               "ks_distance": rep.ks_distance, "ks_threshold": rep.ks_threshold,
               "escape_fraction": rep.escape_fraction}
    files = []
    if not rep.degenerate:
        points = invariance.cdf_plot_points(rep.sample)
        results["cdf_points"] = points
        files.append(_write_table(cfg, "invariance_cdf",
                                  ("x", "empirical_cdf", "normal_cdf"), points))
        figures.cdf_figure(points, os.path.join(cfg.out_dir, "cdf.png"))
        files.append("cdf.png")
        cov = invariance.covariance_grid_check(
            spec, n, paths, seed, grid=cfg.get("grid", (0.25, 0.5, 0.75, 1.0)),
            threads=cfg.threads)
        checks.append(_check("covariance_grid_4se", cov["ok"],
                             max_abs_error=float(np.max(np.abs(cov["errors"])))))
        results["covariance_errors"] = cov["errors"]
    n_list = [int(v) for v in cfg.get("n_list", [n // 4, n])]
    ui = invariance.uniform_integrability_profile(
        spec, n_list, paths, seed, M_list=cfg.get("M_list", (1.0, 4.0, 16.0, 64.0)),
        threads=cfg.threads)
    checks.append(_check("ui_tails_decreasing_in_M",
                         bool(np.all(np.diff(ui["tails"], axis=1) <= 1e-12)),
                         sup_at_max_M=float(ui["sup_over_n"][-1])))
    results["ui_profile"] = {"n": ui["n"], "M": ui["M"], "tails": ui["tails"]}
    vr = invariance.variance_rate_profile(spec, n_list)
    results["variance_rate"] = {"n": vr["n"], "rate": vr["rate"], "sigma2": vr["sigma2"]}
    return {"results": results, "verdicts": [c["verdict"] for c in checks],
            "files": files, "checks_out": checks}


def _chain_from_config(cfg: ExperimentConfig, support=None):
    doc = cfg.get("chain", "from_a" if cfg.get("a") else "toy")
    if isinstance(doc, dict):
        if "support" in doc and "masses" not in doc:
            return renewal.build_chain([int(u) for u in doc["support"]])
        return renewal.RenewalChainSpec.from_json_dict(doc)
    if doc == "toy":
        return renewal.toy_chain()
    if doc == "cubic":
        return renewal.build_chain("cubic", truncation=int(cfg.get("truncation", 10 ** 5)))
    if doc == "from_a":
        if support is None:
            raise UsageError("chain 'from_a' needs an 'a' decay spec")
        return renewal.build_chain(support)
    raise UsageError(f"cannot interpret chain {doc!r}")


def _suite_counterexample(cfg: ExperimentConfig) -> dict:
    seed = cfg.master_seed
    results: dict = {}
    checks = []
    support = None
    if cfg.get("a") is not None:
        a_fn = _named_decay(cfg.get("a"))
        support = renewal.build_support(a_fn, int(cfg.get("K", 4)))
        results["support"] = {"u": list(support.u), "lambda": support.lam}
    chain = _chain_from_config(cfg, support)
    results["chain"] = chain.to_json_dict()
    results["chain_notes"] = {
        "label": chain.label,
        "e_tau_sq": chain.e_tau_sq,
        "e_tau_sq_diverges": chain.e_tau_sq_diverges,
        "divergence_note": chain.divergence_note,
        "fold_tail_mass": chain.fold_tail_mass,
        "fold_e_tau_bias": chain.fold_e_tau_bias,
    }
    checks.append(_check("mass_normalization",
                         abs(float(np.sum(chain.masses)) - 1.0) <= 1e-12))
    checks.append(_check("pi0_e_tau_identity",
                         abs(chain.pi0 * chain.e_tau - 1.0) <= 1e-12))

    N = int(cfg.get("N", 10 ** 4))
    tables = renewal.renewal_tables(chain, N)
    bound = renewal.check_conditional_norm_bound(chain, N, tables=tables)
    checks.append(_check("conditional_norm_bound", bound["ok"],
                         min_slack=bound["min_slack"], N=N))
    checks.append(_check("renewal_identity_residual",
                         tables.identity_residual <= 1e-10,
                         residual=tables.identity_residual))
    ident = renewal.regeneration_identity_check(
        chain, int(cfg.get("identity_n", 500)), int(cfg.get("identity_paths", 32)), seed)
    checks.append(_check("regeneration_identity", ident == 0.0, max_diff=ident))

    V = bound["V"]
    a_fn = _named_decay(cfg.get("a")) if cfg.get("a") is not None else (lambda n: 1.0)
    a_vals = np.array([a_fn(n) for n in range(1, N + 1)])
    ws = renewal.weighted_v_series(a_vals, V)
    results["weighted_series"] = {
        "partial_final": float(ws["partial"][-1]),
        "decreasing": ws["decreasing"],
        "fitted_exponent": ws["fitted_exponent"],
        "summable_looking": ws["summable_looking"],
        "v_over_sqrt_ratio": ws["v_over_sqrt_ratio"],
        "non_convergence_evidence": ws["non_convergence_evidence"],
    }
    idx = _subsample(N)
    results["series_points"] = list(zip(idx, ws["partial"][idx - 1],
                                        ws["increments"][idx - 1]))

    n_list = [int(v) for v in cfg.get("n_list", [10 ** 2, 10 ** 3, 10 ** 4])]
    sims = renewal.simulate_chain_sums(chain, n_list, int(cfg.get("paths", 400)), seed)
    results["quantiles"] = {"n": sims["n"], "median": sims["median"],
                            "p90": sims["p90"], "flag": sims["flag"]}
    wald = renewal.stopped_sum_identity_check(
        chain, int(cfg.get("wald_n", 100)), int(cfg.get("wald_paths", 4000)), seed)
    reports = [BoundReport(name="stopped_sum_identity", lhs=abs(wald["mean"]),
                           rhs=0.0, lhs_stderr=wald["stderr"], n=wald["n"],
                           paths=wald["paths"], seed=seed,
                           notes={"mean": wald["mean"]})]
    mt = renewal.expected_max_tau(chain, n_list)
    results["expected_max_tau"] = {"n": mt["n"], "e_max": mt["e_max"]}
    checks.append(_check("max_tau_mass_bound", mt["bound_ok"]))

    idx = _subsample(N)
    rows = zip(idx, tables.h[idx], tables.A[idx], tables.I[idx], tables.J[idx],
               V[idx - 1], tables.var_s[idx])
    files = [_write_table(cfg, "tables", ("n", "h", "A", "I", "J", "V", "var_s"), rows)]
    files.append(_write_table(cfg, "quantiles", ("n", "median", "p90"),
                              zip(sims["n"], sims["median"], sims["p90"])))
    figures.quantile_figure(sims["n"], sims["median"], sims["p90"],
                            os.path.join(cfg.out_dir, "quantiles.png"))
    figures.series_figure(ws["partial"], ws["increments"],
                          os.path.join(cfg.out_dir, "series.png"),
                          title="weighted conditional-norm series")
    figures.vseq_figure(V[_subsample(N) - 1], os.path.join(cfg.out_dir, "vseq.png"),
                        title="V_n (renewal chain)")
    files.extend(["quantiles.png", "series.png", "vseq.png"])
    results["reports"] = [r.to_dict() for r in reports]
    results["checks"] = checks
    verdicts = [c["verdict"] for c in checks] + [r.verdict for r in reports]
    return {"results": results, "verdicts": verdicts, "files": files}


def _suite_all(cfg: ExperimentConfig) -> dict:
    merged = {"results": {}, "verdicts": [], "files": []}
    for name in ("paths", "vseq", "series", "inequalities", "blocking", "invariance"):
        sub = dict(cfg.raw)
        sub.pop("sequence", None)
        sub_cfg = ExperimentConfig(suite=name, master_seed=cfg.master_seed,
                                   out_dir=cfg.out_dir, fmt=cfg.fmt,
                                   threads=cfg.threads, raw=sub)
        out = _SUITE_FN[name](sub_cfg)
        merged["results"][name] = out["results"]
        merged["verdicts"].extend(out["verdicts"])
        merged["files"].extend(out["files"])
    return merged


_SUITE_FN = {
    "paths": _suite_paths,
    "vseq": _suite_vseq,
    "series": _suite_series,
    "inequalities": _suite_inequalities,
    "blocking": _suite_blocking,
    "invariance": _suite_invariance,
    "counterexample": _suite_counterexample,
    "all": _suite_all,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def run(cfg: ExperimentConfig) -> tuple:
    """Execute a validated config; returns (document, exit_code)."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    out = _SUITE_FN[cfg.suite](cfg)
    overall = overall_verdict(out["verdicts"])
    document = {
        "tool": {"name": "invlab", "version": __version__},
        "suite": cfg.suite,
        "config": _echo_config(cfg),
        "results": out["results"],
        "overall": overall,
    }
    plot_files = emit_plot_data(document, cfg.out_dir)
    reporting.write_report_json(os.path.join(cfg.out_dir, "report.json"), document)
    code = {"PASS": 0, "FAIL": 1, "INCONCLUSIVE": 2}[overall]
    return document, code


def main(argv=None) -> int:
    parser = _Parser(prog="invlab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("suite", nargs="?", help=f"one of {SUITES}")
    parser.add_argument("--config", required=False)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    try:
        args = parser.parse_args(argv)
        if not args.config:
            raise UsageError("--config is required")
        cfg = _load_config(args)
        _, code = run(cfg)
        return code
    except UsageError as e:
        print(f"invlab: error: {e}", file=sys.stderr)
        return 64


if __name__ == "__main__":
    sys.exit(main())
