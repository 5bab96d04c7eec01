"""Experiment registry: default configs, runners and status rules."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import calculus, correlations, ising, regularity, spectral, transfer
from .core import DepthFunction, d_omega, make_alphabet, make_potential, tabulated
from .errors import InequalityViolationError, InvalidArgumentError

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"

TOP_KEYS = {"experiment", "label", "seed", "out", "alphabet", "potential", "params", "criteria"}
ALPHABET_KEYS = {"kind", "m", "nodes", "weights"}
POTENTIAL_KEYS = {"family", "c", "beta", "alpha", "d", "no_decay_claims", "table", "depth"}
CRITERION_KEYS = {"target", "tol", "max", "min"}

SPINS = {"kind": "finite-atomic", "m": 2}


class ConfigError(ValueError):
    """Invalid experiment configuration (usage error)."""


@dataclass
class Outcome:
    metrics: dict
    tables: dict = field(default_factory=dict)  # file name -> (header, rows)
    documents: dict = field(default_factory=dict)  # file name -> json object


@dataclass(frozen=True)
class Experiment:
    name: str
    criterion: str
    summary: str
    params: dict
    metrics: tuple
    tables: dict
    runner: Callable
    alphabet: dict = field(default_factory=lambda: dict(SPINS))
    potential: dict | None = None
    criteria: dict = field(default_factory=dict)

    def default_config(self) -> dict:
        cfg = {"experiment": self.name, "seed": 0, "params": copy.deepcopy(self.params)}
        cfg["alphabet"] = dict(self.alphabet)
        if self.potential is not None:
            cfg["potential"] = dict(self.potential)
        cfg["criteria"] = copy.deepcopy(self.criteria)
        return cfg


# -- builders ------------------------------------------------------------------


def build_alphabet(spec: dict):
    return make_alphabet(spec.get("kind", "finite-atomic"), int(spec.get("m", 2)), spec.get("nodes"), spec.get("weights"))


def build_potential(spec: dict, alphabet):
    spec = dict(spec)
    family = spec.pop("family")
    if family == "tabulated":
        table = np.asarray(spec["table"], dtype=float)
        depth = int(spec.get("depth", round(math.log(table.size, alphabet.m))))
        return tabulated(alphabet, DepthFunction(alphabet.m, depth, table))
    spec.pop("depth", None)
    return make_potential(family, alphabet, **spec)


def _flag(b) -> float:
    return 1.0 if b else 0.0


def _k(params) -> int | None:
    return int(params["k"]) or None


def _setup(cfg):
    A = build_alphabet(cfg["alphabet"])
    return A, build_potential(cfg["potential"], A)


# -- runners ---------------------------------------------------------------------


def run_rpf(cfg, seed):
    A, f = _setup(cfg)
    p = cfg["params"]
    rpf = transfer.rpf_solve(f, _k(p), tol=p["tol"], itmax=int(p["itmax"]))
    g = transfer.normalize_g0(f, rpf)
    hist = transfer.flatness_history(g, DepthFunction.spin(A), int(p["n_flat"]))
    ratio = hist[-1] / hist[-2] if hist[-2] > 1e-300 else 0.0
    rows = [(i, h, nu) for i, (h, nu) in enumerate(zip(rpf.h.table, rpf.nu))]
    metrics = {
        "lambda": rpf.lam,
        "pressure": rpf.pressure,
        "residual_h": rpf.residual_h,
        "residual_nu": rpf.residual_nu,
        "iterations": rpf.iterations,
        "g0_certificate": g.certificate,
        "flatness_ratio": ratio,
    }
    flat = [(n, v) for n, v in enumerate(hist)]
    return Outcome(metrics, {"eigen.csv": (("word", "h", "nu"), rows), "flatness.csv": (("n", "flatness"), flat)})


def run_pressure(cfg, seed):
    _, f = _setup(cfg)
    p = cfg["params"]
    rep = transfer.pressure(f, _k(p), n_check=int(p["n_check"]), tol=p["tol"])
    metrics = {"pressure": rep.pressure, "max_deviation": rep.max_deviation, "points": len(rep.points)}
    return Outcome(metrics, {"pressure.csv": (("word", "log_iterate", "deviation"), rep.points)})


def run_spectrum(cfg, seed):
    _, f = _setup(cfg)
    p = cfg["params"]
    rpf = transfer.rpf_solve(f, _k(p))
    rep = spectral.spectrum(rpf.matrix, rpf)
    rows = [(i, z.real, z.imag, abs(z)) for i, z in enumerate(rep.eigenvalues)]
    metrics = {
        "lambda1": rep.lambda1,
        "mod_lambda2": rep.mod_lambda2,
        "tau": rep.tau,
        "gap": rep.gap,
        "xcheck": abs(rep.lambda1 - rpf.lam),
    }
    return Outcome(metrics, {"eigenvalues.csv": (("index", "re", "im", "modulus"), rows)})


def run_projector(cfg, seed):
    _, f = _setup(cfg)
    p = cfg["params"]
    rpf = transfer.rpf_solve(f, _k(p))
    M = rpf.matrix.dense
    rep = spectral.spectrum(M, rpf)
    proj = spectral.dominant_contour(M, rep, int(p["N"]))
    rng = np.random.default_rng(seed)
    h = rpf.h.table
    proj_err = 0.0
    for _ in range(int(p["trials"])):
        phi = rng.standard_normal(M.shape[0])
        err = np.max(np.abs(proj.pi @ phi - (rpf.nu @ phi) * h)) / np.max(np.abs(phi))
        proj_err = max(proj_err, float(err))
    quotient = spectral.eigenvalue_quotient(M, proj, retries=5, seed=seed)
    radii = spectral.spectral_radius_seq(M, int(p["n_radius"]))
    probe = spectral.rank_stability_probe(M, proj, p["rank_eps_fraction"] * rep.gap / 4, seed=seed, report=rep)
    metrics = {
        "idempotency": proj.diag["idempotency"],
        "commutation": proj.diag["commutation"],
        "trace_error": abs(proj.trace - 1.0),
        "clearance": proj.diag["clearance"],
        "projection_error": proj_err,
        "quotient_error": abs(quotient - rep.lambda1),
        "radius_error": abs(radii[-1] - rep.lambda1),
        "rank_stable": _flag(probe.stable),
    }
    rows = [(n, r) for n, r in enumerate(radii, start=1)]
    return Outcome(metrics, {"spectral_radius.csv": (("n", "norm_root"), rows)})


def run_analyticity(cfg, seed):
    A, f = _setup(cfg)
    p = cfg["params"]
    rng = np.random.default_rng(seed)
    m = A.m
    t_grid = tuple(p["t_grid"])
    rows, spreads, majorant_ok, slack = [], [], True, math.inf
    for case in range(int(p["cases"])):
        fr = tabulated(A, DepthFunction(m, 2, p["scale"] * rng.standard_normal(m**2)))
        h = DepthFunction(m, 2, p["scale"] * rng.standard_normal(m**2))
        phi = DepthFunction(m, 1, rng.standard_normal(m))
        tab = calculus.taylor_remainder(fr, h, phi, 1, t_grid)
        spreads.append(tab.spread())
        majorant_ok &= tab.majorant_ok
        for t, r, q, mj in zip(tab.steps, tab.remainders, tab.ratios, tab.majorants):
            rows.append((case, t, r, q, mj))
        for J in range(1, int(p["J_max"]) + 1):
            lhs, maj = calculus.exact_expansion_check(fr, h, phi, J)
            slack = min(slack, maj - lhs)
    x1x2 = make_potential("nn_ising", A, beta=1.0)
    smooth = calculus.pressure_smoothness(f, x1x2)
    metrics = {
        "taylor_spread_max": max(spreads),
        "majorant_ok": _flag(majorant_ok),
        "expansion_slack_min": slack,
        "first_derivative": smooth.first_limit,
        "second_derivative": smooth.second_limit,
    }
    return Outcome(metrics, {"taylor.csv": (("case", "t", "remainder", "ratio", "majorant"), rows)})


def _bound_violations(report) -> int:
    return sum(1 for r in report.rows if math.isfinite(r.bound) and r.observed > r.bound + 1e-12)


def run_regularity(cfg, seed):
    A, f = _setup(cfg)
    p = cfg["params"]
    sampler = regularity.PairSampler(int(p["pairs"]), seed)
    strong = regularity.strong_walters_audit(f, int(p["n_max"]), p["eta"], sampler)
    weak = regularity.weak_walters_audit(f, int(p["n_max"]), sampler, int(p["prefixes"]), seed + 1)
    af = f if p["algebra_f"] == "potential" else make_potential(p["algebra_f"], A)
    try:
        algebra = regularity.algebra_pointwise_check(af, make_potential("first_coordinate", A), samples=int(p["algebra_samples"]), seed=seed)
        algebra_violations, algebra_slack = 0, algebra.min_slack
    except InequalityViolationError as exc:
        _, _, _, lhs, rhs = exc.witness
        algebra_violations, algebra_slack = 1, rhs - lhs

    B = make_alphabet("interval-uniform", int(p["cx_m"]))
    fc = make_potential("first_coordinate", B)
    x, y = regularity.constant_pair(B, 0, 1)
    ratios = regularity.growth_ratios(fc, x, y, int(p["n_max"]))
    cx_weak = regularity.weak_walters_audit(fc, int(p["n_max"]), pairs=[(x, y)], prefix_count=int(p["prefixes"]), prefix_seed=seed + 1)
    cx_strong = regularity.strong_walters_audit(fc, int(p["n_max"]), [d_omega(x, y)], sampler)

    grid = range(int(p["p_min"]), int(p["p_max"]) + 1)
    fit = regularity.variation_fit(p["var_alpha"], int(p["var_n"]), grid)
    sup_vals = [regularity.ising_variation_sup(p["var_alpha"], q) for q in grid]
    sup_slope = float(np.polyfit(np.log(list(grid)), np.log(sup_vals), 1)[0])

    metrics = {
        "strong_max": strong.max_observed(),
        "strong_violated": _flag(strong.verdict == regularity.VIOLATED),
        "strong_bound_violations": _bound_violations(strong),
        "weak_max": weak.max_observed(),
        "weak_bound_violations": _bound_violations(weak),
        "holder": regularity.holder_estimate(f, p["gamma"], sampler),
        "algebra_violations": algebra_violations,
        "algebra_min_slack": algebra_slack,
        "counterexample_ratio_error": float(np.max(np.abs(ratios - 1.0))),
        "counterexample_weak_max": cx_weak.max_observed(),
        "counterexample_strong_violated": _flag(cx_strong.verdict == regularity.VIOLATED),
        "variation_slope": fit.slope,
        "variation_slope_sup_n": sup_slope,
    }
    header = regularity.CSV_COLUMNS
    tables = {
        "strong.csv": (header, strong.csv_rows()),
        "weak.csv": (header, weak.csv_rows()),
        "counterexample.csv": (("n", "ratio"), list(enumerate(ratios, start=1))),
        "variation.csv": (("p", "variation", "variation_sup_n"), list(zip(fit.p, fit.values, sup_vals))),
    }
    return Outcome(metrics, tables)


def run_correlations(cfg, seed):
    A, f = _setup(cfg)
    p = cfg["params"]
    rpf = transfer.rpf_solve(f, _k(p))
    spin = DepthFunction.spin(A)
    series = correlations.correlation_series(rpf, spin, spin, int(p["n_max"]))
    closed = math.nan
    if f.family == "nn_ising" and np.allclose(np.abs(A.nodes), 1.0):
        tn = math.tanh(f.params["beta"]) ** series.n
        closed = float(np.max(np.abs(series.values - tn)))
    enum_err = max(abs(correlations.enumeration_correlation(f, spin, spin, n, rpf.depth) - series[n]) for n in range(int(p["enum_n"]) + 1))
    rng = np.random.default_rng(seed)
    pull = 0.0
    for n in range(int(p["pullout_n"]) + 1):
        phi1 = DepthFunction(A.m, 1, rng.standard_normal(A.m))
        phi2 = DepthFunction(A.m, 1, rng.standard_normal(A.m))
        pull = max(pull, correlations.pullout_check(f, phi1, phi2, rpf.h, n))
    fit = correlations.decay_fit(series, (int(p["fit_lo"]), int(p["fit_hi"])))
    rep = spectral.spectrum(rpf.matrix, rpf)
    cons = correlations.gap_decay_consistency(rpf, rep, series, p["ttilde_margin"])
    metrics = {
        "closed_form_error": closed,
        "enumeration_error": enum_err,
        "pullout_residual": pull,
        "tau": rep.tau,
        "fit_rate": fit.rate,
        "fit_rate_error": abs(fit.rate - rep.tau),
        "gap_consistent": _flag(fit.verdict == correlations.GAP_CONSISTENT),
        "consistency_pass": _flag(cons.passed),
        "C1": cons.C1,
    }
    rows = correlations.residual_columns(series, fit)
    return Outcome(
        metrics,
        {"series.csv": (("n", "C", "abs_C", "resid_exp", "resid_poly"), rows)},
        {"fit.json": {**fit.as_dict(), "ttilde": cons.ttilde, "C1": cons.C1}},
    )


def run_ising_gks(cfg, seed):
    p = cfg["params"]
    alpha = p["alpha"]
    summary, bad = [], []
    for w in p["windows"]:
        label = f"{w['lattice']}[{w['lo']},{w['hi']}]"
        G = ising.gibbs_exact(ising.make_couplings("full", (w["lo"], w["hi"]), w["lattice"], alpha))
        for name, rep in (
            ("gks1", ising.gks1_audit(G, int(p["max_size"]), int(p["random_count"]), seed)),
            ("gks2", ising.gks2_audit(G, int(p["random_count"]), seed)),
        ):
            summary.append((label, name, rep.checked, rep.min_value, len(rep.violations)))
            bad += [(label, name, s, v) for s, v in rep.csv_rows()]

    lo, hi = p["deriv_window"]
    c = ising.make_couplings("full", (lo, hi), "N", alpha)
    rng = np.random.default_rng(seed)
    sites = np.arange(lo, hi + 1)
    deriv, ratios, mono = [], [], math.inf
    delta = p["delta"]
    for case in range(int(p["deriv_cases"])):
        i, j = (int(s) for s in sorted(rng.choice(sites, 2, replace=False)))
        A = tuple(int(s) for s in sites[rng.integers(0, 2, sites.size) == 1]) or (int(sites[0]),)
        r1 = ising.coupling_derivative_check(c, (i, j), A, delta).residual
        r2 = ising.coupling_derivative_check(c, (i, j), A, delta / 2).residual
        ratio = r1 / r2 if r2 > 0 else math.inf
        ratios.append(ratio)
        probe = ising.monotonicity_probe(c, (i, j), A, p["bump"])
        mono = min(mono, probe.bumped - probe.base)
        deriv.append((case, i, j, " ".join(map(str, A)), r1, r2, ratio))

    mlo, mhi = p["mono_window"]
    cmp_ = ising.compare_couplings(
        ising.make_couplings("restricted_T", (mlo, mhi), "Z", alpha), ising.make_couplings("full", (mlo, mhi), "Z", alpha), (1,)
    )
    metrics = {
        "gks1_violations": sum(r[4] for r in summary if r[1] == "gks1"),
        "gks2_violations": sum(r[4] for r in summary if r[1] == "gks2"),
        "gks1_min": min(r[3] for r in summary if r[1] == "gks1"),
        "gks2_min": min(r[3] for r in summary if r[1] == "gks2"),
        "derivative_ratio_min": min(ratios),
        "derivative_ratio_max": max(ratios),
        "bond_monotonicity_min": mono,
        "magnetization_T": cmp_.base,
        "magnetization_J": cmp_.bumped,
        "magnetization_gap": cmp_.bumped - cmp_.base,
    }
    tables = {
        "gks_summary.csv": (("window", "audit", "checked", "min_value", "violations"), summary),
        "gks_violations.csv": (("window", "audit", "subset", "value"), bad),
        "derivative.csv": (("case", "i", "j", "subset", "residual", "residual_half", "ratio"), deriv),
    }
    return Outcome(metrics, tables)


def run_ising_decay(cfg, seed):
    p = cfg["params"]
    n_list = range(1, int(p["n_max"]) + 1)
    tp = ising.two_point_series(p["alpha"], n_list, tuple(p["window"]))
    bound = correlations.CorrelationSeries([r[0] for r in tp.rows], [r[2] for r in tp.rows])
    fit = correlations.decay_fit(bound, (int(p["fit_lo"]), int(p["fit_hi"])))
    metrics = {
        "min_margin": tp.min_margin,
        "control_error": tp.control_error,
        "bound_exponent": fit.exponent,
        "bound_no_exp_evidence": _flag(fit.verdict == correlations.NO_EXP_EVIDENCE),
    }
    return Outcome(
        metrics,
        {
            "two_point.csv": (("n", "value", "tanh_bound", "margin", "taylor"), tp.rows),
            "control.csv": (("n", "value", "tanh_bound"), tp.control),
        },
        {"measure.json": tp.meta, "bound_fit.json": fit.as_dict()},
    )


def run_marginal(cfg, seed):
    p = cfg["params"]
    rows = []
    for n in range(1, int(p["n_max"]) + 1):
        r = ising.marginal_equivalence(n, p["alpha"], seed=seed)
        rows.append((n, r.discrepancy, r.logZ_gap, r.compared))
    metrics = {"max_discrepancy": max(r[1] for r in rows), "max_logZ_gap": max(r[2] for r in rows)}
    return Outcome(metrics, {"marginal.csv": (("n", "discrepancy", "logZ_gap", "compared"), rows)})


# -- registry ------------------------------------------------------------------------

COSH1 = math.cosh(1.0)
TANH1 = math.tanh(1.0)
NN1 = {"family": "nn_ising", "beta": 1.0}

EXPERIMENTS = {
    e.name: e
    for e in (
        Experiment(
            "rpf",
            "rpf-closed-form",
            "Perron-Frobenius eigentriple by power iteration, G0 normalisation and the flatness ratio of the normalised operator.",
            {"k": 0, "tol": 1e-13, "itmax": 100000, "n_flat": 20},
            ("lambda", "pressure", "residual_h", "residual_nu", "iterations", "g0_certificate", "flatness_ratio"),
            {"eigen.csv": ("word", "h", "nu"), "flatness.csv": ("n", "flatness")},
            run_rpf,
            potential=NN1,
            criteria={
                "lambda": {"target": COSH1, "tol": 1e-10},
                "pressure": {"target": math.log(COSH1), "tol": 1e-10},
                "g0_certificate": {"max": 1e-10},
                "flatness_ratio": {"target": TANH1, "tol": 1e-4},
            },
        ),
        Experiment(
            "pressure",
            "pressure-limit",
            "Pressure log(lambda) against (1/n) log L^n 1 at several grid points.",
            {"k": 0, "n_check": 200, "tol": 1e-13},
            ("pressure", "max_deviation", "points"),
            {"pressure.csv": ("word", "log_iterate", "deviation")},
            run_pressure,
            potential=NN1,
            criteria={"max_deviation": {"max": 1e-6}, "points": {"min": 3}},
        ),
        Experiment(
            "spectrum",
            "spectral-gap",
            "Dense spectrum of the transfer matrix, cross-checked against power iteration.",
            {"k": 0},
            ("lambda1", "mod_lambda2", "tau", "gap", "xcheck"),
            {"eigenvalues.csv": ("index", "re", "im", "modulus")},
            run_spectrum,
            potential=NN1,
            criteria={"tau": {"target": TANH1, "tol": 1e-10}},
        ),
        Experiment(
            "projector",
            "spectral-projector",
            "Contour-integral Riesz projector on the dominant eigenvalue with diagnostics, eigenvalue quotient, norm-root sequence and rank probe.",
            {"k": 0, "N": 64, "trials": 20, "n_radius": 256, "rank_eps_fraction": 0.5},
            ("idempotency", "commutation", "trace_error", "clearance", "projection_error", "quotient_error", "radius_error", "rank_stable"),
            {"spectral_radius.csv": ("n", "norm_root")},
            run_projector,
            potential=NN1,
            criteria={
                "idempotency": {"max": 1e-8},
                "commutation": {"max": 1e-8},
                "trace_error": {"max": 1e-8},
                "projection_error": {"max": 1e-8},
                "quotient_error": {"max": 1e-8},
                "radius_error": {"max": 1e-2},
                "rank_stable": {"min": 1},
            },
        ),
        Experiment(
            "analyticity",
            "analyticity",
            "Taylor remainders of t -> L_{f+th} on random tables, exact expansion majorants, and pressure divided differences along h = x1 x2.",
            {"cases": 10, "scale": 0.5, "J_max": 6, "t_grid": list(calculus.DEFAULT_T_GRID)},
            ("taylor_spread_max", "majorant_ok", "expansion_slack_min", "first_derivative", "second_derivative"),
            {"taylor.csv": ("case", "t", "remainder", "ratio", "majorant")},
            run_analyticity,
            potential={"family": "constant", "c": 0.0},
            criteria={
                "taylor_spread_max": {"max": 0.1},
                "majorant_ok": {"min": 1},
                "expansion_slack_min": {"min": -1e-12},
                "second_derivative": {"target": 1.0, "tol": 1e-4},
            },
        ),
        Experiment(
            "regularity",
            "variation-asymptotics",
            "Strong and weak Walters audits with exact majorants, the first-coordinate counterexample, the pointwise algebra inequality and long-range variation asymptotics.",
            {
                "n_max": 32,
                "eta": [0.25, 0.5, 1.0],
                "pairs": 200,
                "prefixes": 16,
                "gamma": 1.0,
                "algebra_samples": 500,
                "algebra_f": "nn_ising",
                "cx_m": 8,
                "var_alpha": 3.0,
                "var_n": 64,
                "p_min": 8,
                "p_max": 128,
            },
            (
                "strong_max",
                "strong_violated",
                "strong_bound_violations",
                "weak_max",
                "weak_bound_violations",
                "holder",
                "algebra_violations",
                "algebra_min_slack",
                "counterexample_ratio_error",
                "counterexample_weak_max",
                "counterexample_strong_violated",
                "variation_slope",
                "variation_slope_sup_n",
            ),
            {
                "strong.csv": regularity.CSV_COLUMNS,
                "weak.csv": regularity.CSV_COLUMNS,
                "counterexample.csv": ("n", "ratio"),
                "variation.csv": ("p", "variation", "variation_sup_n"),
            },
            run_regularity,
            potential={"family": "long_range_ising", "alpha": 3.0, "d": 8},
            criteria={
                "strong_bound_violations": {"max": 0},
                "weak_bound_violations": {"max": 0},
                "algebra_violations": {"max": 0},
                "counterexample_ratio_error": {"max": 1e-12},
                "counterexample_weak_max": {"max": 0.0},
                "counterexample_strong_violated": {"min": 1},
                "variation_slope": {"target": -1.0, "tol": 0.15},
            },
        ),
        Experiment(
            "correlations",
            "correlation-decay",
            "Correlation series via the operator, enumeration oracle, pull-out identity, decay fit and gap consistency.",
            {"k": 0, "n_max": 30, "enum_n": 10, "pullout_n": 5, "fit_lo": 1, "fit_hi": 30, "ttilde_margin": 0.02},
            ("closed_form_error", "enumeration_error", "pullout_residual", "tau", "fit_rate", "fit_rate_error", "gap_consistent", "consistency_pass", "C1"),
            {"series.csv": ("n", "C", "abs_C", "resid_exp", "resid_poly")},
            run_correlations,
            potential=NN1,
            criteria={
                "closed_form_error": {"max": 1e-10},
                "enumeration_error": {"max": 1e-11},
                "pullout_residual": {"max": 1e-13},
                "fit_rate": {"target": TANH1, "tol": 1e-4},
                "gap_consistent": {"min": 1},
                "consistency_pass": {"min": 1},
            },
        ),
        Experiment(
            "ising-gks",
            "gks-audits",
            "GKS-I/II audits on exact finite-volume measures, the coupling-derivative identity and coupling monotonicity.",
            {
                "alpha": 3.0,
                "windows": [{"lattice": "N", "lo": 1, "hi": 12}, {"lattice": "Z", "lo": -8, "hi": 8}],
                "max_size": 3,
                "random_count": 500,
                "deriv_window": [1, 8],
                "deriv_cases": 20,
                "delta": 1e-3,
                "bump": 0.1,
                "mono_window": [-6, 6],
            },
            (
                "gks1_violations",
                "gks2_violations",
                "gks1_min",
                "gks2_min",
                "derivative_ratio_min",
                "derivative_ratio_max",
                "bond_monotonicity_min",
                "magnetization_T",
                "magnetization_J",
                "magnetization_gap",
            ),
            {
                "gks_summary.csv": ("window", "audit", "checked", "min_value", "violations"),
                "gks_violations.csv": ("window", "audit", "subset", "value"),
                "derivative.csv": ("case", "i", "j", "subset", "residual", "residual_half", "ratio"),
            },
            run_ising_gks,
            alphabet={},
            criteria={
                "gks1_violations": {"max": 0},
                "gks2_violations": {"max": 0},
                "derivative_ratio_min": {"min": 3.5},
                "derivative_ratio_max": {"max": 4.5},
                "bond_monotonicity_min": {"min": -1e-12},
                "magnetization_gap": {"min": -1e-12},
            },
        ),
        Experiment(
            "ising-decay",
            "tanh-bound",
            "Two-point function of the long-range model with +1 boundary against tanh(n^-alpha), single-bond control and decay classification of the bound.",
            {"alpha": 3.0, "window": [1, 12], "n_max": 6, "fit_lo": 1, "fit_hi": 6},
            ("min_margin", "control_error", "bound_exponent", "bound_no_exp_evidence"),
            {"two_point.csv": ("n", "value", "tanh_bound", "margin", "taylor"), "control.csv": ("n", "value", "tanh_bound")},
            run_ising_decay,
            alphabet={},
            criteria={"min_margin": {"min": -1e-12}, "control_error": {"max": 1e-12}},
        ),
        Experiment(
            "marginal-check",
            "marginal-equivalence",
            "Z-window measure with couplings restricted to N against the N-window measure from an independent enumeration.",
            {"alpha": 3.0, "n_max": 6},
            ("max_discrepancy", "max_logZ_gap"),
            {"marginal.csv": ("n", "discrepancy", "logZ_gap", "compared")},
            run_marginal,
            alphabet={},
            criteria={"max_discrepancy": {"max": 1e-12}},
        ),
    )
}


# -- validation and status --------------------------------------------------------------


def _check_keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigError(f"{where} must be a table")
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def resolve(raw: dict) -> dict:
    """Validate a raw config and fill defaults; raises ConfigError."""
    _check_keys(raw, TOP_KEYS, "config")
    name = raw.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    exp = EXPERIMENTS[name]
    cfg = exp.default_config()
    if "alphabet" in raw:
        if not exp.alphabet:
            raise ConfigError(f"experiment {name!r} takes no alphabet")
        _check_keys(raw["alphabet"], ALPHABET_KEYS, "alphabet")
        cfg["alphabet"] = dict(raw["alphabet"])
    if "potential" in raw:
        if exp.potential is None:
            raise ConfigError(f"experiment {name!r} takes no potential")
        _check_keys(raw["potential"], POTENTIAL_KEYS, "potential")
        if "family" not in raw["potential"]:
            raise ConfigError("potential needs a family")
        cfg["potential"] = dict(raw["potential"])
    if "params" in raw:
        _check_keys(raw["params"], exp.params, "params")
        cfg["params"].update(raw["params"])
    if "criteria" in raw:
        _check_keys(raw["criteria"], exp.metrics, "criteria")
        for metric, rule in raw["criteria"].items():
            _check_keys(rule, CRITERION_KEYS, f"criteria.{metric}")
            if not ({"max", "min"} & set(rule) or {"target", "tol"} <= set(rule)):
                raise ConfigError(f"criteria.{metric} needs max, min or target+tol")
        cfg["criteria"] = copy.deepcopy(raw["criteria"])
    for key in ("seed", "label", "out"):
        if key in raw:
            cfg[key] = raw[key]
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    try:
        build_alphabet(cfg["alphabet"]) if cfg["alphabet"] else None
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def judge(metrics: dict, criteria: dict) -> tuple[str, list]:
    """Status from declared thresholds only: missing or non-finite metrics are inconclusive."""
    results, status = [], PASS
    for metric in sorted(criteria):
        rule = criteria[metric]
        value = metrics.get(metric, math.nan)
        if value is None or not math.isfinite(value):
            ok = None
        else:
            ok = True
            if "max" in rule:
                ok &= value <= rule["max"]
            if "min" in rule:
                ok &= value >= rule["min"]
            if "target" in rule:
                ok &= abs(value - rule["target"]) <= rule["tol"]
        results.append({"metric": metric, "value": value, "rule": rule, "ok": ok})
        if ok is False:
            status = FAIL
        elif ok is None and status == PASS:
            status = INCONCLUSIVE
    return status, results
