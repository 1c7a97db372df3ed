"""Monte-Carlo harness: MISE, rate-slope regression, adaptivity comparisons.

A sweep is described by one ExperimentConfig (parsed from a JSON document
with strict key checking; every violation is reported, not just the first).
Each (n, rho) cell runs R replicates of sample -> fit -> MISE with a
generator derived from (seed, cell index, replicate), so any subset of the
sweep can be reproduced in isolation and the CSV is byte-identical across
runs regardless of execution order.

MISE has two routes: exact Parseval arithmetic for trigonometric truths
(the distance between coefficient grids, padded to a common cut-off, covers
both the stochastic error and the truncation bias), and midpoint-lattice
quadrature when the truth has no usable coefficients (bump packings). Both
routes agree within 1e-6 whenever both apply, which is one of the checks
in the test suite.

Rate slopes are fit by ordinary least squares of log(mean MISE per cell)
against log n (sampling regime) or log(n sqrt(rho)) (privacy regime). The
mean is taken before the log: log-then-mean would bias the exponent
estimate at small R.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import adaptive, densities, fourier, privacy
from .adaptive import PenaltyConfig
from .densities import PackingDensity, TrigDensity, rejection_sample
from .estimator import (
    ProjectionEstimate,
    fit,
    optimal_cutoff_adaptive_form,
    optimal_cutoff_thm,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "SlopeFit",
    "RateResult",
    "AdaptivityResult",
    "mise",
    "fit_slope",
    "run_rate_experiment",
    "run_adaptivity_experiment",
    "chi2_tail_check",
    "write_csv",
    "CSV_HEADER",
]

_MODES = ("oracle", "lepskii", "penalized-bias")
_CUTOFF_FORMS = ("adaptive", "thm")
_CONSTANT_KEYS = {"mode", "C", "a", "eps", "L"}

CSV_HEADER = "n,rho,beta_nominal,d,mode,replicate,selected_M,rho_spent,mise,wall_ms"


@dataclass
class ExperimentConfig:
    """One sweep: a truth density, lists of n and rho, and an estimator mode.

    deterministic_timings=True (the default) writes wall_ms = 0 in every
    record so that identical configs give byte-identical CSV files; set it
    to False to record real wall-clock milliseconds at the price of
    nondeterministic bytes in that one column.
    """

    density: dict
    ns: list[int]
    rhos: list[float]
    mode: str
    replicates: int
    seed: int
    d: int
    beta: float | None = None
    cutoff_form: str = "adaptive"
    constants: dict = field(default_factory=dict)
    grid: list[int] | None = None
    deterministic_timings: bool = True
    time_limit_s: float | None = None

    _KEYS = {
        "density",
        "n",
        "rho",
        "mode",
        "replicates",
        "seed",
        "d",
        "beta",
        "cutoff_form",
        "constants",
        "grid",
        "deterministic_timings",
        "time_limit_s",
    }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        """Parse and validate a config document, reporting every violation."""
        problems = []
        if not isinstance(doc, dict):
            raise ValueError("config must be a JSON object")
        for key in doc:
            if key not in cls._KEYS:
                problems.append(f"unknown key {key!r}")
        for key in ("density", "n", "rho", "mode", "replicates", "seed", "d"):
            if key not in doc:
                problems.append(f"missing required key {key!r}")

        def as_list(value):
            return value if isinstance(value, list) else [value]

        ns = [int(v) for v in as_list(doc.get("n", []))]
        rhos = [float(v) for v in as_list(doc.get("rho", []))]
        if not ns and "n" in doc:
            problems.append("'n' must be a number or nonempty list")
        if any(v < 3 for v in ns):
            problems.append("every n must be >= 3")
        if not rhos and "rho" in doc:
            problems.append("'rho' must be a number or nonempty list")
        if any(not v > 0 for v in rhos):
            problems.append("every rho must be > 0")
        mode = doc.get("mode", "oracle")
        if mode not in _MODES:
            problems.append(f"mode must be one of {_MODES}, got {mode!r}")
        replicates = int(doc.get("replicates", 1))
        if replicates < 1:
            problems.append("replicates must be >= 1")
        beta = doc.get("beta")
        if mode == "oracle" and beta is None:
            problems.append("oracle mode requires 'beta'")
        if beta is not None and not float(beta) > 0:
            problems.append("beta must be > 0")
        cutoff_form = doc.get("cutoff_form", "adaptive")
        if cutoff_form not in _CUTOFF_FORMS:
            problems.append(f"cutoff_form must be one of {_CUTOFF_FORMS}")
        constants = doc.get("constants", {})
        if not isinstance(constants, dict):
            problems.append("'constants' must be an object")
        else:
            for key in constants:
                if key not in _CONSTANT_KEYS:
                    problems.append(f"unknown constants key {key!r}")
        grid = doc.get("grid")
        if grid is not None:
            if not isinstance(grid, list) or not grid:
                problems.append("'grid' must be a nonempty list of cut-offs")
            elif any(int(m) < 0 for m in grid):
                problems.append("grid cut-offs must be >= 0")
        d = int(doc.get("d", 1))
        truth = None
        if "density" in doc:
            try:
                truth = densities.density_from_json_dict(doc["density"])
            except (ValueError, TypeError) as exc:
                problems.append(f"bad density spec: {exc}")
        if truth is not None and truth.dim != d:
            problems.append(f"density dimension {truth.dim} does not match d = {d}")
        time_limit = doc.get("time_limit_s")
        if time_limit is not None and not float(time_limit) > 0:
            problems.append("time_limit_s must be > 0 when given")

        if problems:
            raise ValueError(
                "invalid experiment config:\n" + "\n".join(f"  - {p}" for p in problems)
            )
        return cls(
            density=doc["density"],
            ns=ns,
            rhos=rhos,
            mode=mode,
            replicates=replicates,
            seed=int(doc["seed"]),
            d=d,
            beta=None if beta is None else float(beta),
            cutoff_form=cutoff_form,
            constants=dict(constants),
            grid=None if grid is None else [int(m) for m in grid],
            deterministic_timings=bool(doc.get("deterministic_timings", True)),
            time_limit_s=None if time_limit is None else float(time_limit),
        )

    def to_json_dict(self) -> dict:
        return {
            "density": self.density,
            "n": list(self.ns),
            "rho": list(self.rhos),
            "mode": self.mode,
            "replicates": self.replicates,
            "seed": self.seed,
            "d": self.d,
            "beta": self.beta,
            "cutoff_form": self.cutoff_form,
            "constants": dict(self.constants),
            "grid": self.grid,
            "deterministic_timings": self.deterministic_timings,
            "time_limit_s": self.time_limit_s,
        }

    def penalty_config(self) -> PenaltyConfig:
        c = self.constants
        return PenaltyConfig(
            mode=c.get("mode", "practical"),
            C=c.get("C"),
            a=c.get("a", 1.0),
            eps=c.get("eps", 0.5),
            L=c.get("L", 2.0),
        )


@dataclass
class ExperimentRecord:
    n: int
    rho: float
    beta_nominal: float
    d: int
    mode: str
    replicate: int
    selected_M: int
    rho_spent: float
    mise: float
    wall_ms: float


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    x_name: str
    n_cells: int


@dataclass
class RateResult:
    records: list
    slope: SlopeFit | None
    cell_means: list


@dataclass
class AdaptivityResult:
    records: list
    cells: list


def mise(estimate: ProjectionEstimate, truth) -> float:
    """Integrated squared error of an estimate against a known truth.

    Trigonometric truth: exact by Parseval (grids padded to the larger
    cut-off, so the tail of whichever grid is wider is counted as bias).
    Packing truth: midpoint quadrature at the module lattice resolution.
    """
    if isinstance(truth, TrigDensity):
        return fourier.l2_distance_sq(estimate.coefficients, truth.coefficients)
    if isinstance(truth, PackingDensity):
        lattice = densities.midpoint_lattice(truth.dim)
        diff = truth.evaluate(lattice) - fourier.evaluate(estimate.coefficients, lattice)
        return float(np.mean(diff * diff))
    raise TypeError(f"no MISE route for truth of type {type(truth).__name__}")


def fit_slope(log_x, log_y, x_name: str = "log n") -> SlopeFit | None:
    """OLS slope of log_y on log_x with its standard error.

    Returns None with fewer than two points (slope undefined); the standard
    error is NaN with fewer than three.
    """
    x = np.asarray(log_x, dtype=float)
    y = np.asarray(log_y, dtype=float)
    if len(x) < 2:
        return None
    slope, intercept = np.polyfit(x, y, 1)
    if len(x) > 2:
        resid = y - (slope * x + intercept)
        s2 = float(resid @ resid) / (len(x) - 2)
        denom = float(np.sum((x - x.mean()) ** 2))
        stderr = math.sqrt(s2 / denom)
    else:
        stderr = float("nan")
    return SlopeFit(slope=float(slope), stderr=stderr, x_name=x_name, n_cells=len(x))


def _oracle_cutoff(cfg: ExperimentConfig, n: int, rho: float) -> int:
    form = optimal_cutoff_adaptive_form if cfg.cutoff_form == "adaptive" else optimal_cutoff_thm
    return form(n, rho, cfg.beta, cfg.d)


def _beta_nominal(cfg: ExperimentConfig, truth) -> float:
    if cfg.beta is not None:
        return cfg.beta
    return float(getattr(truth, "beta", math.nan))


def _run_one(cfg, truth, n, rho, rng):
    """One replicate: sample, fit per cfg.mode, return (estimate, M, spent)."""
    data = rejection_sample(truth, n, rng)
    if cfg.mode == "oracle":
        cutoff = _oracle_cutoff(cfg, n, rho)
        est = fit(data, cutoff, rho, rng)
        return est, cutoff, rho
    if cfg.mode == "lepskii":
        est, trace = adaptive.lepskii_select(data, rho, cfg.penalty_config(), rng)
        return est, trace.selected_cutoff, trace.rho_spent
    est, trace = adaptive.penalized_bias_select(data, rho, cfg.grid, rng)
    return est, trace.selected_cutoff, trace.rho_spent


def run_rate_experiment(cfg: ExperimentConfig) -> RateResult:
    """Sweep all (n, rho) cells, R replicates each, and fit the rate slope.

    The slope regressor is log n when rho is a single value, and
    log(n sqrt(rho)) when n is a single value; with one cell the slope is
    reported as None. A cell whose cumulative wall time exceeds
    time_limit_s stops early and appends one flagged record
    (replicate = -1, mise = NaN) instead of its remaining replicates.
    """
    truth = densities.density_from_json_dict(cfg.density)
    beta_nom = _beta_nominal(cfg, truth)
    cells = [(n, rho) for n in cfg.ns for rho in cfg.rhos]
    records = []
    cell_means = []
    for cell_idx, (n, rho) in enumerate(cells):
        mises = []
        cell_start = time.perf_counter()
        for rep in range(cfg.replicates):
            if (
                cfg.time_limit_s is not None
                and time.perf_counter() - cell_start > cfg.time_limit_s
            ):
                records.append(
                    ExperimentRecord(
                        n, rho, beta_nom, cfg.d, cfg.mode, -1, -1, 0.0, float("nan"), 0.0
                    )
                )
                break
            rng = privacy.derived_rng(cfg.seed, cell_idx, rep)
            t0 = time.perf_counter()
            est, cutoff, spent = _run_one(cfg, truth, n, rho, rng)
            err = mise(est, truth)
            wall = 0.0 if cfg.deterministic_timings else (time.perf_counter() - t0) * 1e3
            records.append(
                ExperimentRecord(
                    n, rho, beta_nom, cfg.d, cfg.mode, rep, cutoff, spent, err, wall
                )
            )
            mises.append(err)
        if mises:
            cell_means.append((n, rho, float(np.mean(mises))))

    slope = None
    if len(cell_means) >= 2:
        if len(cfg.rhos) == 1:
            xs = [math.log(n) for n, _r, _m in cell_means]
            name = "log n"
        elif len(cfg.ns) == 1:
            xs = [math.log(n * math.sqrt(r)) for n, r, _m in cell_means]
            name = "log(n sqrt(rho))"
        else:
            xs = None
            name = ""
        if xs is not None:
            ys = [math.log(m) for _n, _r, m in cell_means]
            slope = fit_slope(xs, ys, name)
    return RateResult(records=records, slope=slope, cell_means=cell_means)


def run_adaptivity_experiment(cfg: ExperimentConfig) -> AdaptivityResult:
    """Compare an adaptive rule against the oracle-beta estimator.

    Per replicate two records are written: one for the adaptive rule
    (mode as configured) and one for the oracle fit at the same total
    budget (mode "oracle"). Sampling and the adaptive fit share one derived
    generator; the oracle fit uses its own derived stream so its noise does
    not depend on how many draws the adaptive rule consumed.

    The per-cell summary carries median MISEs, their ratio, the selected
    cut-offs, and (penalized-bias mode) the median MISE of every fixed-M
    candidate at the split budget, for oracle-inequality checks.
    """
    if cfg.mode not in ("lepskii", "penalized-bias"):
        raise ValueError("adaptivity experiments need mode lepskii or penalized-bias")
    if cfg.beta is None:
        raise ValueError("adaptivity experiments need 'beta' for the oracle comparison")
    truth = densities.density_from_json_dict(cfg.density)
    beta_nom = _beta_nominal(cfg, truth)
    cells = [(n, rho) for n in cfg.ns for rho in cfg.rhos]
    records = []
    summaries = []
    for cell_idx, (n, rho) in enumerate(cells):
        adaptive_mises = []
        oracle_mises = []
        selected = []
        candidate_mises: dict[int, list] = {}
        for rep in range(cfg.replicates):
            rng = privacy.derived_rng(cfg.seed, cell_idx, rep)
            data = rejection_sample(truth, n, rng)
            if cfg.mode == "lepskii":
                est, trace = adaptive.lepskii_select(data, rho, cfg.penalty_config(), rng)
            else:
                est, trace = adaptive.penalized_bias_select(data, rho, cfg.grid, rng)
            err = mise(est, truth)
            records.append(
                ExperimentRecord(
                    n, rho, beta_nom, cfg.d, cfg.mode, rep,
                    trace.selected_cutoff, trace.rho_spent, err, 0.0,
                )
            )
            adaptive_mises.append(err)
            selected.append(trace.selected_cutoff)
            if cfg.mode == "penalized-bias":
                for m_val, cand in zip(trace.cutoffs, trace.candidates):
                    candidate_mises.setdefault(m_val, []).append(mise(cand, truth))

            oracle_rng = privacy.derived_rng(cfg.seed, cell_idx, rep, 1)
            oracle_cut = _oracle_cutoff(cfg, n, rho)
            oracle_est = fit(data, oracle_cut, rho, oracle_rng)
            oracle_err = mise(oracle_est, truth)
            records.append(
                ExperimentRecord(
                    n, rho, beta_nom, cfg.d, "oracle", rep,
                    oracle_cut, rho, oracle_err, 0.0,
                )
            )
            oracle_mises.append(oracle_err)

        cell = {
            "n": n,
            "rho": rho,
            "adaptive_median_mise": float(np.median(adaptive_mises)),
            "oracle_median_mise": float(np.median(oracle_mises)),
            "selected_cutoffs": selected,
            "oracle_cutoff": _oracle_cutoff(cfg, n, rho),
        }
        if cell["oracle_median_mise"] > 0:
            cell["ratio"] = cell["adaptive_median_mise"] / cell["oracle_median_mise"]
        else:
            cell["ratio"] = float("inf")
        if cfg.mode == "lepskii":
            pc = cfg.penalty_config()
            ln = math.log(n)
            rho_split = rho * pc.eps / (ln * ln)
            split_cut = optimal_cutoff_adaptive_form(n, rho_split, cfg.beta, cfg.d)
            cell["oracle_split_cutoff"] = split_cut
            within = [
                s <= 4 * split_cut and split_cut <= 4 * max(s, 1) for s in selected
            ]
            cell["within_factor4_fraction"] = float(np.mean(within))
        if candidate_mises:
            med = {m_val: float(np.median(v)) for m_val, v in candidate_mises.items()}
            cell["candidate_median_mise"] = med
            best = min(med, key=med.get)
            cell["best_fixed_M"] = best
            cell["best_fixed_median_mise"] = med[best]
        summaries.append(cell)
    return AdaptivityResult(records=records, cells=summaries)


def chi2_tail_check(D: int, delta: float, R: int, rng=None, sigma: float = 1.0) -> dict:
    """Empirical check of the chi-squared tail bound.

    Simulates Z = sigma^2 chi^2_D and compares the frequency of
    Z >= (1+delta) D sigma^2 against max(exp(-D delta^2/4), exp(-D delta/2))
    plus a Monte-Carlo margin of 4 sqrt(bound/R) + 4/R. Raises
    AssertionError when the frequency exceeds the allowance.
    """
    if D < 1:
        raise ValueError("D must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if R < 10**4:
        raise ValueError("R must be >= 10^4 for a meaningful tail estimate")
    rng = np.random.default_rng(rng)
    z = sigma * sigma * rng.chisquare(D, size=R)
    threshold = (1.0 + delta) * D * sigma * sigma
    empirical = float(np.mean(z >= threshold))
    bound = max(math.exp(-D * delta * delta / 4.0), math.exp(-D * delta / 2.0))
    allowed = bound + 4.0 * math.sqrt(bound / R) + 4.0 / R
    result = {
        "empirical": empirical,
        "bound": bound,
        "allowed": allowed,
        "ok": empirical <= allowed,
    }
    if not result["ok"]:
        raise AssertionError(
            f"chi^2 tail frequency {empirical} exceeds allowance {allowed} "
            f"(bound {bound}, D={D}, delta={delta}, R={R})"
        )
    return result


def _g17(x) -> str:
    return f"{float(x):.17g}"


def write_csv(records, path) -> None:
    """Write records in the fixed column order with a mandatory header.

    Floats use 17 significant digits so a re-run of the same config is
    byte-identical (given deterministic_timings).
    """
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    str(r.n),
                    _g17(r.rho),
                    _g17(r.beta_nominal),
                    str(r.d),
                    r.mode,
                    str(r.replicate),
                    str(r.selected_M),
                    _g17(r.rho_spent),
                    _g17(r.mise),
                    _g17(r.wall_ms),
                ]
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
