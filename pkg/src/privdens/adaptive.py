"""Privacy-aware data-driven cut-off selection.

Two rules are implemented.

Lepskii risk penalization
    A grid of candidate smoothness values beta_0 > ... > beta_{k_n-1} is
    built from the sample size alone. One private estimator is fit per
    candidate, each at the tuned cut-off for its beta and each charged an
    equal budget share rho'_n = rho eps / (log n)^2, so the composed spend
    k_n rho'_n never exceeds rho. The selected index is the smallest m whose
    estimator is within the penalized risk threshold

        C (log n)^a r_{n,rho'_n}(beta_l)

    of every rougher candidate l >= m (squared L2 distance, Parseval).

Penalized estimated bias
    Over an explicit cut-off grid (dyadic by default), each candidate M gets
    an equal share rho' = rho / |grid|. The squared bias of f_hat_M is
    estimated by comparing its projections against every other candidate,
    each comparison discounted by a variance penalty Lambda^(1); selection
    minimizes estimated bias plus Lambda^(2). Ties break to the smallest M.

Both selectors return the chosen estimate together with a SelectionTrace
holding every number the decision consumed, so the choice can be replayed
and audited offline.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import privacy
from .estimator import (
    ProjectionEstimate,
    optimal_cutoff_adaptive_form,
    theoretical_rate,
)
from .fourier import CoefficientGrid, as_points, empirical_coefficients, project

__all__ = [
    "BetaGrid",
    "PenaltyConfig",
    "SelectionTrace",
    "build_beta_grid",
    "lepskii_select",
    "penalty_lambda1",
    "penalty_lambda2",
    "dyadic_cutoff_grid",
    "penalized_bias_select",
    "risk_series_sum",
    "risk_series_bound",
]


@dataclass(frozen=True)
class BetaGrid:
    """Candidate smoothness grid: k_n = floor((log n)^2 / eps) values
    descending from k_n eps / log n in steps of eps / log n."""

    n: float
    eps: float
    betas: tuple[float, ...]

    @property
    def k_n(self) -> int:
        return len(self.betas)


def build_beta_grid(n, eps: float) -> BetaGrid:
    """n may be any real >= 3; sample sizes are integers in practice but the
    grid is pure arithmetic in log n."""
    if n < 3:
        raise ValueError("n must be >= 3")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    ln = math.log(n)
    # Tolerant floor: mathematically integer arguments (n = e^2 and friends)
    # land a few ulp low and must not lose a grid point.
    k_n = max(1, int(math.floor((ln * ln / eps) * (1.0 + 1e-12))))
    step = eps / ln
    betas = tuple((k_n - m) * step for m in range(k_n))
    return BetaGrid(n=n, eps=eps, betas=betas)


@dataclass(frozen=True)
class PenaltyConfig:
    """Constants of the Lepskii threshold C (log n)^a r_{n,rho'}(beta).

    mode="theory" uses C = max(8 L^2, 2^(2d+9)) unless C is supplied, and
    insists on a >= 1; those are the hypotheses under which the selection
    rule carries a guarantee. The theory constants make the threshold
    vacuous at desk scale (every candidate is accepted, the rule returns
    index 0), so mode="practical" (default C = 1) exists for experiments;
    every trace records which mode produced it.
    """

    mode: str = "practical"
    C: float | None = None
    a: float = 1.0
    eps: float = 0.5
    L: float = 2.0

    def __post_init__(self):
        if self.mode not in ("practical", "theory"):
            raise ValueError(f"mode must be 'practical' or 'theory', got {self.mode!r}")
        if self.a <= 0:
            raise ValueError("a must be > 0")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if self.L <= 0:
            raise ValueError("L must be > 0")
        if self.C is not None and self.C < 1:
            raise ValueError("C must be >= 1")

    def theory_floor(self, d: int) -> float:
        return max(8.0 * self.L * self.L, float(2 ** (2 * d + 9)))

    def resolved_C(self, d: int) -> float:
        if self.C is not None:
            return float(self.C)
        return self.theory_floor(d) if self.mode == "theory" else 1.0


@dataclass
class SelectionTrace:
    """Everything a selection rule looked at, in decision order.

    `replay()` recomputes the selected index from the stored arrays; it must
    reproduce `selected_index` exactly. Candidate estimates are attached for
    in-process consumers but excluded from JSON.
    """

    method: str
    n: int
    d: int
    rho: float
    rho_per_candidate: float
    rho_spent: float | None
    constants: dict
    cutoffs: list[int]
    sigmas: list[float]
    selected_index: int
    selected_cutoff: int
    ledger: privacy.BudgetLedger
    betas: list[float] | None = None
    distances: np.ndarray | None = None
    thresholds: np.ndarray | None = None
    accepted: list[bool] | None = None
    proj_distances: np.ndarray | None = None
    lambda1: np.ndarray | None = None
    lambda2: np.ndarray | None = None
    bias_sq: np.ndarray | None = None
    criterion: np.ndarray | None = None
    candidates: list[ProjectionEstimate] | None = field(default=None, repr=False)

    def replay(self) -> int:
        if self.method == "lepskii":
            k = len(self.cutoffs)
            for m in range(k):
                if all(
                    self.distances[m, l] <= self.thresholds[l] for l in range(m, k)
                ):
                    return m
            return k - 1
        if self.method == "penalized-bias":
            crit = self.bias_sq + self.lambda2
            return int(np.argmin(crit))
        raise ValueError(f"unknown method {self.method!r}")

    def to_json_dict(self) -> dict:
        def listify(x):
            return None if x is None else np.asarray(x).tolist()

        return {
            "method": self.method,
            "n": self.n,
            "d": self.d,
            "rho": self.rho,
            "rho_per_candidate": self.rho_per_candidate,
            "rho_spent": self.rho_spent,
            "constants": dict(self.constants),
            "cutoffs": list(map(int, self.cutoffs)),
            "sigmas": list(map(float, self.sigmas)),
            "betas": listify(self.betas),
            "distances": listify(self.distances),
            "thresholds": listify(self.thresholds),
            "accepted": listify(self.accepted),
            "proj_distances": listify(self.proj_distances),
            "lambda1": listify(self.lambda1),
            "lambda2": listify(self.lambda2),
            "bias_sq": listify(self.bias_sq),
            "criterion": listify(self.criterion),
            "selected_index": int(self.selected_index),
            "selected_cutoff": int(self.selected_cutoff),
            "ledger": self.ledger.to_json_dict(),
        }


def _padded_candidate_matrix(grids: list[CoefficientGrid], cutoff: int) -> np.ndarray:
    rows = [project(g, cutoff).values for g in grids]
    return np.vstack(rows)


def _pairwise_sq_distances(a: np.ndarray) -> np.ndarray:
    # ||x - y||^2 via the Gram matrix; one gemm instead of k^2 passes.
    gram = a @ a.conj().T
    sq = np.real(np.diag(gram))
    dist = sq[:, None] + sq[None, :] - 2.0 * np.real(gram)
    return np.maximum(dist, 0.0)


def lepskii_select(
    data,
    rho,
    cfg: PenaltyConfig | None = None,
    rng: np.random.Generator | None = None,
    *,
    disable_noise: bool = False,
) -> tuple[ProjectionEstimate, SelectionTrace]:
    """Adaptive cut-off selection by the Lepskii rule.

    Fits one private estimator per grid smoothness (budget rho'_n each,
    noise draws consumed in candidate order m = 0, 1, ...), then picks the
    smallest index m whose estimator lies within the penalized risk
    threshold of every candidate l >= m.

    disable_noise=True is a diagnostic mode: no noise, no budget spent, no
    privacy. rng may then be omitted.
    """
    cfg = cfg or PenaltyConfig()
    pts = as_points(data)
    n, d = pts.shape
    if n < 3:
        raise ValueError("n must be >= 3")
    rho_v = privacy.as_rho(rho)
    if cfg.mode == "theory":
        if cfg.a < 1:
            raise ValueError("theory mode requires a >= 1")
        if cfg.resolved_C(d) < cfg.theory_floor(d):
            raise ValueError(
                f"theory mode requires C >= max(8 L^2, 2^(2d+9)) = {cfg.theory_floor(d)}"
            )
        if cfg.eps > 0.5:
            warnings.warn(
                "eps > 1/2: the grid-risk series bound is unproven there",
                stacklevel=2,
            )
    if not disable_noise and rng is None:
        raise ValueError("a seeded rng is required unless disable_noise=True")

    ln = math.log(n)
    grid = build_beta_grid(n, cfg.eps)
    k = grid.k_n
    rho_prime = rho_v * cfg.eps / (ln * ln)
    cutoffs = [
        optimal_cutoff_adaptive_form(n, rho_prime, beta, d) for beta in grid.betas
    ]
    master = empirical_coefficients(pts, max(cutoffs))

    ledger = privacy.BudgetLedger()
    cand_grids: list[CoefficientGrid] = []
    sigmas: list[float] = []
    for m, cutoff in enumerate(cutoffs):
        base = project(master, cutoff)
        if disable_noise:
            cand_grids.append(base)
            sigmas.append(0.0)
            continue
        sigma = float(privacy.sigma_for_cutoff(n, rho_prime, cutoff, d))
        cand_grids.append(privacy.add_noise(base, sigma, rng))
        sigmas.append(sigma)
        ledger.charge(f"lepskii candidate {m} (M={cutoff})", rho_prime)

    a_mat = _padded_candidate_matrix(cand_grids, max(cutoffs))
    distances = _pairwise_sq_distances(a_mat)
    c_val = cfg.resolved_C(d)
    thresholds = np.array(
        [
            c_val * ln**cfg.a * theoretical_rate(n, rho_prime, beta, d)
            for beta in grid.betas
        ]
    )
    accepted = [
        bool(np.all(distances[m, m:] <= thresholds[m:])) for m in range(k)
    ]
    # The last candidate is always accepted (distance to itself is 0), so
    # the search cannot fall off the end.
    selected = next(m for m in range(k) if accepted[m])

    # Report the exact composition k * rho' rather than the float sum of the
    # ledger entries; the two agree to rounding and the former is the figure
    # the budget accounting promises.
    spent = None if disable_noise else k * rho_prime
    estimates = [
        ProjectionEstimate(g, n, sigma=s, rho_spent=None if disable_noise else rho_prime)
        for g, s in zip(cand_grids, sigmas)
    ]
    chosen = ProjectionEstimate(
        cand_grids[selected], n, sigma=sigmas[selected], rho_spent=spent
    )
    trace = SelectionTrace(
        method="lepskii",
        n=n,
        d=d,
        rho=rho_v,
        rho_per_candidate=rho_prime,
        rho_spent=spent,
        constants={
            "mode": cfg.mode,
            "C": c_val,
            "a": cfg.a,
            "eps": cfg.eps,
            "L": cfg.L,
            "noise_disabled": disable_noise,
        },
        cutoffs=list(cutoffs),
        sigmas=sigmas,
        betas=list(grid.betas),
        distances=distances,
        thresholds=thresholds,
        accepted=accepted,
        selected_index=selected,
        selected_cutoff=cutoffs[selected],
        ledger=ledger,
        candidates=estimates,
    )
    return chosen, trace


def penalty_lambda1(cutoff: int, n: int, rho_prime, d: int) -> float:
    """Variance penalty: 96 (2M+1)^d / n + 96 (2M+1)^(2d) / (n^2 rho')."""
    rho_p = privacy.as_rho(rho_prime)
    size = float((2 * cutoff + 1) ** d)
    return 96.0 * size / n + 96.0 * size * size / (n * n * rho_p)


def penalty_lambda2(cutoff: int, n: int, rho_prime, d: int) -> float:
    """Selection penalty: Lambda^(1) plus 16 (2M+1)^(2d) / (n^2 rho')."""
    rho_p = privacy.as_rho(rho_prime)
    size = float((2 * cutoff + 1) ** d)
    return penalty_lambda1(cutoff, n, rho_p, d) + 16.0 * size * size / (n * n * rho_p)


def dyadic_cutoff_grid(n: int, d: int) -> list[int]:
    """Model collection {1, 2, 4, ..., 2^floor(log2((n^(1/d)-1)/2))}.

    Guarantees (2 max + 1)^d <= n. Returns [1] when n is too small for the
    formula to produce anything.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    x = (float(n) ** (1.0 / d) - 1.0) / 2.0
    if x < 1.0:
        return [1]
    j = int(math.floor(math.log2(x * (1.0 + 1e-12))))
    while (2 * 2**j + 1) ** d > n:  # tolerant floor can overshoot by one
        j -= 1
    return [2**i for i in range(j + 1)]


def penalized_bias_select(
    data,
    rho,
    grid: list[int] | None = None,
    rng: np.random.Generator | None = None,
    *,
    disable_noise: bool = False,
) -> tuple[ProjectionEstimate, SelectionTrace]:
    """Adaptive cut-off selection by penalized estimated bias.

    grid defaults to dyadic_cutoff_grid(n, d). Budget rho is split evenly:
    every candidate spends rho' = rho/|grid| and the total equals rho
    exactly. The estimated squared bias of candidate M is

        B^2(M) = max_{M'} ( ||proj_{M'}(f_hat_M) - f_hat_{M'}||^2 - Lambda^(1)(M') )

    and the winner minimizes B^2(M) + Lambda^(2)(M), ties to the smallest M.
    """
    pts = as_points(data)
    n, d = pts.shape
    rho_v = privacy.as_rho(rho)
    if grid is None:
        grid = dyadic_cutoff_grid(n, d)
    grid = sorted(set(int(m) for m in grid))
    if not grid:
        raise ValueError("cut-off grid must be nonempty")
    if grid[0] < 0:
        raise ValueError("cut-offs must be >= 0")
    if not disable_noise and rng is None:
        raise ValueError("a seeded rng is required unless disable_noise=True")

    g = len(grid)
    rho_prime = rho_v / g
    master = empirical_coefficients(pts, max(grid))

    ledger = privacy.BudgetLedger()
    cand_grids: list[CoefficientGrid] = []
    sigmas: list[float] = []
    for cutoff in grid:
        base = project(master, cutoff)
        if disable_noise:
            cand_grids.append(base)
            sigmas.append(0.0)
            continue
        sigma = float(privacy.sigma_for_cutoff(n, rho_prime, cutoff, d))
        cand_grids.append(privacy.add_noise(base, sigma, rng))
        sigmas.append(sigma)
        ledger.charge(f"penalized-bias candidate M={cutoff}", rho_prime)

    cutoff_max = max(grid)
    a_mat = _padded_candidate_matrix(cand_grids, cutoff_max)
    normmax = np.abs(
        np.stack(
            np.meshgrid(*([np.arange(-cutoff_max, cutoff_max + 1)] * d), indexing="ij"),
            axis=-1,
        ).reshape(-1, d)
    ).max(axis=1)
    masks = np.array([normmax <= m for m in grid])  # (g, K) restriction masks

    proj_dist = np.empty((g, g))
    for i in range(g):
        diff = a_mat[i][None, :] * masks - a_mat
        proj_dist[i] = np.sum(diff.real**2 + diff.imag**2, axis=1)

    lam1 = np.array([penalty_lambda1(m, n, rho_prime, d) for m in grid])
    lam2 = np.array([penalty_lambda2(m, n, rho_prime, d) for m in grid])
    bias_sq = (proj_dist - lam1[None, :]).max(axis=1)
    criterion = bias_sq + lam2
    selected = int(np.argmin(criterion))  # argmin takes the first (smallest M) on ties

    # g equal shares of rho/g compose to exactly rho; report that figure
    # (the ledger keeps the per-candidate entries for audit).
    spent = None if disable_noise else rho_v
    estimates = [
        ProjectionEstimate(gd, n, sigma=s, rho_spent=None if disable_noise else rho_prime)
        for gd, s in zip(cand_grids, sigmas)
    ]
    chosen = ProjectionEstimate(
        cand_grids[selected], n, sigma=sigmas[selected], rho_spent=spent
    )
    trace = SelectionTrace(
        method="penalized-bias",
        n=n,
        d=d,
        rho=rho_v,
        rho_per_candidate=rho_prime,
        rho_spent=spent,
        constants={"noise_disabled": disable_noise},
        cutoffs=list(grid),
        sigmas=sigmas,
        proj_distances=proj_dist,
        lambda1=lam1,
        lambda2=lam2,
        bias_sq=bias_sq,
        criterion=criterion,
        selected_index=selected,
        selected_cutoff=grid[selected],
        ledger=ledger,
        candidates=estimates,
    )
    return chosen, trace


def risk_series_sum(n, rho, eps: float, d: int) -> float:
    """sum_{l=0}^{k_n} r_{n,rho'_n}(beta_l) over the grid plus its beta = 0
    endpoint (where the rate is 1)."""
    rho_v = privacy.as_rho(rho)
    if n < 3:
        raise ValueError("n must be >= 3")
    ln = math.log(n)
    k_n = max(1, int(math.floor((ln * ln / eps) * (1.0 + 1e-12))))
    rho_prime = rho_v * eps / (ln * ln)
    total = 0.0
    for l in range(k_n + 1):
        beta = (k_n - l) * eps / ln
        total += theoretical_rate(n, rho_prime, beta, d) if beta > 0 else 1.0
    return total


def risk_series_bound(n: int, rho, eps: float, d: int) -> float:
    """4 (2+d) eps^{-1} (log n)^2 (rho'_n^{-1/(1+d)} + 2), the proven cap on
    risk_series_sum for eps <= 1/2."""
    rho_v = privacy.as_rho(rho)
    ln = math.log(n)
    rho_prime = rho_v * eps / (ln * ln)
    return 4.0 * (2.0 + d) / eps * ln * ln * (rho_prime ** (-1.0 / (1.0 + d)) + 2.0)
