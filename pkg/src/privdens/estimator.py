"""Non-adaptive private projection estimation.

fit() computes empirical Fourier coefficients up to a cut-off M and, when a
privacy budget is supplied, releases them through the Gaussian mechanism
calibrated by privacy.sigma_for_cutoff. Expected squared error decomposes
as

    E ||f - f_hat_M||^2 <= ||f - f_M||^2 + (2M+1)^d / n + 2 (2M+1)^d sigma_M^2

(approximation bias, sampling variance, privacy noise).

Two tuned-cut-off conventions coexist in the literature behind this method
and they do not agree: one carries a 2^d factor inside the floors and
subtracts one, the other does not. Both are implemented, named, and left
unreconciled; callers state which they use. The adaptive machinery is built
on the second form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import privacy
from .fourier import CoefficientGrid, as_points, empirical_coefficients

__all__ = [
    "ProjectionEstimate",
    "RateQuery",
    "optimal_cutoff_thm",
    "optimal_cutoff_adaptive_form",
    "fit",
    "theoretical_rate",
    "rate_regime",
]


def _floor_pow(base: float, exponent: float) -> int:
    """floor(base**exponent) robust to float rounding at integer boundaries.

    Values within a relative 1e-12 of an integer resolve upward; those are
    exactly the cases (like 512**(1/3)) where pow lands a few ulp under a
    mathematically exact integer.
    """
    if base <= 0.0:
        return 0
    x = base**exponent
    return int(math.floor(x * (1.0 + 1e-12)))


def _validate_cutoff_args(n, rho, beta, d) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if d < 1:
        raise ValueError("d must be >= 1")
    return privacy.as_rho(rho)


def optimal_cutoff_thm(n: int, rho, beta: float, d: int) -> int:
    """Tuned cut-off, 2^d-factor convention.

    M + 1 = min{ floor((n/2^d)^(1/(2 beta+d))),
                 floor((n sqrt(rho)/2^d)^(1/(beta+d))) },
    returned as M, clamped to 0 when the floor drops below 1.
    """
    rho_v = _validate_cutoff_args(n, rho, beta, d)
    scale = float(2**d)
    samp = _floor_pow(n / scale, 1.0 / (2.0 * beta + d))
    priv = _floor_pow(n * math.sqrt(rho_v) / scale, 1.0 / (beta + d))
    return max(0, min(samp, priv) - 1)


def optimal_cutoff_adaptive_form(n: int, rho, beta: float, d: int) -> int:
    """Tuned cut-off, plain convention (no 2^d factor, no -1).

    M = min{ floor(n^(1/(2 beta+d))), floor((n sqrt(rho))^(1/(beta+d))) },
    clamped to 0. This is the form the adaptive selection rules use.
    """
    rho_v = _validate_cutoff_args(n, rho, beta, d)
    samp = _floor_pow(float(n), 1.0 / (2.0 * beta + d))
    priv = _floor_pow(n * math.sqrt(rho_v), 1.0 / (beta + d))
    return max(0, min(samp, priv))


@dataclass
class ProjectionEstimate:
    """A (possibly privately released) projection estimate.

    Fields
    ------
    coefficients : CoefficientGrid
        The released theta_hat values.
    n : int
        Sample size the estimate was fit on.
    sigma : float
        Per-coordinate noise scale actually applied (0 for non-private).
    rho_spent : float or None
        Total zCDP budget consumed producing this object; None means the
        release is not private. For a plain fit() this satisfies
        sigma == sigma_for_cutoff(n, rho_spent, M, d). Adaptive procedures
        spend their total across many candidates, so there rho_spent is the
        composed total while sigma reflects the per-candidate split recorded
        in the selection trace.
    """

    coefficients: CoefficientGrid
    n: int
    sigma: float = 0.0
    rho_spent: float | None = None

    @property
    def cutoff(self) -> int:
        return self.coefficients.cutoff

    @property
    def dim(self) -> int:
        return self.coefficients.dim

    def to_json_dict(self) -> dict:
        obj = self.coefficients.to_json_dict()
        obj.update(n=self.n, sigma=self.sigma, rho_spent=self.rho_spent)
        return obj

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ProjectionEstimate":
        grid = CoefficientGrid.from_json_dict(obj)
        try:
            n = int(obj["n"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed estimate object: {exc}") from exc
        sigma = float(obj.get("sigma", 0.0))
        rho = obj.get("rho_spent")
        return cls(grid, n, sigma, None if rho is None else float(rho))


@dataclass(frozen=True)
class RateQuery:
    """Arguments of the minimax rate r_{n,rho}(beta)."""

    n: int
    rho: float
    beta: float
    d: int

    def __post_init__(self):
        if self.n < 1 or self.rho <= 0 or self.beta <= 0 or self.d < 1:
            raise ValueError("RateQuery fields must all be positive")

    def rate(self) -> float:
        return theoretical_rate(self.n, self.rho, self.beta, self.d)

    def regime(self) -> str:
        return rate_regime(self.n, self.rho, self.beta, self.d)


def theoretical_rate(n: int, rho, beta: float, d: int) -> float:
    """r_{n,rho}(beta) = max{ n^(-2b/(2b+d)), (n sqrt(rho))^(-2b/(b+d)) }.

    The first branch is the classical sampling rate, the second the privacy
    rate; whichever is larger limits the achievable squared error.
    """
    rho_v = _validate_cutoff_args(n, rho, beta, d)
    sampling = float(n) ** (-2.0 * beta / (2.0 * beta + d))
    private = (n * math.sqrt(rho_v)) ** (-2.0 * beta / (beta + d))
    return max(sampling, private)


def rate_regime(n: int, rho, beta: float, d: int) -> str:
    """Which branch of the rate is active: "sampling" or "privacy".

    Ties (within float equality) report "sampling"; the boundary is
    rho = n^(-2 beta/(2 beta+d)) ... solved for the budget at which privacy
    stops being the bottleneck.
    """
    rho_v = _validate_cutoff_args(n, rho, beta, d)
    sampling = float(n) ** (-2.0 * beta / (2.0 * beta + d))
    private = (n * math.sqrt(rho_v)) ** (-2.0 * beta / (beta + d))
    return "privacy" if private > sampling else "sampling"


def fit(
    data,
    cutoff: int,
    budget=None,
    rng: np.random.Generator | None = None,
    *,
    symmetrize: bool = False,
) -> ProjectionEstimate:
    """Fit the projection estimator at cut-off M, optionally privately.

    With budget=None the raw empirical coefficients are returned (sigma 0,
    rho_spent None). With a budget, the Gaussian mechanism is applied at
    scale sigma_for_cutoff(n, rho, M, d) and the full budget is recorded as
    spent. rng is required exactly when a budget is given.
    """
    pts = as_points(data)
    n, d = pts.shape
    grid = empirical_coefficients(pts, cutoff)
    if budget is None:
        return ProjectionEstimate(grid, n, sigma=0.0, rho_spent=None)
    rho = privacy.as_rho(budget)
    if rng is None:
        raise ValueError("a seeded rng is required for a private fit")
    sigma = float(privacy.sigma_for_cutoff(n, rho, cutoff, d))
    noisy = privacy.add_noise(grid, sigma, rng, symmetrize=symmetrize)
    return ProjectionEstimate(noisy, n, sigma=sigma, rho_spent=rho)
