"""zCDP budget arithmetic and the Gaussian mechanism for coefficient release.

Sensitivity calculus
--------------------
One data point changes each empirical coefficient theta_k by at most 2/n in
modulus (each summand has modulus 1/n and one summand changes). Stacking the
real and imaginary parts of all (2M+1)^d coefficients into one vector, the
l2 sensitivity of the release is

    Delta_2 = (2/n) * sqrt(2 (2M+1)^d).

The Gaussian mechanism with per-coordinate scale sigma = Delta_2 / sqrt(2 rho)
is rho-zCDP, which gives the closed form

    sigma_M = 2 sqrt((2M+1)^d) / (n sqrt(rho)).

Both routes are implemented separately (coefficient_sensitivity composed with
gaussian_sigma, and sigma_for_cutoff) and the test suite checks they agree to
a couple of ulp; do not collapse one into the other.

RNG contract
------------
All randomness flows through numpy Generators. Noise draws are consumed in
lexicographic multi-index order, real part before imaginary part, so a fixed
seed reproduces a release bit for bit. Replicated experiments derive one
generator per replicate via `derived_rng(seed, *indices)`, which feeds the
integer tuple through numpy's SeedSequence entropy mixing; generators are
never shared across replicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier import CoefficientGrid

__all__ = [
    "PrivacyBudget",
    "NoiseScale",
    "BudgetLedger",
    "coefficient_sensitivity",
    "gaussian_sigma",
    "sigma_for_cutoff",
    "add_noise",
    "compose",
    "derived_rng",
    "as_rho",
]


@dataclass(frozen=True)
class PrivacyBudget:
    """A zCDP budget rho > 0."""

    rho: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"rho must be positive and finite, got {self.rho}")

    def split(self, parts: int) -> list["PrivacyBudget"]:
        """Split into `parts` equal shares whose composition is this budget."""
        if parts < 1:
            raise ValueError("parts must be >= 1")
        return [PrivacyBudget(self.rho / parts) for _ in range(parts)]

    def __float__(self) -> float:
        return self.rho


@dataclass(frozen=True)
class NoiseScale:
    """Per-coordinate Gaussian standard deviation, sigma >= 0."""

    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be nonnegative and finite, got {self.sigma}")

    def __float__(self) -> float:
        return self.sigma


def as_rho(budget) -> float:
    """Coerce a PrivacyBudget or bare float to a validated rho value."""
    rho = float(budget)
    if not (math.isfinite(rho) and rho > 0):
        raise ValueError(f"rho must be positive and finite, got {rho}")
    return rho


def coefficient_sensitivity(n: int, cutoff: int, dim: int) -> float:
    """l2 sensitivity of the stacked real/imaginary coefficient vector.

    (2/n) * sqrt(2 (2M+1)^d): swapping one of n points moves each complex
    coefficient by at most 2/n, across (2M+1)^d coefficients with two real
    coordinates each.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if cutoff < 0 or dim < 1:
        raise ValueError("need cutoff >= 0 and dim >= 1")
    return (2.0 / n) * math.sqrt(2.0 * (2 * cutoff + 1) ** dim)


def gaussian_sigma(sensitivity, budget) -> NoiseScale:
    """Gaussian-mechanism scale Delta_2 / sqrt(2 rho) for a rho-zCDP release."""
    sens = float(sensitivity)
    if sens < 0:
        raise ValueError("sensitivity must be >= 0")
    rho = as_rho(budget)
    return NoiseScale(sens / math.sqrt(2.0 * rho))


def sigma_for_cutoff(n: int, budget, cutoff: int, dim: int) -> NoiseScale:
    """Closed-form noise scale 2 sqrt((2M+1)^d) / (n sqrt(rho)).

    Algebraically identical to
    gaussian_sigma(coefficient_sensitivity(n, cutoff, dim), rho); kept as an
    independent computation so the two can be cross-checked.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if cutoff < 0 or dim < 1:
        raise ValueError("need cutoff >= 0 and dim >= 1")
    rho = as_rho(budget)
    return NoiseScale(2.0 * math.sqrt((2 * cutoff + 1) ** dim) / (n * math.sqrt(rho)))


def add_noise(
    grid: CoefficientGrid,
    sigma,
    rng: np.random.Generator,
    symmetrize: bool = False,
) -> CoefficientGrid:
    """Release theta_k + sigma (N(0,1) + i N(0,1)) for every coefficient.

    Draws are consumed in lexicographic coefficient order, real part first.
    They are consumed even when sigma == 0 so that the generator state after
    the call does not depend on the scale; with sigma == 0 the output values
    equal the input exactly.

    symmetrize=True averages theta_k with conj(theta_{-k}) afterwards. That
    is post-processing of an already-private release, so it costs no budget;
    it is off by default because the privacy analysis treats all (2M+1)^d
    coefficients as independently noised, k = 0 and conjugate pairs included.
    """
    s = float(sigma)
    if s < 0:
        raise ValueError("sigma must be >= 0")
    draws = rng.standard_normal((grid.size, 2))
    noisy = grid.values + s * (draws[:, 0] + 1j * draws[:, 1])
    if symmetrize:
        noisy = 0.5 * (noisy + np.conj(noisy[::-1]))
    return CoefficientGrid(grid.dim, grid.cutoff, noisy)


def compose(budgets) -> PrivacyBudget:
    """Adaptive composition: zCDP parameters add."""
    budgets = list(budgets)
    if not budgets:
        raise ValueError("cannot compose an empty list of budgets")
    return PrivacyBudget(sum(as_rho(b) for b in budgets))


def derived_rng(seed: int, *indices: int) -> np.random.Generator:
    """One generator per (seed, index...) tuple.

    Mixing function: numpy SeedSequence entropy hashing of the integer tuple.
    Distinct tuples give statistically independent streams; the same tuple
    always gives the same stream.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, indices)]))


class BudgetLedger:
    """Append-only record of budget charges for one released artifact.

    The library's rule is that nothing leaves with unrecorded budget: every
    mechanism invocation appends an entry, and the total must match the
    caller's declared spend.
    """

    def __init__(self):
        self.entries: list[tuple[str, float]] = []

    def charge(self, label: str, budget) -> None:
        self.entries.append((str(label), as_rho(budget)))

    @property
    def spent(self) -> float:
        return float(sum(rho for _, rho in self.entries))

    def to_json_dict(self) -> dict:
        return {"entries": [[label, rho] for label, rho in self.entries], "spent": self.spent}

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        return f"BudgetLedger(spent={self.spent!r}, entries={len(self.entries)})"
