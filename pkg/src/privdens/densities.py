"""Ground-truth density fixtures on [0,1]^d and rejection sampling.

Two constructions are provided.

Trigonometric fixtures
    Finite Fourier series with Hermitian coefficients, theta_0 = 1, drawn
    with a power-law magnitude decay and random phases, then rescaled to fit
    a Sobolev budget and damped until a positive lower bound is certified on
    a dense lattice (lattice minimum minus a Lipschitz slack). These have
    exact coefficient access, so bias and MISE computations are exact via
    Parseval.

Bump packing fixtures
    The perturbed-uniform family f = 1 + h^beta sum_i theta_i psi((x-p_i)/h)
    - |theta|_1 gamma h^(beta+d) built from the C-infinity bump
    psi = a Psi(./2), Psi(x) = exp(-1/(1-|x|^2)) inside the unit ball. The
    bumps sit on a lattice of m^d centers with disjoint supports; mass is
    exactly 1 by construction. These serve as the fractional-smoothness
    fixture; no Hoelder seminorm is computed numerically.

Sampling is plain rejection from uniform proposals with a supplied sup
bound. A fixed generator gives identical samples; per round the proposals
are drawn first, then the acceptance uniforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np
from scipy.integrate import quad

from . import fourier
from .fourier import CoefficientGrid, as_points, multi_indices, project

__all__ = [
    "DEFAULT_LATTICE_RESOLUTION",
    "lattice_resolution",
    "midpoint_lattice",
    "bump_psi",
    "TrigDensity",
    "make_trig_density",
    "exact_bias",
    "PackingDensity",
    "make_packing_density",
    "HolderSpec",
    "holder_tail_constant",
    "rejection_sample",
    "ClippedDensity",
    "quadrature_mass",
    "density_from_json_dict",
    "density_from_json",
]

# Per-axis lattice resolution used for positivity certification, mass
# checks, and quadrature MISE. Chosen so the full lattice stays ~1e3..3e4
# points in every dimension.
DEFAULT_LATTICE_RESOLUTION = {1: 2**10, 2: 2**7, 3: 2**5}


def lattice_resolution(d: int) -> int:
    return DEFAULT_LATTICE_RESOLUTION.get(d, 2**5)


def midpoint_lattice(d: int, per_axis: int | None = None) -> np.ndarray:
    """Midpoint lattice ((i+1/2)/N per axis) as an (N^d, d) array."""
    n = per_axis or lattice_resolution(d)
    axis = (np.arange(n) + 0.5) / n
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, d)


# ---------------------------------------------------------------------------
# the bump and its integrals
# ---------------------------------------------------------------------------


def bump_psi(x):
    """Unit bump Psi(x) = exp(-1/(1-|x|^2)) for |x| < 1, else 0.

    Accepts a single point (scalar or length-d vector) or an (N, d) batch.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    pts = np.atleast_2d(arr) if arr.ndim else arr.reshape(1, 1)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    r2 = np.sum(pts * pts, axis=1)
    out = np.zeros(len(r2))
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return float(out[0]) if single else out


def _profile(r):
    return math.exp(-1.0 / (1.0 - r * r)) if r < 1.0 else 0.0


def _profile_d1(r):
    # d/dr exp(-1/(1-r^2)) = Psi * (-2r/(1-r^2)^2)
    if r >= 1.0:
        return 0.0
    s = 1.0 - r * r
    return _profile(r) * (-2.0 * r / (s * s))


def _profile_d2(r):
    # second derivative: Psi * (g^2 + g'), g = -2r/(1-r^2)^2,
    # g' = -(2+6r^2)/(1-r^2)^3
    if r >= 1.0:
        return 0.0
    s = 1.0 - r * r
    g = -2.0 * r / (s * s)
    gp = -(2.0 + 6.0 * r * r) / (s * s * s)
    return _profile(r) * (g * g + gp)


def _sphere_area(d: int) -> float:
    # surface area of the unit sphere in R^d
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@lru_cache(maxsize=None)
def _bump_integrals(d: int) -> dict:
    """Radial quadrature of the unit bump: mass, squared mass, gradient
    energy, and (d=1) second-derivative energy. Cached; ~1e-10 accurate."""
    omega = _sphere_area(d)

    def radial(f):
        val, _err = quad(
            lambda r: r ** (d - 1) * f(r), 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200
        )
        return omega * val

    out = {
        "mass": radial(_profile),
        "sq": radial(lambda r: _profile(r) ** 2),
        "grad_sq": radial(lambda r: _profile_d1(r) ** 2),
    }
    if d == 1:
        out["d2_sq"] = radial(lambda r: _profile_d2(r) ** 2)
    return out


def _seminorm_energy(d: int, b: int) -> float:
    """E_b(Psi) = sum over |alpha| = b of the squared derivative energy.
    Supported: b in {0, 1} for any d; b = 2 for d = 1 (higher orders need
    mixed partials that the radial reduction does not reach)."""
    moments = _bump_integrals(d)
    if b == 0:
        return moments["sq"]
    if b == 1:
        return moments["grad_sq"]
    if b == 2 and d == 1:
        return moments["d2_sq"]
    raise ValueError(
        f"smoothness order floor(beta) = {b} with d = {d} is not supported; "
        "use 0 or 1 (any d) or 2 (d = 1 only)"
    )


# ---------------------------------------------------------------------------
# trigonometric fixtures
# ---------------------------------------------------------------------------


def _sobolev_weights(ks: np.ndarray, b: int) -> np.ndarray:
    # sum over multi-indices |alpha| = b of prod_i (2 pi k_i)^(2 alpha_i),
    # i.e. the complete homogeneous symmetric polynomial of the (2 pi k_i)^2
    if b == 0:
        return np.ones(len(ks))
    x = (2.0 * np.pi * ks.astype(float)) ** 2
    total = np.zeros(len(ks))
    for combo in combinations_with_replacement(range(ks.shape[1]), b):
        total += np.prod(x[:, combo], axis=1)
    return total


@dataclass(frozen=True)
class TrigDensity:
    """Finite trigonometric density with exactly known coefficients.

    coefficients is Hermitian-symmetric with theta_0 = 1; min_value is the
    certified lattice lower bound (lattice minimum minus Lipschitz slack).
    """

    coefficients: CoefficientGrid
    beta: float
    L: float
    min_value: float

    @property
    def dim(self) -> int:
        return self.coefficients.dim

    @property
    def cutoff(self) -> int:
        return self.coefficients.cutoff

    @property
    def sup_bound(self) -> float:
        return float(np.sum(np.abs(self.coefficients.values)))

    def evaluate(self, x):
        return fourier.evaluate(self.coefficients, x)

    def sobolev_budget(self) -> float:
        """sum_k (sum_{|alpha| = floor(beta)} (2 pi k)^(2 alpha)) |theta_k|^2."""
        if self.cutoff == 0 and math.isinf(self.beta):
            return 0.0
        w = _sobolev_weights(self.coefficients.indices(), int(math.floor(self.beta)))
        return float(np.sum(w * np.abs(self.coefficients.values) ** 2))

    @classmethod
    def uniform(cls, dim: int) -> "TrigDensity":
        grid = CoefficientGrid(dim, 0, np.ones(1, dtype=complex))
        return cls(grid, beta=math.inf, L=1.0, min_value=1.0)

    def to_json_dict(self) -> dict:
        if math.isinf(self.beta):
            return {"kind": "uniform", "d": self.dim}
        return {
            "kind": "trig",
            "beta": self.beta,
            "L": self.L,
            "min_value": self.min_value,
            "coefficients": self.coefficients.to_json_dict(),
        }


def _lipschitz_bound(grid: CoefficientGrid) -> float:
    # |f(x) - f(y)| <= sum_k |theta_k| 2 pi |k|_1 |x - y|_inf
    k1 = np.sum(np.abs(grid.indices()), axis=1)
    return float(np.sum(np.abs(grid.values) * 2.0 * np.pi * k1))


def make_trig_density(beta, L, M_truth, d=1, rng=None) -> TrigDensity:
    """Draw a random trigonometric density of nominal smoothness beta.

    Magnitudes decay as (1 + |k|_inf)^(-(beta + d/2 + 0.51)) with
    Uniform(0.5, 1) factors and Uniform[0, 2 pi) phases, one draw per
    positive-half index in lexicographic order. Coefficients are rescaled so
    the Sobolev budget sits at 80% of L^2 (of L^2 - 1 when floor(beta) = 0,
    where theta_0 contributes 1), then damped by 0.8 until the lattice
    minimum minus Lipschitz slack certifies a lower bound >= 0.01.
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if L <= 1:
        raise ValueError("L must be > 1")
    if M_truth < 0:
        raise ValueError("M_truth must be >= 0")
    if M_truth == 0:
        grid = CoefficientGrid(d, 0, np.ones(1, dtype=complex))
        return TrigDensity(grid, beta=float(beta), L=float(L), min_value=1.0)
    rng = np.random.default_rng(rng)

    ks = multi_indices(M_truth, d)
    size = len(ks)
    center = (size - 1) // 2
    values = np.zeros(size, dtype=complex)
    values[center] = 1.0
    decay_exp = beta + d / 2.0 + 0.51
    for idx in range(center + 1, size):
        mag = rng.uniform(0.5, 1.0) * (1.0 + np.abs(ks[idx]).max()) ** (-decay_exp)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        values[idx] = mag * np.exp(1j * phase)
        values[size - 1 - idx] = np.conj(values[idx])

    b = int(math.floor(beta))
    w = _sobolev_weights(ks, b)
    tail = np.sum(w * np.abs(values) ** 2) - (w[center] * 1.0)
    target = 0.8 * (L * L - 1.0) if b == 0 else 0.8 * L * L
    if tail > 0:
        scale = math.sqrt(target / tail)
        values *= scale
        values[center] = 1.0

    lattice = midpoint_lattice(d)
    slack_step = 1.0 / (2 * lattice_resolution(d))
    for _ in range(100):
        grid = CoefficientGrid(d, M_truth, values.copy())
        certified = float(np.min(fourier.evaluate(grid, lattice)))
        certified -= _lipschitz_bound(grid) * slack_step
        if certified >= 0.01:
            return TrigDensity(grid, beta=float(beta), L=float(L), min_value=certified)
        values *= 0.8
        values[center] = 1.0
    raise ValueError(
        "could not certify positivity of the trigonometric fixture "
        "after 100 damping rounds"
    )


def exact_bias(truth: TrigDensity, cutoff: int) -> float:
    """Energy of truth outside {-M..M}^d, i.e. the exact squared bias of the
    cut-off-M projection (Parseval). Zero once M >= M_truth."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    grid = truth.coefficients
    if cutoff >= grid.cutoff:
        return 0.0
    inner = project(grid, cutoff)
    total = float(np.sum(np.abs(grid.values) ** 2))
    kept = float(np.sum(np.abs(inner.values) ** 2))
    return max(total - kept, 0.0)


# ---------------------------------------------------------------------------
# bump packing fixtures
# ---------------------------------------------------------------------------


@dataclass
class PackingDensity:
    """Perturbed-uniform bump density; mass is exactly 1 by construction.

    theta is a 0/1 vector over the m^d bump centers j/(m+1), j in {1..m}^d,
    in lexicographic order. gamma and delta are the integrals of psi and
    psi^2 (amplitude included); h is small enough that bump supports are
    disjoint and stay inside the cube.
    """

    theta: np.ndarray
    m: int
    h: float
    beta: float
    d: int
    L: float
    amplitude: float
    gamma: float
    delta: float
    floor_half: bool = False
    _centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.uint8).reshape(-1)
        if len(self.theta) != self.m**self.d:
            raise ValueError(f"theta must have length m^d = {self.m ** self.d}")
        if not np.all((self.theta == 0) | (self.theta == 1)):
            raise ValueError("theta entries must be 0 or 1")
        axis = np.arange(1, self.m + 1) / (self.m + 1)
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        self._centers = np.stack(mesh, axis=-1).reshape(-1, self.d)

    @property
    def dim(self) -> int:
        return self.d

    @property
    def active_count(self) -> int:
        return int(self.theta.sum())

    @property
    def offset(self) -> float:
        """The constant |theta|_1 gamma h^(beta+d) subtracted to keep mass 1."""
        return self.active_count * self.gamma * self.h ** (self.beta + self.d)

    @property
    def sup_bound(self) -> float:
        # peak of one bump is psi(0) = amplitude / e; bumps do not overlap
        return 1.0 + self.h**self.beta * self.amplitude / math.e

    def bit_distance_sq(self) -> float:
        """Squared L2 distance contributed by flipping one theta bit."""
        return self.h ** (2.0 * self.beta + self.d) * self.delta

    def evaluate(self, x):
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 0 or (arr.ndim == 1 and self.d > 1)
        if single:
            arr = arr.reshape(1, -1)
        pts = as_points(arr, self.d)
        out = np.full(len(pts), 1.0 - self.offset)
        hb = self.h**self.beta
        for bit, center in zip(self.theta, self._centers):
            if not bit:
                continue
            u = (pts - center) / (2.0 * self.h)  # psi(z) = a Psi(z/2)
            r2 = np.sum(u * u, axis=1)
            mask = r2 < 1.0
            if mask.any():
                out[mask] += hb * self.amplitude * np.exp(-1.0 / (1.0 - r2[mask]))
        return float(out[0]) if single else out

    def to_json_dict(self) -> dict:
        return {
            "kind": "packing",
            "m": self.m,
            "beta": self.beta,
            "d": self.d,
            "L": self.L,
            "floor_half": self.floor_half,
            "theta": self.theta.astype(int).tolist(),
        }


def make_packing_density(theta, m, beta, d=1, L=2.0, *, floor_half=False) -> PackingDensity:
    """Build the bump packing density for a given bit vector.

    The amplitude is a = 0.99 L / sqrt(2^(d-2b) E_b(Psi)) with b = floor(beta),
    which puts the order-b derivative energy of psi = a Psi(./2) at
    (0.99 L)^2 < L^2. h = min(1/(gamma (m+1)), 1/(4(m+1))); floor_half=True
    halves the first term, which forces the density >= 1/2 everywhere.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if L <= 0:
        raise ValueError("L must be > 0")
    b = int(math.floor(beta))
    energy = _seminorm_energy(d, b)
    amplitude = 0.99 * L / math.sqrt(2.0 ** (d - 2 * b) * energy)
    moments = _bump_integrals(d)
    gamma = amplitude * 2.0**d * moments["mass"]
    delta = amplitude * amplitude * 2.0**d * moments["sq"]
    gamma_term = 1.0 / ((2.0 if floor_half else 1.0) * gamma * (m + 1))
    h = min(gamma_term, 1.0 / (4.0 * (m + 1)))
    return PackingDensity(
        theta=theta,
        m=m,
        h=h,
        beta=float(beta),
        d=d,
        L=float(L),
        amplitude=amplitude,
        gamma=gamma,
        delta=delta,
        floor_half=floor_half,
    )


# ---------------------------------------------------------------------------
# Hoelder tail constant
# ---------------------------------------------------------------------------


def holder_tail_constant(s: float) -> float:
    """C(s) = 2^(2s) 3^(-s) / (1 - 2^(-2s)) for a fractional exponent
    s in (0,1); relates Fourier tail energy to the Hoelder seminorm."""
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    return 2.0 ** (2.0 * s) * 3.0 ** (-s) / (1.0 - 2.0 ** (-2.0 * s))


@dataclass(frozen=True)
class HolderSpec:
    s: float
    c_s: float

    @classmethod
    def from_exponent(cls, s: float) -> "HolderSpec":
        return cls(s=float(s), c_s=holder_tail_constant(s))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


class ClippedDensity:
    """max(Re f, 0) of a coefficient grid, as a sampling target.

    Rejection sampling does not need the normalizing constant, so the
    clipped function is used as-is; this is pure post-processing of an
    already-released estimate and costs no privacy budget. Construction
    fails when the clipped function is degenerate (lattice mass below 1e-3),
    since rejection would then almost never accept.
    """

    def __init__(self, source):
        grid = getattr(source, "coefficients", source)
        if not isinstance(grid, CoefficientGrid):
            raise TypeError("expected a CoefficientGrid or an object carrying one")
        self.grid = grid
        self.sup_bound = float(np.sum(np.abs(grid.values)))
        lattice = midpoint_lattice(grid.dim)
        clipped = np.maximum(fourier.evaluate(grid, lattice), 0.0)
        self.lattice_mass = float(np.mean(clipped))
        if self.lattice_mass < 1e-3:
            raise ValueError(
                f"clipped estimate is degenerate: lattice mass {self.lattice_mass:.3g} < 1e-3"
            )

    @property
    def dim(self) -> int:
        return self.grid.dim

    def evaluate(self, x):
        return np.maximum(fourier.evaluate(self.grid, x), 0.0)


def rejection_sample(density, n, rng, *, return_stats=False, max_rounds=1000):
    """Draw n points from `density` by rejection from uniform proposals.

    density must expose dim, sup_bound (B >= sup f) and evaluate(points).
    Per round the proposals are drawn first, then the acceptance uniforms;
    a proposal x with uniform u is kept when u*B < f(x). When B <= 1 the
    round size is exactly the number still needed (for the uniform density
    every proposal is accepted, so the output is the raw proposal block).
    """
    d = int(density.dim)
    bound = float(density.sup_bound)
    if bound <= 0:
        raise ValueError("sup bound must be > 0")
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(rng)

    blocks = []
    got = 0
    proposals_total = 0
    accepted_total = 0
    rounds = 0
    while got < n and rounds < max_rounds:
        need = n - got
        chunk = need if bound <= 1.0 else min(int(math.ceil(need * bound)), 1 << 20)
        proposals = rng.random((chunk, d))
        fvals = np.asarray(density.evaluate(proposals), dtype=float)
        u = rng.random(chunk)
        accept = u * bound < fvals
        taken = proposals[accept][:need]
        blocks.append(taken)
        got += len(taken)
        proposals_total += chunk
        accepted_total += int(accept.sum())
        rounds += 1
    if got < n:
        raise RuntimeError(
            f"rejection sampling produced {got}/{n} points in {max_rounds} rounds; "
            "the target density is nearly degenerate"
        )
    points = np.vstack(blocks) if blocks else np.empty((0, d))
    if not return_stats:
        return points
    stats = {
        "proposals": proposals_total,
        "accepted": accepted_total,
        "rounds": rounds,
        "acceptance_rate": accepted_total / proposals_total if proposals_total else 0.0,
        "bound": bound,
    }
    return points, stats


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def quadrature_mass(density, per_axis: int | None = None) -> float:
    """Midpoint-rule mass of a density on [0,1]^d."""
    lattice = midpoint_lattice(density.dim, per_axis)
    return float(np.mean(density.evaluate(lattice)))


def density_from_json_dict(doc: dict):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValueError("density document must be a JSON object with a 'kind' field")
    kind = doc["kind"]
    try:
        if kind == "uniform":
            return TrigDensity.uniform(int(doc["d"]))
        if kind == "trig":
            grid = CoefficientGrid.from_json_dict(doc["coefficients"])
            return TrigDensity(
                grid,
                beta=float(doc["beta"]),
                L=float(doc["L"]),
                min_value=float(doc["min_value"]),
            )
        if kind == "packing":
            return make_packing_density(
                doc["theta"],
                int(doc["m"]),
                float(doc["beta"]),
                d=int(doc["d"]),
                L=float(doc["L"]),
                floor_half=bool(doc.get("floor_half", False)),
            )
    except KeyError as exc:
        raise ValueError(f"density document is missing field {exc}") from exc
    raise ValueError(f"unknown density kind {kind!r}")


def density_from_json(text: str):
    return density_from_json_dict(json.loads(text))
