"""Closed-form stochastic-geometry results and PPP sampling.

Covers the two-tier association probability, the Subset split of requesting
users, the Gamma cell-size law with its mixed Poisson user-count PMF, and
the Poisson count of nodes inside a spectrum sensing region (SSR).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import DiscretePmf, ScenarioConfig, cache_hit_prob

# Shape of the Gamma approximation to the Voronoi cell-area law.
CELL_SHAPE_K = 3.575


@dataclass(frozen=True)
class TierParams:
    """Per-tier intensity and transmit power; tier 1 = D2D, tier 2 = BS."""

    lambda_d2d: float
    lambda_bs: float
    power_d2d: float
    power_bs: float

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "TierParams":
        return cls(lambda_d2d=cfg.alpha * cfg.lambda_user,
                   lambda_bs=cfg.lambda_bs,
                   power_d2d=cfg.power_d2d,
                   power_bs=cfg.power_bs)

    def intensity(self, tier: int) -> float:
        return {1: self.lambda_d2d, 2: self.lambda_bs}[tier]

    def power(self, tier: int) -> float:
        return {1: self.power_d2d, 2: self.power_bs}[tier]


@dataclass(frozen=True)
class SubsetSplit:
    """Probabilities that a requesting user is served locally / D2D / BS."""

    p_local: float
    p_d2d: float
    p_bs: float

    def as_tuple(self):
        return (self.p_local, self.p_d2d, self.p_bs)


def tier_assoc_prob(i: int, j: int, tiers: TierParams, beta: float) -> float:
    """P(average biased power from tier ``i`` beats tier ``j``).

    A tier with zero intensity wins nothing (limit of the closed form).
    """
    if {i, j} != {1, 2}:
        raise ValueError("tiers must be {1, 2} with i != j")
    lam_i = tiers.intensity(i)
    if lam_i == 0:
        return 0.0
    total = 0.0
    for k in (1, 2):
        total += (tiers.intensity(k) / lam_i) * \
            (tiers.power(k) / tiers.power(i)) ** (2.0 / beta)
    return 1.0 / total


def subset_split(cfg: ScenarioConfig) -> SubsetSplit:
    """Split of requesting users over Subsets 0 (local), 1 (D2D), 2 (BS)."""
    p_h = cache_hit_prob(cfg.cache_size, cfg.zipf_exponent, cfg.library_size)
    p12 = tier_assoc_prob(1, 2, TierParams.from_config(cfg), cfg.pathloss)
    p_local = cfg.alpha * p_h
    p_d2d = (1 - cfg.alpha) * p_h * p12
    p_bs = (1 - p_h) + (1 - cfg.alpha) * p_h * (1 - p12)
    return SubsetSplit(p_local, p_d2d, p_bs)


def cell_size_pdf(s, lambda_bs: float):
    """Gamma density of the Voronoi cell area (shape K, rate lambda_bs * K)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("cell area must be nonnegative")
    k = CELL_SHAPE_K
    rate = lambda_bs * k
    with np.errstate(divide="ignore"):
        logpdf = (k * math.log(rate) + (k - 1) * np.log(s_arr)
                  - rate * s_arr - math.lgamma(k))
    out = np.where(s_arr > 0, np.exp(logpdf), 0.0)
    return out if out.ndim else float(out)


def users_per_bs_pmf(n, lambda_u2: float, lambda_bs: float):
    """PMF of the user count in a typical BS cell (Gamma-mixed Poisson)."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("count must be nonnegative")
    k = CELL_SHAPE_K
    klam = k * lambda_bs
    n_f = n_arr.astype(float)
    logp = (n_f * math.log(lambda_u2) if lambda_u2 > 0 else
            np.where(n_f == 0, 0.0, -np.inf))
    logp = logp + k * math.log(klam) \
        - (k + n_f) * math.log(lambda_u2 + klam) \
        + gammaln(k + n_f) - gammaln(n_f + 1) - math.lgamma(k)
    out = np.exp(logp)
    return out if out.ndim else float(out)


def users_per_bs_pmf_vector(lambda_u2: float, lambda_bs: float,
                            tail: float = 1e-9) -> DiscretePmf:
    """users_per_bs_pmf tabulated until the omitted tail is below ``tail``."""
    mean = lambda_u2 / lambda_bs
    sd = math.sqrt(mean + mean * mean / CELL_SHAPE_K) if mean else 0.0
    n_max = int(mean + 20 * sd + 40)
    mass = users_per_bs_pmf(np.arange(n_max + 1), lambda_u2, lambda_bs)
    csum = np.cumsum(mass)
    cut = int(np.searchsorted(csum, 1 - tail)) + 1
    mass = mass[:cut]
    return DiscretePmf(mass, max(0.0, 1.0 - float(mass.sum())),
                       {"kind": "users_per_bs", "lambda_u2": lambda_u2,
                        "lambda_bs": lambda_bs})


def ssr_count_intensity(tier: int, cfg: ScenarioConfig) -> float:
    """Mean number of tier-``tier`` nodes inside a D2D TX's sensing region."""
    tiers = TierParams.from_config(cfg)
    lam = tiers.intensity(tier)
    p = tiers.power(tier)
    beta = cfg.pathloss
    return (math.pi * lam
            * (p / (cfg.sense_threshold * cfg.fading_rate)) ** (2.0 / beta)
            * math.gamma(1 + 2.0 / beta))


def calibrate_sense_threshold(cfg: ScenarioConfig,
                              target_bs_count: float = 1.0) -> float:
    """Sensing threshold that puts ``target_bs_count`` BSs in the average SSR.

    Inverts the SSR-count intensity for tier 2; used for the default gamma
    when an experiment does not pin one.
    """
    beta = cfg.pathloss
    scale = target_bs_count / (math.pi * cfg.lambda_bs
                               * math.gamma(1 + 2.0 / beta))
    return cfg.power_bs / (cfg.fading_rate * scale ** (beta / 2.0))


# ---------------------------------------------------------------------------
# PPP sampling

@dataclass(frozen=True)
class PointPattern:
    """One sampled point pattern inside a square window."""

    xy: np.ndarray          # (n, 2) coordinates in meters
    intensity: float
    window_side: float

    def __post_init__(self):
        arr = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        arr.setflags(write=False)
        object.__setattr__(self, "xy", arr)
        if arr.size and (arr.min() < 0 or arr.max() > self.window_side):
            raise ValueError("points must lie inside the window")

    def __len__(self):
        return len(self.xy)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,y\n")
            for x, y in self.xy:
                fh.write(f"{x!r},{y!r}\n")


def sample_ppp(intensity: float, window_side: float,
               rng: np.random.Generator) -> PointPattern:
    """Sample a homogeneous PPP in a square window.

    Mutates only the caller-supplied ``rng``; parallel replications must use
    independent streams (see ``replication_rng``).
    """
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    n = rng.poisson(intensity * window_side * window_side)
    xy = rng.uniform(0.0, window_side, size=(n, 2))
    return PointPattern(xy, intensity, window_side)


def replication_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Independent RNG stream for one replication.

    Streams are derived from the master seed with numpy's SeedSequence
    spawn-key mechanism: stream (i, j, ...) maps to
    ``default_rng([master_seed, i, j, ...])``.
    """
    return np.random.default_rng([master_seed, *stream])


def toroidal_deltas(a: np.ndarray, b: np.ndarray, side: float) -> np.ndarray:
    """Coordinate differences a - b under wrap-around in the square window."""
    d = a - b
    return d - side * np.round(d / side)


def check_window(cfg: ScenarioConfig) -> None:
    """Warn when the window is small relative to the BS spacing.

    Monte Carlo oracles use toroidal wrap-around; a window below 8x the
    mean nearest-BS spacing still leaves visible periodic artifacts.
    """
    mean_spacing = 0.5 / math.sqrt(cfg.lambda_bs)
    if cfg.window_side < 8 * mean_spacing:
        warnings.warn(
            f"window_side {cfg.window_side:.0f} m is below 8x the mean BS "
            f"spacing ({mean_spacing:.0f} m); edge effects may be visible",
            stacklevel=2)
