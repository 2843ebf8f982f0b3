"""Single-class discrete-time multiserver queue at the BS.

Provides the conditional PGFs of the queue length and the delay given the
number of attached users, numerical PGF inversion on the unit circle, and
the user-count mixture conditioned on steady BSs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DiscretePmf, ScenarioConfig, StabilityError
from .geometry import subset_split, users_per_bs_pmf_vector
from .roots import ComplexRootSet, char_roots_inside, kth_roots

DEFAULT_W = 4096
MAX_W = 1 << 17
PGF_NORM_TOL = 1e-8
_NEG_MASS_TOL = 1e-9


def cexpm1(w):
    """exp(w) - 1 for complex w, accurate near w = 0.

    numpy's expm1 is real-only; for small |w| a short Taylor series keeps
    full relative accuracy where direct evaluation cancels.
    """
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 1e-4
    ws = np.where(small, w, 0.0)
    series = ws * (1 + ws / 2 * (1 + ws / 3 * (1 + ws / 4 * (1 + ws / 5))))
    return np.where(small, series, np.exp(np.where(small, 0.0, w)) - 1.0)


def _den_zc_minus_exp(z, lam: float, c: int):
    """z^c - exp(lam (z-1)) with the near-z=1 cancellation removed.

    Written as a power series in u = z - 1 when |u| is small; both terms
    are O(c u) there while the difference is only O((c - lam) u).
    """
    z = np.asarray(z, dtype=complex)
    u = z - 1
    direct = z ** c - np.exp(lam * (u))
    small = np.abs(u) < 1e-3
    if np.any(small):
        us = np.where(small, u, 0.0)
        acc = np.zeros_like(us)
        binom = 1.0
        lam_pow = 1.0
        fact = 1.0
        term = np.ones_like(us)
        for m in range(1, 9):
            binom = binom * (c - m + 1) / m if m <= c else 0.0
            lam_pow *= lam
            fact *= m
            term = term * us
            acc = acc + (binom - lam_pow / fact) * term
        direct = np.where(small, acc, direct)
    return direct


@dataclass(frozen=True)
class PgfEvaluator:
    """Vectorized map z -> PGF(z) on the closed unit disk, with metadata."""

    fn: Callable[[np.ndarray], np.ndarray]
    meta: dict

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=complex))


def _beta_product(z, roots: np.ndarray):
    """prod (z - b_i) / (1 - b_i) along the root axis."""
    if len(roots) == 0:
        return np.ones_like(np.asarray(z, dtype=complex))
    z = np.asarray(z, dtype=complex)
    return np.prod((z[..., None] - roots) / (1 - roots), axis=-1)


def bs_queue_pgf_evaluator(n2: int, cfg: ScenarioConfig) -> PgfEvaluator:
    """Conditional PGF of the BS queue length given ``n2`` attached users."""
    c = cfg.num_channels
    lam = n2 * cfg.request_rate
    if lam >= c:
        raise StabilityError(f"n2*lambda_u = {lam} >= {c} channels")
    meta = {"kind": "bs_queue_length", "n2": n2, "lambda": lam, "c": c}
    if lam == 0:
        return PgfEvaluator(lambda z: np.ones_like(z), meta)
    betas = char_roots_inside(lam, c).roots

    def fn(z):
        u = z - 1
        num = np.exp(lam * u) * (c - lam) * u
        den = _den_zc_minus_exp(z, lam, c)
        at_one = np.abs(u) == 0
        val = np.where(at_one, 1.0,
                       num / np.where(at_one, 1.0, den)) * \
            np.where(at_one, 1.0, _beta_product(z, betas))
        return val

    return PgfEvaluator(fn, meta)


def bs_queue_pgf(z, n2: int, cfg: ScenarioConfig):
    return bs_queue_pgf_evaluator(n2, cfg)(z)


def bs_delay_pgf_evaluator(n2: int, cfg: ScenarioConfig) -> PgfEvaluator:
    """Conditional PGF of the queueing delay (in slots) at a BS."""
    c = cfg.num_channels
    lam = n2 * cfg.request_rate
    if lam >= c:
        raise StabilityError(f"n2*lambda_u = {lam} >= {c} channels")
    meta = {"kind": "bs_delay", "n2": n2, "lambda": lam, "c": c}
    if lam == 0:
        # zero arrivals: a (hypothetical) request is served next slot
        return PgfEvaluator(lambda z: np.asarray(z, dtype=complex), meta)
    betas = char_roots_inside(lam, c).roots

    def fn(z):
        if np.any(z == 0):
            raise ValueError("delay PGF undefined at z = 0")
        k = np.arange(c)
        v = np.abs(z[..., None]) ** (1.0 / c) * \
            np.exp(1j * (np.angle(z[..., None]) + 2 * np.pi * k) / c)
        zc = z[..., None]            # v^c == z by construction
        e1 = cexpm1(lam * (v - 1))   # exp(lam(v-1)) - 1
        den = (zc - 1) - e1          # v^c - exp(lam(v-1))
        vm1 = v - 1
        # the k = 0 branch at z = 1 is the only 0/0 point; patch it to its
        # analytic limit 1 (all other branches vanish there)
        sing = (np.abs(vm1) < 1e-14)
        safe = lambda a: np.where(sing, 1.0, a)
        term = ((zc - 1) * v) / safe(c * vm1) \
            * ((c - lam) * e1) / safe(lam * den) \
            * _beta_product(v, betas)
        term = np.where(sing, 1.0, term)
        return np.sum(term, axis=-1)

    return PgfEvaluator(fn, meta)


def bs_delay_pgf(z, n2: int, cfg: ScenarioConfig):
    return bs_delay_pgf_evaluator(n2, cfg)(z)


# ---------------------------------------------------------------------------
# IDFT inversion

def idft_invert(pgf, w_size: int, meta=None) -> DiscretePmf:
    """Invert a PGF by sampling on W unit-circle points and applying a DFT.

    Aliasing folds P(n + m W) into entry n; the recorded truncation_tail is
    the total clipped-negative mass plus the observed tail mass near n = W,
    a practical bound on the aliasing error.
    """
    if w_size < 256 or w_size & (w_size - 1):
        raise ValueError("W must be a power of two >= 256")
    grid = np.exp(2j * np.pi * np.arange(w_size) / w_size)
    vals = np.asarray(pgf(grid), dtype=complex)
    mass = np.real(np.fft.fft(vals)) / w_size
    neg = mass[mass < 0]
    if neg.size and neg.min() < -_NEG_MASS_TOL:
        raise ValueError(f"IDFT produced negative mass {neg.min():.3e}; "
                         "the PGF or its roots are unreliable")
    clipped = float(-neg.sum()) if neg.size else 0.0
    mass = np.clip(mass, 0.0, 1.0)
    tail_window = max(1, w_size // 20)
    alias_bound = float(mass[-tail_window:].sum()) + clipped
    total = mass.sum()
    mass = mass / total
    md = dict(getattr(pgf, "meta", {}) or {})
    if meta:
        md.update(meta)
    md["w_size"] = w_size
    md["aliasing_bound"] = alias_bound
    return DiscretePmf(mass, 0.0, md).trimmed(1e-14)


def invert_adaptive(pgf, w_start: int = DEFAULT_W, sup_tol: float = 1e-8,
                    max_w: int = MAX_W) -> DiscretePmf:
    """Invert with automatic W doubling until the PMF is W-stable.

    Doubling stops when consecutive inversions differ by less than
    ``sup_tol`` in sup norm, the aliasing-control rule for the transform
    size.
    """
    w = w_start
    prev = idft_invert(pgf, w)
    while w < max_w:
        w *= 2
        cur = idft_invert(pgf, w)
        n = len(prev.mass)
        if np.max(np.abs(cur.mass[:n] - prev.mass[:n])) < sup_tol \
                and float(cur.mass[n:].sum()) < sup_tol:
            return cur
        prev = cur
    return prev


def _heuristic_w(lam: float, c: int) -> int:
    """Starting transform size scaled to the near-saturation tail length.

    The queue tail decays like z0^-n where z0 > 1 solves z^c = exp(lam(z-1));
    near saturation z0 - 1 ~ 2(c - lam)/c, so ~9.2 c / (c - lam) entries push
    the geometric tail below 1e-8.  A 50% margin absorbs the delay transform,
    whose tail is somewhat longer; the aliasing check doubles W if needed.
    """
    gap = max(c - lam, 1e-6)
    need = 64 + 14 * c / gap + 2 * c
    w = 256
    while w < need and w < MAX_W:
        w *= 2
    return w


# ---------------------------------------------------------------------------
# Mixture over the per-BS user count

def bs_user_count_pmf(cfg: ScenarioConfig) -> DiscretePmf:
    """Per-cell user-count PMF at this scenario's BS-served user intensity."""
    lam_u2 = subset_split(cfg).p_bs * cfg.lambda_user
    return users_per_bs_pmf_vector(lam_u2, cfg.lambda_bs)


def _bs_mixture(cfg: ScenarioConfig, evaluator_for, kind: str) -> DiscretePmf:
    c = cfg.num_channels
    n2_pmf = bs_user_count_pmf(cfg)
    n_stable = math.ceil(c / cfg.request_rate)  # n2 ranges 0 .. n_stable-1
    weights = n2_pmf.mass[:n_stable]
    stable_mass = float(weights.sum())
    if stable_mass <= 0:
        raise StabilityError("no steady BS exists under this configuration")
    acc = np.zeros(1)
    for n2, wgt in enumerate(weights):
        if wgt < 1e-12:
            continue
        lam = n2 * cfg.request_rate
        pmf = invert_adaptive(evaluator_for(n2), _heuristic_w(lam, c))
        if len(pmf.mass) > len(acc):
            acc = np.pad(acc, (0, len(pmf.mass) - len(acc)))
        acc[:len(pmf.mass)] += wgt * pmf.mass
    out = DiscretePmf.from_unnormalized(
        acc, meta={"kind": kind, "conditioning": "steady BSs",
                   "stable_mass": stable_mass,
                   "raw_weights_sum": stable_mass})
    return out.trimmed(1e-12)


def bs_queue_length_pmf(cfg: ScenarioConfig) -> DiscretePmf:
    """Queue-length PMF at a BS, conditioned on steady BSs."""
    return _bs_mixture(cfg, lambda n2: bs_queue_pgf_evaluator(n2, cfg),
                       "bs_queue_length")


def bs_delay_pmf(cfg: ScenarioConfig) -> DiscretePmf:
    """Request-delay PMF at a BS, conditioned on steady BSs."""
    return _bs_mixture(cfg, lambda n2: bs_delay_pgf_evaluator(n2, cfg),
                       "bs_delay")
