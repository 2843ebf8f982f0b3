"""Two-priority discrete-time multiserver queue seen by a D2D group.

The group of D2D TXs shares the channels left over by the heaviest-loaded
BS inside the sensing region.  High-priority arrivals come from that BS's
users, low-priority arrivals from the users attached to the D2D group; the
module evaluates the low-priority queue-length and delay transforms and
mixes them over the two (independent) conditioning counts.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DiscretePmf, ScenarioConfig, StabilityError, poisson_pmf_vector
from .geometry import ssr_count_intensity, subset_split
from .mqueue import (MAX_W, PgfEvaluator, _NEG_MASS_TOL, _beta_product,
                     _heuristic_w, cexpm1, idft_invert, invert_adaptive,
                     bs_user_count_pmf)
from .roots import RootError, char_roots_inside, omega_roots, x_roots

MARGINAL_TAIL = 1e-6


class PriorityLoad:
    """High/low/total offered load of one conditioned priority queue."""

    def __init__(self, lambda_high: float, lambda_low: float, servers: int):
        self.lambda_high = lambda_high
        self.lambda_low = lambda_low
        self.lambda_total = lambda_high + lambda_low
        self.servers = servers

    @property
    def stable(self) -> bool:
        return self.lambda_total < self.servers


def group_user_intensity(cfg: ScenarioConfig) -> float:
    """Mean number of users served by a D2D group (Subset-1 users in the SSR)."""
    p_u1 = subset_split(cfg).p_d2d
    beta = cfg.pathloss
    return (math.pi * p_u1 * cfg.lambda_user
            * (cfg.power_d2d / (cfg.sense_threshold * cfg.fading_rate)) ** (2.0 / beta)
            * math.gamma(1 + 2.0 / beta))


# ---------------------------------------------------------------------------
# Heaviest-load BS inside the SSR

def heavy_load_cdf(k: int, cfg: ScenarioConfig) -> float:
    """CDF of the user count under the heaviest-load BS in the SSR.

    The Poisson mixture over the number of in-SSR BSs has the closed form
    E[F(k)^N] = exp(-lam_g2 (1 - F(k))); an empty SSR contributes the empty
    max = 0.
    """
    if k < 0:
        return 0.0
    lam_g2 = ssr_count_intensity(2, cfg)
    n2_pmf = bs_user_count_pmf(cfg)
    cdf_n2 = float(n2_pmf.mass[:k + 1].sum())
    return math.exp(-lam_g2 * (1.0 - cdf_n2))


def heavy_load_pmf_vector(cfg: ScenarioConfig,
                          tail: float = MARGINAL_TAIL) -> DiscretePmf:
    """PMF of the heaviest-load user count, truncated to 1 - ``tail`` mass."""
    lam_g2 = ssr_count_intensity(2, cfg)
    n2_pmf = bs_user_count_pmf(cfg)
    cdf_n2 = np.minimum(np.cumsum(n2_pmf.mass), 1.0)
    cdf_k = np.exp(-lam_g2 * (1.0 - cdf_n2))
    mass = np.diff(cdf_k, prepend=0.0)
    mass[0] = cdf_k[0]
    cut = int(np.searchsorted(cdf_k, 1 - tail)) + 1
    mass = mass[:cut]
    return DiscretePmf(mass, max(0.0, 1.0 - float(mass.sum())),
                       {"kind": "heavy_load", "lambda_g2": lam_g2})


# ---------------------------------------------------------------------------
# Conditional PGFs

def _load(n_k: int, n_gu: int, cfg: ScenarioConfig) -> PriorityLoad:
    return PriorityLoad(n_k * cfg.request_rate, n_gu * cfg.request_rate,
                        cfg.num_channels)


def d2d_queue_pgf_evaluator(n_k: int, n_gu: int, cfg: ScenarioConfig,
                            root_cache=None) -> PgfEvaluator:
    """Conditional PGF of the low-priority (D2D group) queue length."""
    load = _load(n_k, n_gu, cfg)
    if not load.stable:
        raise StabilityError(f"total load {load.lambda_total} >= {load.servers}")
    c = load.servers
    lam_h, lam_l, lam_t = load.lambda_high, load.lambda_low, load.lambda_total
    meta = {"kind": "d2d_queue_length", "n_k": n_k, "n_gu": n_gu,
            "lam_h": lam_h, "lam_l": lam_l, "c": c}
    if lam_l == 0:
        return PgfEvaluator(lambda z: np.ones_like(z), meta)
    alphas = char_roots_inside(lam_t, c).roots

    def fn(z):
        x = _cached_x_roots(z, lam_h, lam_l, c, root_cache)
        u = z - 1
        at_one = np.abs(u) == 0
        pref = np.exp(lam_l * u) * (c - lam_t) * u / \
            np.where(at_one, 1.0, -cexpm1(lam_l * u))
        prod_x = np.prod((1 - x) / np.where(at_one[..., None], 1.0,
                                            z[..., None] - x), axis=-1)
        val = pref * prod_x * _beta_product(z, alphas)
        return np.where(at_one, 1.0, val)

    return PgfEvaluator(fn, meta)


def d2d_queue_pgf(z, n_k: int, n_gu: int, cfg: ScenarioConfig):
    return d2d_queue_pgf_evaluator(n_k, n_gu, cfg)(np.asarray(z, dtype=complex))


def d2d_delay_pgf_evaluator(n_k: int, n_gu: int, cfg: ScenarioConfig,
                            root_cache=None) -> PgfEvaluator:
    """Conditional PGF of the low-priority request delay (in slots)."""
    load = _load(n_k, n_gu, cfg)
    if not load.stable:
        raise StabilityError(f"total load {load.lambda_total} >= {load.servers}")
    c = load.servers
    lam_h, lam_l, lam_t = load.lambda_high, load.lambda_low, load.lambda_total
    meta = {"kind": "d2d_delay", "n_k": n_k, "n_gu": n_gu,
            "lam_h": lam_h, "lam_l": lam_l, "c": c}
    alphas = char_roots_inside(lam_t, c).roots

    def q_t(z, v):
        """Q_T evaluated at v = omega_i(z), using v^c = z exp(lam_h (v-1))."""
        e_low = cexpm1(lam_l * (v - 1))
        if lam_l > 0:
            core = (c - lam_t) * e_low / (lam_l * ((z[..., None] - 1) - e_low))
        else:
            # lam_l -> 0 limit: the virtual low request only waits for the
            # high class
            core = (c - lam_t) * (v - 1) / (z[..., None] - 1)
        return core * _beta_product(v, alphas)

    def fn(z):
        if np.any(z == 0):
            raise ValueError("delay PGF undefined at z = 0")
        at_one = np.abs(z - 1) == 0
        z_safe = np.where(at_one, -1.0, z)
        omg = _cached_omega_roots(z_safe, lam_h, c, root_cache)
        idx = np.arange(c)
        diff = omg[..., :, None] - omg[..., None, :]          # w_i - w_j
        diff[..., idx, idx] = 1.0
        ratio = (1 - omg)[..., None, :] / diff                # skip j = i
        ratio[..., idx, idx] = 1.0
        r = z_safe[..., None] * np.prod(ratio, axis=-1)
        val = np.sum(r * q_t(z_safe, omg), axis=-1)
        return np.where(at_one, 1.0, val)

    return PgfEvaluator(fn, meta)


def d2d_delay_pgf(z, n_k: int, n_gu: int, cfg: ScenarioConfig):
    return d2d_delay_pgf_evaluator(n_k, n_gu, cfg)(np.asarray(z, dtype=complex))


# ---------------------------------------------------------------------------
# Root caching with warm starts across mixture terms
#
# Mixture terms are visited in load order, so the previous term's root grid
# is an excellent Newton warm start.  One grid is retained per family and
# grid shape, since the transform size steps up and down between terms.

def _cached_roots(kind, key, solver, cache):
    start = None
    slot = (kind, key[0])
    if cache is not None:
        prev_key, prev_roots = cache.get(slot, (None, None))
        if prev_key == key:
            return prev_roots
        if prev_roots is not None:
            start = prev_roots
    try:
        roots = solver(start).roots
    except RootError:
        roots = solver(None).roots
    if cache is not None:
        cache[slot] = (key, roots)
    return roots


def _cached_x_roots(z, lam_h, lam_l, c, cache):
    z = np.asarray(z, dtype=complex)
    lam_l = np.asarray(lam_l, dtype=float)
    shape = np.broadcast(np.empty(z.shape), np.empty(lam_l.shape)).shape
    key = (shape, round(lam_h, 12), lam_l.tobytes())
    start_fallback = None
    if cache is not None and ("x", shape) not in cache and len(shape) == 2:
        # a previous n_k solved a taller row stack (the same low loads plus
        # heavier ones): its leading rows are still a good warm start
        for slot, entry in cache.items():
            if not (isinstance(slot, tuple) and slot[0] == "x"):
                continue
            prev = entry[1]
            shape2 = slot[1]
            if len(shape2) == 2 and shape2[1] == shape[1] \
                    and shape2[0] > shape[0]:
                start_fallback = prev[:shape[0]]
                break

    attempt = [0]

    def solve(s):
        attempt[0] += 1
        if s is None and attempt[0] == 1:
            s = start_fallback
        return x_roots(z, lam_h, lam_l, c, start=s)

    return _cached_roots("x", key, solve, cache)


def _cached_omega_roots(z, lam_h, c, cache):
    z = np.asarray(z, dtype=complex)
    key = (z.shape, round(lam_h, 12))
    attempt = [0]

    def solve(s):
        attempt[0] += 1
        if s is None and attempt[0] == 1 and z.ndim == 1 and len(z) > 256 \
                and cache is not None:
            # the half-size unit-circle grid is the even subgrid of this one,
            # so its (cheaply cached) roots warm-start both halves and spare
            # the slow cold contraction on large grids
            half = _cached_omega_roots(z[::2], lam_h, c, cache)
            s = np.repeat(half, 2, axis=0)
        return omega_roots(z, lam_h, c, start=s)

    return _cached_roots("omega", key, solve, cache)


# ---------------------------------------------------------------------------
# Mixtures over (N_K, N_gamma_u), conditioned on steady D2D groups
#
# The mixture has O(10^3) stable (N_K, N_gamma_u) pairs.  For a fixed N_K
# the omega-root family and the Lagrange weights of the delay transform do
# not depend on N_gamma_u, and the x-root families for all N_gamma_u solve
# in one broadcast Newton pass, so terms are evaluated in batches: one batch
# per (N_K, transform size) with the whole N_gamma_u sweep vectorized.

def _alphas_cached(lam_t: float, c: int, cache) -> np.ndarray:
    """In-disk characteristic roots, shared across equal total loads."""
    store = cache.setdefault("alphas", {})
    key = round(lam_t, 12)
    if key not in store:
        store[key] = char_roots_inside(lam_t, c).roots
    return store[key]


def _tier_pgf_values(kind: str, n_k: int, rows, cfg: ScenarioConfig,
                     w_size: int, cache) -> np.ndarray:
    """PGF values on the W-point unit-circle grid, one row per n_gu."""
    c = cfg.num_channels
    lam_u = cfg.request_rate
    lam_h = n_k * lam_u
    z = np.exp(2j * np.pi * np.arange(w_size) / w_size)
    lam_l = np.array([g * lam_u for g, _ in rows])
    lam_t = lam_h + lam_l
    vals = np.ones((len(rows), w_size), dtype=complex)
    if kind == "d2d_queue_length":
        pos = lam_l > 0  # a row with no low arrivals keeps PGF = 1
        if np.any(pos):
            alphas = np.stack([_alphas_cached(lt, c, cache)
                               for lt in lam_t[pos]])
            ll = lam_l[pos, None]
            lt = lam_t[pos, None]
            x = _cached_x_roots(z, lam_h, ll, c, cache)
            u = z - 1
            with np.errstate(invalid="ignore", divide="ignore"):
                pref = np.exp(ll * u) * (c - lt) * u / (-cexpm1(ll * u))
                prod_x = np.prod((1 - x) / (z[None, :, None] - x), axis=-1)
            beta = np.prod((z[None, :, None] - alphas[:, None, :])
                           / (1 - alphas[:, None, :]), axis=-1)
            row_vals = pref * prod_x * beta
            row_vals[:, 0] = 1.0  # z = 1 (grid point 0) normalizes exactly
            vals[pos] = row_vals
    else:
        z_safe = z.copy()
        z_safe[0] = -1.0  # z = 1 is patched to the exact limit below
        omg = _cached_omega_roots(z_safe, lam_h, c, cache)
        idx = np.arange(c)
        diff = omg[:, :, None] - omg[:, None, :]
        diff[:, idx, idx] = 1.0
        ratio = (1 - omg)[:, None, :] / diff
        ratio[:, idx, idx] = 1.0
        r = z_safe[:, None] * np.prod(ratio, axis=-1)
        zm1 = z_safe[:, None] - 1
        for i, (g, _) in enumerate(rows):
            e_low = cexpm1(lam_l[i] * (omg - 1))
            if lam_l[i] > 0:
                core = (c - lam_t[i]) * e_low / (lam_l[i] * (zm1 - e_low))
            else:
                # lam_l -> 0 limit: the virtual low request only waits for
                # the high class
                core = (c - lam_t[i]) * (omg - 1) / zm1
            qt = core * _beta_product(omg, _alphas_cached(lam_t[i], c, cache))
            vals[i] = np.sum(r * qt, axis=-1)
        vals[:, 0] = 1.0
    return vals


def _invert_rows(vals: np.ndarray, w_size: int):
    """Row-wise IDFT inversion; returns (mass rows, aliasing bounds)."""
    mass = np.fft.fft(vals, axis=-1).real / w_size
    neg_min = float(mass.min())
    if neg_min < -_NEG_MASS_TOL:
        raise ValueError(f"IDFT produced negative mass {neg_min:.3e}; "
                         "the PGF or its roots are unreliable")
    clipped = np.where(mass < 0, -mass, 0.0).sum(axis=-1)
    mass = np.clip(mass, 0.0, 1.0)
    tail_window = max(1, w_size // 20)
    alias = mass[:, -tail_window:].sum(axis=-1) + clipped
    mass = mass / mass.sum(axis=-1, keepdims=True)
    return mass, alias


def _d2d_mixture(cfg: ScenarioConfig, kind: str,
                 skip_empty_low: bool) -> DiscretePmf:
    lam_gu = group_user_intensity(cfg)
    if cfg.alpha == 0 or lam_gu == 0:
        return DiscretePmf(np.ones(1), 0.0,
                           {"kind": kind, "degenerate": True,
                            "reason": "no D2D traffic (alpha = 0)"})
    c = cfg.num_channels
    lam_u = cfg.request_rate
    nk_pmf = heavy_load_pmf_vector(cfg)
    ngu_mass = poisson_pmf_vector(lam_gu, tail=MARGINAL_TAIL)
    cache = {}
    acc = np.zeros(1)
    used_mass = 0.0
    first_gu = 1 if skip_empty_low else 0
    for n_k, w_k in enumerate(nk_pmf.mass):
        lam_h = n_k * lam_u
        if lam_h + first_gu * lam_u >= c:
            break
        rows_all = [(g, w_k * float(ngu_mass[g]))
                    for g in range(first_gu, len(ngu_mass))
                    if lam_h + g * lam_u < c]
        rows_all = [(g, w) for g, w in rows_all if w >= 1e-12]
        if not rows_all:
            continue
        tiers: dict[int, list] = {}
        for g, w in rows_all:
            tiers.setdefault(_heuristic_w(lam_h + g * lam_u, c), []).append((g, w))
        for w_size, rows in sorted(tiers.items()):
            while True:
                vals = _tier_pgf_values(kind, n_k, rows, cfg, w_size, cache)
                mass, alias = _invert_rows(vals, w_size)
                if float(alias.max()) <= 1e-8 or w_size >= MAX_W:
                    break
                w_size *= 2
            wv = np.array([w for _, w in rows])
            contrib = wv @ mass
            if len(contrib) > len(acc):
                acc = np.pad(acc, (0, len(contrib) - len(acc)))
            acc[:len(contrib)] += contrib
            used_mass += float(wv.sum())
    if used_mass <= 0:
        raise StabilityError("no steady D2D group exists under this configuration")
    conditioning = "steady D2D groups"
    if skip_empty_low:
        conditioning += " with at least one attached user"
    out = DiscretePmf.from_unnormalized(
        acc, meta={"kind": kind, "conditioning": conditioning,
                   "stable_mass": used_mass, "lambda_gu": lam_gu})
    return out.trimmed(1e-12)


def d2d_queue_length_pmf(cfg: ScenarioConfig) -> DiscretePmf:
    """Low-priority queue-length PMF, conditioned on steady D2D groups."""
    return _d2d_mixture(cfg, "d2d_queue_length", skip_empty_low=False)


def d2d_delay_pmf(cfg: ScenarioConfig) -> DiscretePmf:
    """Low-priority delay PMF, conditioned on steady D2D groups that carry
    traffic (groups with no attached user generate no requests)."""
    return _d2d_mixture(cfg, "d2d_delay", skip_empty_low=True)
