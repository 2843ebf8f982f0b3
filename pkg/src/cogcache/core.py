"""Experiment configuration, Zipf content model and shared PMF container."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np

PMF_SUM_TOL = 1e-9
PUBLIC_TAIL_TOL = 1e-6


class ConfigError(ValueError):
    """Raised when a ScenarioConfig violates one or more invariants.

    The ``violations`` attribute lists every failed invariant, not just
    the first one encountered.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config: " + "; ".join(self.violations))


class StabilityError(ValueError):
    """Raised when an offered load is incompatible with a steady queue."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical, content and queueing parameters of one experiment.

    Powers are stored linear (watts); the config-file reader accepts
    ``*_dbm`` keys and converts.  Intensities are in nodes/m^2, the request
    rate in requests per 1-second slot.
    """

    lambda_user: float
    lambda_bs: float
    alpha: float
    power_d2d: float
    power_bs: float
    pathloss: float
    sense_threshold: float
    fading_rate: float
    num_channels: int
    request_rate: float
    library_size: int
    cache_size: int
    zipf_exponent: float
    window_side: float
    seed: int

    def violations(self) -> list[str]:
        v = []
        for name in ("lambda_user", "lambda_bs", "power_d2d", "power_bs",
                     "sense_threshold", "fading_rate", "request_rate",
                     "window_side"):
            if not getattr(self, name) > 0:
                v.append(f"{name} must be strictly positive")
        if not 0 <= self.alpha <= 1:
            v.append("alpha must lie in [0, 1]")
        if self.lambda_user < self.lambda_bs:
            v.append("lambda_user must be >= lambda_bs")
        if self.pathloss < 2:
            v.append("pathloss must be >= 2")
        if self.num_channels < 1:
            v.append("num_channels must be a positive integer")
        if not 1 <= self.cache_size:
            v.append("cache_size must be >= 1")
        if self.cache_size >= self.library_size:
            v.append("cache_size must be strictly smaller than library_size")
        if self.request_rate >= self.num_channels:
            v.append("stability impossible: request_rate must be < num_channels")
        return v


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Return ``cfg`` unchanged if every invariant holds, else raise ConfigError.

    Emits a warning (without rejecting) when the user density is less than
    ten times the BS density, which strains the dense-user assumption.
    """
    bad = cfg.violations()
    if bad:
        raise ConfigError(bad)
    if cfg.lambda_user < 10 * cfg.lambda_bs:
        warnings.warn("lambda_user < 10 * lambda_bs: the analysis assumes a "
                      "user density far above the BS density", stacklevel=2)
    return cfg


_CONFIG_FIELDS = {"lambda_user", "lambda_bs", "alpha", "power_d2d",
                  "power_bs", "pathloss", "sense_threshold", "fading_rate",
                  "num_channels", "request_rate", "library_size",
                  "cache_size", "zipf_exponent", "window_side", "seed"}
_INT_FIELDS = {"num_channels", "library_size", "cache_size", "seed"}
_DBM_FIELDS = {"power_d2d", "power_bs", "sense_threshold"}


def parse_config(text: str) -> ScenarioConfig:
    """Parse the flat ``key = value`` config format.

    One key per line, ``#`` starts a comment.  Keys match ScenarioConfig
    field names exactly; power-like keys may carry a ``_dbm`` suffix in
    which case the value is converted from dBm to watts.
    """
    values: dict[str, float] = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        base = key[:-4] if key.endswith("_dbm") else key
        if base not in _CONFIG_FIELDS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key.endswith("_dbm") and base not in _DBM_FIELDS:
            errors.append(f"line {lineno}: {base!r} does not accept dBm input")
            continue
        try:
            num = float(val)
        except ValueError:
            errors.append(f"line {lineno}: cannot parse value {val!r}")
            continue
        if key.endswith("_dbm"):
            num = dbm_to_watt(num)
        if base in _INT_FIELDS:
            if num != int(num):
                errors.append(f"line {lineno}: {base} must be an integer")
                continue
            num = int(num)
        values[base] = num
    missing = _CONFIG_FIELDS - values.keys()
    if missing:
        errors.append("missing keys: " + ", ".join(sorted(missing)))
    if errors:
        raise ConfigError(errors)
    return validate_config(ScenarioConfig(**values))


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def config_with(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    return validate_config(replace(cfg, **kw))


# ---------------------------------------------------------------------------
# Zipf content model

def zipf_pmf(i, nu: float, n_lib: int):
    """Request probability of the rank-``i`` content under a Zipf law.

    Normalizer computed by direct summation over the library, which is
    exact for the library sizes in scope.  Accepts scalar or array ranks.
    """
    if nu < 0:
        raise ValueError("zipf exponent must be >= 0")
    i_arr = np.asarray(i)
    if np.any(i_arr < 1) or np.any(i_arr > n_lib) or np.any(i_arr != np.floor(i_arr)):
        raise ValueError(f"content rank must be an integer in [1, {n_lib}]")
    norm = np.sum(np.arange(1, n_lib + 1, dtype=float) ** -nu)
    out = (i_arr.astype(float) ** -nu) / norm
    return out if out.ndim else float(out)


def cache_hit_prob(m: int, nu: float, n_lib: int) -> float:
    """Probability that a request falls in the ``m`` most popular contents."""
    if not 1 <= m < n_lib:
        raise ValueError("cache size m must satisfy 1 <= m < library size")
    ranks = np.arange(1, n_lib + 1, dtype=float) ** -nu
    return float(ranks[:m].sum() / ranks.sum())


def zipf_cdf_table(nu: float, n_lib: int) -> np.ndarray:
    """Cumulative Zipf probabilities, used for inverse-CDF content sampling."""
    w = np.arange(1, n_lib + 1, dtype=float) ** -nu
    return np.cumsum(w) / w.sum()


# ---------------------------------------------------------------------------
# Discrete PMF container

@dataclass(frozen=True)
class DiscretePmf:
    """Normalized PMF over n = 0, 1, 2, ... with explicit truncation metadata.

    ``truncation_tail`` bounds the probability mass omitted from ``mass``;
    the stored masses plus the tail account for all probability within
    PMF_SUM_TOL.
    """

    mass: np.ndarray
    truncation_tail: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.mass, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "mass", arr)
        if arr.ndim != 1:
            raise ValueError("mass must be a 1-D vector")
        if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12):
            raise ValueError("PMF entries must lie in [0, 1]")
        total = float(arr.sum()) + self.truncation_tail
        if abs(total - 1.0) > PMF_SUM_TOL:
            raise ValueError(f"PMF mass + tail = {total!r}, expected 1")

    @classmethod
    def from_unnormalized(cls, mass, truncation_tail=0.0, meta=None):
        arr = np.clip(np.asarray(mass, dtype=float), 0.0, None)
        total = arr.sum() + truncation_tail
        return cls(arr / total, truncation_tail / total, meta or {})

    def __len__(self):
        return len(self.mass)

    def mean(self) -> float:
        return float(np.arange(len(self.mass)) @ self.mass)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    def quantile(self, q: float) -> int:
        return int(np.searchsorted(self.cdf(), q))

    def trimmed(self, tol: float = 1e-12) -> "DiscretePmf":
        """Drop the trailing masses whose total is below ``tol``."""
        tail = np.cumsum(self.mass[::-1])[::-1]
        keep = int(np.argmax(tail < tol)) if tail[-1] < tol else len(self.mass)
        keep = max(keep, 1)
        dropped = float(self.mass[keep:].sum())
        return DiscretePmf(self.mass[:keep].copy(),
                           self.truncation_tail + dropped, dict(self.meta))

    def tv_distance(self, other: "DiscretePmf") -> float:
        n = max(len(self), len(other))
        a = np.zeros(n)
        b = np.zeros(n)
        a[:len(self)] = self.mass
        b[:len(other)] = other.mass
        # omitted tails are disjointly placed in the worst case
        return 0.5 * (float(np.abs(a - b).sum())
                      + self.truncation_tail + other.truncation_tail)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("n,probability\n")
            for n, p in enumerate(self.mass):
                fh.write(f"{n},{float(p)!r}\n")

    def to_json_dict(self) -> dict:
        return {"mass": self.mass.tolist(),
                "truncation_tail": self.truncation_tail,
                "meta": self.meta}

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @classmethod
    def point_mass(cls, n: int, meta=None) -> "DiscretePmf":
        mass = np.zeros(n + 1)
        mass[n] = 1.0
        return cls(mass, 0.0, meta or {})


def poisson_pmf_vector(lam: float, tail: float = 1e-12) -> np.ndarray:
    """Poisson masses 0..n_max where the omitted tail is below ``tail``."""
    if lam == 0:
        return np.ones(1)
    n_max = int(lam + 12 * math.sqrt(lam) + 30)
    n = np.arange(n_max + 1)
    from scipy import stats
    mass = stats.poisson.pmf(n, lam)
    csum = np.cumsum(mass)
    cut = int(np.searchsorted(csum, 1 - tail)) + 1
    return mass[:cut]
