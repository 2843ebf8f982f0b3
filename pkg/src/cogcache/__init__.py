"""cogcache: analytics and simulation for cache-enabled cognitive D2D networks."""

from .core import (ConfigError, DiscretePmf, ScenarioConfig, StabilityError,
                   cache_hit_prob, load_config, parse_config, validate_config,
                   zipf_pmf)
from .geometry import (PointPattern, SubsetSplit, TierParams,
                       calibrate_sense_threshold, cell_size_pdf, sample_ppp,
                       ssr_count_intensity, subset_split, tier_assoc_prob,
                       users_per_bs_pmf)
from .mqueue import (bs_delay_pgf, bs_delay_pmf, bs_queue_length_pmf,
                     bs_queue_pgf, idft_invert, invert_adaptive)
from .priority import (PriorityLoad, d2d_delay_pgf, d2d_delay_pmf,
                       d2d_queue_length_pmf, d2d_queue_pgf, heavy_load_cdf)
from .roots import ComplexRootSet, char_roots_inside, kth_roots, omega_roots, x_roots
from .simulator import (MetricsReport, NetworkRealization, build_realization,
                        run_slots, simulate, steady_classifier)

__all__ = [
    "ConfigError", "DiscretePmf", "ScenarioConfig", "StabilityError",
    "cache_hit_prob", "load_config", "parse_config", "validate_config",
    "zipf_pmf", "PointPattern", "SubsetSplit", "TierParams",
    "calibrate_sense_threshold", "cell_size_pdf", "sample_ppp",
    "ssr_count_intensity", "subset_split", "tier_assoc_prob",
    "users_per_bs_pmf", "bs_delay_pgf", "bs_delay_pmf", "bs_queue_length_pmf",
    "bs_queue_pgf", "idft_invert", "invert_adaptive", "PriorityLoad",
    "d2d_delay_pgf", "d2d_delay_pmf", "d2d_queue_length_pmf", "d2d_queue_pgf",
    "heavy_load_cdf", "ComplexRootSet", "char_roots_inside", "kth_roots",
    "omega_roots", "x_roots", "MetricsReport", "NetworkRealization",
    "build_realization", "run_slots", "simulate", "steady_classifier",
]

__version__ = "0.1.0"
