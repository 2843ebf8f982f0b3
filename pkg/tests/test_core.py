"""Config parsing, Zipf popularity, and DiscretePmf container tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogcache.core import (ConfigError, DiscretePmf, ScenarioConfig,
                           cache_hit_prob, config_to_dict, config_with,
                           dbm_to_watt, parse_config, poisson_pmf_vector,
                           validate_config, zipf_cdf_table, zipf_pmf)

GOOD_CFG = """
lambda_user = 1.2732395447351628e-4
lambda_bs   = 1.2732395447351628e-6
alpha       = 0.5
power_d2d_dbm = 23
power_bs_dbm  = 43
pathloss      = 4.0
fading_rate   = 1.0
sense_threshold = 2.5073205722763185e-10
num_channels = 10
request_rate = 0.09
library_size  = 200
cache_size    = 10
zipf_exponent = 1.0
window_side = 2000.0
seed        = 42
"""


@pytest.fixture
def cfg():
    return parse_config(GOOD_CFG)


class TestParseConfig:
    def test_happy_path(self, cfg):
        assert cfg.num_channels == 10
        assert isinstance(cfg.num_channels, int)
        assert cfg.alpha == 0.5

    def test_dbm_conversion(self, cfg):
        assert cfg.power_d2d == pytest.approx(dbm_to_watt(23))
        assert cfg.power_bs == pytest.approx(10 ** (43 / 10) * 1e-3)

    def test_comments_and_blank_lines_ignored(self, cfg):
        text = GOOD_CFG + "\n# a comment\n\nseed = 42  # trailing\n"
        assert parse_config(text) == cfg

    def test_missing_key_lists_name(self):
        broken = GOOD_CFG.replace("seed        = 42", "")
        with pytest.raises(ConfigError, match="seed"):
            parse_config(broken)

    def test_unknown_key_rejected_with_line(self):
        with pytest.raises(ConfigError, match="line"):
            parse_config(GOOD_CFG + "bogus_key = 1\n")

    def test_non_integer_channel_count_rejected(self):
        broken = GOOD_CFG.replace("num_channels = 10", "num_channels = 2.5")
        with pytest.raises(ConfigError, match="integer"):
            parse_config(broken)

    def test_dbm_suffix_only_on_power_like_keys(self):
        with pytest.raises(ConfigError, match="dBm"):
            parse_config(GOOD_CFG + "alpha_dbm = 1\n")

    def test_round_trip_through_dict(self, cfg):
        d = config_to_dict(cfg)
        assert ScenarioConfig(**d) == cfg

    def test_config_with_replaces_and_validates(self, cfg):
        assert config_with(cfg, alpha=0.8).alpha == 0.8
        with pytest.raises(ConfigError):
            config_with(cfg, alpha=1.5)


class TestValidation:
    def test_alpha_bounds(self, cfg):
        for bad in (-0.1, 1.0001):
            with pytest.raises(ConfigError, match="alpha"):
                validate_config(
                    ScenarioConfig(**{**config_to_dict(cfg), "alpha": bad}))

    def test_unstable_request_rate_rejected(self, cfg):
        d = {**config_to_dict(cfg), "request_rate": 10.0}
        with pytest.raises(ConfigError, match="stability"):
            validate_config(ScenarioConfig(**d))

    def test_cache_must_fit_inside_library(self, cfg):
        d = {**config_to_dict(cfg), "cache_size": 200}
        with pytest.raises(ConfigError, match="cache_size"):
            validate_config(ScenarioConfig(**d))

    def test_sparse_users_warn_but_pass(self, cfg):
        d = {**config_to_dict(cfg), "lambda_user": cfg.lambda_bs * 2}
        with pytest.warns(UserWarning, match="user density"):
            validate_config(ScenarioConfig(**d))


class TestZipf:
    def test_pmf_matches_direct_ratio(self):
        # oracle: i^-nu / sum_j j^-nu computed with plain floats
        nu, n = 0.8, 50
        h = sum(j ** -nu for j in range(1, n + 1))
        for i in (1, 7, 50):
            assert zipf_pmf(i, nu, n) == pytest.approx(i ** -nu / h, rel=1e-12)

    def test_pmf_sums_to_one(self):
        total = sum(zipf_pmf(i, 1.0, 200) for i in range(1, 201))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_hit_prob_is_top_m_mass(self):
        p = sum(zipf_pmf(i, 1.0, 200) for i in range(1, 11))
        assert cache_hit_prob(10, 1.0, 200) == pytest.approx(p, rel=1e-12)

    def test_cdf_table_monotone_and_complete(self):
        cdf = zipf_cdf_table(1.0, 200)
        assert len(cdf) == 200
        assert np.all(np.diff(cdf) > 0)
        assert cdf[-1] == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(0.4, 2.0), st.integers(2, 300))
    @settings(max_examples=50, deadline=None)
    def test_popularity_is_decreasing(self, nu, n):
        vals = [zipf_pmf(i, nu, n) for i in range(1, n + 1)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


class TestDiscretePmf:
    def test_point_mass(self):
        p = DiscretePmf.point_mass(3)
        assert p.mass[3] == 1.0 and p.mass.sum() == 1.0

    def test_from_unnormalized_clips_and_normalizes(self):
        p = DiscretePmf.from_unnormalized(np.array([2.0, -1e-12, 2.0]))
        assert p.mass.sum() == pytest.approx(1.0)
        assert p.mass[1] == 0.0

    def test_tv_distance_bounds(self):
        a = DiscretePmf.point_mass(0)
        b = DiscretePmf.point_mass(5)
        assert a.tv_distance(b) == pytest.approx(1.0)
        assert a.tv_distance(a) == 0.0

    def test_mean_matches_dot_product(self):
        mass = np.array([0.2, 0.3, 0.5])
        p = DiscretePmf(mass, 0.0, {})
        assert p.mean() == pytest.approx(np.dot([0, 1, 2], mass))

    def test_trimmed_preserves_mass_budget(self):
        mass = np.array([0.5, 0.5 - 1e-13, 0.0, 1e-13])
        p = DiscretePmf(mass, 0.0, {}).trimmed(1e-12)
        assert len(p.mass) == 2
        assert p.truncation_tail <= 1e-12 + 1e-15

    def test_csv_round_trip(self, tmp_path):
        p = DiscretePmf(np.array([0.25, 0.75]), 0.0, {"kind": "demo"})
        path = tmp_path / "pmf.csv"
        p.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "n,probability"
        parsed = [float(line.split(",")[1]) for line in lines[1:]]
        assert parsed == [0.25, 0.75]

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30))
    @settings(max_examples=60, deadline=None)
    def test_from_unnormalized_always_valid(self, raw):
        arr = np.asarray(raw)
        if arr.sum() <= 0:
            return
        p = DiscretePmf.from_unnormalized(arr)
        assert np.all(p.mass >= 0)
        assert p.mass.sum() == pytest.approx(1.0, abs=1e-9)


class TestPoissonVector:
    def test_matches_scipy(self):
        from scipy.stats import poisson
        for lam in (0.3, 4.0, 40.0):
            v = poisson_pmf_vector(lam)
            ref = poisson.pmf(np.arange(len(v)), lam)
            assert np.max(np.abs(v - ref)) < 1e-12

    def test_tail_below_requested(self):
        v = poisson_pmf_vector(7.0, tail=1e-10)
        assert 1.0 - v.sum() < 1e-10
