"""Characteristic-root families vs bisection oracles and invariants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogcache.core import StabilityError
from cogcache.roots import (DISTINCT_TOL, RESIDUAL_TOL, ComplexRootSet,
                            RootError, char_roots_inside, kth_roots,
                            omega_roots, x_roots)


def _assert_same_multiset(a, b, tol=1e-8):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    assert len(a) == len(b)
    d = np.abs(a[:, None] - b[None, :])
    # greedy matching is enough: root sets here are well separated vs tol
    remaining = list(range(len(b)))
    for i in range(len(a)):
        j = min(remaining, key=lambda j: d[i, j])
        assert d[i, j] < tol, f"no partner for root {a[i]}"
        remaining.remove(j)


def _bisect_real_root(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
            flo = f(lo)
    return 0.5 * (lo + hi)


class TestCharRoots:
    def test_c1_has_no_interior_roots(self):
        assert len(char_roots_inside(0.5, 1)) == 0

    def test_count_and_residual(self):
        for c, lam in [(2, 0.6), (4, 3.0), (10, 9.0), (10, 9.9)]:
            rs = char_roots_inside(lam, c)
            assert len(rs) == c - 1
            assert rs.max_residual <= RESIDUAL_TOL
            assert np.all(np.abs(rs.roots) < 1)
            assert rs.min_pairwise_distance() > DISTINCT_TOL

    def test_c2_real_root_matches_bisection(self):
        # oracle: for c=2 the non-unit in-disk root is real in (-1, 0)
        for lam in (0.3, 1.0, 1.9):
            z_star = _bisect_real_root(
                lambda z: z * z - np.exp(lam * (z - 1)), -1.0, 0.0)
            rs = char_roots_inside(lam, 2)
            assert rs.roots[0].imag == pytest.approx(0.0, abs=1e-12)
            assert rs.roots[0].real == pytest.approx(z_star, abs=1e-10)

    def test_conjugate_symmetry(self):
        rs = char_roots_inside(4.2, 6)
        _assert_same_multiset(rs.roots, np.conj(rs.roots), tol=1e-10)

    def test_unstable_load_rejected(self):
        with pytest.raises(StabilityError):
            char_roots_inside(5.0, 5)
        with pytest.raises(ValueError):
            char_roots_inside(-1.0, 5)

    @given(st.integers(2, 12), st.floats(0.01, 0.995))
    @settings(max_examples=40, deadline=None)
    def test_random_loads_converge(self, c, rho):
        rs = char_roots_inside(rho * c, c)
        assert rs.max_residual <= RESIDUAL_TOL
        assert np.all(np.abs(rs.roots) < 1)


class TestKthRoots:
    def test_roots_power_back(self):
        z = 0.3 - 0.4j
        rs = kth_roots(z, 5)
        assert np.allclose(rs.roots ** 5, z, atol=1e-12)
        assert len(set(np.round(rs.roots, 10))) == 5

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            kth_roots(0.0, 3)


class TestXRoots:
    def test_residuals_on_circle_grid(self):
        c, lam_h, lam_l = 4, 1.5, 1.2
        z = np.exp(2j * np.pi * np.arange(64) / 64)
        rs = x_roots(z, lam_h, lam_l, c)
        res = rs.roots ** c - np.exp(lam_h * (rs.roots - 1)
                                     + lam_l * (z[..., None] - 1))
        assert np.max(np.abs(res)) <= RESIDUAL_TOL
        assert np.all(np.abs(rs.roots) <= 1 + 1e-9)

    def test_z_equal_one_recovers_single_class_family(self):
        # at z=1 the equation reduces to x^c = e^{lam_h (x-1)}: the root set
        # is the single-class in-disk family plus the root at 1
        c, lam_h = 5, 3.1
        rs = x_roots(np.array([1.0 + 0j]), lam_h, 0.7, c)
        single = char_roots_inside(lam_h, c).roots
        _assert_same_multiset(rs.roots[0], np.append(single, 1.0 + 0j))

    def test_vector_lam_l_broadcasts(self):
        c, lam_h = 3, 0.8
        z = np.exp(2j * np.pi * np.arange(8) / 8)
        lam_l = np.array([0.1, 0.5, 1.0])
        rs = x_roots(z[None, :], lam_h, lam_l[:, None], c)
        assert rs.roots.shape == (3, 8, c)
        for i, ll in enumerate(lam_l):
            alone = x_roots(z, lam_h, float(ll), c)
            _assert_same_multiset(rs.roots[i], alone.roots, tol=1e-9)

    def test_unstable_total_load_rejected(self):
        with pytest.raises(StabilityError):
            x_roots(np.array([1.0 + 0j]), 2.0, 1.5, 3)


class TestOmegaRoots:
    def test_residuals_and_disk(self):
        c, lam_h = 6, 4.4
        z = np.exp(2j * np.pi * np.arange(128) / 128)
        rs = omega_roots(z, lam_h, c)
        res = rs.roots ** c - z[..., None] * np.exp(lam_h * (rs.roots - 1))
        assert np.max(np.abs(res)) <= RESIDUAL_TOL
        assert np.all(np.abs(rs.roots) <= 1 + 1e-9)

    def test_lam_h_zero_degenerates_to_kth_roots(self):
        z = np.array([0.5 + 0.5j])
        rs = omega_roots(z, 0.0, 4)
        want = kth_roots(complex(z[0]), 4).roots
        _assert_same_multiset(rs.roots[0], want, tol=1e-10)

    def test_warm_start_from_coarse_grid(self):
        # the production path warm-starts a 2W grid from the W grid; failed
        # points must be repaired, not silently accepted
        c, lam_h = 10, 9.9   # near-saturation: roots cluster near z = 1
        w = 512
        z_half = np.exp(2j * np.pi * np.arange(w // 2) / (w // 2))
        half = omega_roots(z_half, lam_h, c).roots
        z_full = np.exp(2j * np.pi * np.arange(w) / w)
        start = np.repeat(half, 2, axis=0)
        rs = omega_roots(z_full, lam_h, c, start=start)
        res = rs.roots ** c - z_full[..., None] * \
            np.exp(lam_h * (rs.roots - 1))
        assert np.max(np.abs(res)) <= RESIDUAL_TOL
        d = np.abs(rs.roots[..., :, None] - rs.roots[..., None, :])
        d[..., np.arange(c), np.arange(c)] = np.inf
        assert d.min() > DISTINCT_TOL

    def test_zero_z_rejected(self):
        with pytest.raises(ValueError):
            omega_roots(np.array([0.0 + 0j]), 1.0, 3)


class TestComplexRootSet:
    def test_min_pairwise_distance(self):
        rs = ComplexRootSet(np.array([0.0, 0.5, 0.5 + 1e-3j]))
        assert rs.min_pairwise_distance() == pytest.approx(1e-3)

    def test_roots_are_read_only(self):
        rs = ComplexRootSet(np.array([0.1 + 0j]))
        with pytest.raises(ValueError):
            rs.roots[0] = 0.0

    def test_root_error_carries_residual(self):
        err = RootError("bad", residual=1e-3)
        assert err.residual == 1e-3
