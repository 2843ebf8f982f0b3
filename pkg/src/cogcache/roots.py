"""Characteristic-equation root families for the discrete-time queues.

Three equation families appear in the queue transforms:

* ``z^c = exp(lam (z-1))``        -- the c-1 in-disk roots besides z = 1
* ``x^c = exp(lam_h (x-1) + s)``  -- c roots, s a fixed complex shift
* ``w^c = z exp(lam_h (w-1))``    -- c roots for a point z on the unit circle

All are solved with the branch-indexed contraction
``r <- g(r)^(1/c) * exp(2*pi*i*k/c)`` followed by Newton polishing, which is
robust for loads below the server count even when roots cluster near 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import StabilityError

RESIDUAL_TOL = 1e-10
DISTINCT_TOL = 1e-8
_FP_TOL = 1e-13
_MAX_ITER = 10_000


class RootError(RuntimeError):
    """Root iteration failed to converge; carries the worst residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class ComplexRootSet:
    """Roots of one characteristic equation with residual guarantees."""

    roots: np.ndarray
    params: dict = field(default_factory=dict)
    max_residual: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.roots, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "roots", arr)

    def __len__(self):
        return len(self.roots)

    def min_pairwise_distance(self) -> float:
        r = self.roots
        if len(r) < 2:
            return np.inf
        d = np.abs(r[:, None] - r[None, :])
        return float(d[~np.eye(len(r), dtype=bool)].min())


def _newton(z, f, fp, steps=6):
    for _ in range(steps):
        fz = f(z)
        d = fp(z)
        step = np.where(d != 0, fz / np.where(d != 0, d, 1.0), 0.0)
        # damping guards the rare case where Newton overshoots the disk
        mag = np.abs(step)
        big = mag > 0.5
        z = z - np.where(big, 0.5 * step / np.where(big, mag, 1.0), step)
        if np.max(mag) < _FP_TOL:
            break
    return z


def char_roots_inside(lambda_total: float, c: int) -> ComplexRootSet:
    """The c-1 roots of ``z^c = exp(lam (z-1))`` inside the unit disk, z != 1."""
    if not 0 <= lambda_total:
        raise ValueError("load must be nonnegative")
    if lambda_total >= c:
        raise StabilityError(f"load {lambda_total} >= {c} servers")
    lam = float(lambda_total)
    if c == 1:
        return ComplexRootSet(np.zeros(0, dtype=complex),
                              {"lambda": lam, "c": c}, 0.0)
    k = np.arange(1, c)
    phase = np.exp(2j * np.pi * k / c)
    z = max(lam / c, 0.5) * phase
    for _ in range(_MAX_ITER):
        z_new = np.exp(lam * (z - 1) / c) * phase
        if np.max(np.abs(z_new - z)) < _FP_TOL:
            z = z_new
            break
        z = z_new

    def f(w):
        return w ** c - np.exp(lam * (w - 1))

    def fp(w):
        return c * w ** (c - 1) - lam * np.exp(lam * (w - 1))

    z = _newton(z, f, fp)
    res = float(np.max(np.abs(f(z)))) if c > 1 else 0.0
    rs = ComplexRootSet(z, {"lambda": lam, "c": c}, res)
    _check(rs, expect=c - 1, lam=lam, c=c)
    return rs


def kth_roots(z: complex, c: int) -> ComplexRootSet:
    """The c distinct c-th roots of ``z``."""
    if z == 0:
        raise ValueError("z = 0 is degenerate: all roots coincide at 0")
    k = np.arange(c)
    r = np.abs(z) ** (1.0 / c) * np.exp(1j * (np.angle(z) + 2 * np.pi * k) / c)
    res = float(np.max(np.abs(r ** c - z)))
    return ComplexRootSet(r, {"z": z, "c": c}, res)


def _solve_family(c: int, lam_h: float, shift, z_factor, start=None):
    """Roots of ``r^c = z_factor * exp(lam_h (r-1) + shift)``.

    ``shift`` and ``z_factor`` broadcast against a grid; the result has shape
    grid_shape + (c,).  ``start`` supplies Newton warm starts of that shape;
    grid points where the warm start fails (near-double roots make Newton
    collapse two branches) are repaired with the contraction iteration.
    """
    shift = np.asarray(shift, dtype=complex)
    z_factor = np.asarray(z_factor, dtype=complex)
    grid_shape = np.broadcast(shift, z_factor).shape
    shift_b = np.broadcast_to(shift, grid_shape)
    zf_b = np.broadcast_to(z_factor, grid_shape)
    phase = np.exp(2j * np.pi * np.arange(c) / c)
    contraction = max(lam_h / c, 0.05)
    n_iter = min(_MAX_ITER,
                 int(np.ceil(np.log(1e-8) / np.log(min(contraction, 0.999)))) + 20)

    def make_f(sh, zf):
        def f(r):
            return r ** c - zf[..., None] * np.exp(lam_h * (r - 1) + sh[..., None])

        def fp(r):
            return c * r ** (c - 1) - lam_h * zf[..., None] * \
                np.exp(lam_h * (r - 1) + sh[..., None])

        return f, fp

    def cold(sh, zf):
        log_zf = np.log(zf)
        r = np.broadcast_to(0.7 * phase + 0.0j, sh.shape + (c,)).copy()
        for _ in range(n_iter):
            r_new = np.exp((lam_h * (r - 1) + sh[..., None] + log_zf[..., None]) / c) * phase
            if np.max(np.abs(r_new - r)) < _FP_TOL:
                r = r_new
                break
            r = r_new
        return r

    f, fp = make_f(shift_b, zf_b)
    if start is None:
        r = cold(shift_b, zf_b)
        r = _newton(r, f, fp, steps=8)
    else:
        r = _newton(np.array(start, dtype=complex), f, fp, steps=8)
        if grid_shape:
            resid_pt = np.max(np.abs(f(r)), axis=-1)
            bad = resid_pt > RESIDUAL_TOL
            if c >= 2:
                d = np.abs(r[..., :, None] - r[..., None, :])
                idx = np.arange(c)
                d[..., idx, idx] = np.inf
                bad |= d.min(axis=(-2, -1)) <= DISTINCT_TOL
            if np.any(bad):
                sh_bad = shift_b[bad]
                zf_bad = zf_b[bad]
                fb, fpb = make_f(sh_bad, zf_bad)
                r[bad] = _newton(cold(sh_bad, zf_bad), fb, fpb, steps=8)
    res = float(np.max(np.abs(f(r))))
    return r, res


def x_roots(z, lam_h: float, lam_l: float, c: int,
            start=None) -> ComplexRootSet:
    """The c solutions of ``x^c = exp(lam_h (x-1) + lam_l (z-1))``.

    ``z`` may be a scalar or a grid, and ``lam_l`` a scalar or an array
    broadcastable against it; roots are returned along the last axis.
    """
    lam_l = np.asarray(lam_l, dtype=float)
    if lam_h + float(lam_l.max()) >= c:
        raise StabilityError(
            f"total load {lam_h + float(lam_l.max())} >= {c} servers")
    z_arr = np.asarray(z, dtype=complex)
    shift = lam_l * (z_arr - 1)
    r, res = _solve_family(c, lam_h, shift, np.ones_like(shift), start=start)
    rs = ComplexRootSet(r, {"lam_h": lam_h, "lam_l": lam_l, "c": c}, res)
    if res > RESIDUAL_TOL:
        raise RootError(f"x-root residual {res:.2e} exceeds {RESIDUAL_TOL}", res)
    _check_family_distinct(r, c)
    return rs


def omega_roots(z, lam_h: float, c: int, start=None) -> ComplexRootSet:
    """The c solutions of ``w^c = z exp(lam_h (w-1))`` for unit-disk ``z``."""
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr == 0):
        raise ValueError("z = 0 is degenerate")
    if lam_h >= c:
        raise StabilityError(f"high-priority load {lam_h} >= {c} servers")
    r, res = _solve_family(c, lam_h, np.zeros_like(z_arr), z_arr, start=start)
    rs = ComplexRootSet(r, {"lam_h": lam_h, "c": c}, res)
    if res > RESIDUAL_TOL:
        raise RootError(f"omega-root residual {res:.2e} exceeds {RESIDUAL_TOL}", res)
    _check_family_distinct(r, c)
    return rs


def _check_family_distinct(r: np.ndarray, c: int):
    if np.any(np.abs(r) > 1 + 1e-8):
        raise RootError("a root of the in-disk family escaped the unit disk")
    if c < 2:
        return
    d = np.abs(r[..., :, None] - r[..., None, :])
    idx = np.arange(c)
    d[..., idx, idx] = np.inf
    if float(d.min()) <= DISTINCT_TOL:
        raise RootError("root family is not pairwise distinct "
                        "(a warm start may have collapsed two branches)")


def _check(rs: ComplexRootSet, expect: int, lam: float, c: int):
    if len(rs) != expect:
        raise RootError(f"expected {expect} roots, got {len(rs)}")
    if rs.max_residual > RESIDUAL_TOL:
        raise RootError(f"residual {rs.max_residual:.2e} exceeds {RESIDUAL_TOL}",
                        rs.max_residual)
    if np.any(np.abs(rs.roots - 1) < DISTINCT_TOL):
        raise RootError("a root collided with z = 1")
    if np.any(np.abs(rs.roots) >= 1 + 1e-9):
        raise RootError("a root escaped the unit disk")
    if lam < c and rs.min_pairwise_distance() <= DISTINCT_TOL:
        raise RootError("roots are not pairwise distinct")
