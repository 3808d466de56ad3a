"""Shooting solution and its lambda-derivatives on a uniform grid.

The shooting solution solves ``-y'' + q y = lam y`` with the lambda-independent
initial data ``sigma (sin beta, cos beta)``.  Its lambda-derivatives
``v_j = d^j y / d lam^j`` satisfy

    v_j'' = (q - lam) v_j - j v_{j-1},   v_j(0) = v_j'(0) = 0   (j >= 1),

and all levels are integrated together as one linear first-order system by
the classical fourth-order Runge-Kutta method.  Each output interval is split
into ``2**p`` substeps, with ``p`` chosen by a step-doubling estimate of the
local error on the constant-coefficient model problem at the largest
``|q - lam|``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numba
import numpy as np

from .errors import GridMismatch, NonFinite

MAX_LEVEL = 3
MAX_DOUBLINGS = 14


@numba.njit(cache=True)
def _derivs(qx, lam, v, w, m, dv, dw):
    for j in range(m + 1):
        dv[j] = w[j]
        acc = (qx - lam) * v[j]
        if j > 0:
            acc -= j * v[j - 1]
        dw[j] = acc


@numba.njit(cache=True)
def _rk4_kernel(qfine, substeps, n_out, lam, v0, w0, m, full):
    """Integrate all levels across [0, 1].

    ``qfine`` holds q at spacing h/2 (h the substep).  With ``full`` the
    state at every output node is stored, otherwise only the endpoint.
    Returns ``(vs, ws, bad)`` with ``bad`` the first substep index at which a
    non-finite value appeared, or -1.
    """
    h = 1.0 / ((n_out - 1) * substeps)
    levels = m + 1
    rows = n_out if full else 1
    vs = np.empty((rows, levels), dtype=v0.dtype)
    ws = np.empty((rows, levels), dtype=v0.dtype)
    v = v0.copy()
    w = w0.copy()
    k1v = np.empty_like(v)
    k1w = np.empty_like(v)
    k2v = np.empty_like(v)
    k2w = np.empty_like(v)
    k3v = np.empty_like(v)
    k3w = np.empty_like(v)
    k4v = np.empty_like(v)
    k4w = np.empty_like(v)
    tv = np.empty_like(v)
    tw = np.empty_like(v)
    if full:
        for j in range(levels):
            vs[0, j] = v[j]
            ws[0, j] = w[j]
    step = 0
    for i in range(n_out - 1):
        for _ in range(substeps):
            base = 2 * step
            _derivs(qfine[base], lam, v, w, m, k1v, k1w)
            for j in range(levels):
                tv[j] = v[j] + 0.5 * h * k1v[j]
                tw[j] = w[j] + 0.5 * h * k1w[j]
            _derivs(qfine[base + 1], lam, tv, tw, m, k2v, k2w)
            for j in range(levels):
                tv[j] = v[j] + 0.5 * h * k2v[j]
                tw[j] = w[j] + 0.5 * h * k2w[j]
            _derivs(qfine[base + 1], lam, tv, tw, m, k3v, k3w)
            for j in range(levels):
                tv[j] = v[j] + h * k3v[j]
                tw[j] = w[j] + h * k3w[j]
            _derivs(qfine[base + 2], lam, tv, tw, m, k4v, k4w)
            for j in range(levels):
                v[j] += h / 6.0 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j])
                w[j] += h / 6.0 * (k1w[j] + 2.0 * k2w[j] + 2.0 * k3w[j] + k4w[j])
            step += 1
        ok = True
        for j in range(levels):
            if not (np.isfinite(v[j].real) and np.isfinite(v[j].imag) and np.isfinite(w[j].real) and np.isfinite(w[j].imag)):
                ok = False
        if not ok:
            return vs, ws, step
        if full:
            for j in range(levels):
                vs[i + 1, j] = v[j]
                ws[i + 1, j] = w[j]
    if not full:
        for j in range(levels):
            vs[0, j] = v[j]
            ws[0, j] = w[j]
    return vs, ws, -1


def _model_error(mu, h):
    """Step-doubling error estimate of RK4 on ``u'' = mu u`` for one step ``h``.

    The RK4 propagator is ``alpha I + gamma A`` with ``A^2 = mu I``; the
    difference between one step and two half steps, measured in the norm
    where ``u' ~ sqrt|mu| u``, divided by 15 estimates the local error.
    """

    def coeffs(step):
        return 1 + step**2 * mu / 2 + step**4 * mu**2 / 24, step + step**3 * mu / 6

    a1, g1 = coeffs(h)
    ah, gh = coeffs(h / 2)
    a2 = ah * ah + gh * gh * mu
    g2 = 2 * ah * gh
    root = math.sqrt(abs(mu))
    return (abs(a1 - a2) + abs(g1 - g2) * max(root, 1.0)) / 15.0


def choose_substeps(mu_max, n_out, ode_tol):
    """Smallest power of two of substeps per output interval meeting ``ode_tol``
    per unit length on the model problem at ``mu_max``."""
    for p in range(MAX_DOUBLINGS + 1):
        s = 2**p
        h = 1.0 / ((n_out - 1) * s)
        if _model_error(mu_max, h) <= ode_tol * h:
            return s
    return 2**MAX_DOUBLINGS


@lru_cache(maxsize=64)
def _qfine_cached(potential, n_out, substeps):
    n = 2 * (n_out - 1) * substeps + 1
    if potential.is_constant:
        value = float(potential(0.0))
        arr = np.full(n, value)
    else:
        arr = np.ascontiguousarray(potential(np.linspace(0.0, 1.0, n)), dtype=float)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=64)
def _qmax(potential):
    return float(np.max(np.abs(potential.sampled(4097))))


def _plan(spec, lam, n_out, ode_tol=None):
    mu = _qmax(spec.potential) + abs(lam)
    s = choose_substeps(mu, n_out, spec.tolerances.ode_tol if ode_tol is None else ode_tol)
    return s, _qfine_cached(spec.potential, n_out, s)


def _run(spec, lam, m, n_out, full, ode_tol=None):
    if not 0 <= m <= MAX_LEVEL:
        raise ValueError(f"variational order must be in 0..{MAX_LEVEL}, got {m}")
    is_complex = isinstance(lam, complex) or np.iscomplexobj(lam)
    dtype = np.complex128 if is_complex else np.float64
    lam = dtype(lam)
    y0, dy0 = spec.initial_data
    v0 = np.zeros(m + 1, dtype=dtype)
    w0 = np.zeros(m + 1, dtype=dtype)
    v0[0] = y0
    w0[0] = dy0
    substeps, qfine = _plan(spec, lam, n_out, ode_tol)
    vs, ws, bad = _rk4_kernel(qfine, substeps, n_out, lam, v0, w0, m, full)
    if bad >= 0:
        raise NonFinite("shooting solution overflowed", bad / ((n_out - 1) * substeps))
    return vs, ws


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a function and its derivative on the uniform grid of [0, 1]."""

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    lam: complex | float

    def __post_init__(self):
        for arr in (self.grid, self.values, self.derivs):
            arr.setflags(write=False)
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.derivs))):
            bad = self.grid[np.argmax(~(np.isfinite(self.values) & np.isfinite(self.derivs)))]
            raise NonFinite("sampled function is not finite", bad)

    @property
    def size(self):
        return self.grid.size

    @property
    def left(self):
        """(f(0), f'(0))."""
        return self.values[0], self.derivs[0]

    @property
    def right(self):
        """(f(1), f'(1))."""
        return self.values[-1], self.derivs[-1]

    def scaled(self, factor):
        return SampledFunction(self.grid, self.values * factor, self.derivs * factor, self.lam)

    def plus(self, other, factor=1.0):
        """``self + factor * other`` on the shared grid."""
        if other.grid.size != self.grid.size:
            raise GridMismatch(f"grid sizes {self.grid.size} and {other.grid.size} differ")
        return SampledFunction(
            self.grid, self.values + factor * other.values, self.derivs + factor * other.derivs, self.lam
        )

    def conj(self):
        return SampledFunction(self.grid, np.conj(self.values), np.conj(self.derivs), np.conj(self.lam))


@dataclass(frozen=True)
class VariationalBundle:
    """Levels ``y, dy/dlam, d2y/dlam2, d3y/dlam3`` (up to the requested order)."""

    lam: complex | float
    levels: tuple

    @property
    def order(self):
        return len(self.levels) - 1


def _grid(n):
    return np.linspace(0.0, 1.0, n)


def integrate_variational(spec, lam, m):
    """All lambda-derivative levels ``0..m`` of the shooting solution on the grid."""
    n = spec.grid_points
    vs, ws = _run(spec, lam, m, n, True)
    grid = _grid(n)
    levels = tuple(SampledFunction(grid, vs[:, j].copy(), ws[:, j].copy(), lam) for j in range(m + 1))
    return VariationalBundle(lam=lam, levels=levels)


def integrate_base(spec, lam):
    """Shooting solution with ``(y(0), y'(0)) = sigma (sin beta, cos beta)``."""
    return integrate_variational(spec, lam, 0).levels[0]


def endpoint_levels(spec, lam, m, ode_tol=None):
    """``(v_j(1), v_j'(1))`` for ``j = 0..m`` as two arrays, without storing the grid.

    ``ode_tol`` overrides the problem's tolerance (coarse scans use a looser one).
    """
    vs, ws = _run(spec, lam, m, spec.grid_points, False, ode_tol)
    return vs[0], ws[0]


def _fmt(value):
    return f"{value:.15g}"


def write_sampled_csv(fn, path):
    """CSV with columns x, Re f, Im f, Re f', Im f'."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "re_f", "im_f", "re_df", "im_df"])
        for x, f, df in zip(fn.grid, fn.values, fn.derivs):
            f = complex(f)
            df = complex(df)
            writer.writerow([_fmt(x), _fmt(f.real), _fmt(f.imag), _fmt(df.real), _fmt(df.imag)])
    return path
