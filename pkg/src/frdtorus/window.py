"""Pieces on ``Z^d`` evaluated along a coordinate axis.

For scale indices far beyond any affordable torus, a piece is evaluated as
a Brillouin-zone integral

    Gamma~(x) = (2 pi)^-d int g(lam(p)) exp(i p.x) dp

where ``g(lam)`` is the spectral symbol of the block ``[Ta, Tb)``.  Since
``g`` depends on ``p`` only through ``lam``, it is tabulated once on a
grid in ``v = log(1 + lam Tb / 4d)`` (fine where ``g`` varies on the scale
``4d/Tb``, coarser where it only decays) and interpolated by a cubic
spline.  The momentum box is cut to ``|p_k| <= P`` where ``g`` has decayed
below double precision.  The ``p_1`` integral is resolved finely enough to
carry the phase out to ``|x| = R``; the transverse integrals use fixed
Gauss-Legendre nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .decomposition import spectral_symbols
from .spectral import QuadratureRule, SpectralParams


@dataclass(frozen=True)
class WindowGrid:
    """Resolution of a window evaluation.

    Parameters
    ----------
    nh : int
        Gauss-Legendre nodes on each transverse half-axis ``[0, P]``;
        every full axis, ``p_1`` included, carries at least ``2 nh`` nodes.
    dv : float
        Spacing of the symbol table in ``v = log(1 + lam Tb / 4d)``.
    box : float
        Momentum cutoff ``P = min(pi, pi sqrt(box d / Ta))``; the symbol is
        below ``exp(-box pi^2 / 4)`` of its peak outside.
    decay : float
        Table stops at ``lam = decay * 4d / Ta``.
    range_factor : float
        Axis points ``|t| <= range_factor * sqrt(Tb)``.
    """

    nh: int = 256
    dv: float = 1.0 / 400
    box: float = 50.0
    decay: float = 60.0
    range_factor: float = 5.0

    def refined(self) -> "WindowGrid":
        return WindowGrid(2 * self.nh, self.dv / 2, self.box, self.decay, self.range_factor)


class _Table:
    """Uniform-knot cubic spline of ``g`` in ``v``, evaluated by Horner."""

    def __init__(self, d, Ta, Tb, P, weight, rule, grid, lam_max):
        self.c = 4.0 * d / Tb
        v_max = math.log1p(lam_max / self.c)
        n = max(8, int(math.ceil(v_max / grid.dv)) + 1)
        v = np.linspace(0.0, v_max, n)
        lam = np.minimum(self.c * np.expm1(v), lam_max)
        (g,), info = spectral_symbols(lam, d, P, [(Ta, Tb)], rule, weight)
        sp = CubicSpline(v, g)
        self.coef = sp.c
        self.h = v[1] - v[0]
        self.v_max = v_max
        self.n = n
        self.info = info
        self.peak = float(np.abs(g).max())

    def __call__(self, lam: np.ndarray) -> np.ndarray:
        v = np.log1p(lam / self.c)
        i = np.minimum((v / self.h).astype(np.int64), self.n - 2)
        u = v - i * self.h
        c = self.coef
        out = ((c[0, i] * u + c[1, i]) * u + c[2, i]) * u + c[3, i]
        return np.where(v <= self.v_max, out, 0.0)


@dataclass
class WindowProfile:
    """Values of ``d_1^p Gamma~(t e_1)`` for ``|t| <= R``."""

    d: int
    Ta: int
    Tb: int
    params: SpectralParams
    weight: str
    t: np.ndarray
    values: dict
    box: float
    table_points: int

    def sup(self, p: int = 0) -> float:
        return float(np.abs(self.values[p]).max())

    def sups(self) -> dict:
        return {p: self.sup(p) for p in self.values}


def _transverse(d: int, P: float, nh: int, offsets=(0,)):
    """Transverse ``lam`` values and weights (mirror and swap symmetry folded in)."""
    x, w = np.polynomial.legendre.leggauss(nh)
    p = (x + 1) * P / 2
    pw = w * P / 2
    l1 = 4.0 * np.sin(p / 2) ** 2
    if d == 2:
        return l1, [2.0 * pw * np.cos(p * y) for y in offsets]
    if d == 3:
        i, k = np.triu_indices(nh)
        mult = np.where(i == k, 1.0, 2.0)
        nu = l1[i] + l1[k]
        ws = [4.0 * mult * pw[i] * pw[k] * 0.5 * (np.cos(p[i] * y) + np.cos(p[k] * y)) for y in offsets]
        return nu, ws
    raise ValueError("window evaluation supports d = 2 and d = 3")


def window_profile(
    d: int,
    Ta: int,
    Tb: int,
    P: SpectralParams,
    orders=(0, 1, 2),
    weight: str = "rho",
    grid: WindowGrid | None = None,
    rule: QuadratureRule | None = None,
    R: int | None = None,
    offset: int = 0,
) -> WindowProfile:
    """Axis profile of the ``Z^d`` piece built from walk steps ``[Ta, Tb)``.

    ``offset`` shifts the evaluation line to ``x = t e_1 + offset e_2``.
    """
    P.require_massive()
    grid = grid or WindowGrid()
    rule = rule or QuadratureRule()
    box = math.pi if Ta == 0 else min(math.pi, math.pi * math.sqrt(grid.box * d / Ta))
    lam_edge = d * 4.0 * math.sin(box / 2) ** 2
    lam_max = lam_edge if Ta == 0 else min(lam_edge, grid.decay * 4.0 * d / Ta)
    table = _Table(d, Ta, Tb, P, weight, rule, grid, lam_max)

    R = int(math.ceil(grid.range_factor * math.sqrt(Tb))) if R is None else R
    n1 = max(2 * grid.nh, int(2 * box * R))
    x1, w1 = np.polynomial.legendre.leggauss(n1)
    p1 = (x1 + 1) * box / 2
    w1 = w1 * box / 2
    lam1 = 4.0 * np.sin(p1 / 2) ** 2
    nu, (wn,) = _transverse(d, box, grid.nh, (offset,))

    I = np.empty(n1)
    step = max(1, 4_000_000 // nu.size)
    for k in range(0, n1, step):
        lam = lam1[k : k + step, None] + nu[None, :]
        I[k : k + step] = table(lam) @ wn

    t = np.arange(-R, R + 1)
    phase = np.exp(1j * np.outer(t, p1))
    norm = 2.0 / (2.0 * math.pi) ** d
    values = {}
    for p in orders:
        mult = (np.exp(1j * p1) - 1.0) ** p
        values[p] = norm * np.real(phase @ (mult * w1 * I))
    return WindowProfile(d, Ta, Tb, P, weight, t, values, box, table.n)


def block_bounds(L: int, j: int, r: int = 1) -> tuple[int, int]:
    """Steps of the (coarse) block ``j`` at base ``L^r`` under ``T_j = L^(2j)``."""
    Lp = L**r
    return (0 if j == 0 else Lp ** (2 * j)), Lp ** (2 * j + 2)


def scale_sups(
    d: int,
    L: int,
    j: int,
    P: SpectralParams,
    orders=(0, 1, 2),
    weight: str = "rho",
    grid: WindowGrid | None = None,
    r: int = 1,
) -> dict:
    Ta, Tb = block_bounds(L, j, r)
    return window_profile(d, Ta, Tb, P, orders, weight, grid).sups()


def refinement_defect(
    d: int, Ta: int, Tb: int, P: SpectralParams, orders=(0, 1, 2), weight: str = "rho",
    grid: WindowGrid | None = None,
) -> float:
    """Max relative change of the sups when every resolution is doubled."""
    grid = grid or WindowGrid()
    a = window_profile(d, Ta, Tb, P, orders, weight, grid).sups()
    b = window_profile(d, Ta, Tb, P, orders, weight, grid.refined()).sups()
    return max(abs(a[p] - b[p]) / abs(b[p]) for p in orders)
