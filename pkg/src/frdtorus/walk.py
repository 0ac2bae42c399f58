"""Finite-range blocking of the lattice resolvent ``(s - Delta)^-1``.

With the lazy step kernel ``P' = (I + P)/2`` (weight 1/2 at the origin and
``1/(4d)`` at each neighbour) the resolvent is a Neumann series

    (s - Delta)^-1 = (s + 4d)^-1 sum_n theta^n P'^n,   theta = 4d/(s + 4d).

``P'^n`` is supported in ``|x|_1 <= n``, so grouping ``n`` into blocks
``[T_j, T_{j+1})`` gives positive semidefinite pieces of exact finite range
``T_{j+1} - 1``.  All symbols are evaluated in closed form through
``log(theta mu) = log1p(-lam/4d) - log1p(s/4d)``, which stays accurate as
``theta mu -> 1`` and needs no special-cased series count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fourier import MomentumGrid, dft, idft
from .lattice import TorusField, TorusSpec, WindowKernel, range_of


# ---------------------------------------------------------------------------
# symbols


def laplacian_symbol(p) -> np.ndarray:
    """``lam(p) = sum_k 4 sin^2(p_k/2)``; ``p`` has the components on its last axis."""
    p = np.asarray(p, dtype=float)
    return (4.0 * np.sin(p / 2) ** 2).sum(axis=-1)


def walk_symbol(p) -> np.ndarray:
    """Lazy-walk symbol ``mu(p) = 1 - lam(p)/(4d)`` in ``[0, 1]``."""
    p = np.asarray(p, dtype=float)
    return 1.0 - laplacian_symbol(p) / (4.0 * p.shape[-1])


def theta(s, d: int):
    return 4.0 * d / (np.asarray(s, dtype=float) + 4.0 * d)


@dataclass(frozen=True)
class WalkSymbols:
    d: int

    def lam(self, p):
        return laplacian_symbol(p)

    def mu(self, p):
        return walk_symbol(p)

    def theta(self, s):
        return theta(s, self.d)


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError("spectral parameter s must be > 0")
    return s


def log_x(lam, s, d: int) -> np.ndarray:
    """``log(theta(s) mu)`` as a function of ``lam = lam(p)``."""
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log1p(-lam / (4.0 * d)) - np.log1p(np.asarray(s, dtype=float) / (4.0 * d))


def _power(lx, n):
    # x^n with the convention x^0 = 1 even when x = 0
    if n == 0:
        return np.ones_like(lx)
    return np.exp(n * lx)


def block_symbol_lam(lam, s, Ta: int, Tb: int, d: int) -> np.ndarray:
    """``(s+4d)^-1 sum_{Ta <= n < Tb} (theta mu)^n`` as a function of ``lam``.

    Uses ``(theta mu)^Ta (1 - (theta mu)^(Tb-Ta)) / (s + lam)``, since
    ``(s + 4d)(1 - theta mu) = s + lam``.
    """
    s = _check_s(s)
    if not 0 <= Ta < Tb:
        raise ValueError(f"need 0 <= Ta < Tb (got {Ta}, {Tb})")
    lam = np.asarray(lam, dtype=float)
    lx = log_x(lam, s, d)
    return _power(lx, Ta) * -np.expm1((Tb - Ta) * lx) / (s + lam)


def tail_symbol_lam(lam, s, TN: int, d: int) -> np.ndarray:
    """``(theta mu)^TN / (s + lam)``."""
    s = _check_s(s)
    lam = np.asarray(lam, dtype=float)
    return _power(log_x(lam, s, d), TN) / (s + lam)


def block_symbol(p, s, Ta: int, Tb: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return block_symbol_lam(laplacian_symbol(p), s, Ta, Tb, p.shape[-1])


def tail_symbol(p, s, TN: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return tail_symbol_lam(laplacian_symbol(p), s, TN, p.shape[-1])


# ---------------------------------------------------------------------------
# schedule


@dataclass(frozen=True)
class BlockSchedule:
    """Cut points ``0 = T_0 < T_1 < ... < T_N``; default ``T_j = L^(2j)``."""

    T: tuple[int, ...]

    def __post_init__(self):
        T = tuple(int(t) for t in self.T)
        if len(T) < 2 or T[0] != 0 or any(b <= a for a, b in zip(T, T[1:])):
            raise ValueError(f"schedule must start at 0 and increase strictly: {T}")
        object.__setattr__(self, "T", T)

    @classmethod
    def default(cls, L: int, N: int) -> "BlockSchedule":
        return cls((0,) + tuple(L ** (2 * j) for j in range(1, N + 1)))

    @property
    def N(self) -> int:
        return len(self.T) - 1

    def bounds(self, j: int) -> tuple[int, int]:
        """Block ``j`` covers ``T_j <= n < T_{j+1}``."""
        if not 0 <= j < self.N:
            raise IndexError(f"block index {j} outside 0..{self.N - 1}")
        return self.T[j], self.T[j + 1]

    @property
    def tail_start(self) -> int:
        return self.T[-1]

    def exact_range(self, j: int) -> int:
        return self.T[j + 1] - 1

    def resolvable(self, j: int, M: int) -> bool:
        """Exact range representable on a torus of side ``M``."""
        return 2 * self.T[j + 1] < M


# ---------------------------------------------------------------------------
# kernels


@dataclass
class ScaleKernelS:
    j: int
    s: float
    kernel: TorusField | WindowKernel
    exact_range: int
    eps_range: int
    resolvable: bool
    warnings: list[str] = field(default_factory=list)


def torus_lam(spec: TorusSpec) -> np.ndarray:
    return MomentumGrid(spec).lam()


def _eps_range(kernel, eps_rel: float) -> int:
    sup = float(np.abs(kernel.values).max())
    return range_of(kernel, "l1", eps_rel * sup)


def build_block_kernel(
    target,
    j: int,
    s: float,
    schedule: BlockSchedule,
    eps_rel: float = 1e-12,
    max_points: int = 20_000_000,
) -> ScaleKernelS:
    """Block kernel ``Gamma_j(., s)`` on a torus, or on ``Z^d`` as a window.

    Parameters
    ----------
    target : TorusSpec or int
        A torus, or the dimension ``d`` for a ``Z^d`` kernel.  The window is
        computed exactly on an auxiliary torus large enough that no
        wrap-around occurs.
    """
    Ta, Tb = schedule.bounds(j)
    if isinstance(target, TorusSpec):
        spec = target
        sym = block_symbol_lam(torus_lam(spec), s, Ta, Tb, spec.d)
        ker = idft(sym, spec)
        ok = schedule.resolvable(j, spec.M)
        warn = [] if ok else [
            f"torus side {spec.M} too small for exact range {Tb - 1} (2 T_{j + 1} >= M)"
        ]
        return ScaleKernelS(j, s, ker, Tb - 1, _eps_range(ker, eps_rel), ok, warn)

    d = int(target)
    R = Tb - 1
    side = 2 * R + 1
    if side**d > max_points:
        raise ValueError(f"window of side {side} in d = {d} exceeds {max_points} points")
    q = np.arange(side)
    p1 = 2.0 * math.pi * q / side
    lam1 = 4.0 * np.sin(p1 / 2) ** 2
    lam = np.zeros((side,) * d)
    for k in range(d):
        sh = [1] * d
        sh[k] = side
        lam = lam + lam1.reshape(sh)
    vals = np.fft.ifftn(block_symbol_lam(lam, s, Ta, Tb, d)).real
    ker = WindowKernel(np.fft.fftshift(vals), symmetric=True)
    return ScaleKernelS(j, s, ker, R, _eps_range(ker, eps_rel), True, [])


def step_kernel(d: int) -> WindowKernel:
    v = np.zeros((3,) * d)
    v[(1,) * d] = 0.5
    for k in range(d):
        for sgn in (0, 2):
            idx = [1] * d
            idx[k] = sgn
            v[tuple(idx)] = 1.0 / (4 * d)
    return WindowKernel(v, symmetric=True)


def convolution_power_oracle(n: int, d: int, R: int | None = None, n_max: int = 2000) -> WindowKernel:
    """Exact ``n``-fold lazy-walk convolution by repeated stencil application."""
    if n < 0 or n > n_max:
        raise ValueError(f"n must lie in 0..{n_max}")
    R = n if R is None else R
    if R < n:
        raise ValueError(f"window radius {R} too small for support radius {n}")
    v = np.zeros((2 * R + 1,) * d)
    v[(R,) * d] = 1.0
    w = 1.0 / (4 * d)
    for _ in range(n):
        out = 0.5 * v
        for axis in range(d):
            out = out + w * (np.roll(v, 1, axis) + np.roll(v, -1, axis))
        v = out
    return WindowKernel(v, symmetric=True)


def block_kernel_oracle(d: int, s: float, Ta: int, Tb: int) -> WindowKernel:
    """``(s+4d)^-1 sum_{Ta <= n < Tb} theta^n P'^n`` by convolution powers."""
    R = Tb - 1
    th = 4.0 * d / (s + 4.0 * d)
    v = np.zeros((2 * R + 1,) * d)
    cur = np.zeros_like(v)
    cur[(R,) * d] = 1.0
    w = 1.0 / (4 * d)
    for n in range(Tb):
        if n >= Ta:
            v += th**n * cur
        nxt = 0.5 * cur
        for axis in range(d):
            nxt = nxt + w * (np.roll(cur, 1, axis) + np.roll(cur, -1, axis))
        cur = nxt
    return WindowKernel(v / (s + 4.0 * d), symmetric=True)
