"""Torus and lattice geometry.

Fields on the torus ``Z^d / M Z^d`` (``M = L**(N+1)``) are stored as numpy
arrays of shape ``(M,) * d`` in *periodic order*: array index ``i`` holds the
point ``x = i mod M``.  That is the layout ``numpy.fft`` expects, so the
discrete Fourier transform needs no shifting.  ``TorusField.centered()``
returns the same data reordered onto the centered fundamental cube
``[-(M-1)/2, (M-1)/2]^d``.

Kernels on ``Z^d`` live on explicit finite windows ``|x|_inf <= R``
(:class:`WindowKernel`), optionally with a geometric decay certificate for
the part outside the window.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

METRICS = ("l1", "l2", "linf")


@dataclass(frozen=True)
class TorusSpec:
    """Geometry of the torus ``Z^d / L^(N+1) Z^d``."""

    d: int
    L: int
    N: int

    def __post_init__(self):
        problems = []
        if self.d < 2:
            problems.append(f"d must be >= 2 (got {self.d})")
        if self.L < 3 or self.L % 2 == 0:
            problems.append(f"L must be an odd integer >= 3 (got {self.L})")
        if self.N < 2:
            problems.append(f"N must be >= 2 (got {self.N})")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def M(self) -> int:
        return self.L ** (self.N + 1)

    @property
    def volume(self) -> int:
        return self.M**self.d

    @property
    def half(self) -> int:
        return (self.M - 1) // 2

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.d

    def coords_1d(self) -> np.ndarray:
        """Centered representative of each periodic index ``0..M-1``."""
        i = np.arange(self.M)
        return np.where(i <= self.half, i, i - self.M)

    def coord_grids(self) -> list[np.ndarray]:
        """Broadcastable centered coordinate arrays, one per axis."""
        c = self.coords_1d()
        out = []
        for k in range(self.d):
            sh = [1] * self.d
            sh[k] = self.M
            out.append(c.reshape(sh))
        return out

    def increment(self, j: int) -> float:
        """Lattice spacing ``L**-j`` of the nested lattice at scale ``j``."""
        return float(self.L) ** (-j)


@dataclass(frozen=True)
class MultiIndex:
    """Derivative multi-index ``(l_1, ..., l_d)``."""

    l: tuple[int, ...]

    def __post_init__(self):
        if any(int(v) < 0 for v in self.l):
            raise ValueError(f"multi-index entries must be >= 0: {self.l}")
        object.__setattr__(self, "l", tuple(int(v) for v in self.l))

    @classmethod
    def axis(cls, d: int, k: int = 0, order: int = 1) -> "MultiIndex":
        l = [0] * d
        l[k] = order
        return cls(tuple(l))

    @property
    def order(self) -> int:
        return sum(self.l)

    @property
    def d(self) -> int:
        return len(self.l)


@dataclass(frozen=True)
class DecayCertificate:
    """Certifies ``|f(x)| <= constant * rate**|x|_1`` outside the window."""

    rate: float
    constant: float

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError("decay rate must lie in [0, 1)")
        if self.constant < 0:
            raise ValueError("decay constant must be nonnegative")


@dataclass
class TorusField:
    """Real field on the torus, stored in periodic index order."""

    spec: TorusSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.spec.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match torus {self.spec.shape}"
            )

    def at(self, x: Sequence[int]) -> float:
        return float(self.values[tuple(int(v) % self.spec.M for v in x)])

    def centered(self) -> np.ndarray:
        """Values on the centered cube, index ``i`` <-> ``x = i - (M-1)/2``."""
        return np.fft.fftshift(self.values)

    def __add__(self, other: "TorusField") -> "TorusField":
        if other.spec != self.spec:
            raise ValueError("cannot add fields on different tori")
        return TorusField(self.spec, self.values + other.values)

    def __sub__(self, other: "TorusField") -> "TorusField":
        if other.spec != self.spec:
            raise ValueError("cannot subtract fields on different tori")
        return TorusField(self.spec, self.values - other.values)

    def scaled(self, c: float) -> "TorusField":
        return TorusField(self.spec, c * self.values)


@dataclass
class WindowKernel:
    """Kernel on ``Z^d`` given on the window ``|x|_inf <= R``.

    ``values`` has shape ``(2R+1,) * d`` with index ``i`` <-> ``x = i - R``.
    Without a certificate the kernel is taken to vanish outside the window.
    ``func`` optionally evaluates the kernel at arbitrary integer points
    (array of shape ``(n, d)``); periodization then sums translates shell by
    shell instead of relying on the window alone.
    """

    values: np.ndarray
    certificate: DecayCertificate | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None
    symmetric: bool = False
    shrink: tuple[int, ...] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.values.shape[0]
        if n % 2 == 0 or any(s != n for s in self.values.shape):
            raise ValueError("window must be a cube of odd side 2R+1")
        if self.shrink is None:
            self.shrink = (0,) * self.values.ndim

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def R(self) -> int:
        return (self.values.shape[0] - 1) // 2

    def coord_grids(self) -> list[np.ndarray]:
        c = np.arange(-self.R, self.R + 1)
        out = []
        for k in range(self.d):
            sh = [1] * self.d
            sh[k] = c.size
            out.append(c.reshape(sh))
        return out

    def l1_mass(self) -> float:
        return math.fsum(np.abs(self.values).ravel())

    @classmethod
    def from_function(
        cls,
        f: Callable[[np.ndarray], np.ndarray],
        d: int,
        R: int,
        certificate: DecayCertificate | None = None,
        symmetric: bool = False,
    ) -> "WindowKernel":
        c = np.arange(-R, R + 1)
        pts = np.stack(np.meshgrid(*([c] * d), indexing="ij"), axis=-1).reshape(-1, d)
        vals = np.asarray(f(pts), dtype=float).reshape((2 * R + 1,) * d)
        return cls(vals, certificate=certificate, func=f, symmetric=symmetric)

    @classmethod
    def delta(cls, d: int, R: int = 0) -> "WindowKernel":
        v = np.zeros((2 * R + 1,) * d)
        v[(R,) * d] = 1.0
        return cls(v, symmetric=True)


# ---------------------------------------------------------------------------
# periodization


def _geometric_shell_sums(rate: float, M: int, half: int, kmax: int) -> np.ndarray:
    """``a[k] = rate**max(0, M*k - half)`` for k = 0..kmax (a[0] = 1)."""
    k = np.arange(kmax + 1, dtype=float)
    return rate ** np.maximum(0.0, M * k - half)


def _certified_shell_tail(cert: DecayCertificate, d: int, M: int, half: int, K: int) -> float:
    """Sup-norm bound on all translates ``M n`` with ``|n|_inf >= K``.

    For ``x`` in the fundamental cube ``|x_i + M n_i| >= max(0, M|n_i| - half)``,
    so the tail is bounded by ``C * (S_all**d - S_inner(K)**d)`` with the 1-D
    sums of ``rate**max(0, M|k| - half)``.
    """
    if cert.rate == 0.0:
        return 0.0 if K >= 1 else cert.constant
    r_M = cert.rate**M
    # sum over |k| >= 1 of rate**(M|k| - half), as a closed geometric series
    first = cert.rate ** max(0, M - half)
    s_all = 1.0 + 2.0 * first / (1.0 - r_M)
    a = _geometric_shell_sums(cert.rate, M, half, max(K - 1, 0))
    s_inner = a[0] + 2.0 * a[1:].sum() if K >= 1 else 0.0
    return cert.constant * max(0.0, s_all**d - s_inner**d)


def _window_outside_bound(cert: DecayCertificate, d: int, R: int) -> float:
    """Bound on ``sum_{|z|_inf > R} C rate**|z|_1`` (mass outside the window)."""
    r = cert.rate
    s_all = (1 + r) / (1 - r)
    s_in = 1.0 + 2.0 * sum(r**k for k in range(1, R + 1))
    return cert.constant * max(0.0, s_all**d - s_in**d)


def _fold_window(k: WindowKernel, spec: TorusSpec) -> np.ndarray:
    out = np.zeros(spec.shape)
    idx = [np.mod(np.arange(-k.R, k.R + 1), spec.M)] * k.d
    np.add.at(out, np.ix_(*idx), k.values)
    return out


def periodize(k: WindowKernel, spec: TorusSpec, tail_tol: float = 1e-14) -> TorusField:
    """Sum a ``Z^d`` kernel over the translate lattice ``M Z^d``.

    Kernels without a decay certificate are assumed supported in their window
    and are folded exactly.  Certified kernels carrying ``func`` are summed in
    shells of increasing ``|n|_inf`` until the certified bound on the
    remaining shells drops below ``tail_tol``; certified kernels without
    ``func`` fold the window and must have certified outside mass below
    ``tail_tol``.
    """
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    if k.d != spec.d:
        raise ValueError("kernel and torus dimensions differ")
    if k.certificate is None:
        if k.func is not None:
            raise ValueError(
                "missing decay certificate: kernel extends beyond its window"
            )
        return TorusField(spec, _fold_window(k, spec))

    cert = k.certificate
    if k.func is None:
        bound = _window_outside_bound(cert, k.d, k.R)
        if bound > tail_tol:
            raise ValueError(
                f"decay certificate too weak: outside-window mass bound {bound:.3e} "
                f"exceeds tail_tol {tail_tol:.3e}"
            )
        return TorusField(spec, _fold_window(k, spec))

    M, half, d = spec.M, spec.half, spec.d
    grids = np.meshgrid(*([spec.coords_1d()] * d), indexing="ij")
    base = np.stack([g.ravel() for g in grids], axis=-1)
    acc = np.zeros(base.shape[0])
    K = 0
    while True:
        if K > 0 and _certified_shell_tail(cert, d, M, half, K) <= tail_tol:
            break
        if K > 10_000:
            raise ValueError("decay certificate too weak to reach tail_tol")
        for n in itertools.product(range(-K, K + 1), repeat=d):
            if max(abs(v) for v in n) != K:
                continue
            acc += np.asarray(k.func(base + M * np.asarray(n)), dtype=float)
        K += 1
    vals = np.zeros(spec.shape)
    vals[tuple(np.mod(base[:, i], M) for i in range(d))] = acc
    return TorusField(spec, vals)


# ---------------------------------------------------------------------------
# differences and norms


def forward_diff(f, idx: MultiIndex | Sequence[int]):
    """Iterated forward differences ``(d_k f)(x) = f(x + e_k) - f(x)``.

    Works on :class:`TorusField` (periodic) and :class:`WindowKernel`
    (zero-extended outside the window; the trusted region shrinks by the
    order in each direction and is recorded in ``shrink``).
    """
    if not isinstance(idx, MultiIndex):
        idx = MultiIndex(tuple(idx))
    if isinstance(f, TorusField):
        if idx.d != f.spec.d:
            raise ValueError("multi-index dimension mismatch")
        v = f.values
        for axis, n in enumerate(idx.l):
            for _ in range(n):
                v = np.roll(v, -1, axis=axis) - v
        return TorusField(f.spec, v)
    if isinstance(f, WindowKernel):
        if idx.d != f.d:
            raise ValueError("multi-index dimension mismatch")
        v = f.values
        for axis, n in enumerate(idx.l):
            for _ in range(n):
                shifted = np.zeros_like(v)
                src = [slice(None)] * v.ndim
                dst = [slice(None)] * v.ndim
                src[axis] = slice(1, None)
                dst[axis] = slice(0, -1)
                shifted[tuple(dst)] = v[tuple(src)]
                v = shifted - v
        shrink = tuple(s + n for s, n in zip(f.shrink, idx.l))
        return WindowKernel(v, symmetric=False, shrink=shrink)
    raise TypeError(f"unsupported field type {type(f).__name__}")


def norms(f) -> tuple[float, float]:
    """``(sup |f|, sum |f|)`` over the fundamental cube or the window.

    The l1 sum is exactly rounded (``math.fsum``), hence independent of
    summation order.
    """
    v = np.abs(np.asarray(f.values, dtype=float)).ravel()
    if v.size == 0:
        return 0.0, 0.0
    return float(v.max()), math.fsum(v)


def _distance(grids: list[np.ndarray], metric: str) -> np.ndarray:
    if metric == "l1":
        return sum(np.abs(g) for g in grids)
    if metric == "l2":
        return np.sqrt(sum(g.astype(float) ** 2 for g in grids))
    if metric == "linf":
        out = np.abs(grids[0])
        for g in grids[1:]:
            out = np.maximum(out, np.abs(g))
        return out
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def range_of(f, metric: str = "l1", eps: float = 0.0) -> int:
    """Smallest integer ``R`` with ``|f(x)| <= eps`` whenever ``|x| >= R``.

    For torus fields distances use the centered representative, which
    minimizes every l^p norm over translates when ``M`` is odd.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    grids = f.spec.coord_grids() if isinstance(f, TorusField) else f.coord_grids()
    dist = np.broadcast_to(_distance(grids, metric), f.values.shape)
    big = np.abs(f.values) > eps
    if not big.any():
        return 0
    return int(math.floor(float(dist[big].max()))) + 1


def all_ranges(f, eps: float = 0.0) -> dict[str, int]:
    return {m: range_of(f, m, eps) for m in METRICS}


# ---------------------------------------------------------------------------
# CSV dumps


def dump_csv(f: TorusField, path: str | Path) -> None:
    """Write ``x1,...,xd,value`` rows in lexicographic order over the cube."""
    spec = f.spec
    c = np.arange(-spec.half, spec.half + 1)
    pts = np.stack(np.meshgrid(*([c] * spec.d), indexing="ij"), axis=-1).reshape(-1, spec.d)
    vals = f.centered().ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(spec.d)] + ["value"])
        for p, v in zip(pts.tolist(), vals.tolist()):
            w.writerow(p + [repr(v)])


def load_csv(path: str | Path, spec: TorusSpec) -> TorusField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (spec.volume, spec.d + 1):
        raise ValueError(f"{path}: expected {spec.volume} rows of {spec.d + 1} columns")
    vals = np.zeros(spec.shape)
    idx = tuple(np.mod(data[:, i].astype(int), spec.M) for i in range(spec.d))
    vals[idx] = data[:, -1]
    return TorusField(spec, vals)
