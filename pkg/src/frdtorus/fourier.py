"""Discrete Fourier analysis on the torus.

Conventions: ``f_hat(p) = sum_x f(x) exp(-i p.x)`` and
``f(x) = M^-d sum_p f_hat(p) exp(i p.x)`` with ``p = 2 pi q / M``.  Both
directions are ``numpy.fft`` on arrays in periodic index order, so the pair
is an exact inverse up to rounding and bit-reproducible for fixed input.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lattice import TorusField, TorusSpec, WindowKernel, periodize


@dataclass(frozen=True)
class MomentumGrid:
    """Torus momenta ``p = (2 pi / M) q`` for ``q`` in the centered cube."""

    spec: TorusSpec

    @property
    def size(self) -> int:
        return self.spec.volume

    def p_1d(self) -> np.ndarray:
        """Centered momentum of each periodic index, in ``(-pi, pi)``."""
        return 2.0 * math.pi * self.spec.coords_1d() / self.spec.M

    def p_grids(self) -> list[np.ndarray]:
        """Broadcastable per-axis momentum arrays (periodic index order)."""
        return [2.0 * math.pi * c / self.spec.M for c in self.spec.coord_grids()]

    def lam(self) -> np.ndarray:
        """Lattice Laplacian symbol ``sum_k 4 sin^2(p_k/2)`` on the full grid."""
        lam1 = 4.0 * np.sin(self.p_1d() / 2) ** 2
        out = np.zeros(self.spec.shape)
        for k in range(self.spec.d):
            sh = [1] * self.spec.d
            sh[k] = self.spec.M
            out = out + lam1.reshape(sh)
        return out

    def norm(self) -> np.ndarray:
        """Euclidean ``|p|`` with centered representatives."""
        return np.sqrt(sum(g * g for g in self.p_grids()))


def dft(f: TorusField) -> np.ndarray:
    """Fourier coefficients ``f_hat`` in periodic index order."""
    return np.fft.fftn(f.values)


def idft(coeffs: np.ndarray, spec: TorusSpec) -> TorusField:
    """Inverse of :func:`dft`; the imaginary part is discarded.

    Real symmetric coefficients give a real field, so the discarded part is
    rounding only.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.shape != spec.shape:
        raise ValueError("coefficient shape does not match torus")
    return TorusField(spec, np.fft.ifftn(coeffs).real)


def symbol_of_real_even(values: np.ndarray) -> np.ndarray:
    """Real-valued symbol of a real field symmetric under ``x -> -x``."""
    return np.fft.fftn(values).real


def _axis_matrix(M: int, coords: np.ndarray) -> np.ndarray:
    q = np.arange(M)
    return np.exp(-2j * math.pi * np.outer(q, coords) / M)


def zd_transform(k: WindowKernel, M: int) -> np.ndarray:
    """``sum_x k(x) exp(-i p.x)`` over the window, at the torus momenta.

    Direct per-axis evaluation (no FFT), used as an independent check of the
    periodization.
    """
    E = _axis_matrix(M, np.arange(-k.R, k.R + 1))
    out = k.values.astype(complex)
    for axis in range(k.d):
        out = np.moveaxis(np.tensordot(E, out, axes=([1], [axis])), 0, axis)
    return out


def poisson_consistency(k: WindowKernel, spec: TorusSpec, tail_tol: float = 1e-14) -> float:
    """Max over momenta of ``|dft(periodize(k)) - FT_{Z^d}(k)|``."""
    lhs = dft(periodize(k, spec, tail_tol))
    rhs = zd_transform(k, spec.M)
    return float(np.abs(lhs - rhs).max())


@dataclass(frozen=True)
class DecayFit:
    """Envelope ``|g_hat(p)| <= C (1 + (L^N |p|)^2)^-k``."""

    C: float
    k: float
    residual: float
    n_used: int
    n_excluded: int
    log_C: float = 0.0

    def exponent_ok(self, d: int, l: int) -> bool:
        return 2.0 * self.k > d + l + 1

    def envelope(self, x: np.ndarray) -> np.ndarray:
        """Envelope at ``x = (L^N |p|)^2``, evaluated in logs (``C`` may overflow).

        Where the envelope exceeds the float range it is ``inf``, which is
        still a valid majorant.
        """
        with np.errstate(over="ignore"):
            return np.exp(self.log_C - self.k * np.log1p(x))


def decay_fit(coeffs: np.ndarray, spec: TorusSpec, floor: float = 1e-300) -> DecayFit:
    """Least-squares power envelope of Fourier coefficients.

    Fits ``log|g_hat| = log C - k log(1 + (L^N |p|)^2)`` over nonzero momenta
    with ``|g_hat| > floor``, then inflates ``C`` so the envelope majorizes
    every coefficient (including ``p = 0``).
    """
    g = np.abs(np.asarray(coeffs)).ravel()
    x = ((spec.L**spec.N * MomentumGrid(spec).norm()) ** 2).ravel()
    use = (x > 0) & (g > floor)
    if use.sum() < 2:
        raise ValueError("too few nonzero coefficients to fit a decay envelope")
    X = np.log1p(x[use])
    A = np.stack([np.ones_like(X), -X], axis=1)
    (logC, k), res, *_ = np.linalg.lstsq(A, np.log(g[use]), rcond=None)
    k = max(float(k), 0.0)
    pos = g > 0
    # inflate in logs: for fast-decaying coefficients C itself can overflow
    log_C = float(np.max(np.log(g[pos]) + k * np.log1p(x[pos]))) if pos.any() else -math.inf
    with np.errstate(over="ignore"):
        C = float(np.exp(log_C))
    resid = float(np.sqrt(res[0] / use.sum())) if res.size else 0.0
    return DecayFit(C, k, resid, int(use.sum()), int((~use & (x > 0)).sum()), log_C)


def dump_coefficients(coeffs: np.ndarray, spec: TorusSpec, path: str | Path) -> None:
    """CSV ``q1,...,qd,re,im`` in lexicographic order over the centered cube."""
    c = np.arange(-spec.half, spec.half + 1)
    qs = np.stack(np.meshgrid(*([c] * spec.d), indexing="ij"), axis=-1).reshape(-1, spec.d)
    vals = np.fft.fftshift(np.asarray(coeffs, dtype=complex)).ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"q{i + 1}" for i in range(spec.d)] + ["re", "im"])
        for q, v in zip(qs.tolist(), vals.tolist()):
            w.writerow(q + [repr(v.real), repr(v.imag)])


def load_coefficients(path: str | Path, spec: TorusSpec) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    out = np.zeros(spec.shape, dtype=complex)
    idx = tuple(np.mod(data[:, i].astype(int), spec.M) for i in range(spec.d))
    out[idx] = data[:, -2] + 1j * data[:, -1]
    return out
