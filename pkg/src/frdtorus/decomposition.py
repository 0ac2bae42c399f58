"""Fractional finite-range decomposition on the torus.

Every piece is the spectral superposition of a walk block,

    Gamma_j,a(x) = int_0^inf rho_a(s, m2) Gamma_j(x, s) ds,

computed per momentum and transformed once.  All symbols of a build share
one set of quadrature nodes in ``s``; the computed piece is then an exact
nonnegative combination of block kernels, so it keeps their exact finite
range and positive semidefiniteness regardless of the quadrature error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .fourier import MomentumGrid, dft, idft
from .lattice import TorusField, TorusSpec, dump_csv, load_csv, norms, range_of, all_ranges
from .spectral import (
    Envelope,
    QuadratureRule,
    ScalingExponents,
    SpectralParams,
    integrate_rho,
)
from .walk import BlockSchedule, log_x

# joint envelope: every block and tail symbol lies below 1/(s + lam) <= 1/s
_ENVELOPE = Envelope(-1.0, 0.0)


@dataclass
class QuadInfo:
    rule: QuadratureRule
    weight: str
    n_panels: int
    max_error: float
    t_range: tuple[float, float]


@dataclass
class AlphaScaleKernel:
    """One piece ``Gamma~_j,a(., m2)``."""

    j: int
    params: SpectralParams
    field: TorusField
    symbol: np.ndarray
    exponents: ScalingExponents
    quad: QuadInfo
    exact_range: int
    resolvable: bool
    Ta: int = 0
    Tb: int = 1

    @property
    def spec(self) -> TorusSpec:
        return self.field.spec

    def eps_range(self, eps_rel: float = 1e-12, metric: str = "l1") -> int:
        sup = float(np.abs(self.field.values).max())
        return range_of(self.field, metric, eps_rel * sup)


@dataclass
class TorusRemainder:
    """Torus remainder ``G~_N,a,T``; ``symbol`` holds its Fourier coefficients."""

    N: int
    params: SpectralParams
    field: TorusField
    symbol: np.ndarray
    quad: QuadInfo
    TN: int = 0

    @property
    def spec(self) -> TorusSpec:
        return self.field.spec


@dataclass
class Decomposition:
    spec: TorusSpec
    params: SpectralParams
    schedule: BlockSchedule
    rule: QuadratureRule
    pieces: list[AlphaScaleKernel]
    remainder: TorusRemainder
    weight: str = "rho"

    def total(self) -> TorusField:
        """Pieces then remainder, summed left to right."""
        v = self.pieces[0].field.values.copy()
        for p in self.pieces[1:]:
            v = v + p.field.values
        return TorusField(self.spec, v + self.remainder.field.values)

    def total_symbol(self) -> np.ndarray:
        v = self.pieces[0].symbol.copy()
        for p in self.pieces[1:]:
            v = v + p.symbol
        return v + self.remainder.symbol


# ---------------------------------------------------------------------------
# exact resolvent


def resolvent_symbol(spec: TorusSpec, P: SpectralParams) -> np.ndarray:
    """``(lam(p)^(a/2) + m2)^-1`` on the torus grid; exactly ``1/m2`` at p = 0."""
    P.require_massive()
    lam = MomentumGrid(spec).lam()
    return 1.0 / (lam ** (P.alpha / 2) + P.m2)


def exact_torus_resolvent(spec: TorusSpec, P: SpectralParams) -> TorusField:
    return idft(resolvent_symbol(spec, P), spec)


# ---------------------------------------------------------------------------
# joint spectral quadrature


def spectral_symbols(
    lam: np.ndarray,
    d: int,
    P: SpectralParams,
    blocks: list[tuple[int, int | None]],
    rule: QuadratureRule,
    weight: str = "rho",
):
    """Integrate block symbols against ``rho`` (or ``rho_dm2``) jointly.

    Parameters
    ----------
    lam : ndarray
        Laplacian symbol values (any shape).
    blocks : list of (Ta, Tb)
        ``Tb = None`` denotes the tail ``(theta mu)^Ta / (s + lam)``.

    Returns
    -------
    list of ndarray, QuadInfo
        One array shaped like ``lam`` per block.
    """
    lam = np.asarray(lam, dtype=float)
    u, inv = np.unique(lam.ravel(), return_inverse=True)
    K, nb = u.size, len(blocks)

    def f(s):
        s = np.asarray(s, dtype=float)[:, None]
        lx = log_x(u[None, :], s, d)
        den = s + u[None, :]
        out = np.empty((s.shape[0], nb * K))
        for i, (Ta, Tb) in enumerate(blocks):
            head = np.exp(Ta * lx) if Ta > 0 else 1.0
            if Tb is None:
                val = head / den
            else:
                val = head * -np.expm1((Tb - Ta) * lx) / den
            out[:, i * K : (i + 1) * K] = val
        return out

    res = integrate_rho(P, f, rule, _ENVELOPE, weight=weight, full=True)
    vals = np.asarray(res.value).reshape(nb, K)
    info = QuadInfo(rule, weight, res.n_panels, float(np.max(res.error)), res.t_range)
    return [vals[i][inv].reshape(lam.shape) for i in range(nb)], info


def _pieces_from_symbols(spec, P, schedule, syms, info, js):
    ex = ScalingExponents(spec.d, P.alpha)
    out = []
    for j, sym in zip(js, syms):
        Ta, Tb = schedule.bounds(j)
        out.append(
            AlphaScaleKernel(
                j, P, idft(sym, spec), sym, ex, info, Tb - 1,
                schedule.resolvable(j, spec.M), Ta, Tb,
            )
        )
    return out


def build_piece(
    j: int,
    spec: TorusSpec,
    P: SpectralParams,
    rule: QuadratureRule | None = None,
    schedule: BlockSchedule | None = None,
    weight: str = "rho",
) -> AlphaScaleKernel:
    P.require_massive()
    rule = rule or QuadratureRule()
    schedule = schedule or BlockSchedule.default(spec.L, spec.N)
    lam = MomentumGrid(spec).lam()
    syms, info = spectral_symbols(lam, spec.d, P, [schedule.bounds(j)], rule, weight)
    return _pieces_from_symbols(spec, P, schedule, syms, info, [j])[0]


def build_remainder(
    spec: TorusSpec,
    P: SpectralParams,
    rule: QuadratureRule | None = None,
    schedule: BlockSchedule | None = None,
    weight: str = "rho",
) -> TorusRemainder:
    P.require_massive()
    rule = rule or QuadratureRule()
    schedule = schedule or BlockSchedule.default(spec.L, spec.N)
    lam = MomentumGrid(spec).lam()
    (sym,), info = spectral_symbols(lam, spec.d, P, [(schedule.tail_start, None)], rule, weight)
    return TorusRemainder(schedule.N, P, idft(sym, spec), sym, info, schedule.tail_start)


def assemble(
    spec: TorusSpec,
    P: SpectralParams,
    rule: QuadratureRule | None = None,
    schedule: BlockSchedule | None = None,
    weight: str = "rho",
) -> Decomposition:
    """All ``N`` pieces and the remainder from one joint quadrature.

    ``weight="rho_dm2"`` yields the mass derivative of every term.
    """
    P.require_massive()
    rule = rule or QuadratureRule()
    schedule = schedule or BlockSchedule.default(spec.L, spec.N)
    if schedule.N != spec.N:
        raise ValueError(f"schedule has {schedule.N} blocks, torus depth N = {spec.N}")
    lam = MomentumGrid(spec).lam()
    blocks = [schedule.bounds(j) for j in range(schedule.N)] + [(schedule.tail_start, None)]
    syms, info = spectral_symbols(lam, spec.d, P, blocks, rule, weight)
    pieces = _pieces_from_symbols(spec, P, schedule, syms[:-1], info, range(schedule.N))
    rem = TorusRemainder(schedule.N, P, idft(syms[-1], spec), syms[-1], info, schedule.tail_start)
    return Decomposition(spec, P, schedule, rule, pieces, rem, weight)


def mass_derivative(obj, rule: QuadratureRule | None = None):
    """``d/dm2`` of a piece, remainder or decomposition (same-shaped result)."""
    if isinstance(obj, Decomposition):
        return assemble(obj.spec, obj.params, rule or obj.rule, obj.schedule, "rho_dm2")
    if not isinstance(obj, (AlphaScaleKernel, TorusRemainder)):
        raise TypeError(f"unsupported object {type(obj).__name__}")
    rule = rule or obj.quad.rule
    lam = MomentumGrid(obj.spec).lam()
    if isinstance(obj, AlphaScaleKernel):
        (sym,), info = spectral_symbols(lam, obj.spec.d, obj.params, [(obj.Ta, obj.Tb)], rule, "rho_dm2")
        return replace(obj, field=idft(sym, obj.spec), symbol=sym, quad=info)
    if isinstance(obj, TorusRemainder):
        (sym,), info = spectral_symbols(lam, obj.spec.d, obj.params, [(obj.TN, None)], rule, "rho_dm2")
        return replace(obj, field=idft(sym, obj.spec), symbol=sym, quad=info)
    raise TypeError(f"unsupported object {type(obj).__name__}")


def reconstruction_defect(dec: Decomposition) -> tuple[float, float]:
    """``(sup |total - G|, sup |G|)`` against the closed-form resolvent."""
    G = exact_torus_resolvent(dec.spec, dec.params).values
    return float(np.abs(dec.total().values - G).max()), float(np.abs(G).max())


# ---------------------------------------------------------------------------
# coarse graining


@dataclass
class CoarsePiece:
    j: int
    members: tuple[int, ...]
    field: TorusField
    symbol: np.ndarray


@dataclass
class CoarseDecomposition:
    """Pieces grouped ``r`` at a time: ``Gamma'_j = sum_l Gamma_{l + j r}``.

    When ``r`` does not divide ``N`` the last group is shorter.  ``total``
    adds the fine pieces in their original order, so it is bitwise equal to
    the fine total.
    """

    fine: Decomposition
    r: int
    pieces: list[CoarsePiece]

    @property
    def L_prime(self) -> int:
        return self.fine.spec.L**self.r

    @property
    def remainder(self) -> TorusRemainder:
        return self.fine.remainder

    @property
    def truncated(self) -> bool:
        return self.fine.schedule.N % self.r != 0

    def total(self) -> TorusField:
        order = [m for p in self.pieces for m in p.members]
        f = self.fine.pieces
        v = f[order[0]].field.values.copy()
        for m in order[1:]:
            v = v + f[m].field.values
        return TorusField(self.fine.spec, v + self.fine.remainder.field.values)


def coarse_grain(dec: Decomposition, r: int) -> CoarseDecomposition:
    if r < 1:
        raise ValueError("coarse factor r must be >= 1")
    out = []
    n = len(dec.pieces)
    for j, start in enumerate(range(0, n, r)):
        members = tuple(range(start, min(start + r, n)))
        v = dec.pieces[members[0]].field.values.copy()
        s = dec.pieces[members[0]].symbol.copy()
        for m in members[1:]:
            v = v + dec.pieces[m].field.values
            s = s + dec.pieces[m].symbol
        out.append(CoarsePiece(j, members, TorusField(dec.spec, v), s))
    return CoarseDecomposition(dec, r, out)


# ---------------------------------------------------------------------------
# rescaling


@dataclass
class RescaledView:
    """``Gamma_j,a(y) = L^(2 j [phi]) Gamma~_j,a(L^j y)`` on ``(L^-q Z)^d``."""

    j: int
    q: int
    L: int
    phi_dim: float
    values: np.ndarray
    stride: int

    @property
    def spacing(self) -> float:
        return float(self.L) ** (-self.q)

    @property
    def scale(self) -> float:
        return float(self.L) ** (2 * self.j * self.phi_dim)

    def sup(self) -> float:
        return float(np.abs(self.values).max())


def rescaled_view(piece: AlphaScaleKernel, q: int, j: int | None = None) -> RescaledView:
    """Subsample a torus piece at stride ``L^(j-q)`` and scale by ``L^(2j[phi])``.

    ``j`` defaults to the piece's own scale index.
    """
    j = piece.j if j is None else j
    if not 0 <= q <= j:
        raise ValueError("need 0 <= q <= j")
    spec = piece.spec
    stride = spec.L ** (j - q)
    if spec.M % stride:
        raise ValueError("stride does not divide the torus side")
    sl = (slice(None, None, stride),) * spec.d
    phi = piece.exponents.phi_dim
    scale = float(spec.L) ** (2 * j * phi)
    return RescaledView(j, q, spec.L, phi, scale * piece.field.values[sl], stride)


def derivative_sup(values: np.ndarray, idx) -> float:
    """Sup of iterated periodic forward differences of an array."""
    v = values
    for axis, n in enumerate(idx):
        for _ in range(n):
            v = np.roll(v, -1, axis=axis) - v
    return float(np.abs(v).max())


# ---------------------------------------------------------------------------
# serialization


def _norm_entry(field_: TorusField, eps_rel: float = 1e-12) -> dict:
    sup, l1 = norms(field_)
    return {
        "sup": sup,
        "l1": l1,
        "exact_ranges": all_ranges(field_, 0.0),
        "eps_ranges": all_ranges(field_, eps_rel * sup),
    }


def manifest(dec: Decomposition) -> dict:
    r = dec.rule
    return {
        "d": dec.spec.d,
        "L": dec.spec.L,
        "N": dec.spec.N,
        "M": dec.spec.M,
        "alpha": dec.params.alpha,
        "m2": dec.params.m2,
        "weight": dec.weight,
        "schedule": list(dec.schedule.T),
        "quadrature": {
            "rel_tol": r.rel_tol,
            "order": r.order,
            "max_panels": r.max_panels,
            "panels": dec.remainder.quad.n_panels,
            "max_error": dec.remainder.quad.max_error,
        },
        "pieces": [
            {
                "j": p.j,
                "file": f"piece_{p.j}.csv",
                "T": [p.Ta, p.Tb],
                "exact_range_l1": p.exact_range,
                "resolvable": p.resolvable,
                **_norm_entry(p.field),
            }
            for p in dec.pieces
        ],
        "remainder": {"file": "remainder.csv", "T_N": dec.remainder.TN, **_norm_entry(dec.remainder.field)},
    }


def save(dec: Decomposition, out: str | Path) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for p in dec.pieces:
        dump_csv(p.field, out / f"piece_{p.j}.csv")
    dump_csv(dec.remainder.field, out / "remainder.csv")
    (out / "manifest.json").write_text(json.dumps(manifest(dec), indent=2, sort_keys=True) + "\n")
    return out


def load(path: str | Path) -> Decomposition:
    path = Path(path)
    man = json.loads((path / "manifest.json").read_text())
    spec = TorusSpec(man["d"], man["L"], man["N"])
    P = SpectralParams(man["alpha"], man["m2"])
    sched = BlockSchedule(tuple(man["schedule"]))
    q = man["quadrature"]
    rule = QuadratureRule(rel_tol=q["rel_tol"], order=q["order"], max_panels=q["max_panels"])
    info = QuadInfo(rule, man.get("weight", "rho"), q["panels"], q["max_error"], (math.nan, math.nan))
    ex = ScalingExponents(spec.d, P.alpha)
    pieces = []
    for e in man["pieces"]:
        f = load_csv(path / e["file"], spec)
        Ta, Tb = e["T"]
        pieces.append(
            AlphaScaleKernel(e["j"], P, f, dft(f).real, ex, info, e["exact_range_l1"], e["resolvable"], Ta, Tb)
        )
    f = load_csv(path / man["remainder"]["file"], spec)
    rem = TorusRemainder(spec.N, P, f, dft(f).real, info, man["remainder"]["T_N"])
    return Decomposition(spec, P, sched, rule, pieces, rem, man.get("weight", "rho"))
