"""Spectral density of the fractional resolvent and quadrature against it.

For ``0 < alpha < 2`` and ``m2 >= 0`` the density

    rho(s) = sin(pi a/2)/pi * s^(a/2) / (s^a + m2^2 + 2 m2 s^(a/2) cos(pi a/2))

represents the resolvent as a superposition of ordinary ones,

    1 / (lam^(a/2) + m2) = int_0^inf rho(s) / (s + lam) ds.

Integrals against ``rho`` (or its mass derivative) are computed on the real
line ``t`` after the substitution ``s^(a/2) = m2 * exp(t)`` (``s = exp(t)``
when ``m2 == 0``), with adaptive fixed-order Gauss-Legendre panels and
exponentially small tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

WEIGHTS = ("rho", "rho_dm2")


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""


@dataclass(frozen=True)
class SpectralParams:
    alpha: float
    m2: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2) (got {self.alpha})")
        if not self.m2 >= 0.0 or not math.isfinite(self.m2):
            raise ValueError(f"m2 must be finite and >= 0 (got {self.m2})")

    # written about alpha = 1 so that cos vanishes exactly there
    @property
    def sin(self) -> float:
        return math.cos(math.pi * (1.0 - self.alpha) / 2)

    @property
    def cos(self) -> float:
        return math.sin(math.pi * (1.0 - self.alpha) / 2)

    @property
    def mu(self) -> float:
        """Natural s-scale ``(m2)^(2/alpha)``."""
        return self.m2 ** (2.0 / self.alpha)

    def require_massive(self) -> None:
        if self.m2 <= 0.0:
            raise ValueError(
                "the torus resolvent is valid only when m != 0; got m2 = 0"
            )

    def require_continuity_range(self) -> None:
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(
                f"mass-continuity bounds need 1 < alpha < 2 (got {self.alpha})"
            )

    def with_m2(self, m2: float) -> "SpectralParams":
        return SpectralParams(self.alpha, m2)


@dataclass(frozen=True)
class ScalingExponents:
    """Scale dimension ``[phi] = (d - alpha)/2`` of the field."""

    d: int
    alpha: float

    @property
    def phi_dim(self) -> float:
        return (self.d - self.alpha) / 2

    @property
    def two_phi(self) -> float:
        return self.d - self.alpha


@dataclass(frozen=True)
class QuadratureRule:
    """Adaptive Gauss-Legendre panels on the logarithmic variable.

    Parameters
    ----------
    rel_tol : float
        Target relative error per output component.
    max_panels : int
        Hard cap on the number of panels.
    order : int
        Gauss-Legendre nodes per panel.
    t_half_width : float
        Initial half-width of the panel range around the natural scale.
    panel_width : float
        Initial panel width in ``t``.
    """

    rel_tol: float = 1e-9
    max_panels: int = 4000
    order: int = 20
    t_half_width: float = 30.0
    panel_width: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.max_panels < 4 or self.order < 2:
            raise ValueError("max_panels >= 4 and order >= 2 required")


@dataclass(frozen=True)
class Envelope:
    """Declared majorant ``|f(s)| <= C s^a (1+s)^b``.

    ``constant`` may be left as ``None``; spot checks then look only at the
    growth of ``|f| / (s^a (1+s)^b)`` towards the endpoints.
    """

    a: float = 0.0
    b: float = 0.0
    constant: float | None = None

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return s**self.a * (1.0 + s) ** self.b


@dataclass
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    n_panels: int
    t_range: tuple[float, float]
    nodes: int = 0
    meta: dict = field(default_factory=dict)

    def scalar(self) -> float:
        return float(np.asarray(self.value).reshape(-1)[0])


# ---------------------------------------------------------------------------
# closed forms


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError("rho is defined for s > 0 only")
    return s


def denominator(s, P: SpectralParams):
    """``d_a(s, m2) = s^a + m2^2 + 2 m2 s^(a/2) cos(pi a/2)``."""
    s = _check_s(s)
    h = s ** (P.alpha / 2)
    out = s**P.alpha + P.m2 * P.m2 + 2.0 * P.m2 * h * P.cos
    return float(out) if out.ndim == 0 else out


def rho(s, P: SpectralParams):
    s = _check_s(s)
    h = s ** (P.alpha / 2)
    out = (P.sin / math.pi) * h / (s**P.alpha + P.m2 * P.m2 + 2.0 * P.m2 * h * P.cos)
    return float(out) if out.ndim == 0 else out


def rho_dm2(s, P: SpectralParams):
    """Analytic derivative of :func:`rho` in ``m2``."""
    s = _check_s(s)
    h = s ** (P.alpha / 2)
    den = s**P.alpha + P.m2 * P.m2 + 2.0 * P.m2 * h * P.cos
    out = -(P.sin / math.pi) * h * (2.0 * P.m2 + 2.0 * h * P.cos) / (den * den)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# substitution: weight(t) = rho(s(t)) ds/dt


def s_of_t(t: np.ndarray, P: SpectralParams) -> np.ndarray:
    if P.m2 > 0:
        # log form: mu = m2^(2/a) under- or overflows for extreme m2
        return np.exp((2.0 / P.alpha) * (math.log(P.m2) + t))
    return np.exp(t)


def _log_q(t: np.ndarray, c: float) -> np.ndarray:
    """``log(sig^2 + 2 c sig + 1)`` with ``sig = e^t``, overflow-free."""
    t = np.asarray(t, dtype=float)
    sig = np.exp(np.minimum(t, 0.0))
    inv = np.exp(-np.maximum(t, 0.0))
    small = np.log1p(sig * (sig + 2.0 * c))
    large = 2.0 * t + np.log1p(inv * (2.0 * c + inv))
    return np.where(t <= 0.0, small, large)


def _weight(t: np.ndarray, P: SpectralParams, kind: str) -> np.ndarray:
    a, c, k = P.alpha, P.cos, P.sin / math.pi
    if P.m2 > 0:
        # s = m2^(2/a) sig^(2/a), ds = (2/a) s dt, 1/(m2 q) from the denominator
        g = 2.0 / a
        lm = math.log(P.m2)
        lq = _log_q(t, c)
        if kind == "rho":
            return k * g * np.exp((g - 1.0) * lm + (g + 1.0) * t - lq)
        # 2 sig (1 + c sig) = 2 sig^2 (c + 1/sig)
        return -k * g * 2.0 * (c + np.exp(-t)) * np.exp((g - 2.0) * lm + (g + 2.0) * t - 2.0 * lq)
    s = np.exp(t)
    if kind == "rho":
        return k * s ** (1.0 - a / 2)
    return -k * 2.0 * c * s ** (1.0 - a)


def _rates(P: SpectralParams, env: Envelope, kind: str) -> tuple[float, float]:
    """Exponential rates of the envelope of the t-integrand at -inf and +inf."""
    a = P.alpha
    if P.m2 > 0:
        g = 2.0 / a
        lo = g + 1.0 + g * env.a
        if kind == "rho":
            hi = g - 1.0 + g * (env.a + env.b)
        else:
            hi = g - (3.0 if P.cos == 0.0 else 2.0) + g * (env.a + env.b)
    else:
        base = 1.0 - a / 2 if kind == "rho" else 1.0 - a
        lo = base + env.a
        hi = base + env.a + env.b
    return lo, hi


def integrability_condition(P: SpectralParams, env: Envelope, kind: str = "rho") -> tuple[bool, str]:
    lo, hi = _rates(P, env, kind)
    if lo <= 0:
        return False, (
            f"integrand not integrable at s = 0: envelope exponent a = {env.a} "
            f"too small for alpha = {P.alpha}, m2 = {P.m2}"
        )
    if hi >= 0:
        return False, (
            f"integrand not integrable at s = inf: a + b = {env.a + env.b} too large"
        )
    return True, ""


# ---------------------------------------------------------------------------
# adaptive engine on the real line


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def _panel_sums(g, edges_a: np.ndarray, edges_b: np.ndarray, order: int, budget: int = 4_000_000):
    """Whole-panel and two-halves GL sums for each panel.

    Panels are processed in chunks so that at most ``budget`` integrand
    values are held at once.
    """
    x, w = _gauss(order)
    if edges_a.size == 0:
        raise QuadratureError("no panels to evaluate")
    K = np.asarray(g(edges_a[:1]), dtype=float).size
    step = max(1, budget // (3 * order * K))
    whole, halves = [], []
    for i in range(0, edges_a.size, step):
        a, b = edges_a[i : i + step], edges_b[i : i + step]
        mid = 0.5 * (a + b)
        hw = 0.5 * (b - a)
        lh = 0.5 * hw
        t = np.concatenate(
            [
                (mid[:, None] + hw[:, None] * x).ravel(),
                ((a + lh)[:, None] + lh[:, None] * x).ravel(),
                ((mid + lh)[:, None] + lh[:, None] * x).ravel(),
            ]
        )
        vals = np.asarray(g(t), dtype=float).reshape(3, a.size, order, K)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError(
                f"integrand not finite on t in [{float(a[0]):.3g}, {float(b[-1]):.3g}]"
            )
        whole.append(np.einsum("pok,o->pk", vals[0], w) * hw[:, None])
        halves.append(
            (np.einsum("pok,o->pk", vals[1], w) + np.einsum("pok,o->pk", vals[2], w)) * lh[:, None]
        )
    return np.concatenate(whole), np.concatenate(halves)


def _edge_values(g, t: float) -> np.ndarray:
    return np.abs(np.asarray(g(np.array([t])), dtype=float).reshape(-1))


def adaptive_line(
    g: Callable[[np.ndarray], np.ndarray],
    kappa_lo: float,
    kappa_hi: float,
    rule: QuadratureRule,
    center: float = 0.0,
    floor: float = 1e-13,
    half_width: float | None = None,
) -> QuadResult:
    """Integrate a vector-valued ``g`` over the real line.

    ``|g(t)|`` must decay at least like ``exp(kappa_lo t)`` as ``t -> -inf``
    and ``exp(kappa_hi t)`` as ``t -> +inf`` (``kappa_lo > 0 > kappa_hi``).
    Each component ``c`` is accepted once its error estimate is below
    ``rel_tol * max(|I_c|, floor * max_c |I_c|)``.
    """
    if not (kappa_lo > 0 and kappa_hi < 0):
        raise ValueError("integrand must decay at both ends")
    half_width = rule.t_half_width if half_width is None else half_width
    tol = rule.rel_tol
    w0 = rule.panel_width
    lo, hi = center - half_width, center + half_width
    n0 = int(round((hi - lo) / w0))
    a = lo + w0 * np.arange(n0)
    b = a + w0
    whole, halves = _panel_sums(g, a, b, rule.order)

    def tolerance(I):
        scale = np.abs(I)
        return tol * np.maximum(scale, floor * scale.max() + 1e-300)

    for _ in range(200):
        # tails: extend outward until the envelope tail is negligible
        I = halves.sum(axis=0)
        tol_c = tolerance(I)
        grew = False
        g_lo = _edge_values(g, a[0])
        if np.any(g_lo / kappa_lo > 0.01 * tol_c):
            na = a[0] - w0 * np.arange(8, 0, -1)
            wh, hv = _panel_sums(g, na, na + w0, rule.order)
            a, b = np.concatenate([na, a]), np.concatenate([na + w0, b])
            whole, halves = np.concatenate([wh, whole]), np.concatenate([hv, halves])
            grew = True
        g_hi = _edge_values(g, b[-1])
        if np.any(g_hi / -kappa_hi > 0.01 * tol_c):
            na = b[-1] + w0 * np.arange(8)
            wh, hv = _panel_sums(g, na, na + w0, rule.order)
            a, b = np.concatenate([a, na]), np.concatenate([b, na + w0])
            whole, halves = np.concatenate([whole, wh]), np.concatenate([halves, hv])
            grew = True
        if a.size > rule.max_panels:
            raise QuadratureError(f"tail extension exceeded max_panels = {rule.max_panels}")
        if grew:
            continue
        err = np.abs(whole - halves)
        total = err.sum(axis=0)
        if np.all(total <= tol_c):
            break
        bad = np.any(err > (tol_c / (2 * a.size))[None, :], axis=1)
        if not bad.any():
            bad = np.any(err == err.max(axis=0, keepdims=True), axis=1)
        if a.size + bad.sum() > rule.max_panels:
            raise QuadratureError(
                f"no convergence within max_panels = {rule.max_panels}; "
                f"worst error {float((total / tol_c).max()):.2e} x tolerance"
            )
        mid = 0.5 * (a[bad] + b[bad])
        na = np.concatenate([a[bad], mid])
        nb = np.concatenate([mid, b[bad]])
        wh, hv = _panel_sums(g, na, nb, rule.order)
        keep = ~bad
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        whole = np.concatenate([whole[keep], wh])
        halves = np.concatenate([halves[keep], hv])
        order = np.argsort(a, kind="stable")
        a, b, whole, halves = a[order], b[order], whole[order], halves[order]
    else:
        raise QuadratureError("adaptive refinement did not terminate")

    # fixed left-to-right reduction, independent of refinement history
    value = np.array([math.fsum(col) for col in halves.T])
    error = np.abs(whole - halves).sum(axis=0)
    return QuadResult(value, error, int(a.size), (float(a[0]), float(b[-1])), nodes=3 * rule.order * a.size)


# ---------------------------------------------------------------------------
# integrals against rho


def _spot_check(f, P: SpectralParams, env: Envelope, kind: str, t_range) -> None:
    t = np.linspace(t_range[0], t_range[1], 41)
    s = s_of_t(t, P)
    fv = np.abs(np.asarray(f(s), dtype=float).reshape(s.size, -1)).max(axis=1)
    ratio = fv / env(s)
    if env.constant is not None:
        if np.any(ratio > env.constant * (1 + 1e-9)):
            raise ValueError("integrand violates its declared envelope")
        return
    core = ratio[15:26].max()
    if core > 0 and (ratio[:3].max() > 1e6 * core or ratio[-3:].max() > 1e6 * core):
        raise ValueError("integrand violates its declared envelope (grows faster than declared)")


_LOG_S_MAX = 300.0


def _t_window(P: SpectralParams, rule: QuadratureRule) -> tuple[float, float]:
    """Initial panel window in ``t``, clipped so that ``|log s| <= 300``."""
    hw = rule.t_half_width
    if P.m2 == 0:
        return 0.0, min(hw, _LOG_S_MAX)
    # log s = (2/a)(log m2 + t)
    lm = math.log(P.m2)
    span = 0.5 * P.alpha * _LOG_S_MAX
    lo, hi = max(-hw, -span - lm), min(hw, span - lm)
    if hi - lo < 2.0:
        return -lm, min(hw, span)
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


def integrate_rho(
    P: SpectralParams,
    f: Callable[[np.ndarray], np.ndarray],
    rule: QuadratureRule | None = None,
    envelope: Envelope | None = None,
    weight: str = "rho",
    full: bool = False,
):
    """``int_0^inf w(s) f(s) ds`` with ``w`` = ``rho`` or ``rho_dm2``.

    Parameters
    ----------
    P : SpectralParams
    f : callable
        Vectorized in ``s``; may return shape ``(n,)`` or ``(n, K)`` for
        ``K`` simultaneous integrands sharing one set of nodes.
    rule : QuadratureRule, optional
    envelope : Envelope, optional
        Declared majorant of ``f``; defaults to bounded and ``O(1/s)``.
    weight : {"rho", "rho_dm2"}
    full : bool
        Return the :class:`QuadResult` instead of the value.

    Raises
    ------
    ValueError
        Declared envelope is not integrable against the weight, or spot
        checks find ``f`` outside its envelope.
    QuadratureError
        No convergence within ``rule.max_panels``.
    """
    if weight not in WEIGHTS:
        raise ValueError(f"weight must be one of {WEIGHTS}")
    rule = rule or QuadratureRule()
    env = envelope or Envelope(0.0, -1.0)
    ok, why = integrability_condition(P, env, weight)
    if not ok:
        raise ValueError(why)
    k_lo, k_hi = _rates(P, env, weight)

    def g(t):
        w = _weight(t, P, weight)
        fv = np.asarray(f(s_of_t(t, P)), dtype=float)
        return w.reshape((-1,) + (1,) * (fv.ndim - 1)) * fv

    center, half = _t_window(P, rule)
    _spot_check(f, P, env, weight, (center - half, center + half))
    res = adaptive_line(g, k_lo, k_hi, rule, center=center, half_width=half)
    _spot_check(f, P, env, weight, res.t_range)
    if full:
        return res
    v = res.value
    return float(v[0]) if v.size == 1 else v


@dataclass(frozen=True)
class StieltjesResult:
    value: float
    exact: float
    rel_err: float


def stieltjes_check(lam: float, P: SpectralParams, rule: QuadratureRule | None = None) -> StieltjesResult:
    """Compare ``int rho/(s+lam)`` with ``1/(lam^(a/2) + m2)``."""
    if lam < 0 or lam + P.m2 <= 0:
        raise ValueError("need lam >= 0 and lam + m2 > 0")
    env = Envelope(0.0, -1.0) if lam > 0 else Envelope(-1.0, 0.0)
    val = integrate_rho(P, lambda s: 1.0 / (s + lam), rule, env)
    exact = 1.0 / (lam ** (P.alpha / 2) + P.m2)
    return StieltjesResult(val, exact, abs(val - exact) / exact)


def H_alpha(mu: float, alpha: float, rule: QuadratureRule | None = None) -> float:
    """``int_0^inf sig^(2/a) (1+sig) / (1+sig^2)^2 / (1 + mu sig^(2/a)) dsig``."""
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"H_alpha needs 1 < alpha < 2 (got {alpha})")
    if mu < 0:
        raise ValueError("mu must be >= 0")
    rule = rule or QuadratureRule()
    g2 = 2.0 / alpha

    def g(t):
        sig = np.exp(t)
        p = sig**g2
        return sig * p * (1.0 + sig) / (1.0 + sig * sig) ** 2 / (1.0 + mu * p)

    hi = g2 - 2.0 if mu == 0 else -2.0
    return adaptive_line(g, g2 + 1.0, hi, rule).scalar()


def F_alpha(m2: float, alpha: float, rule: QuadratureRule | None = None) -> float:
    """``int_0^inf s^(a/2-1) (m2 + s^(a/2)) / (s^a + m2^2)^2 (1+s)^-2 ds``."""
    if m2 <= 0:
        raise ValueError("F_alpha needs m2 > 0")
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    rule = rule or QuadratureRule()
    h_ = alpha / 2

    def g(t):
        s = np.exp(t)
        h = s**h_
        return h * (m2 + h) / (h * h + m2 * m2) ** 2 / (1.0 + s) ** 2

    center = math.log(m2) / h_
    return adaptive_line(g, h_, -2.0 - alpha, rule, center=center).scalar()
