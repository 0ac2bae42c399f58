import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frdtorus.fourier import (
    MomentumGrid,
    decay_fit,
    dft,
    dump_coefficients,
    idft,
    load_coefficients,
    poisson_consistency,
    zd_transform,
)
from frdtorus.lattice import DecayCertificate, TorusField, TorusSpec, WindowKernel, forward_diff

SPEC = TorusSpec(2, 3, 2)
seeds = st.integers(0, 2**32 - 1)


def random_field(seed, spec=SPEC):
    return TorusField(spec, np.random.default_rng(seed).standard_normal(spec.shape))


def direct_dft(f):
    """Two-sided direct sum ``sum_x f(x) exp(-i p.x)`` over the centered cube."""
    spec = f.spec
    c = spec.coords_1d()
    E = np.exp(-2j * math.pi * np.outer(np.arange(spec.M), c) / spec.M)
    return E @ f.values @ E.T


def test_momentum_grid():
    g = MomentumGrid(SPEC)
    assert g.size == 729
    p = g.p_1d()
    assert p.size == 27 and np.all(np.abs(p) < math.pi)
    # closed under p -> -p
    assert np.allclose(np.sort(p), np.sort(-p), atol=1e-15)
    assert g.lam()[0, 0] == 0.0
    assert g.lam().max() <= 8.0


def test_dft_of_delta():
    f = TorusField(SPEC, np.zeros(SPEC.shape))
    f.values[0, 0] = 1.0
    assert np.array_equal(dft(f), np.ones(SPEC.shape, dtype=complex))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_round_trip(seed):
    f = random_field(seed)
    g = idft(dft(f), SPEC)
    assert np.max(np.abs(g.values - f.values)) <= 1e-13 * np.abs(f.values).max()


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_parseval(seed):
    f = random_field(seed)
    lhs = math.fsum((f.values**2).ravel())
    c = direct_dft(f)
    rhs = math.fsum((np.abs(c) ** 2).ravel()) / SPEC.volume
    assert abs(lhs - rhs) <= 1e-12 * lhs


@pytest.mark.parametrize("seed", [0, 1])
def test_dft_matches_direct_sum(seed):
    f = random_field(seed)
    assert np.max(np.abs(dft(f) - direct_dft(f))) <= 1e-11


def test_real_even_field_has_real_even_coefficients():
    f = random_field(3)
    v = f.values + np.roll(f.values[::-1, ::-1], 1, axis=(0, 1))
    c = dft(TorusField(SPEC, v))
    assert np.max(np.abs(c.imag)) <= 1e-12
    assert np.allclose(c.real, np.roll(c.real[::-1, ::-1], 1, axis=(0, 1)), atol=1e-12)


def test_bit_reproducible():
    f = random_field(5)
    assert np.array_equal(dft(f), dft(f))


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(0, 1))
def test_derivative_multiplier(seed, k):
    f = random_field(seed)
    p = MomentumGrid(SPEC).p_grids()[k]
    lhs = dft(forward_diff(f, [1 - k, k]))
    rhs = (np.exp(1j * p) - 1) * dft(f)
    assert np.max(np.abs(lhs - rhs)) <= 1e-13 * np.abs(rhs).max()


def test_idft_shape_check():
    with pytest.raises(ValueError):
        idft(np.zeros((3, 3)), SPEC)


# -- Poisson consistency -----------------------------------------------------


def test_poisson_delta():
    k = WindowKernel.delta(2, 2)
    assert poisson_consistency(k, SPEC) == 0.0
    assert np.allclose(zd_transform(k, SPEC.M), 1.0, atol=0)


def test_poisson_compact_support():
    rng = np.random.default_rng(9)
    k = WindowKernel(rng.standard_normal((21, 21)))
    assert poisson_consistency(k, SPEC) <= 1e-14 * np.abs(k.values).sum()


def test_poisson_geometric_kernel():
    # window large enough that the Z^d transform is complete to below tail_tol
    tail_tol = 1e-12
    f = lambda x: 0.5 ** np.abs(x).sum(axis=-1)
    k = WindowKernel.from_function(f, 2, 60, DecayCertificate(0.5, 1.0), symmetric=True)
    assert poisson_consistency(k, SPEC, tail_tol) <= tail_tol


# -- decay fit ---------------------------------------------------------------


def test_decay_fit_exact_power():
    spec = TorusSpec(2, 3, 2)
    x = (spec.L**spec.N * MomentumGrid(spec).norm()) ** 2
    fit = decay_fit(7.0 * (1 + x) ** -3.5, spec)
    assert fit.k == pytest.approx(3.5, rel=1e-10)
    assert fit.C == pytest.approx(7.0, rel=1e-10)
    assert fit.exponent_ok(2, 2) and not fit.exponent_ok(2, 5)


def test_decay_fit_excludes_tiny():
    spec = TorusSpec(2, 3, 2)
    x = (spec.L**spec.N * MomentumGrid(spec).norm()) ** 2
    g = (1 + x) ** -2.0
    g[1, 1] = 0.0
    fit = decay_fit(g, spec)
    assert fit.n_excluded == 1 and fit.n_used == spec.volume - 2


def test_remainder_decay(dec_big):
    rem = dec_big.remainder
    fit = decay_fit(rem.symbol, rem.spec)
    assert fit.k >= 3
    assert all(fit.exponent_ok(2, l) for l in (0, 1, 2))
    # envelope majorizes every coefficient after inflation
    x = (rem.spec.L**rem.spec.N * MomentumGrid(rem.spec).norm()) ** 2
    assert np.all(np.abs(rem.symbol) <= fit.envelope(x) * (1 + 1e-12))
    # spot check at the largest axis momentum
    assert abs(rem.symbol[rem.spec.half, 0]) <= 1e-10 * abs(rem.symbol[0, 0])


def test_coefficient_csv_round_trip(tmp_path):
    c = dft(random_field(11))
    dump_coefficients(c, SPEC, tmp_path / "c.csv")
    head = (tmp_path / "c.csv").read_text().splitlines()[0]
    assert head == "q1,q2,re,im"
    assert np.array_equal(load_coefficients(tmp_path / "c.csv", SPEC), c)
