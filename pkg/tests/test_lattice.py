import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frdtorus.lattice import (
    DecayCertificate,
    MultiIndex,
    TorusField,
    TorusSpec,
    WindowKernel,
    all_ranges,
    dump_csv,
    forward_diff,
    load_csv,
    norms,
    periodize,
    range_of,
)

SPEC = TorusSpec(2, 3, 2)  # M = 27


def geometric(x):
    return 0.5 ** np.abs(x).sum(axis=-1)


# -- TorusSpec ---------------------------------------------------------------


def test_spec_geometry():
    assert SPEC.M == 27
    assert SPEC.volume == 729 == SPEC.M**SPEC.d
    c = SPEC.coords_1d()
    assert c.min() == -13 and c.max() == 13
    assert sorted(c.tolist()) == list(range(-13, 14))
    assert SPEC.increment(2) == pytest.approx(1 / 9)


@pytest.mark.parametrize("d,L,N", [(1, 3, 2), (2, 4, 2), (2, 1, 2), (2, 3, 1)])
def test_spec_rejects_bad_geometry(d, L, N):
    with pytest.raises(ValueError):
        TorusSpec(d, L, N)


def test_multi_index():
    idx = MultiIndex.axis(3, 1, 2)
    assert idx.l == (0, 2, 0) and idx.order == 2 and idx.d == 3
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_certificate_validation():
    with pytest.raises(ValueError):
        DecayCertificate(1.0, 1.0)
    with pytest.raises(ValueError):
        DecayCertificate(0.5, -1.0)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.integers(-100, 100), min_size=2, max_size=2),
    st.lists(st.integers(-3, 3), min_size=2, max_size=2),
)
def test_field_indexing_is_periodic(x, n):
    rng = np.random.default_rng(0)
    f = TorusField(SPEC, rng.standard_normal(SPEC.shape))
    y = [a + SPEC.M * b for a, b in zip(x, n)]
    assert f.at(x) == f.at(y)


def test_centered_layout():
    f = TorusField(SPEC, np.zeros(SPEC.shape))
    f.values[1, 0] = 1.0
    f.values[-1, 0] = 2.0
    c = f.centered()
    h = SPEC.half
    assert c[h + 1, h] == 1.0 and c[h - 1, h] == 2.0


# -- periodize ---------------------------------------------------------------


def test_periodize_delta():
    f = periodize(WindowKernel.delta(2, R=3), SPEC)
    expect = np.zeros(SPEC.shape)
    expect[0, 0] = 1.0
    assert np.array_equal(f.values, expect)


def test_periodize_copies_kernel_inside_cube():
    rng = np.random.default_rng(1)
    R = SPEC.half
    k = WindowKernel(rng.standard_normal((2 * R + 1,) * 2))
    f = periodize(k, SPEC)
    assert np.array_equal(f.centered(), k.values)


def test_periodize_geometric_matches_brute_force_windows():
    M = SPEC.M
    k = WindowKernel.from_function(geometric, 2, SPEC.half, DecayCertificate(0.5, 1.0), symmetric=True)
    f = periodize(k, SPEC, tail_tol=1e-15)
    c = SPEC.coords_1d()
    brute = np.zeros(SPEC.shape)
    for n1, n2 in itertools.product(range(-3, 4), repeat=2):
        brute += 0.5 ** (np.abs(c[:, None] + M * n1) + np.abs(c[None, :] + M * n2))
    assert np.max(np.abs(f.values - brute)) <= 1e-12


def test_periodize_errors():
    k = WindowKernel.from_function(geometric, 2, 3)
    with pytest.raises(ValueError, match="missing decay certificate"):
        periodize(k, SPEC)
    weak = WindowKernel(np.ones((3, 3)), certificate=DecayCertificate(0.9, 1.0))
    with pytest.raises(ValueError, match="too weak"):
        periodize(weak, SPEC)
    with pytest.raises(ValueError):
        periodize(WindowKernel.delta(2), SPEC, tail_tol=0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_periodize_linear_and_positive(seed, R):
    rng = np.random.default_rng(seed)
    a = WindowKernel(rng.random((2 * R + 1,) * 2))
    b = WindowKernel(rng.random((2 * R + 1,) * 2))
    pa, pb = periodize(a, SPEC), periodize(b, SPEC)
    pab = periodize(WindowKernel(2.0 * a.values + b.values), SPEC)
    assert np.allclose(pab.values, 2.0 * pa.values + pb.values, rtol=1e-14, atol=1e-14)
    assert pa.values.min() >= 0.0
    assert norms(pa)[1] == pytest.approx(a.l1_mass(), rel=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2), st.integers(0, 2))
def test_periodize_commutes_with_differences(seed, l1, l2):
    rng = np.random.default_rng(seed)
    R = 6
    v = np.zeros((2 * R + 1,) * 2)
    v[3:-3, 3:-3] = rng.standard_normal((2 * R - 5,) * 2)
    k = WindowKernel(v)
    lhs = periodize(forward_diff(k, (l1, l2)), SPEC)
    rhs = forward_diff(periodize(k, SPEC), (l1, l2))
    assert np.allclose(lhs.values, rhs.values, rtol=0, atol=1e-12)


# -- forward_diff ------------------------------------------------------------


@pytest.mark.parametrize("idx", [(1, 0), (0, 1), (2, 1), (0, 3)])
def test_diff_of_constant_vanishes(idx):
    f = TorusField(SPEC, np.full(SPEC.shape, 3.7))
    assert np.all(forward_diff(f, idx).values == 0.0)


def test_diff_of_linear_window_is_one():
    k = WindowKernel.from_function(lambda x: x[:, 0].astype(float), 2, 5)
    g = forward_diff(k, MultiIndex.axis(2, 0))
    assert g.shrink == (1, 0)
    # trusted region excludes the last row along axis 0
    assert np.all(g.values[:-1, :] == 1.0)


@pytest.mark.parametrize("q", [(1, 0), (3, 5), (-7, 2), (13, -13)])
def test_diff_of_plane_wave(q):
    M = SPEC.M
    p = 2 * np.pi * np.asarray(q) / M
    x1, x2 = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    # reduce the integer phase first so the oracle carries no argument error
    phase = 2 * np.pi * np.mod(q[0] * x1 + q[1] * x2, M) / M
    f = TorusField(SPEC, np.cos(phase))
    g = forward_diff(f, (1, 0))
    expect = np.real((np.exp(1j * p[0]) - 1) * np.exp(1j * phase))
    assert np.max(np.abs(g.values - expect)) <= 1e-14


def test_diff_commutes_across_directions():
    rng = np.random.default_rng(2)
    f = TorusField(SPEC, rng.standard_normal(SPEC.shape))
    a = forward_diff(forward_diff(f, (1, 0)), (0, 1))
    b = forward_diff(forward_diff(f, (0, 1)), (1, 0))
    assert np.allclose(a.values, b.values, atol=1e-14)


# -- norms -------------------------------------------------------------------


def test_norms_trivial():
    assert norms(WindowKernel.delta(2, 4)) == (1.0, 1.0)
    assert norms(TorusField(SPEC, np.ones(SPEC.shape))) == (1.0, 729.0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_norms_exact_reduction(seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(SPEC.shape) * 10.0 ** rng.integers(-8, 8, SPEC.shape)
    sup, l1 = norms(TorusField(SPEC, v))
    exact = float(sum(Fraction(x) for x in np.abs(v).ravel().tolist()))
    assert l1 == exact
    assert sup == max(abs(x) for x in v.ravel().tolist())


# -- range_of ----------------------------------------------------------------


def test_range_trivial():
    assert range_of(WindowKernel.delta(2, 3), "l1", 0.0) == 1
    k = WindowKernel.from_function(lambda x: (np.abs(x).sum(axis=1) <= 5).astype(float), 2, 8)
    assert range_of(k, "l1", 0.0) == 6
    assert all_ranges(k) == {"l1": 6, "l2": 6, "linf": 6}
    assert range_of(WindowKernel(np.zeros((3, 3)))) == 0


def test_range_on_torus_uses_nearest_translate():
    f = TorusField(SPEC, np.zeros(SPEC.shape))
    f.values[-2, 0] = 1.0  # x = (-2, 0)
    assert range_of(f, "l1") == 3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(0, 1))
def test_range_monotone_in_eps(seed, e1, e2):
    rng = np.random.default_rng(seed)
    f = TorusField(SPEC, rng.random(SPEC.shape) * geometric(
        np.stack(np.meshgrid(SPEC.coords_1d(), SPEC.coords_1d(), indexing="ij"), -1)))
    lo, hi = sorted((e1, e2))
    for m in ("l1", "l2", "linf"):
        assert range_of(f, m, hi) <= range_of(f, m, lo)


def test_range_metric_ordering():
    rng = np.random.default_rng(3)
    f = TorusField(SPEC, rng.random(SPEC.shape) ** 30)
    r = all_ranges(f, 1e-3)
    assert r["l1"] >= r["l2"] >= r["linf"]


def test_range_rejects_negative_eps():
    with pytest.raises(ValueError):
        range_of(WindowKernel.delta(2), eps=-1.0)


# -- CSV ---------------------------------------------------------------------


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    f = TorusField(SPEC, rng.standard_normal(SPEC.shape))
    path = tmp_path / "f.csv"
    dump_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,value"
    assert lines[1].startswith("-13,-13,") and lines[2].startswith("-13,-12,")
    g = load_csv(path, SPEC)
    assert np.array_equal(f.values, g.values)
    assert math.isclose(g.at((-13, -13)), f.at((14, 14)))
