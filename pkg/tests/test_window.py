import numpy as np
import pytest

from frdtorus.decomposition import build_piece, mass_derivative
from frdtorus.lattice import TorusSpec, forward_diff
from frdtorus.spectral import SpectralParams
from frdtorus.window import WindowGrid, block_bounds, refinement_defect, scale_sups, window_profile


def axis_line(field, t, offset=0):
    """Torus values along ``x = t e_1 + offset e_2``."""
    M = field.spec.M
    v = field.values
    idx = (t % M, offset % M) + (0,) * (field.spec.d - 2)
    return v[idx]


@pytest.fixture(scope="module")
def torus_piece():
    # side 243 resolves block j = 1 (steps 9..81) with no wrap-around
    P = SpectralParams(1.5, 1e-2)
    return build_piece(1, TorusSpec(2, 3, 4), P), P


def test_profile_matches_torus_piece(torus_piece):
    piece, P = torus_piece
    wp = window_profile(2, 9, 81, P)
    f = piece.field
    scale = np.abs(f.values).max()
    for p in (0, 1, 2):
        ref = axis_line(f, wp.t)
        # differences lose relative digits; measure against the kernel scale
        assert np.max(np.abs(ref - wp.values[p])) <= 1e-12 * scale
        f = forward_diff(f, [1, 0])


@pytest.mark.parametrize("offset", [1, 7])
def test_profile_offset_line(torus_piece, offset):
    piece, P = torus_piece
    wp = window_profile(2, 9, 81, P, orders=(0,), offset=offset)
    ref = axis_line(piece.field, wp.t, offset)
    assert np.max(np.abs(ref - wp.values[0])) <= 1e-12 * np.abs(piece.field.values).max()


def test_profile_d3_first_block():
    P = SpectralParams(1.25, 0.3)
    piece = build_piece(0, TorusSpec(3, 3, 3), P)
    wp = window_profile(3, 0, 9, P, orders=(0,), R=12)
    ref = axis_line(piece.field, wp.t)
    assert np.max(np.abs(ref - wp.values[0])) <= 1e-12 * np.abs(ref).max()
    # exact range 8 along the axis
    assert np.all(np.abs(wp.values[0][np.abs(wp.t) > 8]) <= 1e-13 * np.abs(ref).max())


def test_mass_derivative_profile(torus_piece):
    piece, P = torus_piece
    wp = window_profile(2, 9, 81, P, orders=(0,), weight="rho_dm2")
    ref = axis_line(mass_derivative(piece).field, wp.t)
    assert np.max(np.abs(ref - wp.values[0])) <= 1e-11 * np.abs(ref).max()


def test_profile_is_even():
    wp = window_profile(2, 9, 81, SpectralParams(1.5, 1e-2), orders=(0,))
    v = wp.values[0]
    assert np.allclose(v, v[::-1], rtol=0, atol=1e-15 * np.abs(v).max())


@pytest.mark.parametrize("d,Ta,Tb", [(2, 9, 81), (2, 81, 729), (3, 81, 729)])
def test_refinement_stable(d, Ta, Tb):
    assert refinement_defect(d, Ta, Tb, SpectralParams(1.5, 1e-3)) <= 1e-6


def test_block_bounds():
    assert block_bounds(3, 0) == (0, 9)
    assert block_bounds(3, 2) == (81, 729)
    assert block_bounds(3, 1, r=2) == (81, 6561)


def test_scale_sups_keys():
    s = scale_sups(2, 3, 1, SpectralParams(1.5, 1e-2))
    assert set(s) == {0, 1, 2} and s[0] > s[1] > s[2] > 0


def test_grid_refined():
    g = WindowGrid().refined()
    assert g.nh == 512 and g.dv == WindowGrid().dv / 2


def test_errors():
    P = SpectralParams(1.5, 1.0)
    with pytest.raises(ValueError):
        window_profile(4, 0, 9, P)
    with pytest.raises(ValueError):
        window_profile(2, 0, 9, SpectralParams(1.5, 0.0))
