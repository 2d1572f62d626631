import math

import numpy as np
import pytest

from hsewald import generate_system
from hsewald.errors import ConfigError, ParameterError, ResourceError
from hsewald.estimates import measure_error
from hsewald.ewald_fourier import (BIHARMONIC, HARMONIC, GreensTable,
                                   GridSpec, fourier_space_sum, gather,
                                   get_tables, load_table, precompute_greens,
                                   save_table, spread, table_kinds_for,
                                   truncated_greens_hat)
from hsewald.ewald_real import RealSpaceParams, real_space_sum
from hsewald.kernels_direct import direct_sum_free


def grid_free(M=16, L=2.0, xi=3.0, P=8):
    return GridSpec(L=L, M=M, P=P, xi=xi, geometry="free")


def test_gridspec_derived_quantities():
    g = GridSpec(L=3.0, M=30, P=16, xi=4.0, geometry="half")
    assert g.h == pytest.approx(0.1)
    assert g.Mtilde == 46
    assert g.Ltilde == pytest.approx(4.6)
    assert g.k_inf == pytest.approx(math.pi / g.h)
    assert g.dims == (46, 46, 92)
    assert g.R == pytest.approx(math.sqrt(6.0) * 4.6)
    assert all(p >= 2 * d for p, d in zip(g.padded_dims, g.dims))
    assert 0.0 < g.eta < 1.0


def test_gridspec_parity_adjustment():
    with pytest.warns(UserWarning):
        g = GridSpec(L=2.0, M=15, P=16, xi=3.0, geometry="free")
    assert (g.M + g.P) % 2 == 0


def test_gridspec_validation():
    with pytest.raises(ParameterError):
        GridSpec(L=-1.0, M=16, P=8, xi=3.0)
    from hsewald.errors import GeometryError
    with pytest.raises(GeometryError):
        GridSpec(L=1.0, M=16, P=8, xi=3.0, geometry="periodic")


def test_truncated_harmonic_small_k_limit():
    R = 1.7
    # 1/r over a ball: k->0 limit is 2 pi R^2
    val = truncated_greens_hat(HARMONIC, R, np.array([1e-8]))[0]
    np.testing.assert_allclose(val, 2 * math.pi * R**2, rtol=1e-10)


def test_truncated_biharmonic_series_is_continuous():
    R = 1.3
    ks = np.array([0.3 - 1e-9, 0.3 + 1e-9]) / R
    vals = truncated_greens_hat(BIHARMONIC, R, ks)
    # continuous across the series/closed-form switch at x = 0.3
    assert abs(vals[0] - vals[1]) < 1e-8 * abs(vals[0])


def test_spread_gather_mass_and_adjointness(rng):
    g = grid_free(P=16)
    pts = rng.uniform(0.4, 1.6, (5, 3))
    w = rng.normal(size=(5, 2))
    grids = spread(pts, w, g)
    # total Gaussian mass times h^3 equals the input weight
    np.testing.assert_allclose(grids.sum(axis=(1, 2, 3)) * g.h**3,
                               w.sum(axis=0), rtol=1e-7)
    # <spread(w), F> h^3 = <w, gather(F)>
    F = rng.normal(size=(2,) + g.dims)
    lhs = np.sum(grids * F) * g.h**3
    rhs = np.sum(w * gather(F, pts, g))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


def test_table_cache_roundtrip(tmp_path):
    g = grid_free(M=12)
    table = precompute_greens(HARMONIC, g)
    path = tmp_path / "t.segt"
    save_table(table, path)
    with open(path, "rb") as fh:
        assert fh.read(4) == b"SEGT"
    back = load_table(path)
    assert back.kind == HARMONIC
    assert back.dims == table.dims
    np.testing.assert_allclose(back.samples, table.samples)
    np.testing.assert_allclose(back.R, table.R)


def test_get_tables_uses_cache(tmp_path):
    g = grid_free(M=12)
    t1 = get_tables("rotlet", g, cache_dir=tmp_path)
    files = list(tmp_path.glob("*.segt"))
    assert len(files) == 1
    t2 = get_tables("rotlet", g, cache_dir=tmp_path)
    np.testing.assert_allclose(t1[HARMONIC].samples, t2[HARMONIC].samples)


def test_table_kinds():
    assert table_kinds_for("stokeslet", "free") == [BIHARMONIC]
    assert set(table_kinds_for("stokeslet", "half")) == {BIHARMONIC, HARMONIC}
    assert table_kinds_for("rotlet", "free") == [HARMONIC]


def test_precompute_resource_budget():
    g = grid_free(M=40)
    with pytest.raises(ResourceError):
        precompute_greens(HARMONIC, g, max_bytes=1000)


def test_mismatched_table_rejected():
    g1, g2 = grid_free(M=12), grid_free(M=16)
    tables = get_tables("rotlet", g1)
    s = generate_system(10, 2.0, "rotlet", "free", seed=0)
    with pytest.raises(ConfigError):
        fourier_space_sum(s, g2, tables=tables)


def test_fft_counts(kernel):
    expected_half = {"stokeslet": (7, 6), "stresslet": (21, 6),
                     "rotlet": (6, 6)}
    expected_free = {"stokeslet": (3, 3), "stresslet": (9, 3),
                     "rotlet": (3, 3)}
    for geom, expected in (("half", expected_half), ("free", expected_free)):
        s = generate_system(15, 2.0, kernel, geom, seed=1)
        g = GridSpec(L=2.0, M=12, P=8, xi=3.0, geometry=geom)
        res = fourier_space_sum(s, g)
        assert (res.meta["fft_count"], res.meta["ifft_count"]) \
            == expected[kernel]


def test_decomposition_identity_small(kernel):
    # real + fourier matches the direct sum at moderate accuracy
    s = generate_system(60, 2.0, kernel, "free", seed=9)
    xi = 3.0
    g = GridSpec(L=2.0, M=30, P=16, xi=xi, geometry="free")
    uf = fourier_space_sum(s, g).velocities
    ur = real_space_sum(s, RealSpaceParams(xi=xi, rc=1.4),
                        target_indices=np.arange(s.n)).velocities
    met = measure_error(uf + ur, direct_sum_free(s).velocities)
    assert met.relative < 5e-6


def test_fourier_linearity(kernel):
    s1 = generate_system(20, 2.0, kernel, "free", seed=13)
    g = grid_free(M=14)
    kw = {"f": 3.0 * s1.f} if kernel == "stokeslet" else \
        {"g": 3.0 * s1.g, "q": s1.q}
    from hsewald import PointSystem
    s3 = PointSystem(kind=kernel, geometry="free", box_length=2.0,
                     positions=s1.positions, **kw)
    u1 = fourier_space_sum(s1, g).velocities
    u3 = fourier_space_sum(s3, g).velocities
    np.testing.assert_allclose(u3, 3.0 * u1, rtol=1e-10, atol=1e-13)
