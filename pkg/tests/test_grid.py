import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclab.errors import EmptyRegionError, GridError
from qclab.grid import ComplexField, GridSpec, Region, integrate, lp_norm, sample, wirtinger

from conftest import gaussian, gaussian_dz


def test_grid_spec_invariants():
    spec = GridSpec(64, 2.0)
    assert spec.spacing * spec.n == 2 * spec.half_width  # exact
    with pytest.raises(GridError):
        GridSpec(48, 2.0)  # not a power of two
    with pytest.raises(GridError):
        GridSpec(8, 2.0)  # too small
    with pytest.raises(GridError):
        GridSpec(64, 1.0)  # unit disk would not sit well inside


def test_sample_zero_and_identity():
    spec = GridSpec(16, 2.0)
    zero = sample(spec, lambda z: np.zeros_like(z))
    assert np.all(zero.values == 0)
    f = sample(spec, lambda z: z)
    assert f.values[0, 0] == pytest.approx(-1.875 - 1.875j)


def test_sample_nonfinite_reports_index():
    spec = GridSpec(16, 2.0)
    def bad(z):
        v = np.zeros_like(z)
        v[3, 5] = np.nan
        return v
    with pytest.raises(GridError, match=r"\(3, 5\)"):
        sample(spec, bad)


def test_disk_indicator_area():
    spec = GridSpec(256, 4.0)
    chi = sample(spec, lambda z: (np.abs(z) <= 1).astype(complex))
    area = integrate(chi).real
    assert abs(area - np.pi) <= 2 * spec.spacing * 2 * np.pi


def test_lp_norm_constant_and_zero():
    spec = GridSpec(16, 2.0)
    one = sample(spec, lambda z: np.ones_like(z))
    assert lp_norm(one, 2.0) == pytest.approx(4.0)
    zero = sample(spec, lambda z: np.zeros_like(z))
    for p in (1.0, 2.0, 3.7):
        assert lp_norm(zero, p) == 0.0


def test_lp_norm_disk_indicator():
    spec = GridSpec(256, 4.0)
    chi = sample(spec, lambda z: (np.abs(z) <= 1).astype(complex))
    assert abs(lp_norm(chi, 1.0) - np.pi) <= 4 * spec.spacing


def test_lp_norm_empty_region_is_an_error():
    spec = GridSpec(16, 2.0)
    f = sample(spec, lambda z: np.ones_like(z))
    empty = Region(spec, np.zeros((16, 16), dtype=bool), "empty")
    with pytest.raises(EmptyRegionError):
        lp_norm(f, 2.0, empty)
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-8, max_magnitude=1e6,
                          allow_nan=False, allow_infinity=False),
       st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_lp_norm_scaling_homogeneity(c, p):
    spec = GridSpec(16, 2.0)
    rng = np.random.default_rng(7)
    f = ComplexField(spec, rng.standard_normal((16, 16))
                     + 1j * rng.standard_normal((16, 16)))
    lhs = lp_norm(c * f, p)
    rhs = abs(c) * lp_norm(f, p)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_wirtinger_identity_and_conjugate_fields():
    spec = GridSpec(64, 2.0)
    interior = np.s_[2:-2, 2:-2]
    f = sample(spec, lambda z: z)
    dz, dzb = wirtinger(f, "central")
    np.testing.assert_allclose(dz.values[interior], 1.0, atol=1e-12)
    np.testing.assert_allclose(dzb.values[interior], 0.0, atol=1e-12)
    g = sample(spec, lambda z: np.conj(z))
    dz, dzb = wirtinger(g, "central")
    np.testing.assert_allclose(dz.values[interior], 0.0, atol=1e-12)
    np.testing.assert_allclose(dzb.values[interior], 1.0, atol=1e-12)


def test_wirtinger_exact_on_quadratics():
    # central differences are exact for polynomials in (z, zbar) of degree <= 2
    spec = GridSpec(64, 2.0)
    interior = np.s_[2:-2, 2:-2]
    z = spec.points()
    f = ComplexField(spec, 0.3 * z * z + (1 - 2j) * z * np.conj(z) - z + 5)
    dz, dzb = wirtinger(f, "central")
    exact_dz = 0.6 * z + (1 - 2j) * np.conj(z) - 1
    exact_dzb = (1 - 2j) * z
    np.testing.assert_allclose(dz.values[interior], exact_dz[interior],
                               rtol=0, atol=1e-10)
    np.testing.assert_allclose(dzb.values[interior], exact_dzb[interior],
                               rtol=0, atol=1e-10)


def test_wirtinger_central_second_order_refinement():
    errs = []
    for n in (128, 256, 512):
        spec = GridSpec(n, 4.0)
        g = gaussian(spec, sigma=0.9)
        dz_exact, _ = gaussian_dz(spec, sigma=0.9)
        dz, _ = wirtinger(g, "central")
        errs.append(np.max(np.abs(dz.values - dz_exact)))
    slope = np.polyfit(np.log([128, 256, 512]), np.log(errs), 1)[0]
    assert -slope >= 1.9


def test_wirtinger_spectral_matches_analytic_derivative():
    spec = GridSpec(256, 4.0)
    z = spec.points()
    L = spec.half_width
    g = gaussian(spec, sigma=0.8)
    f = ComplexField(spec, np.exp(1j * np.pi * z / L) * g.values)
    dz_g, dzb_g = gaussian_dz(spec, sigma=0.8)
    exact_dz = np.exp(1j * np.pi * z / L) * ((1j * np.pi / L) * g.values + dz_g)
    exact_dzb = np.exp(1j * np.pi * z / L) * dzb_g
    dz, dzb = wirtinger(f, "spectral")
    assert np.max(np.abs(dz.values - exact_dz)) <= 1e-8
    assert np.max(np.abs(dzb.values - exact_dzb)) <= 1e-8


def test_wirtinger_conjugation_symmetry():
    spec = GridSpec(64, 2.0)
    rng = np.random.default_rng(3)
    f = ComplexField(spec, rng.standard_normal((64, 64))
                     + 1j * rng.standard_normal((64, 64)))
    dz_f, _ = wirtinger(f, "central")
    _, dzb_fbar = wirtinger(f.conj(), "central")
    assert np.array_equal(dzb_fbar.values, np.conj(dz_f.values))
    # the spectral identity needs negligible Nyquist content (smooth field):
    # the Nyquist mode has no negative-frequency partner on an even grid
    g = gaussian(spec, center=0.3 - 0.2j, sigma=0.5)
    dz_s, _ = wirtinger(g, "spectral")
    _, dzb_s = wirtinger(g.conj(), "spectral")
    np.testing.assert_allclose(dzb_s.values, np.conj(dz_s.values), atol=1e-12)


def test_field_immutability():
    spec = GridSpec(16, 2.0)
    f = sample(spec, lambda z: z)
    with pytest.raises(AttributeError):
        f.values = None
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_field_serialization_roundtrip(tmp_path):
    spec = GridSpec(32, 2.0)
    rng = np.random.default_rng(0)
    f = ComplexField(spec, rng.standard_normal((32, 32))
                     + 1j * rng.standard_normal((32, 32)))
    blob = f.to_bytes()
    assert blob[:4] == b"CFLD"
    assert len(blob) == 24 + 32 * 32 * 16
    g = ComplexField.from_bytes(blob)
    assert g.spec == spec
    assert np.array_equal(g.values, f.values)
    path = tmp_path / "f.cfld"
    f.save(path)
    assert np.array_equal(ComplexField.load(path).values, f.values)
    csv_path = tmp_path / "f.csv"
    f.dump_csv(csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "j,k,re,im"
    assert len(lines) == 1 + 32 * 32


def test_region_constructors():
    spec = GridSpec(64, 2.0)
    d = Region.disk(spec, 0.5, 0.4)
    z = spec.points()
    assert np.array_equal(d.mask, np.abs(z - 0.5) <= 0.4)
    assert d.intersect(d.complement()).cell_count() == 0
    w = Region.whole(spec)
    assert w.area() == pytest.approx(16.0)
    sq = Region.square(spec, 0.0, 1.0)
    assert sq.area() == pytest.approx(1.0, abs=4 * spec.spacing)
