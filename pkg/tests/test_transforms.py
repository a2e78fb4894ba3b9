import warnings

import numpy as np
import pytest

from qclab.errors import GridError, OracleLimitError
from qclab.grid import ComplexField, GridSpec, Region, lp_norm, sample, wirtinger
from qclab.transforms import (
    TransformPlan,
    beurling,
    beurling_direct,
    cauchy,
    holder_seminorm_bound_check,
    origin_value,
)

from conftest import gaussian, gaussian_dz


def mean_free_noise(spec, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((spec.n, spec.n)) + 1j * rng.standard_normal((spec.n, spec.n))
    return ComplexField(spec, v - v.mean())


def test_plan_multiplier_invariants(plan256):
    m = plan256.multiplier
    assert m[0, 0] == 0.0
    mags = np.abs(m)
    mags[0, 0] = 1.0
    np.testing.assert_allclose(mags, 1.0, atol=1e-15)


def test_plan_spec_mismatch(plan256):
    f = sample(GridSpec(64, 4.0), lambda z: np.zeros_like(z))
    with pytest.raises(GridError):
        beurling(f, plan256)


def test_beurling_zero(plan256, spec256):
    zero = sample(spec256, lambda z: np.zeros_like(z))
    assert np.all(beurling(zero, plan256).values == 0)


def test_beurling_intertwines_derivatives(spec256, plan256):
    g = gaussian(spec256, sigma=0.7)
    dz, dzb = wirtinger(g, "spectral")
    out = beurling(dzb, plan256)
    rel = lp_norm(out - dz, 2) / lp_norm(dz, 2)
    assert rel <= 1e-8


def test_beurling_isometry_and_involution(spec256, plan256):
    for seed in range(5):
        f = mean_free_noise(spec256, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # whole-grid noise: support policy n/a
            bf = beurling(f, plan256)
            bbf = beurling(bf, plan256)
        assert abs(lp_norm(bf, 2) / lp_norm(f, 2) - 1) <= 1e-12
        assert abs(lp_norm(bbf, 2) / lp_norm(f, 2) - 1) <= 1e-12


def test_beurling_direct_zero_and_limit():
    spec = GridSpec(32, 2.0)
    zero = sample(spec, lambda z: np.zeros_like(z))
    assert np.all(beurling_direct(zero).values == 0)
    with pytest.raises(OracleLimitError):
        beurling_direct(sample(GridSpec(128, 2.0), lambda z: np.zeros_like(z)))


def test_beurling_direct_single_cell():
    spec = GridSpec(32, 2.0)
    v = np.zeros((32, 32), dtype=complex)
    j0, k0 = spec.zero_cell()
    v[j0, k0] = 1.0
    f = ComplexField(spec, v)
    out = beurling_direct(f)
    z = spec.points()
    w = z - z[j0, k0]
    expected = np.where(w == 0, 0.0, -spec.cell_area / (np.pi * w ** 2))
    np.testing.assert_allclose(out.values, expected, atol=1e-14)


def test_beurling_oracle_agreement_refines():
    errs = {}
    for n in (32, 64):
        spec = GridSpec(n, 4.0)
        plan = TransformPlan(spec)
        g = gaussian(spec, sigma=0.9)  # resolvable on the 32^2 oracle grid
        _, dzb = wirtinger(g, "spectral")  # mean-free smooth density
        fast = beurling(dzb, plan)
        slow = beurling_direct(dzb)
        errs[n] = lp_norm(fast - slow, 2) / lp_norm(slow, 2)
    assert errs[32] <= 0.05 and errs[64] <= 0.05
    assert errs[64] < errs[32]


def test_cauchy_zero_and_renormalization(spec256, plan256):
    zero = sample(spec256, lambda z: np.zeros_like(z))
    assert np.all(cauchy(zero, plan256).values == 0)
    # the output is exactly the raw convolution minus its origin quadrature
    g = gaussian(spec256, sigma=0.5)
    raw = np.fft.ifft2(plan256.cauchy_kernel_hat * np.fft.fft2(g.values))
    c = origin_value(g, plan256)
    out = cauchy(g, plan256)
    assert np.array_equal(out.values, raw - c)


def test_cauchy_roundtrip_window(spec256, plan256):
    g = gaussian(spec256, sigma=0.7)
    cg = cauchy(g, plan256)
    _, dzb = wirtinger(cg, "spectral")
    win = Region.disk(spec256, 0.0, spec256.half_width / 2)
    rel = lp_norm(dzb - g, 2, win) / lp_norm(g, 2, win)
    assert rel <= 0.02


def test_cauchy_disk_indicator(spec256, plan256):
    chi = sample(spec256, lambda z: (np.abs(z) <= 1).astype(complex))
    out = cauchy(chi, plan256)
    _, dzb = wirtinger(out, "central")
    # accuracy claims exclude a 2-cell band around the jump circle
    r = np.abs(spec256.points())
    win = Region(spec256, (r <= 2.0) & (np.abs(r - 1) > 2 * spec256.spacing),
                 "window minus jump band")
    rel = lp_norm(dzb - chi, 2, win) / lp_norm(chi, 2, win)
    assert rel <= 0.02
    # closed form: zbar inside, 1/z outside, away from the boundary band
    z = spec256.points()
    r = np.abs(z)
    exact = np.where(r <= 1, np.conj(z), 1 / np.where(z == 0, 1, z))
    ok = (np.abs(r - 1) > 2 * spec256.spacing) & (r <= 2.0)
    assert np.max(np.abs(out.values - exact)[ok]) <= 5e-2


def test_cauchy_support_warning(spec256, plan256):
    wide = sample(spec256, lambda z: np.exp(-np.abs(z - 3.2) ** 2))
    with pytest.warns(UserWarning, match="tail mass"):
        cauchy(wide, plan256)


def test_seminorm_zero_and_homogeneity(spec256):
    zero = sample(spec256, lambda z: np.zeros_like(z))
    rep = holder_seminorm_bound_check(zero, 2.0)
    assert rep.sup_quotient == 0.0
    chi = sample(spec256, lambda z: (np.abs(z) <= 1).astype(complex))
    r1 = holder_seminorm_bound_check(chi, 2.0, seed=4)
    r3 = holder_seminorm_bound_check(3.0 * chi, 2.0, seed=4)
    assert r3.sup_quotient == pytest.approx(3 * r1.sup_quotient, rel=1e-12)
    assert r3.f_norm_2p == pytest.approx(3 * r1.f_norm_2p, rel=1e-12)
    assert r3.ratio == pytest.approx(r1.ratio, rel=1e-9)


def test_seminorm_stable_under_refinement():
    vals = []
    for n in (128, 256, 512):
        spec = GridSpec(n, 4.0)
        chi = sample(spec, lambda z: (np.abs(z) <= 1).astype(complex))
        vals.append(holder_seminorm_bound_check(chi, 2.0, seed=11).sup_quotient)
    mid = vals[1]
    assert all(abs(v - mid) <= 0.1 * mid for v in vals)


def test_seminorm_p_domain(spec256):
    f = sample(spec256, lambda z: np.zeros_like(z))
    with pytest.raises(ValueError):
        holder_seminorm_bound_check(f, 1.0)
