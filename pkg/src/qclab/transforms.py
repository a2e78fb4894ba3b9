"""The two planar singular integral operators: Beurling transform and Cauchy transform.

The Beurling transform is realized as the exact unitary Fourier multiplier
conj(xi)/xi (zero at the zero frequency), which makes the discrete L2 isometry
hold to machine precision and anchors the Neumann-iteration contraction.  A
slow direct principal-value quadrature of the -1/(pi z^2) kernel serves as an
independent oracle on small grids.

The Cauchy transform is an FFT convolution with the sampled 1/(pi w) kernel;
the self-cell uses the exact value 0 (odd kernel over a centered square), and
the value at the cell containing the origin is subtracted so that Cf(0) = 0
exactly.  It inverts dbar: dbar(Cf) = f for supported densities.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridError, OracleLimitError
from .grid import ComplexField, GridSpec, Region, lp_norm, wirtinger

DIRECT_ORACLE_LIMIT = 64


class TransformPlan:
    """Precomputed multiplier/kernel tables for one grid, shareable and frozen."""

    __slots__ = ("spec", "multiplier", "cauchy_kernel_hat", "origin_kernel")

    def __init__(self, spec: GridSpec):
        xi = spec.freqs()
        mult = np.empty_like(xi)
        nz = xi != 0
        mult[nz] = np.conj(xi[nz]) / xi[nz]
        mult[~nz] = 0.0
        mult.setflags(write=False)

        # displacement lattice in circular-convolution order
        d = spec.spacing * spec.n * np.fft.fftfreq(spec.n)
        w = d[:, None] + 1j * d[None, :]
        kernel = np.empty_like(w)
        nz = w != 0
        kernel[nz] = 1.0 / (np.pi * w[nz])
        kernel[~nz] = 0.0  # exact integral of 1/w over the centered square
        khat = np.fft.fft2(kernel) * spec.cell_area
        khat.setflags(write=False)

        # kernel seen from the origin (a lattice corner, never a sample point);
        # renormalizing with this value keeps Cf(0) = 0 exact even for
        # densities that are Holder-singular at 0
        corner = -spec.cell_area / (np.pi * spec.points())
        corner.setflags(write=False)

        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "multiplier", mult)
        object.__setattr__(self, "cauchy_kernel_hat", khat)
        object.__setattr__(self, "origin_kernel", corner)

    def __setattr__(self, name, value):
        raise AttributeError("TransformPlan is immutable")


def _check_plan(f: ComplexField, plan: TransformPlan) -> None:
    if plan.spec != f.spec:
        raise GridError("transform plan was built for a different grid")


def _warn_support(f: ComplexField, what: str, tol: float = 1e-3) -> None:
    """Warn when mass of |f| outside |z| <= L/2 exceeds tol (periodization policy)."""
    r = np.abs(f.spec.points())
    outside = r > f.spec.half_width / 2.0
    tail = float(np.sum(np.abs(f.values[outside])))
    total = float(np.sum(np.abs(f.values)))
    if total > 0 and tail > tol * total:
        warnings.warn(
            f"{what}: field has relative tail mass {tail / total:.3e} outside "
            f"|z| <= L/2; periodization error is uncontrolled",
            stacklevel=3,
        )


def beurling(f: ComplexField, plan: TransformPlan) -> ComplexField:
    """Beurling transform via the Fourier multiplier conj(xi)/xi, m(0) = 0.

    Satisfies B(dbar g) = d g for smooth periodic g, and the discrete L2
    isometry on mean-zero fields.
    """
    _check_plan(f, plan)
    _warn_support(f, "beurling")
    out = np.fft.ifft2(plan.multiplier * np.fft.fft2(f.values))
    return ComplexField(f.spec, out, allow_singular=True)


def beurling_direct(f: ComplexField, oracle_limit: int = DIRECT_ORACLE_LIMIT) -> ComplexField:
    """Direct p.v. quadrature of -1/(pi z^2) * f; O(n^4) oracle for small grids.

    The self-cell contributes 0: the principal value of the symmetric kernel
    over a centered square vanishes.
    """
    n = f.spec.n
    if n > oracle_limit:
        raise OracleLimitError(
            f"direct Beurling oracle refused: n={n} exceeds limit {oracle_limit}"
        )
    d = f.spec.spacing * np.arange(-(n - 1), n)
    w = d[:, None] + 1j * d[None, :]
    kernel = np.empty_like(w)
    nz = w != 0
    kernel[nz] = -1.0 / (np.pi * w[nz] ** 2)
    kernel[~nz] = 0.0
    src = f.values
    out = np.empty_like(src)
    # kernel[(j-a)+n-1, (k-b)+n-1] over sources (a, b) is a reversed slice
    for j in range(n):
        rows = kernel[j:j + n][::-1]
        for k in range(n):
            out[j, k] = np.sum(rows[:, k:k + n][:, ::-1] * src)
    out *= f.spec.cell_area
    return ComplexField(f.spec, out, allow_singular=True)


def origin_value(f: ComplexField, plan: TransformPlan) -> complex:
    """Quadrature value of the (un-renormalized) Cauchy transform at z = 0."""
    _check_plan(f, plan)
    return complex(np.sum(f.values * plan.origin_kernel))


def cauchy(f: ComplexField, plan: TransformPlan) -> ComplexField:
    """Renormalized Cauchy transform: dbar(Cf) = f and Cf(0) = 0 exactly.

    FFT convolution with the sampled 1/(pi w) kernel (the self-cell carries
    the exact value 0) followed by subtraction of the transform's quadrature
    value at the origin.  The origin is a lattice corner under cell-center
    sampling, so the subtracted value stays accurate even when the density is
    singular at 0; subtracting the zero cell's own sample instead would leave
    an O(spacing^alpha) offset for Holder-singular densities.
    """
    _check_plan(f, plan)
    _warn_support(f, "cauchy")
    raw = np.fft.ifft2(plan.cauchy_kernel_hat * np.fft.fft2(f.values))
    out = raw - origin_value(f, plan)
    return ComplexField(f.spec, out, allow_singular=True)


def sample_point_pairs(rng: np.random.Generator, radius: float, count: int,
                       window_radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Seeded pairs (z, w) with |z - w| = radius, both inside |.| <= window_radius.

    Pairs are drawn in continuous coordinates (grid-independent) so the same
    seed produces the same physical pairs across resolutions.
    """
    z = np.empty(count, dtype=complex)
    w = np.empty(count, dtype=complex)
    got = 0
    attempts = 0
    while got < count and attempts < 200:
        m = count - got
        r = window_radius * np.sqrt(rng.random(4 * m))
        a = rng.random(4 * m) * 2 * np.pi
        cand_z = r * np.exp(1j * a)
        cand_w = cand_z + radius * np.exp(1j * rng.random(4 * m) * 2 * np.pi)
        keep = np.abs(cand_w) <= window_radius
        take = min(m, int(np.count_nonzero(keep)))
        z[got:got + take] = cand_z[keep][:take]
        w[got:got + take] = cand_w[keep][:take]
        got += take
        attempts += 1
    return z[:got], w[:got]


@dataclass(frozen=True)
class SeminormReport:
    """Empirical check that |Cf(z)-Cf(w)| / |z-w|^(1-1/p) stays O(||f||_2p)."""

    p: float
    sup_quotient: float
    f_norm_2p: float

    @property
    def ratio(self) -> float:
        if self.f_norm_2p == 0.0:
            return 0.0
        return self.sup_quotient / self.f_norm_2p


def holder_seminorm_bound_check(f: ComplexField, p: float,
                                pairs_per_radius: int = 2000,
                                seed: int = 0) -> SeminormReport:
    """Measure the Holder-seminorm quotient of Cf against ||f||_2p.

    Samples seeded point pairs at a spread of separations inside the reliable
    window |z| <= L/2 and reports the sup of the quotient.
    """
    if not (1.0 < p < np.inf):
        raise ValueError(f"p must lie in (1, inf), got {p}")
    plan = TransformPlan(f.spec)
    cf = cauchy(f, plan)
    spec = f.spec
    window = spec.half_width / 2.0
    rng = np.random.default_rng(seed)
    radii = np.geomspace(4 * spec.spacing, window, 6)
    sup_q = 0.0
    for r in radii:
        z, w = sample_point_pairs(rng, r, pairs_per_radius, window)
        if z.size == 0:
            continue
        jz, kz = _snap(spec, z)
        jw, kw = _snap(spec, w)
        zz = spec.points()[jz, kz]
        ww = spec.points()[jw, kw]
        dist = np.abs(zz - ww)
        ok = dist > 0
        q = np.abs(cf.values[jz, kz] - cf.values[jw, kw])[ok] / dist[ok] ** (1.0 - 1.0 / p)
        if q.size:
            sup_q = max(sup_q, float(np.max(q)))
    return SeminormReport(p=p, sup_quotient=sup_q, f_norm_2p=lp_norm(f, 2 * p))


def _snap(spec: GridSpec, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-cell indices for an array of points."""
    h, L = spec.spacing, spec.half_width
    j = np.clip(np.floor((np.real(z) + L) / h).astype(int), 0, spec.n - 1)
    k = np.clip(np.floor((np.imag(z) + L) / h).astype(int), 0, spec.n - 1)
    return j, k
