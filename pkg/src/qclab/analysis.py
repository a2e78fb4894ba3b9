"""Empirical regularity metrics: Holder exponents, integrability thresholds, doubling, convergence.

The Holder modulus estimator takes the max of |f(z) - f(w)| over seeded random
pairs per separation bin; pairs are drawn in continuous coordinates and
snapped to cells, so the same seed probes the same physical pairs at every
resolution.

The integrability threshold p* is detected from two grid resolutions by
comparing the J^p mass of two adjacent dyadic shells around the singular
point, each shell resolved at its own grid's matched cell offsets.  For a
power-law Jacobian J ~ r^(-beta) the log2 shell ratio is exactly beta p - 2,
so the fitted root recovers p* = 2/beta free of hole-filling transients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beltrami import (
    BeltramiCoefficient,
    PrincipalMap,
    invert_points,
    jacobian,
    principal_solution,
)
from .errors import EmptyRegionError, GridError
from .grid import ComplexField, Region, lp_norm, wirtinger
from .transforms import TransformPlan, beurling
from .geometry import DiskCover, cover_sum, truncate_coefficient


@dataclass
class HolderFit:
    """Empirical modulus of continuity and its fitted exponent."""

    radii: np.ndarray
    omega: np.ndarray
    alpha_hat: float
    fit_residual: float

    @property
    def monotone_ok(self) -> bool:
        """omega must be non-decreasing up to 5% sampling noise."""
        w = self.omega
        return bool(np.all(w[1:] >= w[:-1] * 0.95))


def _window_bbox(window: Region) -> tuple[float, float, float, float]:
    if window.cell_count() == 0:
        raise EmptyRegionError("empty window")
    pts = window.spec.points()[window.mask]
    return (float(pts.real.min()), float(pts.real.max()),
            float(pts.imag.min()), float(pts.imag.max()))


def holder_exponent(f: ComplexField, window: Region, radii,
                    pairs_per_radius: int = 2000, seed: int = 0) -> HolderFit:
    """Fit the Holder exponent of f from max |f(z)-f(w)| over sampled pairs.

    Requires at least 4 radii spanning 1.5 decades, all >= 2 spacings.
    """
    spec = f.spec
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii.size < 4:
        raise ValueError("need at least 4 radii")
    if radii.max() / radii.min() < 10 ** 1.5 * (1 - 1e-12):
        raise ValueError("radii must span at least 1.5 decades")
    if radii.min() < 2 * spec.spacing:
        raise ValueError("radii must all be >= 2 spacings")
    x0, x1, y0, y1 = _window_bbox(window)
    diag = math.hypot(x1 - x0, y1 - y0)
    if radii.max() > diag:
        raise ValueError(
            f"window too small for largest radius {radii.max()} (diagonal {diag})"
        )

    rng = np.random.default_rng(seed)
    h, L, n = spec.spacing, spec.half_width, spec.n
    mask = window.mask
    vals = f.values
    centers = spec.points()

    used_r = []
    omegas = []
    for r in radii:
        best = 0.0
        best_d = r
        got = 0
        for _ in range(40):
            m = pairs_per_radius
            zx = rng.uniform(x0, x1, m)
            zy = rng.uniform(y0, y1, m)
            theta = rng.uniform(0, 2 * np.pi, m)
            wx = zx + r * np.cos(theta)
            wy = zy + r * np.sin(theta)
            jz = np.floor((zx + L) / h).astype(int)
            kz = np.floor((zy + L) / h).astype(int)
            jw = np.floor((wx + L) / h).astype(int)
            kw = np.floor((wy + L) / h).astype(int)
            ok = ((jz >= 0) & (jz < n) & (kz >= 0) & (kz < n)
                  & (jw >= 0) & (jw < n) & (kw >= 0) & (kw < n))
            ok &= mask[jz.clip(0, n - 1), kz.clip(0, n - 1)]
            ok &= mask[jw.clip(0, n - 1), kw.clip(0, n - 1)]
            if not np.any(ok):
                continue
            za = centers[jz[ok], kz[ok]]
            wa = centers[jw[ok], kw[ok]]
            dist = np.abs(za - wa)
            keep = (dist >= 0.75 * r) & (dist <= 1.3 * r)
            if not np.any(keep):
                continue
            diff = np.abs(vals[jz[ok], kz[ok]] - vals[jw[ok], kw[ok]])[keep]
            got += int(np.count_nonzero(keep))
            i = int(np.argmax(diff))
            if diff[i] > best:
                best = float(diff[i])
                best_d = float(dist[keep][i])
            if got >= pairs_per_radius:
                break
        if got < 10:
            raise ValueError(f"window too sparse to sample pairs at radius {r}")
        used_r.append(best_d)
        omegas.append(best)

    used_r = np.asarray(used_r)
    omegas = np.asarray(omegas)
    pos = omegas > 0
    if np.count_nonzero(pos) < 2:
        return HolderFit(used_r, omegas, 0.0, 0.0)
    slope, icept = np.polyfit(np.log(used_r[pos]), np.log(omegas[pos]), 1)
    resid = float(np.sqrt(np.mean(
        (np.log(omegas[pos]) - (slope * np.log(used_r[pos]) + icept)) ** 2)))
    return HolderFit(used_r, omegas, float(slope), resid)


@dataclass
class ScanResult:
    """L^p norms over a region plus the two-resolution divergence detector."""

    norms: list[tuple[float, float]]
    p_star: float | None
    shell_log_ratios: dict[float, float] = field(default_factory=dict)
    divergent: dict[float, bool] = field(default_factory=dict)


def _shell_mass(J: ComplexField, center: complex, r_in: float, r_out: float,
                p: float) -> float:
    r = np.abs(J.spec.points() - center)
    m = (r >= r_in) & (r < r_out)
    vals = np.maximum(J.values.real[m], 0.0)
    return float(np.sum(vals ** p) * J.spec.cell_area)


def integrability_scan(J: ComplexField, region: Region, p_list,
                       refined: ComplexField | None = None,
                       estimate_pstar: bool | None = None,
                       shell_cells: int = 8,
                       divergence_threshold: float = -0.05) -> ScanResult:
    """Norms ||J||_p over the region and the divergence-onset exponent p*.

    ``refined`` must hold the same Jacobian computed at twice the resolution;
    p* estimation without it is an error.  The caller's region should exclude
    a 2-cell band around singular points.
    """
    p_list = [float(p) for p in p_list]
    if estimate_pstar is None:
        estimate_pstar = refined is not None
    if estimate_pstar and refined is None:
        raise ValueError("p* estimation needs two grid resolutions (pass refined=)")
    norms = [(p, lp_norm(J, p, region)) for p in p_list]
    if not estimate_pstar:
        return ScanResult(norms=norms, p_star=None)

    coarse, fine = J, refined
    if abs(coarse.spec.spacing - 2 * fine.spec.spacing) > 1e-15 \
            or coarse.spec.half_width != fine.spec.half_width:
        raise GridError("refined field must halve the spacing at the same half-width")
    # singular-point search stays inside the reliable window: corner cells of
    # the torus carry wrap garbage with huge spurious derivatives
    pts_f = fine.spec.points()
    jf = np.where(np.abs(pts_f) <= fine.spec.half_width / 2.0, fine.values.real, 0.0)
    idx = np.unravel_index(int(np.argmax(np.abs(jf))), jf.shape)
    center = pts_f[idx]
    hf, hc = fine.spec.spacing, coarse.spec.spacing
    m = shell_cells
    log_ratios = {}
    divergent = {}
    for p in p_list:
        s_in = _shell_mass(fine, center, m * hf, 2 * m * hf, p)
        s_out = _shell_mass(coarse, center, m * hc, 2 * m * hc, p)
        if s_in <= 0 or s_out <= 0:
            log_ratios[p] = -math.inf
            divergent[p] = False
            continue
        lr = math.log2(s_in / s_out)
        log_ratios[p] = lr
        divergent[p] = lr >= divergence_threshold
    ps = np.array(p_list)
    ls = np.array([log_ratios[p] for p in p_list])
    ok = np.isfinite(ls)
    p_star: float = math.inf
    if np.count_nonzero(ok) >= 2:
        slope, icept = np.polyfit(ps[ok], ls[ok], 1)
        if slope > 0.02:
            root = -icept / slope
            if 0.0 < root < max(p_list) + 5.0:
                p_star = float(root)
    return ScanResult(norms=norms, p_star=p_star,
                      shell_log_ratios=log_ratios, divergent=divergent)


def conformal_normalization(J: ComplexField, region: Region, K: float) -> float:
    """The area-distortion integral of J^(K/(K-1)) over the region (K > 1)."""
    if K <= 1.0:
        raise ValueError("conformal normalization exponent needs K > 1")
    q = K / (K - 1.0)
    vals = np.maximum(J.values.real[region.mask], 0.0)
    return float(np.sum(vals ** q) * J.spec.cell_area)


@dataclass
class DoublingReport:
    ratios: np.ndarray
    skipped: int

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else 0.0

    @property
    def spread(self) -> float:
        if self.ratios.size == 0 or np.min(self.ratios) <= 0:
            return math.inf
        return float(np.max(self.ratios) / np.min(self.ratios))


def doubling_check(J: ComplexField, cover: DiskCover,
                   min_cells: int = 4) -> DoublingReport:
    """Per-disk ratios of the J^(1/2) mass on 4D_j versus 2D_j.

    Disks whose 2-dilate holds fewer than ``min_cells`` cells are skipped
    (quadrature would be meaningless) and counted.
    """
    spec = J.spec
    L = spec.half_width
    for j, d in enumerate(cover.disks):
        if (abs(d.center.real) + 4 * d.radius >= L
                or abs(d.center.imag) + 4 * d.radius >= L):
            raise GridError(f"4-dilate of disk {j} leaves the grid")
    z = spec.points()
    root_j = np.sqrt(np.maximum(J.values.real, 0.0))
    ratios = []
    skipped = 0
    for d in cover.disks:
        r = np.abs(z - d.center)
        m2 = r <= 2 * d.radius
        if np.count_nonzero(m2) < min_cells:
            skipped += 1
            continue
        m4 = r <= 4 * d.radius
        i2 = float(np.sum(root_j[m2]))
        i4 = float(np.sum(root_j[m4]))
        if i2 > 0:
            ratios.append(i4 / i2)
    return DoublingReport(ratios=np.asarray(ratios), skipped=skipped)


@dataclass
class ConvergenceRow:
    index: int
    sup_phi: float
    sup_phi_inv: float
    jacobian_lp: dict[float, float]


@dataclass
class ConvergenceReport:
    """Per-truncation convergence metrics against the untruncated solution."""

    rows: list[ConvergenceRow]
    p_list: list[float]
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        for row in self.rows:
            vals = [row.sup_phi, row.sup_phi_inv, *row.jacobian_lp.values()]
            if any((not math.isfinite(v)) or v < 0 for v in vals):
                raise ValueError(f"non-finite or negative convergence metric in row {row.index}")

    def column(self, name: str) -> list[float]:
        if name == "sup_phi":
            return [r.sup_phi for r in self.rows]
        if name == "sup_phi_inv":
            return [r.sup_phi_inv for r in self.rows]
        p = float(name.removeprefix("jac_p"))
        return [r.jacobian_lp[p] for r in self.rows]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            for w in self.warnings:
                fh.write(f"# warning: {w}\n")
            cols = ",".join(f"jac_p{p:g}" for p in self.p_list)
            fh.write(f"n,sup_phi,sup_phi_inv{',' if cols else ''}{cols}\n")
            for r in self.rows:
                jac = ",".join(repr(r.jacobian_lp[p]) for p in self.p_list)
                fh.write(f"{r.index},{r.sup_phi!r},{r.sup_phi_inv!r}"
                         f"{',' if jac else ''}{jac}\n")


def lemma1_suite(mu: BeltramiCoefficient, truncation_covers, p_list,
                 window: Region, tol: float = 1e-8) -> ConvergenceReport:
    """Convergence of truncated solutions phi_n to phi as the covers shrink.

    Covers must arrive ordered by (weakly) decreasing covered area so that
    mu_n -> mu; per cover the report records sup|phi_n - phi| on the window,
    sup|phi_n^{-1} - phi^{-1}| on the window, and ||J_n - J||_p per p.
    """
    covers = list(truncation_covers)
    warnings_: list[str] = []
    areas = [cover_sum(c, 2.0, 2.0) if len(c) else 0.0 for c in covers]
    if any(a2 > a1 + 1e-12 for a1, a2 in zip(areas, areas[1:])):
        warnings_.append("covers are not ordered by decreasing gauge sum")
    limit = mu.K / (mu.K - 1.0) if mu.K > 1 else math.inf
    p_list = [float(p) for p in p_list]
    for p in p_list:
        if p >= limit:
            warnings_.append(
                f"p={p:g} is outside (1, K/(K-1)) = (1, {limit:g}); "
                "Jacobian convergence in L^p is not guaranteed"
            )

    plan = TransformPlan(mu.spec)
    ref = principal_solution(mu, tol=tol, plan=plan)
    j_ref = jacobian(ref)
    targets = mu.spec.points()[window.mask]
    z_ref, valid_ref = invert_points(ref, targets)

    rows = []
    for i, cover in enumerate(covers):
        mu_n = truncate_coefficient(mu, cover)
        pm = principal_solution(mu_n, tol=tol, plan=plan)
        sup_phi = float(np.max(np.abs(pm.phi.values - ref.phi.values)[window.mask]))
        z_n, valid_n = invert_points(pm, targets)
        both = valid_ref & valid_n
        sup_inv = float(np.max(np.abs(z_n - z_ref)[both])) if np.any(both) else 0.0
        j_n = jacobian(pm)
        jac = {p: lp_norm(j_n - j_ref, p, window) for p in p_list}
        rows.append(ConvergenceRow(index=i + 1, sup_phi=sup_phi,
                                   sup_phi_inv=sup_inv, jacobian_lp=jac))
    return ConvergenceReport(rows=rows, p_list=p_list, warnings=warnings_)


def operator_identity_check(mu: BeltramiCoefficient, truncation_covers,
                            p: float, tol: float = 1e-8) -> list[float]:
    """Measured ratios ||d(phi - phi_n)||_2p / ||B((mu - mu_n) d phi)||_2p.

    The resolvent norm behind this ratio depends only on (k, p); no specific
    constant is asserted, the ratios are recorded and should be stable across
    a truncation sequence.
    """
    plan = TransformPlan(mu.spec)
    ref = principal_solution(mu, tol=tol, plan=plan)
    dphi, _ = wirtinger(ref.phi, "central")
    ratios = []
    for cover in truncation_covers:
        mu_n = truncate_coefficient(mu, cover)
        pm = principal_solution(mu_n, tol=tol, plan=plan)
        diff = ComplexField(mu.spec, ref.phi.values - pm.phi.values,
                            allow_singular=True)
        d_diff, _ = wirtinger(diff, "central")
        lhs = lp_norm(d_diff, 2 * p)
        rhs_in = ComplexField(
            mu.spec, (mu.field.values - mu_n.field.values) * dphi.values,
            allow_singular=True)
        rhs = lp_norm(beurling(rhs_in, plan), 2 * p)
        ratios.append(lhs / rhs if rhs > 0 else 0.0)
    return ratios
