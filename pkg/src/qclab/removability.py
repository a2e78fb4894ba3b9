"""Distributional dbar pairings, the proof's I/II bound ledger, and the sweep driver.

Controls take the place of the theorem's universally quantified f: a globally
quasiregular generator (the pairing must vanish as the covers shrink) and the
analytic-case Cauchy-transform witness on a positive-area square (the pairing
must stay pinned at the square's test mass).  The bound ledger evaluates the
proof's upper bounds for the two sums, not the distributions themselves.

Disk integrals fall back to center-value x exact-area quadrature once a disk
shrinks below the cell size, so deep-generation ledger rows keep their exact
geometric decay instead of collapsing to empty masks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beltrami import (
    PrincipalMap,
    _bilinear,
    compose_with_inverse,
    jacobian,
    principal_solution,
)
from .errors import DiscretizationError, GridError
from .grid import ComplexField, GridSpec, Region, sample, wirtinger
from .geometry import (
    CantorSet,
    DiskCover,
    cantor_cover,
    cover_sum,
    critical_index,
    radial_stretch,
    radial_stretch_map,
    square_cover,
    truncate_coefficient,
)
from .transforms import TransformPlan, cauchy


def tensor_bump(spec: GridSpec, center: complex = 0.0, width: float = 1.0) -> ComplexField:
    """C^4 tensor test bump with unit sup-norm, supported on a side-2*width square."""
    def fn(z):
        tx = (z.real - center.real) / width
        ty = (z.imag - center.imag) / width
        bx = np.where(np.abs(tx) < 1.0, (1.0 - tx ** 2) ** 5, 0.0)
        by = np.where(np.abs(ty) < 1.0, (1.0 - ty ** 2) ** 5, 0.0)
        return bx * by

    return sample(spec, fn)


def grad_sup(f: ComplexField) -> float:
    """sup |grad f| by central differences (operator norm |df| + |dbar f|)."""
    df, dbf = wirtinger(f, "central")
    return float(np.max(np.abs(df.values) + np.abs(dbf.values)))


@dataclass(frozen=True)
class PairingResult:
    """<dbar F, test> with the comparison scale ||F||_inf ||dbar test||_1."""

    value: complex
    scale: float
    excluded_area: float

    @property
    def relative(self) -> float:
        return abs(self.value) / self.scale if self.scale > 0 else 0.0


def dbar_pairing(F: ComplexField, test: ComplexField,
                 invalid_mask: np.ndarray | None = None) -> PairingResult:
    """-sum(F * dbar(test)) * cell_area over unmasked cells.

    ``test`` must be smooth and supported inside the reliable window; its
    dbar is taken spectrally.  Invalid cells (failed inversions) are excluded;
    they may not eat more than 1% of the test's support.
    """
    if test.spec != F.spec:
        raise GridError("test and field specs differ")
    spec = F.spec
    support = np.abs(test.values) > 0
    r = np.abs(spec.points())
    if np.any(support & (r > spec.half_width / 2.0)):
        raise ValueError("test function leaves the reliable window |z| <= L/2")
    _, dbar_test = wirtinger(test, "spectral")
    keep = np.ones(support.shape, dtype=bool) if invalid_mask is None else ~invalid_mask
    excluded_in_support = np.count_nonzero(support & ~keep) * spec.cell_area
    support_area = max(np.count_nonzero(support) * spec.cell_area, spec.cell_area)
    if excluded_in_support > 0.01 * support_area:
        raise DiscretizationError(
            f"masked cells cover {excluded_in_support / support_area:.1%} of the "
            "test support (limit 1%)"
        )
    value = -np.sum(F.values[keep] * dbar_test.values[keep]) * spec.cell_area
    sup_f = float(np.max(np.abs(F.values[keep]))) if np.any(keep) else 0.0
    scale = sup_f * float(np.sum(np.abs(dbar_test.values)) * spec.cell_area)
    return PairingResult(value=complex(value), scale=scale,
                         excluded_area=float(np.count_nonzero(~keep) * spec.cell_area))


def _disk_mass(values_pow: np.ndarray, spec: GridSpec, center: complex,
               radius: float, min_cells: int = 4) -> float:
    """Integral of a non-negative sampled density over a disk.

    Midpoint rule over the mask when the disk is resolved; center value times
    the exact disk area once the disk falls below the cell scale.
    """
    r = np.abs(spec.points() - center)
    m = r <= radius
    count = int(np.count_nonzero(m))
    if count >= min_cells:
        return float(np.sum(values_pow[m]) * spec.cell_area)
    cval = float(np.real(_bilinear(values_pow.astype(complex), spec,
                                   np.array([center]))[0]))
    return max(cval, 0.0) * math.pi * radius * radius


def _sup_on_cover(abs_values: np.ndarray, spec: GridSpec, cover: DiskCover,
                  dilation: float) -> float:
    """sup of a sampled non-negative field over the dilated disks (>= center cells)."""
    pts = spec.points()
    sup = 0.0
    for d in cover.disks:
        m = np.abs(pts - d.center) <= dilation * d.radius
        if np.any(m):
            sup = max(sup, float(np.max(abs_values[m])))
        sup = max(sup, float(np.real(_bilinear(abs_values.astype(complex), spec,
                                               np.array([d.center]))[0])))
    return sup


@dataclass(frozen=True)
class TermBound:
    """One Hoelder-conjugate product bound: value = prefactor * j_factor * diam_factor."""

    value: float
    j_factor: float
    diam_factor: float
    p: float
    q: float
    doubling_ratios: tuple = ()


def term_I_bound(cover: DiskCover, f_holder: tuple[float, float],
                 map_eps: PrincipalMap, p: float, q: float,
                 test_grad_sup: float = 1.0) -> TermBound:
    """|I| <= C_f ||D test||_inf (sum_j int_{4D_j} J^p)^{1/p} (sum_j diam(4D_j)^{q a + 2})^{1/q}."""
    c_f, alpha = f_holder
    if abs(1.0 / p + 1.0 / q - 1.0) > 1e-12:
        raise ValueError(f"(p, q) = ({p}, {q}) are not Hoelder conjugate")
    K = map_eps.mu.K
    if K > 1 and p >= K / (K - 1.0):
        raise ValueError(f"p = {p} is not below K/(K-1) = {K / (K - 1.0):g}")
    if len(cover) == 0:
        return TermBound(0.0, 0.0, 0.0, p, q)
    j_vals = np.maximum(jacobian(map_eps).values.real, 0.0) ** p
    spec = map_eps.spec
    j_sum = sum(_disk_mass(j_vals, spec, d.center, 4.0 * d.radius) for d in cover.disks)
    j_factor = j_sum ** (1.0 / p)
    diam_factor = cover_sum(cover, q * alpha + 2.0, dilation=4.0) ** (1.0 / q)
    return TermBound(value=c_f * test_grad_sup * j_factor * diam_factor,
                     j_factor=j_factor, diam_factor=diam_factor, p=p, q=q)


def term_II_bound(cover: DiskCover, map_eps: PrincipalMap, alpha: float,
                  K: float, test_sup: float = 1.0,
                  min_cells: int = 4) -> TermBound:
    """|II| <= ||test||_inf K^{1/2} (int_Omega J^{p/2})^{1/p} (sum_j diam(2D_j)^{q(a-1)+2})^{1/q}.

    Uses the proof's exponents p = 2K/(K-1), q = 2K/(K+1); the exponent
    identity q(alpha-1)+2 = d is asserted to 1e-12 before evaluation.  Also
    records the measured per-disk doubling step
    int_{4D_j}|D phi| / int_{2D_j} J^{1/2} over resolved disks.
    """
    q = 2.0 * K / (K + 1.0)
    exponent = q * (alpha - 1.0) + 2.0
    if abs(exponent - critical_index(alpha, K)) > 1e-12:
        raise ArithmeticError(
            f"exponent bookkeeping failed: q(alpha-1)+2 = {exponent} vs "
            f"d = {critical_index(alpha, K)}"
        )
    if len(cover) == 0:
        return TermBound(0.0, 0.0, 0.0, math.inf if K == 1.0 else 2.0 * K / (K - 1.0), q)
    spec = map_eps.spec
    j_plus = np.maximum(jacobian(map_eps).values.real, 0.0)
    if K == 1.0:
        p: float = math.inf
        j_factor = math.sqrt(_sup_on_cover(j_plus, spec, cover, 2.0))
    else:
        p = 2.0 * K / (K - 1.0)
        mass = sum(_disk_mass(j_plus ** (p / 2.0), spec, d.center, 2.0 * d.radius)
                   for d in cover.disks)
        j_factor = mass ** (1.0 / p)
    diam_factor = cover_sum(cover, exponent, dilation=2.0) ** (1.0 / q)

    dphi, dbphi = wirtinger(map_eps.phi, "central")
    abs_d = np.abs(dphi.values) + np.abs(dbphi.values)
    root_j = np.sqrt(j_plus)
    pts = spec.points()
    doubling = []
    for d in cover.disks:
        r = np.abs(pts - d.center)
        m2 = r <= 2.0 * d.radius
        if np.count_nonzero(m2) < min_cells:
            continue
        i2 = float(np.sum(root_j[m2]) * spec.cell_area)
        i4 = float(np.sum(abs_d[r <= 4.0 * d.radius]) * spec.cell_area)
        if i2 > 0:
            doubling.append(i4 / i2)
    return TermBound(value=test_sup * math.sqrt(K) * j_factor * diam_factor,
                     j_factor=j_factor, diam_factor=diam_factor, p=p, q=q,
                     doubling_ratios=tuple(doubling))


@dataclass(frozen=True)
class LedgerRow:
    eps: float
    bound_I: float
    bound_II: float
    I_j_factor: float
    I_diam_factor: float
    II_j_factor: float
    II_diam_factor: float


@dataclass
class BoundLedger:
    """Per-epsilon rows of the proof's two bounds and their factor pairs."""

    rows: list[LedgerRow] = field(default_factory=list)

    def append(self, row: LedgerRow) -> None:
        for v in (row.eps, row.bound_I, row.bound_II, row.I_j_factor,
                  row.I_diam_factor, row.II_j_factor, row.II_diam_factor):
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"ledger entries must be finite and non-negative: {row}")
        if self.rows and row.eps >= self.rows[-1].eps:
            raise ValueError("epsilon must decrease strictly along ledger rows")
        self.rows.append(row)

    def column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.rows]


@dataclass(frozen=True)
class CellConfig:
    """One sweep cell: exponents, set family, and control generator."""

    alpha: float
    K: float
    lam: float
    generations: tuple[int, ...]
    generator: str = "radial_stretch"  # or "cauchy_square"

    def __post_init__(self):
        critical_index(self.alpha, self.K)  # domain check
        if self.generator not in ("radial_stretch", "cauchy_square"):
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.generator == "cauchy_square" and self.K != 1.0:
            raise ValueError("the Cauchy-transform control is the analytic case K = 1")


@dataclass
class SweepRow:
    alpha: float
    K: float
    lam: float
    generation: int
    eps_gauge_sum: float
    bound_I: float
    bound_II: float
    pairing_re: float
    pairing_im: float
    pairing_scale: float
    doubling_max: float
    astala_norm: float


CSV_COLUMNS = ("alpha,K,lambda,generation,eps_gauge_sum,bound_I,bound_II,"
               "pairing_re,pairing_im,pairing_scale,doubling_max,astala_norm")

NEGATIVE_SQUARE_CENTER = 0.1 + 0.05j
NEGATIVE_SQUARE_SIDE = 0.5


@dataclass
class ExperimentReport:
    """Sweep output: one row per (cell, generation), plus per-cell bound ledgers."""

    rows: list[SweepRow] = field(default_factory=list)
    ledgers: dict[int, BoundLedger] = field(default_factory=dict)
    config_echo: dict = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(CSV_COLUMNS + "\n")
            for r in self.rows:
                fh.write(f"{r.alpha!r},{r.K!r},{r.lam!r},{r.generation},"
                         f"{r.eps_gauge_sum!r},{r.bound_I!r},{r.bound_II!r},"
                         f"{r.pairing_re!r},{r.pairing_im!r},{r.pairing_scale!r},"
                         f"{r.doubling_max!r},{r.astala_norm!r}\n")


def _run_cell(index: int, cell: CellConfig, spec: GridSpec, tests,
              solver_tol: float) -> tuple[list[SweepRow], BoundLedger]:
    d = critical_index(cell.alpha, cell.K)
    test_grad = max(grad_sup(t) for t in tests)
    plan = TransformPlan(spec)
    ledger = BoundLedger()
    rows = []

    if cell.generator == "cauchy_square":
        chi_q = sample(spec, lambda z: (
            (np.abs(z.real - NEGATIVE_SQUARE_CENTER.real) <= NEGATIVE_SQUARE_SIDE / 2)
            & (np.abs(z.imag - NEGATIVE_SQUARE_CENTER.imag) <= NEGATIVE_SQUARE_SIDE / 2)
        ).astype(complex))
        f_field = cauchy(chi_q, plan)
        from .geometry import constant_disk

        pm = principal_solution(constant_disk(0.0, spec), tol=solver_tol, plan=plan)
        covers = [square_cover(NEGATIVE_SQUARE_CENTER, NEGATIVE_SQUARE_SIDE, g)
                  for g in cell.generations]
    else:
        mu = radial_stretch(cell.K, spec)
        f_field = radial_stretch_map(cell.K, spec)
        cantor = CantorSet(cell.lam, max(cell.generations))
        covers = [cantor_cover(cantor, g) for g in cell.generations]

    df, dbf = wirtinger(f_field, "central")
    df_abs = np.abs(df.values) + np.abs(dbf.values)
    # the generator's Holder data is a property of f, certified once on the
    # coarsest cover (largest diameters); it upper-bounds all finer covers
    sup_df = _sup_on_cover(df_abs, spec, covers[0], 4.0)
    max_diam4 = max(4.0 * dd.diameter for dd in covers[0].disks)
    c_f = sup_df * max_diam4 ** (1.0 - cell.alpha)

    # the ledger's strictly-decreasing-epsilon invariant only holds on the
    # removability side (dim E < d); a sharpness cell's gauge sums grow
    eps_seq = [cover_sum(c, d, dilation=2.0) for c in covers]
    ledger_applies = all(b < a for a, b in zip(eps_seq, eps_seq[1:]))

    for g, cover in zip(cell.generations, covers):
        if cell.generator == "cauchy_square":
            pm_eps = pm
            F = f_field
            invalid = None
        else:
            mu_eps = truncate_coefficient(mu, cover)
            pm_eps = principal_solution(mu_eps, tol=solver_tol, plan=plan)
            comp = compose_with_inverse(f_field, pm_eps)
            F = comp.field
            invalid = ~comp.valid_mask

        best = PairingResult(0.0, 0.0, 0.0)
        for t in tests:
            pr = dbar_pairing(F, t, invalid_mask=invalid)
            if pr.relative >= best.relative:
                best = pr

        limit = cell.K / (cell.K - 1.0) if cell.K > 1 else math.inf
        p_i = (1.0 + limit) / 2.0 if math.isfinite(limit) else 2.0
        q_i = p_i / (p_i - 1.0)
        b1 = term_I_bound(cover, (c_f, cell.alpha), pm_eps, p_i, q_i,
                          test_grad_sup=test_grad)
        b2 = term_II_bound(cover, pm_eps, cell.alpha, cell.K)

        j_plus = np.maximum(jacobian(pm_eps).values.real, 0.0)
        if cell.K > 1.0:
            q_a = cell.K / (cell.K - 1.0)
            astala = sum(_disk_mass(j_plus ** q_a, spec, dd.center, 2.0 * dd.radius)
                         for dd in cover.disks)
        else:
            astala = sum(_disk_mass(j_plus, spec, dd.center, 2.0 * dd.radius)
                         for dd in cover.disks)

        eps = cover_sum(cover, d, dilation=2.0)
        if ledger_applies:
            ledger.append(LedgerRow(
                eps=eps, bound_I=b1.value, bound_II=b2.value,
                I_j_factor=b1.j_factor, I_diam_factor=b1.diam_factor,
                II_j_factor=b2.j_factor, II_diam_factor=b2.diam_factor))
        rows.append(SweepRow(
            alpha=cell.alpha, K=cell.K, lam=cell.lam, generation=g,
            eps_gauge_sum=eps, bound_I=b1.value, bound_II=b2.value,
            pairing_re=best.value.real, pairing_im=best.value.imag,
            pairing_scale=best.scale,
            doubling_max=max(b2.doubling_ratios, default=0.0),
            astala_norm=astala))
    return rows, ledger


def removability_sweep(cells, spec: GridSpec, test_widths=(0.4, 0.7, 1.0),
                       solver_tol: float = 1e-8, threads: int = 1) -> ExperimentReport:
    """Run every cell; per-cell failures are recorded and the sweep continues.

    Each row's pairing is the worst (largest relative) over the configured
    test bumps, so control assertions are conservative.  Rows are assembled in
    configuration order regardless of worker completion order.
    """
    cells = list(cells)
    tests = [tensor_bump(spec, 0.0, w) for w in test_widths]
    report = ExperimentReport(config_echo={
        "n": spec.n, "L": spec.half_width, "test_widths": tuple(test_widths),
        "solver_tol": solver_tol,
        "cells": [(c.alpha, c.K, c.lam, c.generations, c.generator) for c in cells],
    })

    def run(i: int):
        return _run_cell(i, cells[i], spec, tests, solver_tol)

    results: dict[int, tuple[list[SweepRow], BoundLedger]] = {}
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {i: pool.submit(run, i) for i in range(len(cells))}
            for i, fut in futures.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
                    report.errors.append(f"cell {i}: {exc}")
    else:
        for i in range(len(cells)):
            try:
                results[i] = run(i)
            except Exception as exc:  # noqa: BLE001
                report.errors.append(f"cell {i}: {exc}")

    for i in range(len(cells)):
        if i in results:
            rows, ledger = results[i]
            report.rows.extend(rows)
            report.ledgers[i] = ledger
    return report


def default_demo_cells() -> list[CellConfig]:
    """The shipped demo: bound decay, a quasiregular control, and the negative control."""
    return [
        CellConfig(alpha=0.9, K=1.5, lam=0.25, generations=(1, 2, 3, 4)),
        CellConfig(alpha=0.5, K=2.0, lam=0.25, generations=(1, 2, 3, 4)),
        CellConfig(alpha=0.9, K=1.0, lam=0.5, generations=(1, 2, 3),
                   generator="cauchy_square"),
    ]
