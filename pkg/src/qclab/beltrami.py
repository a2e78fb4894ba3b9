"""Principal solutions of the Beltrami equation dbar(phi) = mu * d(phi).

The solver iterates g_{m+1} = B(mu g_m) + B(mu) from g_0 = 0, a contraction of
factor k = sup|mu| because the discrete Beurling transform has L2 norm 1.  The
fixed point g is d(phi) - 1; the density carried by the Cauchy transform is
then dbar(phi) = mu (1 + g), and phi = z + C(mu (1 + g)).  This makes the
Beltrami equation hold by construction up to the fixed-point residual, and
reproduces the closed-form maps for the constant-disk and radial-stretch
coefficients.

Inverses are evaluated by nearest-sample seeding plus damped Newton on the
bilinearly interpolated map with central-difference derivatives.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DiscretizationError, GridError, InversionError, SolverConvergenceError
from .grid import ComplexField, GridSpec, Region, jump_exclusion_mask, lp_norm, sample, wirtinger
from .transforms import TransformPlan, beurling, cauchy


class BeltramiCoefficient:
    """A coefficient field with certified sup bound k < 1, supported on the unit disk."""

    __slots__ = ("field", "k")

    def __init__(self, field_: ComplexField, k: float | None = None):
        sup = field_.abs_max()
        if k is None:
            k = sup
        # rounding slack: |z/zbar| etc. land a few ulps above 1
        if not (0.0 <= sup <= k * (1.0 + 1e-12) + 1e-300):
            raise ValueError(f"declared bound k={k} below measured sup |mu| = {sup}")
        if k >= 1.0:
            raise ValueError(f"k must be < 1, got {k}")
        outside = np.abs(field_.spec.points()) > 1.0
        if np.any(field_.values[outside] != 0):
            raise ValueError("mu must vanish outside the unit disk")
        object.__setattr__(self, "field", field_)
        object.__setattr__(self, "k", float(k))

    def __setattr__(self, name, value):
        raise AttributeError("BeltramiCoefficient is immutable")

    @property
    def K(self) -> float:
        return (1.0 + self.k) / (1.0 - self.k)

    @property
    def spec(self) -> GridSpec:
        return self.field.spec


@dataclass
class NeumannResult:
    h: ComplexField
    residual: float
    iterations: int
    increment_history: list[float] = field(default_factory=list)


def neumann_solve(mu: BeltramiCoefficient, tol: float = 1e-10, max_iter: int = 200,
                  plan: TransformPlan | None = None) -> NeumannResult:
    """Solve g = B(mu g) + B(mu) by Neumann iteration from g_0 = 0.

    Stops when ||g_{m+1} - g_m||_2 <= tol ||g_{m+1}||_2; the returned residual
    is ||g - B(mu g) - B(mu)||_2.  Successive increments contract by about k.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if plan is None:
        plan = TransformPlan(mu.spec)
    mu_v = mu.field.values
    b_mu = beurling(mu.field, plan).values
    g = np.zeros_like(mu_v)
    history: list[float] = []
    area = mu.spec.cell_area
    converged = False
    iterations = 0
    for m in range(1, max_iter + 1):
        g_next = np.fft.ifft2(plan.multiplier * np.fft.fft2(mu_v * g)) + b_mu
        inc = float(np.sqrt(np.sum(np.abs(g_next - g) ** 2) * area))
        norm = float(np.sqrt(np.sum(np.abs(g_next) ** 2) * area))
        history.append(inc)
        g = g_next
        iterations = m
        if inc <= tol * norm:
            converged = True
            break
    h = ComplexField(mu.spec, g, allow_singular=True)
    res_v = g - np.fft.ifft2(plan.multiplier * np.fft.fft2(mu_v * g)) - b_mu
    residual = float(np.sqrt(np.sum(np.abs(res_v) ** 2) * area))
    if not converged:
        raise SolverConvergenceError(
            f"Neumann iteration did not converge in {max_iter} steps "
            f"(last increment {history[-1]:.3e}, residual {residual:.3e}, "
            f"expected geometric ratio ~ {mu.k})",
            residual_history=history,
        )
    return NeumannResult(h=h, residual=residual, iterations=iterations,
                         increment_history=history)


@dataclass
class PrincipalMap:
    """A solved Beltrami equation: phi = z + C h with h = dbar(phi)."""

    phi: ComplexField
    h: ComplexField
    mu: BeltramiCoefficient
    residual: float
    iterations: int
    checks: dict

    @property
    def spec(self) -> GridSpec:
        return self.phi.spec

    def save(self, directory) -> None:
        import os

        os.makedirs(directory, exist_ok=True)
        self.phi.save(os.path.join(directory, "phi.cfld"))
        self.h.save(os.path.join(directory, "h.cfld"))
        with open(os.path.join(directory, "meta.txt"), "w") as fh:
            fh.write(f"k = {self.mu.k!r}\n")
            fh.write(f"K = {self.mu.K!r}\n")
            fh.write(f"residual = {self.residual!r}\n")
            fh.write(f"iterations = {self.iterations}\n")
            for key, val in sorted(self.checks.items()):
                fh.write(f"check.{key} = {val!r}\n")


def reliable_window(spec: GridSpec) -> Region:
    """The zone where periodization and wrap effects are controlled."""
    return Region.disk(spec, 0.0, spec.half_width / 2.0)


def principal_solution(mu: BeltramiCoefficient, tol: float = 1e-10,
                       max_iter: int = 200,
                       plan: TransformPlan | None = None) -> PrincipalMap:
    """Solve for the principal map phi = z + Ch and record its invariant checks.

    Normalization or decay check failures are flagged in ``checks`` and warned
    about, never silently dropped.
    """
    if plan is None:
        plan = TransformPlan(mu.spec)
    spec = mu.spec
    result = neumann_solve(mu, tol=tol, max_iter=max_iter, plan=plan)
    density = ComplexField(spec, mu.field.values * (1.0 + result.h.values),
                           allow_singular=True)
    ch = cauchy(density, plan)
    z = spec.points()
    phi = ComplexField(spec, z + ch.values, allow_singular=True)

    checks: dict = {}
    dphi, dbphi = wirtinger(phi, "central")
    sup_dphi = float(np.max(np.abs(dphi.values) + np.abs(dbphi.values)))

    # normalization phi(0) = 0 at the zero cell, up to the cell offset
    j0, k0 = spec.zero_cell()
    phi0 = abs(phi.values[j0, k0])
    checks["phi0_abs"] = phi0
    checks["phi0_ok"] = bool(phi0 <= 2.0 * spec.spacing * max(sup_dphi, 1.0))

    # decay |phi - z| ~ tail/|z| on the guard annulus
    r = np.abs(z)
    ann = (r > spec.half_width / 2.0) & (r < spec.half_width)
    dev = np.abs(ch.values[ann])
    tail_bound = float(np.max(dev * r[ann])) if np.any(ann) else 0.0
    checks["decay_tail_bound"] = tail_bound
    small = float(np.max(dev)) if np.any(ann) else 0.0
    if small <= 8.0 * spec.spacing * max(mu.k, 0.01):
        checks["decay_slope"] = 0.0
        checks["decay_ok"] = True
    else:
        good = dev > 1e-13
        slope = float(np.polyfit(np.log(r[ann][good]), np.log(dev[good]), 1)[0])
        checks["decay_slope"] = slope
        checks["decay_ok"] = bool(slope <= -0.5)

    # Beltrami residual away from coefficient jumps, inside the window
    excl = jump_exclusion_mask(mu.field)
    win = reliable_window(spec).mask & ~excl
    region = Region(spec, win, "window minus jump band")
    num = lp_norm(dbphi - mu.field * dphi, 2, region)
    den = max(lp_norm(dphi, 2, region), 1e-300)
    rel = num / den
    checks["beltrami_residual"] = rel
    checks["beltrami_ok"] = bool(rel <= max(tol * 10.0, 5.0 * spec.spacing))

    for name in ("phi0", "decay", "beltrami"):
        if not checks[f"{name}_ok"]:
            warnings.warn(f"principal map check failed: {name} ({checks})", stacklevel=2)

    return PrincipalMap(phi=phi, h=density, mu=mu, residual=result.residual,
                        iterations=result.iterations, checks=checks)


def jacobian(pm: PrincipalMap, method: str = "central",
             tol: float = 1e-9) -> ComplexField:
    """J = |d phi|^2 - |dbar phi|^2 as a real field (imaginary part 0).

    Raises when J < -tol on more than a perimeter-proportional set of cells,
    which signals a broken discretization rather than jump-band noise.
    """
    dphi, dbphi = wirtinger(pm.phi, method)
    j = np.abs(dphi.values) ** 2 - np.abs(dbphi.values) ** 2
    bad = int(np.count_nonzero(j < -tol))
    if bad > 8 * pm.spec.n:
        raise DiscretizationError(
            f"Jacobian negative beyond tolerance on {bad} cells "
            f"(allowed {8 * pm.spec.n})"
        )
    return ComplexField(pm.spec, j.astype(np.complex128), allow_singular=True)


def _bilinear(values: np.ndarray, spec: GridSpec, z: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of cell-centered samples at points z."""
    h, L, n = spec.spacing, spec.half_width, spec.n
    u = (np.real(z) + L) / h - 0.5
    v = (np.imag(z) + L) / h - 0.5
    i0 = np.clip(np.floor(u).astype(int), 0, n - 2)
    j0 = np.clip(np.floor(v).astype(int), 0, n - 2)
    fu = np.clip(u - i0, 0.0, 1.0)
    fv = np.clip(v - j0, 0.0, 1.0)
    v00 = values[i0, j0]
    v10 = values[i0 + 1, j0]
    v01 = values[i0, j0 + 1]
    v11 = values[i0 + 1, j0 + 1]
    return ((1 - fu) * (1 - fv) * v00 + fu * (1 - fv) * v10
            + (1 - fu) * fv * v01 + fu * fv * v11)


def _inside_box(spec: GridSpec, z: np.ndarray) -> np.ndarray:
    lim = spec.half_width - spec.spacing
    return (np.abs(np.real(z)) <= lim) & (np.abs(np.imag(z)) <= lim)


def _newton_invert(pm: PrincipalMap, targets: np.ndarray, seeds: np.ndarray,
                   tol: float, max_iter: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized damped Newton for phi(z) = w.  Returns (z, residual, valid)."""
    spec = pm.spec
    phi_v = pm.phi.values
    dphi, dbphi = wirtinger(pm.phi, "central")
    a_v, b_v = dphi.values, dbphi.values

    z = seeds.astype(complex).copy()
    r = _bilinear(phi_v, spec, z) - targets
    for _ in range(max_iter):
        absr = np.abs(r)
        active = absr > tol
        if not np.any(active):
            break
        za = z[active]
        ra = r[active]
        a = _bilinear(a_v, spec, za)
        b = _bilinear(b_v, spec, za)
        det = np.abs(a) ** 2 - np.abs(b) ** 2
        det = np.where(np.abs(det) < 1e-14, np.inf, det)
        step = (np.conj(a) * ra - b * np.conj(ra)) / det
        mag = np.abs(step)
        step = np.where(mag > 0.5, step * (0.5 / np.where(mag == 0, 1, mag)), step)
        z_try = za - step
        r_try = _bilinear(phi_v, spec, z_try) - targets[active]
        # damp: halve the step while the residual grows
        for _ in range(4):
            worse = np.abs(r_try) > np.abs(ra)
            if not np.any(worse):
                break
            step = np.where(worse, step * 0.5, step)
            z_try = za - step
            r_try = _bilinear(phi_v, spec, z_try) - targets[active]
        z[active] = z_try
        r[active] = r_try
    valid = (np.abs(r) <= tol) & _inside_box(spec, z)
    return z, np.abs(r), valid


def invert_map(pm: PrincipalMap, targets, tol: float = 1e-9,
               max_iter: int = 60) -> np.ndarray:
    """Invert the map at each target w: find z with |phi(z) - w| <= tol.

    Seeds at the nearest grid sample of phi, then runs damped Newton on the
    interpolated map.  Raises when any target stagnates or lies outside the
    image of the grid interior.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    spec = pm.spec
    phi_v = pm.phi.values
    seeds = np.empty_like(targets)
    pts = spec.points()
    chunk = max(1, int(2e7) // (spec.n * spec.n))
    for start in range(0, targets.size, chunk):
        t = targets[start:start + chunk]
        d = np.abs(phi_v[None, :, :] - t[:, None, None]).reshape(t.size, -1)
        idx = np.argmin(d, axis=1)
        seeds[start:start + chunk] = pts.reshape(-1)[idx]
    z, res, valid = _newton_invert(pm, targets, seeds, tol, max_iter)
    if not np.all(valid):
        bad = int(np.argmax(~valid))
        raise InversionError(
            f"inversion failed for {int(np.count_nonzero(~valid))} of "
            f"{targets.size} targets (first at index {bad}, target {targets[bad]}); "
            f"best residual {res[bad]:.3e}",
            best_residual=float(res[bad]),
        )
    return z


@dataclass
class CompositionResult:
    """f composed with the inverse map, with out-of-image cells masked."""

    field: ComplexField
    valid_mask: np.ndarray
    excluded_area: float


def compose_with_inverse(f: ComplexField, pm: PrincipalMap, tol: float = 1e-9,
                         max_iter: int = 40) -> CompositionResult:
    """Sample F(w) = f(phi^{-1}(w)) on the grid by vectorized Newton inversion.

    Inversion seeds at z = w (the map is a bounded perturbation of the
    identity).  Cells whose inversion stagnates or exits the interpolable box
    are marked invalid, carry value 0, and their total area is recorded.
    """
    if f.spec != pm.spec:
        raise GridError("field and map live on different grids")
    spec = pm.spec
    w = spec.points().reshape(-1)
    z, _res, valid = _newton_invert(pm, w, w.copy(), tol, max_iter)
    values = np.zeros_like(w)
    values[valid] = _bilinear(f.values, spec, z[valid])
    values = values.reshape(spec.n, spec.n)
    valid = valid.reshape(spec.n, spec.n)
    excluded = float(np.count_nonzero(~valid) * spec.cell_area)
    return CompositionResult(
        field=ComplexField(spec, values, allow_singular=True),
        valid_mask=valid,
        excluded_area=excluded,
    )


def map_points(pm: PrincipalMap, z) -> np.ndarray:
    """phi evaluated at arbitrary points by bilinear interpolation."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return _bilinear(pm.phi.values, pm.spec, z)


def invert_points(pm: PrincipalMap, targets, tol: float = 1e-9,
                  max_iter: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Best-effort inversion at many targets: returns (z, valid) without raising.

    Seeds at the identity; suitable for bulk window sweeps where failed cells
    are masked rather than fatal.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    z, _res, valid = _newton_invert(pm, targets, targets.copy(), tol, max_iter)
    return z, valid
