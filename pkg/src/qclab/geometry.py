"""Coefficient generators, Cantor-type sets, disk coverings, gauges, and partitions of unity.

The four-corner Cantor family is the workhorse set: its Hausdorff dimension
log 4 / log(1/lambda) is a free parameter and every covering sum is closed
form (generation ratio exactly 4 lambda^s), which makes it an oracle for the
covering dichotomy.  The base square is the unit square centered at the
origin, so generation g consists of 4^g squares of side lambda^g, all inside
the unit disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beltrami import BeltramiCoefficient
from .errors import CoverError, GridError
from .grid import ComplexField, GridSpec, Region, sample

BASE_SQUARE_SIDE = 1.0


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def dilate(self, factor: float) -> "Disk":
        return Disk(self.center, factor * self.radius)

    def contains(self, z, dilation: float = 1.0):
        return np.abs(np.asarray(z) - self.center) <= dilation * self.radius


class DiskCover:
    """A finite family of pairwise disjoint disks with dilation conventions 1, 2, 4."""

    __slots__ = ("disks",)

    def __init__(self, disks):
        disks = tuple(disks)
        for i in range(len(disks)):
            for j in range(i + 1, len(disks)):
                a, b = disks[i], disks[j]
                if abs(a.center - b.center) <= a.radius + b.radius:
                    raise CoverError(
                        f"base disks {i} and {j} are not disjoint "
                        f"(centers {a.center}, {b.center})"
                    )
        object.__setattr__(self, "disks", disks)

    def __setattr__(self, name, value):
        raise AttributeError("DiskCover is immutable")

    def __len__(self) -> int:
        return len(self.disks)

    def covers_points(self, points, dilation: float = 2.0) -> bool:
        """Exhaustive point-in-dilated-disk test over the given sample points."""
        pts = np.asarray(points, dtype=complex).reshape(-1)
        if pts.size == 0 or len(self.disks) == 0:
            return len(self.disks) > 0 or pts.size == 0
        covered = np.zeros(pts.shape, dtype=bool)
        for d in self.disks:
            covered |= np.abs(pts - d.center) <= dilation * d.radius
            if covered.all():
                return True
        return bool(covered.all())

    def region(self, spec: GridSpec, dilation: float = 2.0) -> Region:
        return Region.disks(spec, self.disks, dilation)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("j,center_re,center_im,radius\n")
            for j, d in enumerate(self.disks):
                fh.write(f"{j},{d.center.real!r},{d.center.imag!r},{d.radius!r}\n")

    @classmethod
    def from_csv(cls, path) -> "DiskCover":
        disks = []
        with open(path) as fh:
            next(fh)
            for line in fh:
                _, re_, im_, rad = line.strip().split(",")
                disks.append(Disk(complex(float(re_), float(im_)), float(rad)))
        return cls(disks)


@dataclass(frozen=True)
class CantorSet:
    """Four-corner Cantor set: each square spawns 4 corner squares of side ratio*side."""

    ratio: float
    generation: int

    def __post_init__(self):
        if not (0.0 < self.ratio < 0.5):
            raise ValueError(f"ratio must lie in (0, 1/2), got {self.ratio}")
        if self.generation < 0:
            raise ValueError("generation must be non-negative")

    @property
    def dimension(self) -> float:
        return math.log(4.0) / math.log(1.0 / self.ratio)

    def squares(self, generation: int | None = None) -> tuple[np.ndarray, float]:
        """Centers and side of the generation-g squares (4^g of them)."""
        g = self.generation if generation is None else generation
        if g < 0 or g > self.generation:
            raise ValueError(f"generation {g} outside [0, {self.generation}]")
        centers = np.array([0.0 + 0.0j])
        side = BASE_SQUARE_SIDE
        for _ in range(g):
            off = (side - self.ratio * side) / 2.0
            corners = np.array([off + 1j * off, -off + 1j * off,
                                off - 1j * off, -off - 1j * off])
            centers = (centers[:, None] + corners[None, :]).reshape(-1)
            side *= self.ratio
        return centers, side

    def sample_points(self, generation: int | None = None) -> np.ndarray:
        return self.squares(generation)[0]


def cantor_cover(cantor: CantorSet, generation: int) -> DiskCover:
    """One disk per generation-g square, radius side*sqrt(2)/4.

    The base disks are inscribed in the (disjoint) squares, the 2-dilates
    circumscribe them, so the 2-dilates cover the set.
    """
    if generation > cantor.generation:
        raise ValueError(
            f"cover generation {generation} exceeds set generation {cantor.generation}"
        )
    centers, side = cantor.squares(generation)
    radius = side * math.sqrt(2.0) / 4.0
    cover = DiskCover(Disk(c, radius) for c in centers)
    if not cover.covers_points(cantor.sample_points(), dilation=2.0):
        raise CoverError("2-dilates fail to cover the set's generator cells")
    return cover


def square_cover(center: complex, side: float, generation: int) -> DiskCover:
    """Dyadic cover of a full square: 4^g circumscribing disks of its subsquares.

    Used for the positive-area negative control, where the whole square plays
    the role of the singular set.
    """
    if side <= 0:
        raise ValueError("side must be positive")
    m = 2 ** generation
    sub = side / m
    coords = center.real - side / 2 + (np.arange(m) + 0.5) * sub
    ys = center.imag - side / 2 + (np.arange(m) + 0.5) * sub
    centers = (coords[:, None] + 1j * ys[None, :]).reshape(-1)
    radius = sub * math.sqrt(2.0) / 4.0
    return DiskCover(Disk(c, radius) for c in centers)


def cover_sum(cover: DiskCover, s: float, dilation: float = 2.0) -> float:
    """sum_j diam(dilation * D_j)^s."""
    if s <= 0:
        raise ValueError(f"exponent s must be positive, got {s}")
    return float(sum((dilation * d.diameter) ** s for d in cover.disks))


def critical_index(alpha: float, K: float) -> float:
    """The removability exponent d = 2 (1 + alpha K) / (K + 1)."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if K < 1.0:
        raise ValueError(f"K must be >= 1, got {K}")
    return 2.0 * (1.0 + alpha * K) / (K + 1.0)


@dataclass(frozen=True)
class ReferenceIndices:
    """Comparison indices from the prior literature next to ours."""

    ours: float
    koskela_martio: float
    koskela_martio_rn: float
    kilpelainen_zhong: float


def reference_indices(alpha: float, K: float, n: int = 2) -> ReferenceIndices:
    """Our critical index alongside the Koskela-Martio and Kilpelainen-Zhong ones."""
    return ReferenceIndices(
        ours=critical_index(alpha, K),
        koskela_martio=(1.0 / K) * (1.0 + alpha / K),
        koskela_martio_rn=min(1.0, n * alpha),
        kilpelainen_zhong=alpha * (n - 1),
    )


class ModulusOfContinuity:
    """Non-decreasing omega: [0, 1) -> [0, inf) with omega(0) = 0."""

    __slots__ = ("kind", "C", "alpha", "_rs", "_vals")

    def __init__(self, kind: str, C: float = 1.0, alpha: float = 1.0,
                 rs=None, vals=None):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "_rs", rs)
        object.__setattr__(self, "_vals", vals)

    def __setattr__(self, name, value):
        raise AttributeError("ModulusOfContinuity is immutable")

    @classmethod
    def power(cls, C: float = 1.0, alpha: float = 1.0) -> "ModulusOfContinuity":
        if C <= 0 or not (0.0 < alpha <= 1.0):
            raise ValueError("power modulus needs C > 0, alpha in (0, 1]")
        return cls("power", C=C, alpha=alpha)

    @classmethod
    def table(cls, rs, vals) -> "ModulusOfContinuity":
        rs = np.asarray(rs, dtype=float)
        vals = np.asarray(vals, dtype=float)
        if rs[0] != 0.0 or vals[0] != 0.0:
            raise ValueError("table modulus must start at omega(0) = 0")
        if np.any(np.diff(rs) <= 0) or np.any(np.diff(vals) < 0):
            raise ValueError("table modulus must be non-decreasing")
        if not np.all(np.isfinite(vals)):
            raise ValueError("table modulus must be bounded")
        return cls("table", rs=rs, vals=vals)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r >= 1):
            raise ValueError("modulus of continuity is defined on [0, 1)")
        if self.kind == "power":
            out = self.C * r ** self.alpha
        else:
            out = np.interp(r, self._rs, self._vals)
        return out if out.shape else float(out)


def hausdorff_gauge(t: float, omega: ModulusOfContinuity, K: float) -> float:
    """Critical gauge h(t) = t^(2/(K+1)) * omega(2t)^(2K/(K+1))."""
    if not (0.0 <= t < 0.5):
        raise ValueError(f"t must lie in [0, 1/2), got {t}")
    if K < 1.0:
        raise ValueError(f"K must be >= 1, got {K}")
    if t == 0.0:
        return 0.0
    return float(t ** (2.0 / (K + 1.0)) * omega(2.0 * t) ** (2.0 * K / (K + 1.0)))


def truncate_coefficient(mu: BeltramiCoefficient, cover: DiskCover) -> BeltramiCoefficient:
    """mu_eps = mu outside the union of 2-dilates, 0 inside, samplewise."""
    if len(cover) == 0:
        return BeltramiCoefficient(mu.field, mu.k)
    omega_mask = cover.region(mu.spec, dilation=2.0).mask
    values = np.where(omega_mask, 0.0, mu.field.values)
    return BeltramiCoefficient(ComplexField(mu.spec, values), mu.k)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """Quintic ramp, C^2 at both ends: 0 -> 0, 1 -> 1, peak slope 15/8."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def partition_of_unity(cover: DiskCover, spec: GridSpec):
    """Cutoffs psi_j: 1 on 2D_j, 0 outside 4D_j, summing to 1 on the union of 2-dilates.

    Each eta_j is a radial C^2 quintic ramp; psi_j = eta_j / max(sum eta, 1).
    Returns (psi fields, C_pu) where C_pu = max_j sup|grad psi_j| * diam(2D_j)
    is measured by central differences, not assumed.
    """
    if len(cover) == 0:
        return [], 0.0
    L = spec.half_width
    for j, d in enumerate(cover.disks):
        if (abs(d.center.real) + 4 * d.radius >= L
                or abs(d.center.imag) + 4 * d.radius >= L):
            raise GridError(f"4-dilate of disk {j} leaves the grid")
    z = spec.points()
    etas = []
    for d in cover.disks:
        r = np.abs(z - d.center)
        t = (r - 2.0 * d.radius) / (2.0 * d.radius)
        etas.append(1.0 - _smoothstep(t))
    denom = np.maximum(np.sum(etas, axis=0), 1.0)
    h2 = 2.0 * spec.spacing
    c_pu = 0.0
    fields = []
    for d, eta in zip(cover.disks, etas):
        psi = eta / denom
        gx = (np.roll(psi, -1, axis=0) - np.roll(psi, 1, axis=0)) / h2
        gy = (np.roll(psi, -1, axis=1) - np.roll(psi, 1, axis=1)) / h2
        grad_sup = float(np.max(np.hypot(gx, gy)))
        c_pu = max(c_pu, grad_sup * 2.0 * (2.0 * d.radius))
        fields.append(ComplexField(spec, psi.astype(np.complex128)))
    return fields, c_pu


def constant_disk(k: float, spec: GridSpec) -> BeltramiCoefficient:
    """mu = k on the unit disk, 0 outside."""
    if not (0.0 <= k < 1.0):
        raise ValueError(f"k must lie in [0, 1), got {k}")
    return BeltramiCoefficient(
        sample(spec, lambda z: k * (np.abs(z) <= 1.0).astype(complex)), k
    )


def radial_stretch(K: float, spec: GridSpec) -> BeltramiCoefficient:
    """mu(z) = -((K-1)/(K+1)) (z / zbar) on the unit disk; principal map z |z|^(1/K - 1)."""
    if K < 1.0:
        raise ValueError(f"K must be >= 1, got {K}")
    k = (K - 1.0) / (K + 1.0)

    def fn(z):
        with np.errstate(invalid="ignore", divide="ignore"):
            v = -k * (z / np.conj(z))
        v = np.where(z == 0, 0.0, v)
        return np.where(np.abs(z) <= 1.0, v, 0.0)

    return BeltramiCoefficient(sample(spec, fn), k)


def radial_stretch_map(K: float, spec: GridSpec) -> ComplexField:
    """Closed-form principal map of the radial stretch: z |z|^(1/K-1) inside, z outside."""
    def fn(z):
        r = np.abs(z)
        safe = np.where(r == 0, 1.0, r)
        return np.where(r <= 1.0, z * safe ** (1.0 / K - 1.0), z)

    return sample(spec, fn)


def checkerboard(k: float, cells: int, seed: int, spec: GridSpec) -> BeltramiCoefficient:
    """mu = +/- k on a seeded random cells x cells sign pattern inside the disk."""
    if not (0.0 <= k < 1.0):
        raise ValueError(f"k must lie in [0, 1), got {k}")
    if cells < 1:
        raise ValueError("cells must be >= 1")
    rng = np.random.default_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(cells, cells))

    def fn(z):
        inside = np.abs(z) <= 1.0
        ix = np.clip(((z.real + 1.0) / 2.0 * cells).astype(int), 0, cells - 1)
        iy = np.clip(((z.imag + 1.0) / 2.0 * cells).astype(int), 0, cells - 1)
        return np.where(inside, k * signs[ix, iy], 0.0)

    return BeltramiCoefficient(sample(spec, fn), k)
