"""Uniform periodic grids on a square, complex fields, Wirtinger derivatives and norms.

The grid covers the square [-L, L)^2 with n x n cells and samples at cell
centers, so z[j, k] = (-L + (j + 1/2) h) + i (-L + (k + 1/2) h) with h = 2L/n.
Axis 0 of a value array is the x (real) direction, axis 1 is y (imaginary).
Cell centers never hit lattice-symmetric singular points such as the origin,
which keeps every kernel evaluation finite.

All operations here are pure; fields are frozen after construction.  Sums are
plain numpy reductions in fixed array order, so results are deterministic
regardless of any caller-side parallelism over independent fields.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import EmptyRegionError, GridError

FIELD_MAGIC = b"CFLD"
# magic(4) + u32 n + f64 L + 8 reserved bytes = 24-byte header
_HEADER = struct.Struct("<4sId8x")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the periodic cell: n points per side over [-L, L)^2."""

    n: int
    half_width: float

    def __post_init__(self):
        if not _is_power_of_two(self.n) or self.n < 16:
            raise GridError(f"n must be a power of two >= 16, got {self.n}")
        if self.half_width < 2:
            raise GridError(
                f"half_width must be >= 2 so the unit disk sits well inside "
                f"the cell, got {self.half_width}"
            )

    @property
    def spacing(self) -> float:
        # exact: division by a power of two
        return 2.0 * self.half_width / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing * self.spacing

    def coords1d(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return -self.half_width + (np.arange(self.n) + 0.5) * self.spacing

    def points(self) -> np.ndarray:
        """n x n array of cell-center points z[j, k] = x_j + i y_k."""
        c = self.coords1d()
        return c[:, None] + 1j * c[None, :]

    def freqs(self) -> np.ndarray:
        """Complex angular frequencies xi[j, k] = kx_j + i ky_k (FFT order)."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        return k[:, None] + 1j * k[None, :]

    def zero_cell(self) -> tuple[int, int]:
        """Index of the cell whose half-open square contains the origin."""
        return self.n // 2, self.n // 2

    def index_of(self, z: complex) -> tuple[int, int]:
        """Cell index containing the point z (half-open cell convention)."""
        h, L = self.spacing, self.half_width
        j = int(np.floor((z.real + L) / h))
        k = int(np.floor((z.imag + L) / h))
        if not (0 <= j < self.n and 0 <= k < self.n):
            raise GridError(f"point {z} outside the grid square")
        return j, k


class ComplexField:
    """Complex samples on a GridSpec; the carrier for mu, h, phi, F and tests.

    Values are validated finite unless ``allow_singular`` marks the field as
    carrying an integrable singularity mask.  The array is frozen.
    """

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values: np.ndarray, allow_singular: bool = False):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (spec.n, spec.n):
            raise GridError(
                f"values shape {values.shape} does not match grid n={spec.n}"
            )
        if not allow_singular and not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise GridError(f"non-finite sample at grid index ({bad[0]}, {bad[1]})")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("ComplexField is immutable")

    # -- arithmetic (returns new fields) --

    def _binary(self, other, op):
        if isinstance(other, ComplexField):
            if other.spec != self.spec:
                raise GridError("field specs differ")
            other = other.values
        return ComplexField(self.spec, op(self.values, other), allow_singular=True)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    def __rmul__(self, other):
        return ComplexField(self.spec, other * self.values, allow_singular=True)

    def conj(self) -> "ComplexField":
        return ComplexField(self.spec, np.conj(self.values), allow_singular=True)

    def abs_max(self) -> float:
        return float(np.max(np.abs(self.values)))

    # -- serialization --

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(FIELD_MAGIC, self.spec.n, self.spec.half_width)
        inter = np.empty((self.spec.n, self.spec.n, 2), dtype="<f8")
        inter[..., 0] = self.values.real
        inter[..., 1] = self.values.imag
        return header + inter.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ComplexField":
        magic, n, L = _HEADER.unpack_from(blob)
        if magic != FIELD_MAGIC:
            raise GridError(f"bad field magic {magic!r}")
        spec = GridSpec(n, L)
        flat = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
        if flat.size != 2 * n * n:
            raise GridError("field payload size mismatch")
        pairs = flat.reshape(n, n, 2)
        return cls(spec, pairs[..., 0] + 1j * pairs[..., 1], allow_singular=True)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ComplexField":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def dump_csv(self, path) -> None:
        """Debug dump: one row (j, k, re, im) per cell."""
        with open(path, "w") as fh:
            fh.write("j,k,re,im\n")
            for j in range(self.spec.n):
                row = self.values[j]
                for k in range(self.spec.n):
                    fh.write(f"{j},{k},{row[k].real!r},{row[k].imag!r}\n")


class Region:
    """Subset of grid cells: a disk, a union of disks, or an explicit mask."""

    __slots__ = ("spec", "mask", "describe")

    def __init__(self, spec: GridSpec, mask: np.ndarray, describe: str = "mask"):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (spec.n, spec.n):
            raise GridError("region mask shape does not match the grid")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "describe", describe)

    def __setattr__(self, name, value):
        raise AttributeError("Region is immutable")

    @classmethod
    def whole(cls, spec: GridSpec) -> "Region":
        return cls(spec, np.ones((spec.n, spec.n), dtype=bool), "whole grid")

    @classmethod
    def disk(cls, spec: GridSpec, center: complex, radius: float) -> "Region":
        if radius <= 0:
            raise GridError("disk radius must be positive")
        z = spec.points()
        return cls(spec, np.abs(z - center) <= radius, f"disk({center}, {radius})")

    @classmethod
    def disks(cls, spec: GridSpec, disks, dilation: float = 1.0) -> "Region":
        z = spec.points()
        mask = np.zeros((spec.n, spec.n), dtype=bool)
        for d in disks:
            mask |= np.abs(z - d.center) <= dilation * d.radius
        return cls(spec, mask, f"union of {len(list(disks))} disks (x{dilation})")

    @classmethod
    def annulus(cls, spec: GridSpec, r_inner: float, r_outer: float) -> "Region":
        r = np.abs(spec.points())
        return cls(spec, (r >= r_inner) & (r <= r_outer), f"annulus[{r_inner},{r_outer}]")

    @classmethod
    def square(cls, spec: GridSpec, center: complex, side: float) -> "Region":
        z = spec.points()
        half = side / 2.0
        mask = (np.abs(z.real - center.real) <= half) & (np.abs(z.imag - center.imag) <= half)
        return cls(spec, mask, f"square({center}, side {side})")

    def complement(self) -> "Region":
        return Region(self.spec, ~self.mask, f"complement of {self.describe}")

    def intersect(self, other: "Region") -> "Region":
        if other.spec != self.spec:
            raise GridError("region specs differ")
        return Region(self.spec, self.mask & other.mask,
                      f"({self.describe}) & ({other.describe})")

    def cell_count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def area(self) -> float:
        return self.cell_count() * self.spec.cell_area


def sample(spec: GridSpec, fn: Callable[[np.ndarray], np.ndarray],
           allow_singular: bool = False) -> ComplexField:
    """Sample a pointwise complex function at the cell centers.

    ``fn`` receives the full n x n array of cell-center points and must be
    total on them (assign an explicit value at isolated singularities).
    Raises with the offending index if a sample comes out non-finite.
    """
    values = np.asarray(fn(spec.points()), dtype=np.complex128)
    if values.shape == ():
        values = np.full((spec.n, spec.n), complex(values))
    return ComplexField(spec, values, allow_singular=allow_singular)


def integrate(f: ComplexField, region: Region | None = None) -> complex:
    """Midpoint-rule integral of f over the region (default: whole grid)."""
    if region is None:
        return complex(np.sum(f.values) * f.spec.cell_area)
    if region.spec != f.spec:
        raise GridError("region and field specs differ")
    return complex(np.sum(f.values[region.mask]) * f.spec.cell_area)


def lp_norm(f: ComplexField, p: float, region: Region | None = None) -> float:
    """Midpoint-rule L^p norm of |f| over a region (default: whole grid).

    The empty region is an error, distinct from a zero norm.
    """
    if not np.isfinite(p) or p < 1:
        raise ValueError(f"p must be finite and >= 1, got {p}")
    if region is None:
        vals = f.values
    else:
        if region.spec != f.spec:
            raise GridError("region and field specs differ")
        if region.cell_count() == 0:
            raise EmptyRegionError(f"lp_norm over empty region: {region.describe}")
        vals = f.values[region.mask]
    a = np.abs(vals)
    if p == 2.0:
        total = np.sum(a * a)
    elif p == 1.0:
        total = np.sum(a)
    else:
        total = np.sum(a ** p)
    return float((total * f.spec.cell_area) ** (1.0 / p))


def wirtinger(f: ComplexField, method: str = "central") -> tuple[ComplexField, ComplexField]:
    """Wirtinger derivatives (df, dbar_f) of a sampled field.

    d = (d/dx - i d/dy)/2, dbar = (d/dx + i d/dy)/2.  The spectral method
    assumes f is smooth and effectively periodic (decayed near the cell
    boundary); central differences wrap at the boundary, so boundary cells of
    a non-periodic field are only trustworthy in the interior.
    """
    v = f.values
    if method == "spectral":
        xi = f.spec.freqs()
        fhat = np.fft.fft2(v)
        dz = np.fft.ifft2(0.5j * np.conj(xi) * fhat)
        dzbar = np.fft.ifft2(0.5j * xi * fhat)
    elif method in ("central", "central-difference"):
        h2 = 2.0 * f.spec.spacing
        dx = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / h2
        dy = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / h2
        dz = 0.5 * (dx - 1j * dy)
        dzbar = 0.5 * (dx + 1j * dy)
    else:
        raise ValueError(f"unknown wirtinger method {method!r}")
    return (ComplexField(f.spec, dz, allow_singular=True),
            ComplexField(f.spec, dzbar, allow_singular=True))


def jump_exclusion_mask(f: ComplexField, band_cells: int = 2,
                        rel_threshold: float = 0.2) -> np.ndarray:
    """Boolean mask of cells within ``band_cells`` of a sharp jump of f.

    A cell is flagged when a nearest-neighbor difference of f exceeds
    ``rel_threshold`` times the sup of |f|; the flagged set is then dilated.
    Used to exclude discontinuity bands (circle |z|=1, truncation holes) from
    residual and accuracy checks.
    """
    v = f.values
    scale = np.max(np.abs(v))
    if scale == 0.0:
        return np.zeros_like(v, dtype=bool)
    jump = np.zeros(v.shape, dtype=bool)
    for axis in (0, 1):
        for shift in (1, -1):
            jump |= np.abs(v - np.roll(v, shift, axis=axis)) > rel_threshold * scale
    for _ in range(band_cells):
        grown = jump.copy()
        for axis in (0, 1):
            for shift in (1, -1):
                grown |= np.roll(jump, shift, axis=axis)
        jump = grown
    return jump
