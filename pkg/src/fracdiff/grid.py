"""Periodic spatial grids, sampled densities and their Fourier transforms.

Conventions
-----------
Node ``j`` on each axis sits at ``r_j = -L/2 + j*h`` with ``h = L/N``.  The
forward transform is the Riemann sum

    F(k_m) = h**d * sum_j exp(-i k_m . r_j) psi(r_j),

so the ``k = 0`` mode is the physical normalisation ``int dV psi``.  Modes are
stored in numpy FFT order; :attr:`SpatialGrid.wavenumbers` gives the matching
``k`` values ``2*pi*m/L``, ``m`` in ``[-N/2, N/2)``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels


@dataclass(frozen=True)
class SpatialGrid:
    dim: int
    points_per_axis: int
    length_per_axis: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        n = self.points_per_axis
        if n < 8 or n & (n - 1):
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {n}")
        if not self.length_per_axis > 0:
            raise ValueError(f"length_per_axis must be positive, got {self.length_per_axis}")
        object.__setattr__(self, "length_per_axis", float(self.length_per_axis))

    @property
    def spacing(self):
        return self.length_per_axis / self.points_per_axis

    @property
    def shape(self):
        return (self.points_per_axis,) * self.dim

    @property
    def size(self):
        return self.points_per_axis**self.dim

    @property
    def cell_volume(self):
        return self.spacing**self.dim

    @cached_property
    def axis(self):
        n, h = self.points_per_axis, self.spacing
        return -0.5 * self.length_per_axis + h * np.arange(n)

    @cached_property
    def coordinates(self):
        """Tuple of ``dim`` coordinate arrays, each of shape :attr:`shape`."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def axis_wavenumbers(self):
        n = self.points_per_axis
        return 2.0 * np.pi * np.fft.fftfreq(n, d=self.spacing)

    @cached_property
    def wavenumbers(self):
        """Tuple of ``dim`` wavenumber arrays in FFT order, each of shape :attr:`shape`."""
        return tuple(np.meshgrid(*([self.axis_wavenumbers] * self.dim), indexing="ij"))

    @cached_property
    def k_squared(self):
        return sum(k * k for k in self.wavenumbers)

    @cached_property
    def _phase(self):
        # exp(-i k_m r_0) with r_0 = -L/2 is (-1)**m on each axis
        m = np.fft.fftfreq(self.points_per_axis, d=1.0 / self.points_per_axis).astype(int)
        sign = np.where(m % 2 == 0, 1.0, -1.0)
        out = np.ones(self.shape)
        for ax in range(self.dim):
            view = [1] * self.dim
            view[ax] = -1
            out = out * sign.reshape(view)
        return out

    def zero_index(self):
        return (0,) * self.dim

    def doubled(self):
        """Grid with the same spacing on a box twice as long."""
        return SpatialGrid(self.dim, 2 * self.points_per_axis, 2 * self.length_per_axis)


@dataclass(frozen=True, eq=False)
class DensityField:
    """Complex samples of a density on a :class:`SpatialGrid`."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        _same_grid(self, other)
        return DensityField(self.grid, self.values + other.values)

    def __mul__(self, scalar):
        return DensityField(self.grid, self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier modes of a density, FFT ordering."""

    grid: SpatialGrid
    modes: np.ndarray

    def __post_init__(self):
        v = np.array(self.modes, dtype=np.complex128)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} modes, got {v.size}")
        v = v.reshape(self.grid.shape)
        v.setflags(write=False)
        object.__setattr__(self, "modes", v)

    @property
    def normalization(self):
        return self.modes[self.grid.zero_index()]


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def make_gaussian(grid, mean=0.0, sigma=1.0):
    """Normalised isotropic Gaussian density centred at ``mean``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (grid.dim,))
    half = 0.5 * grid.length_per_axis
    if np.any(np.abs(mean) + 6.0 * sigma >= half):
        raise ValueError(
            f"grid half-length {half} cannot contain mean {mean.tolist()} +/- 6 sigma (sigma={sigma})"
        )
    r2 = sum((x - mu) ** 2 for x, mu in zip(grid.coordinates, mean))
    values = np.exp(-0.5 * r2 / sigma**2)
    field = DensityField(grid, values)
    return DensityField(grid, values / quadrature(field).real)


def quadrature(field):
    """``h**d * sum_j psi_j`` with a compensated sum in C (row-major) order."""
    return field.grid.cell_volume * kernels.neumaier_sum(field.values)


def forward_transform(field):
    grid = field.grid
    modes = grid.cell_volume * grid._phase * np.fft.fftn(field.values)
    # k = 0 mode is pinned to the compensated quadrature
    modes[grid.zero_index()] = quadrature(field)
    return SpectralField(grid, modes)


def inverse_transform(spec):
    grid = spec.grid
    values = np.fft.ifftn(grid._phase * spec.modes) / grid.cell_volume
    return DensityField(grid, values)


def pad_field(field, grid):
    """Embed ``field`` in the centre of a larger grid with the same spacing."""
    old = field.grid
    if grid.dim != old.dim or not np.isclose(grid.spacing, old.spacing, rtol=1e-14, atol=0):
        raise ValueError("padding needs the same dimension and spacing")
    extra = grid.points_per_axis - old.points_per_axis
    if extra < 0 or extra % 2:
        raise ValueError("target grid must be larger by an even number of points per axis")
    pad = extra // 2
    values = np.pad(field.values, [(pad, pad)] * old.dim)
    return DensityField(grid, values)
