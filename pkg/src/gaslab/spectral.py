"""Fourier-side primitives on periodic rectangles.

Everything downstream (norms, residual scans, the time integrator) routes
its transforms through this module, so the conventions are pinned here once:

* the box is ``[-lx, lx) x [-ly, ly)`` sampled on a uniform ``nx`` by ``ny``
  grid, with x along axis 0,
* wavenumbers along x are ``pi * j / lx`` with ``j`` in FFT order; along y
  only the nonnegative half is stored (real transform along the last axis),
* the forward transform is normalized by ``1 / (nx * ny)`` so coefficients
  are the Fourier-series coefficients of the periodic extension.

With this normalization the discrete Sobolev norms downstream approximate
their continuum counterparts independently of the grid, which is what makes
values comparable across resolutions and box sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = [
    "MAX_BESSEL_ORDER",
    "Grid2D",
    "SpectralField",
    "bessel_potential",
    "dealias",
    "derivative",
    "get_fft_workers",
    "make_grid",
    "physical_l2",
    "set_fft_workers",
    "spectral_l2",
]

MAX_BESSEL_ORDER = 64.0

# Multipliers on grids larger than this are recomputed instead of cached;
# at float64 the cap corresponds to ~32 MiB per cached array.
_BESSEL_CACHE_MAX_ENTRIES = 2**22

_fft_workers = 1


def set_fft_workers(count: int) -> None:
    """Set the worker count passed to every FFT call (default 1)."""
    global _fft_workers
    count = int(count)
    if count < 1:
        raise ValueError(f"worker count must be positive, got {count}")
    _fft_workers = count


def get_fft_workers() -> int:
    return _fft_workers


def _rfft2(values: np.ndarray) -> np.ndarray:
    return scipy.fft.rfft2(values, workers=_fft_workers)


def _irfft2(coef: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return scipy.fft.irfft2(coef, s=shape, workers=_fft_workers)


def _is_pow2(count: int) -> bool:
    return count > 0 and (count & (count - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on ``[-lx, lx) x [-ly, ly)``.

    Parameters
    ----------
    nx, ny
        Sample counts along x and y; powers of two, at least 16.
    lx, ly
        Half-widths of the box.
    """

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self) -> None:
        for name, count in (("nx", self.nx), ("ny", self.ny)):
            if count < 16 or not _is_pow2(count):
                raise ValueError(
                    f"{name} must be a power of two >= 16, got {count}"
                )
        for name, half in (("lx", self.lx), ("ly", self.ly)):
            if not half > 0.0:
                raise ValueError(f"{name} must be positive, got {half}")

    @property
    def dx(self) -> float:
        return 2.0 * self.lx / self.nx

    @property
    def dy(self) -> float:
        return 2.0 * self.ly / self.ny

    @property
    def spectral_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny // 2 + 1)

    @property
    def ident(self) -> str:
        return f"{self.nx}x{self.ny}@{self.lx:.6g}x{self.ly:.6g}"

    @cached_property
    def x(self) -> np.ndarray:
        return -self.lx + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return -self.ly + self.dy * np.arange(self.ny)

    @cached_property
    def kx(self) -> np.ndarray:
        """Wavenumbers along x, FFT order; kx[j] == -kx[-j] except Nyquist."""
        return (np.pi / self.lx) * np.fft.fftfreq(self.nx, d=1.0 / self.nx)

    @cached_property
    def ky(self) -> np.ndarray:
        """Nonnegative wavenumbers along y (half spectrum)."""
        return (np.pi / self.ly) * np.arange(self.ny // 2 + 1)

    @cached_property
    def fold_weights(self) -> np.ndarray:
        """Multiplicity of each stored y-mode under conjugate symmetry."""
        w = np.full(self.ny // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep integer modes with |j| <= n/3 on each axis."""
        jx = np.abs(np.fft.fftfreq(self.nx, d=1.0 / self.nx))
        jy = np.arange(self.ny // 2 + 1)
        return (jx[:, None] <= self.nx / 3) & (jy[None, :] <= self.ny / 3)

    @cached_property
    def _bessel_cache(self) -> dict:
        return {}

    def bessel_multiplier(self, power: float) -> np.ndarray:
        """Return ``(1 + kx^2 + ky^2) ** power`` on the half spectrum.

        Small grids cache the array per ``power``; large grids recompute so
        cached multipliers never dominate memory.
        """
        key = float(power)
        cached = self._bessel_cache.get(key)
        if cached is not None:
            return cached
        mult = (1.0 + self.kx[:, None] ** 2 + self.ky[None, :] ** 2) ** key
        if self.nx * (self.ny // 2 + 1) <= _BESSEL_CACHE_MAX_ENTRIES:
            self._bessel_cache[key] = mult
        return mult


def make_grid(nx: int, ny: int, lx: float, ly: float) -> Grid2D:
    """Construct a grid, rejecting odd or tiny sizes and bad lengths."""
    return Grid2D(nx=nx, ny=ny, lx=lx, ly=ly)


class SpectralField:
    """A real periodic field carried in physical and spectral form.

    Exactly one representation is given at construction; the other is
    synthesized on first access and cached.  Instances are immutable:
    both arrays are exposed read-only and operations allocate new fields.
    """

    __slots__ = ("grid", "tag", "_phys", "_coef")

    def __init__(self, grid: Grid2D, physical: np.ndarray | None = None,
                 spectral: np.ndarray | None = None, tag: str = ""):
        if (physical is None) == (spectral is None):
            raise ValueError("provide exactly one of physical= or spectral=")
        self.grid = grid
        self.tag = tag
        if physical is not None:
            if np.iscomplexobj(physical):
                raise TypeError("physical samples must be real")
            if physical.shape != (grid.nx, grid.ny):
                raise ValueError(
                    f"sample shape {physical.shape} does not match grid "
                    f"({grid.nx}, {grid.ny})"
                )
            phys = np.array(physical, dtype=np.float64)
            phys.flags.writeable = False
            self._phys = phys
            self._coef = None
        else:
            if not np.iscomplexobj(spectral):
                raise TypeError("spectral coefficients must be complex")
            if spectral.shape != grid.spectral_shape:
                raise ValueError(
                    f"coefficient shape {spectral.shape} does not match grid "
                    f"spectral shape {grid.spectral_shape}"
                )
            coef = np.array(spectral, dtype=np.complex128)
            coef.flags.writeable = False
            self._coef = coef
            self._phys = None

    @classmethod
    def from_physical(cls, grid: Grid2D, values: np.ndarray,
                      tag: str = "") -> "SpectralField":
        return cls(grid, physical=values, tag=tag)

    @classmethod
    def from_spectral(cls, grid: Grid2D, coef: np.ndarray,
                      tag: str = "") -> "SpectralField":
        return cls(grid, spectral=coef, tag=tag)

    @classmethod
    def from_function(cls, grid: Grid2D, fn, tag: str = "") -> "SpectralField":
        values = np.broadcast_to(fn(grid.x[:, None], grid.y[None, :]),
                                 (grid.nx, grid.ny))
        return cls(grid, physical=values, tag=tag)

    @property
    def physical(self) -> np.ndarray:
        if self._phys is None:
            n = self.grid.nx * self.grid.ny
            phys = _irfft2(self._coef * n, (self.grid.nx, self.grid.ny))
            phys.flags.writeable = False
            self._phys = phys
        return self._phys

    @property
    def spectral(self) -> np.ndarray:
        if self._coef is None:
            coef = _rfft2(self._phys)
            coef /= self.grid.nx * self.grid.ny
            coef.flags.writeable = False
            self._coef = coef
        return self._coef

    def __repr__(self) -> str:
        tag = f" tag={self.tag!r}" if self.tag else ""
        return f"<SpectralField {self.grid.ident}{tag}>"


def bessel_potential(field: SpectralField, s: float) -> SpectralField:
    """Apply ``(1 - Laplacian)^(s/2)`` as a Fourier multiplier."""
    if abs(s) > MAX_BESSEL_ORDER:
        raise ValueError(f"|s| must not exceed {MAX_BESSEL_ORDER}, got {s}")
    mult = field.grid.bessel_multiplier(0.5 * s)
    return SpectralField(field.grid, spectral=field.spectral * mult,
                         tag=field.tag)


def derivative(field: SpectralField, axis: int, order: int = 1) -> SpectralField:
    """Spectral partial derivative along ``axis`` (0 = x, 1 = y).

    Odd orders zero the Nyquist mode of the differentiated axis, which keeps
    derivatives of real fields real.
    """
    if axis not in (0, 1):
        raise ValueError(f"axis must be 0 or 1, got {axis}")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    grid = field.grid
    if axis == 0:
        k = grid.kx.copy()
        if order % 2:
            k[grid.nx // 2] = 0.0
        mult = (1j * k[:, None]) ** order
    else:
        k = grid.ky.copy()
        if order % 2:
            k[-1] = 0.0
        mult = (1j * k[None, :]) ** order
    return SpectralField(grid, spectral=field.spectral * mult, tag=field.tag)


def dealias(field: SpectralField) -> SpectralField:
    """Zero all modes outside the two-thirds band on either axis."""
    return SpectralField(field.grid,
                         spectral=field.spectral * field.grid.dealias_mask,
                         tag=field.tag)


def physical_l2(field: SpectralField) -> float:
    """Grid L2 norm, ``sqrt(dx * dy * sum f^2)``, from physical samples."""
    values = field.physical
    return float(np.sqrt(field.grid.dx * field.grid.dy * np.sum(values * values)))


def spectral_l2(field: SpectralField) -> float:
    """Grid L2 norm from the half spectrum; equals :func:`physical_l2`."""
    grid = field.grid
    total = np.sum(grid.fold_weights[None, :] * np.abs(field.spectral) ** 2)
    return float(np.sqrt(4.0 * grid.lx * grid.ly * total))
