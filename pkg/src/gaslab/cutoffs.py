"""Smooth compactly supported cutoffs and the compact velocity ramp.

All envelopes are built from one canonical C-infinity step glued with
``exp(-1/t)``: 0 for t <= 0, 1 for t >= 1, strictly monotone between.
Plateau bumps are affine images of that step on each transition band, so
values, first and second derivatives, and running integrals all have exact
piecewise closed forms (the only quadrature is a one-time Chebyshev fit of
the step's antiderivative, accurate to machine precision).

The ramp ``phi1`` integrates ``g - c*h`` where ``g`` is a plateau bump,
``c = integral(g)`` and ``h`` is a unit-mass bump placed to the right of
``supp g``.  That makes ``phi1'`` equal to 1 on the plateau of ``g`` while
keeping ``phi1`` itself compactly supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev

from .spectral import Grid2D, SpectralField

__all__ = [
    "CompactRamp",
    "CutoffFamily",
    "SmoothBump",
    "SupportOverflowError",
    "default_family",
    "make_phi1",
    "sample_scaled",
    "smooth_step",
    "step_antiderivative",
]


class SupportOverflowError(ValueError):
    """Scaled support does not fit the grid box: the grid is too small for
    the requested frequency and concentration parameters."""

# Below this the glue is identically zero at double precision and the
# closed-form derivative factors would overflow.
_GLUE_FLOOR = 1.0e-8

_ANTIDERIV_DEGREE = 128


def _glue(t: np.ndarray, order: int) -> np.ndarray:
    """exp(-1/t) on t > 0 (0 elsewhere) and its first two derivatives."""
    out = np.zeros_like(t)
    pos = t > _GLUE_FLOOR
    tp = t[pos]
    e = np.exp(-1.0 / tp)
    if order == 0:
        out[pos] = e
    elif order == 1:
        out[pos] = e / tp**2
    elif order == 2:
        out[pos] = e * (1.0 / tp**4 - 2.0 / tp**3)
    else:
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    return out


def smooth_step(t, order: int = 0) -> np.ndarray:
    """Canonical smooth step a/(a+b), a = exp(-1/t), b = exp(-1/(1-t)).

    Returns the step (order 0) or its first or second derivative, all of
    which vanish identically outside (0, 1).
    """
    t = np.asarray(t, dtype=np.float64)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    inside = (t > 0.0) & (t < 1.0)
    ti = t[inside]
    a = _glue(ti, 0)
    b = _glue(1.0 - ti, 0)
    h = a + b
    if order == 0:
        out[inside] = a / h
        out[t >= 1.0] = 1.0
    else:
        ap = _glue(ti, 1)
        bp = -_glue(1.0 - ti, 1)
        num = ap * b - a * bp
        if order == 1:
            out[inside] = num / h**2
        elif order == 2:
            app = _glue(ti, 2)
            bpp = _glue(1.0 - ti, 2)
            nump = app * b - a * bpp
            out[inside] = nump / h**2 - 2.0 * num * (ap + bp) / h**3
        else:
            raise ValueError(f"order must be 0, 1 or 2, got {order}")
    return out[0] if scalar else out


_step_anti: Chebyshev | None = None


def step_antiderivative(t) -> np.ndarray:
    """Running integral of :func:`smooth_step` from 0, valid for all t.

    Piecewise: 0 below the band, a machine-precision Chebyshev fit inside
    [0, 1], and ``1/2 + (t - 1)`` above (the step integrates to exactly 1/2
    by the symmetry step(t) + step(1-t) = 1).
    """
    global _step_anti
    if _step_anti is None:
        fit = Chebyshev.interpolate(smooth_step, _ANTIDERIV_DEGREE,
                                    domain=[0.0, 1.0])
        _step_anti = fit.integ(lbnd=0.0)
    t = np.asarray(t, dtype=np.float64)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    inside = (t > 0.0) & (t < 1.0)
    out[inside] = _step_anti(t[inside])
    above = t >= 1.0
    out[above] = 0.5 + (t[above] - 1.0)
    return out[0] if scalar else out


@dataclass(frozen=True)
class SmoothBump:
    """C-infinity bump: 1 on the plateau, 0 outside the support interval."""

    plateau_lo: float
    plateau_hi: float
    support_lo: float
    support_hi: float

    def __post_init__(self) -> None:
        ok = self.support_lo < self.plateau_lo <= self.plateau_hi < self.support_hi
        if not ok:
            raise ValueError(
                "need support_lo < plateau_lo <= plateau_hi < support_hi, got "
                f"({self.support_lo}, {self.plateau_lo}, "
                f"{self.plateau_hi}, {self.support_hi})"
            )

    @property
    def support(self) -> tuple[float, float]:
        return (self.support_lo, self.support_hi)

    @property
    def plateau(self) -> tuple[float, float]:
        return (self.plateau_lo, self.plateau_hi)

    def value(self, x, order: int = 0) -> np.ndarray:
        """Evaluate the bump or its derivative (orders 0..2), vectorized."""
        x = np.asarray(x, dtype=np.float64)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        wr = self.plateau_lo - self.support_lo
        wf = self.support_hi - self.plateau_hi
        rise = (x > self.support_lo) & (x < self.plateau_lo)
        fall = (x > self.plateau_hi) & (x < self.support_hi)
        out[rise] = smooth_step((x[rise] - self.support_lo) / wr, order) / wr**order
        # falling edge: chain rule brings (-1/wf)^order
        out[fall] = (smooth_step((self.support_hi - x[fall]) / wf, order)
                     * (-1.0 / wf) ** order)
        if order == 0:
            out[(x >= self.plateau_lo) & (x <= self.plateau_hi)] = 1.0
        return out[0] if scalar else out

    def __call__(self, x, order: int = 0) -> np.ndarray:
        return self.value(x, order)

    def mass(self) -> float:
        """Exact integral: plateau length plus half of each transition."""
        wr = self.plateau_lo - self.support_lo
        wf = self.support_hi - self.plateau_hi
        return (self.plateau_hi - self.plateau_lo) + 0.5 * (wr + wf)

    def cumulative(self, x) -> np.ndarray:
        """Running integral from the left, vectorized, exact piecewise."""
        x = np.asarray(x, dtype=np.float64)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        wr = self.plateau_lo - self.support_lo
        wf = self.support_hi - self.plateau_hi
        rise_mass = 0.5 * wr
        out = wr * step_antiderivative((x - self.support_lo) / wr)
        mid = x >= self.plateau_lo
        out[mid] = rise_mass + np.minimum(x[mid], self.plateau_hi) - self.plateau_lo
        fall = x >= self.plateau_hi
        # integral over the falling edge up to x, by the substitution
        # t = (support_hi - u) / wf
        t = (self.support_hi - np.minimum(x[fall], self.support_hi)) / wf
        out[fall] += wf * (0.5 - step_antiderivative(t))
        return out[0] if scalar else out


@dataclass(frozen=True)
class CompactRamp:
    """Antiderivative of ``g - amp * h / mass(h)`` with ``amp = mass(g)``.

    The derivative equals 1 on the plateau of ``g``; the function itself
    vanishes left of ``supp g`` and right of ``supp h`` because the two
    integrals cancel exactly.
    """

    g: SmoothBump
    h: SmoothBump
    amp: float = field(init=False)

    def __post_init__(self) -> None:
        if self.h.support_lo < self.g.support_hi:
            raise ValueError(
                f"correction bump must sit right of the ramp bump, got "
                f"supp g up to {self.g.support_hi} vs supp h from "
                f"{self.h.support_lo}"
            )
        object.__setattr__(self, "amp", self.g.mass())

    @property
    def support(self) -> tuple[float, float]:
        return (self.g.support_lo, self.h.support_hi)

    @property
    def unit_slope_interval(self) -> tuple[float, float]:
        return self.g.plateau

    def value(self, x, order: int = 0) -> np.ndarray:
        """Evaluate the ramp (order 0) or its derivatives (orders 1..2)."""
        scale = self.amp / self.h.mass()
        if order == 0:
            return self.g.cumulative(x) - scale * self.h.cumulative(x)
        if order in (1, 2):
            return self.g.value(x, order - 1) - scale * self.h.value(x, order - 1)
        raise ValueError(f"order must be 0, 1 or 2, got {order}")

    def __call__(self, x, order: int = 0) -> np.ndarray:
        return self.value(x, order)


def make_phi1(g: SmoothBump, h: SmoothBump) -> CompactRamp:
    """Build the compact ramp from its slope bump and correction bump."""
    return CompactRamp(g=g, h=h)


@dataclass(frozen=True)
class CutoffFamily:
    """The three envelopes entering the approximate solutions.

    ``psi`` shapes the oscillating packet, ``phi2`` the broad transverse
    envelope, and ``phi1`` the compactly supported ramp whose slope is 1
    wherever the packet lives.
    """

    psi: SmoothBump
    phi1: CompactRamp
    phi2: SmoothBump

    def __post_init__(self) -> None:
        # the ramp slope must be exactly 1 on supp psi, and the transverse
        # envelope flat there, or the closed-form cancellations break
        lo, hi = self.phi1.unit_slope_interval
        if not (lo <= self.psi.support_lo and self.psi.support_hi <= hi):
            raise ValueError("supp psi must lie inside the unit-slope interval")
        if not (self.phi2.plateau_lo <= self.psi.support_lo
                and self.psi.support_hi <= self.phi2.plateau_hi):
            raise ValueError("supp psi must lie inside the plateau of phi2")


def default_family() -> CutoffFamily:
    """Envelope geometry used throughout: plateaus and supports in units of
    the slow variable."""
    psi = SmoothBump(-2.0, 2.0, -4.0, 4.0)
    phi2 = SmoothBump(-4.0, 4.0, -8.0, 8.0)
    g = SmoothBump(-4.0, 4.0, -5.0, 5.0)
    h = SmoothBump(6.8, 7.2, 6.0, 8.0)
    return CutoffFamily(psi=psi, phi1=make_phi1(g, h), phi2=phi2)


def sample_scaled(fn, grid: Grid2D, axis: int, scale: float,
                  order: int = 0) -> SpectralField:
    """Sample ``fn`` (order-th derivative) at ``scale * coordinate`` along one
    axis, constant along the other.

    Chain-rule factors from the dilation are NOT applied; callers compose
    them explicitly so prefactor bookkeeping stays in one place.
    """
    if axis not in (0, 1):
        raise ValueError(f"axis must be 0 or 1, got {axis}")
    if not scale > 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    lo, hi = fn.support
    half = grid.lx if axis == 0 else grid.ly
    if lo / scale < -half or hi / scale > half:
        raise SupportOverflowError(
            f"support [{lo / scale:.3g}, {hi / scale:.3g}] after scaling by "
            f"{scale:.3g} exceeds the box half-width {half:.3g} on axis {axis}"
        )
    coord = grid.x if axis == 0 else grid.y
    line = fn.value(scale * coord, order)
    if axis == 0:
        values = np.broadcast_to(line[:, None], (grid.nx, grid.ny))
    else:
        values = np.broadcast_to(line[None, :], (grid.nx, grid.ny))
    return SpectralField(grid, physical=values)
