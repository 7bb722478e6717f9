"""High/low-frequency approximate velocity families and gas states.

The two-parameter family (frequency n, sign w) combines a slow compactly
supported drift with a fast oscillating packet:

* stream function  S = psi(X) psi(Y) sin(ny + wt),  X = n^-delta x,
  Y = n^-delta y,
* packet  u2 = n^{-delta-s-1} S_y,  v2 = -n^{-delta-s-1} S_x  (expanded in
  closed form below; never obtained by numerical differentiation),
* drift   u1 = w n^-1 phi1(X) phi2'(Y),  v1 = -w n^-1 phi1'(X) phi2(Y).

The drift is tuned so that on supp S it equals (0, -w/n): it transports the
packet's phase at the speed that cancels the packet's time derivative to
leading order.  Every field here is a tensor product of 1D factors, so
sampling works on 1D lines and a single outer product per term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cutoffs import CutoffFamily, SupportOverflowError, default_family
from .spectral import Grid2D, SpectralField, derivative

__all__ = [
    "AnsatzParams",
    "DEFAULT_N_LIST",
    "GasConstants",
    "ResolutionError",
    "StateVector",
    "ansatz_time_derivative",
    "approximate_state",
    "default_params",
    "grid_for",
    "high_freq_velocity",
    "initial_difference",
    "low_freq_velocity",
    "stream_function",
    "velocity_divergence",
]

DEFAULT_N_LIST = (16, 32, 64, 128)


class ResolutionError(ValueError):
    """Grid spacing too coarse for the requested oscillation frequency."""


@dataclass(frozen=True)
class AnsatzParams:
    """Frequency/regularity parameters of one family member."""

    n: int
    delta: float = 0.25
    omega: int = 1
    s: float = 2.5
    sigma: float = 1.45

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.omega not in (1, -1):
            raise ValueError(f"omega must be +1 or -1, got {self.omega}")
        if not self.s > 2.0:
            raise ValueError(f"s must exceed 2, got {self.s}")
        lo = max(1.0, self.s - 1.5 + self.delta)
        hi = self.s - 1.0
        if not lo < hi:
            raise ValueError(
                f"empty sigma window ({lo:.4g}, {hi:.4g}); "
                f"need s > 2 and delta < 1/2"
            )
        if not lo < self.sigma < hi:
            raise ValueError(
                f"sigma = {self.sigma} outside the window ({lo:.4g}, {hi:.4g})"
            )

    @property
    def scale(self) -> float:
        """Dilation factor n^-delta of the slow variable."""
        return float(self.n) ** -self.delta


def default_params(n: int, omega: int = 1) -> AnsatzParams:
    return AnsatzParams(n=n, omega=omega)


@dataclass(frozen=True)
class GasConstants:
    """Background state and adiabatic exponent."""

    rho0: float = 1.0
    h0: float = 1.0
    gamma: float = 1.4

    def __post_init__(self) -> None:
        if not self.rho0 > 0.0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if not self.h0 > 0.0:
            raise ValueError(f"h0 must be positive, got {self.h0}")
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")


@dataclass(frozen=True)
class StateVector:
    """Four-component gas state (deviations from the background)."""

    rho: SpectralField
    u: SpectralField
    v: SpectralField
    h: SpectralField
    constants: GasConstants = field(default_factory=GasConstants)

    def __post_init__(self) -> None:
        grids = {f.grid.ident for f in self.fields}
        if len(grids) != 1:
            raise ValueError(f"components on different grids: {sorted(grids)}")
        c = self.constants
        rho_min = float(np.min(self.rho.physical))
        h_min = float(np.min(self.h.physical))
        # G2 region: strictly away from vacuum and loss of hyperbolicity
        if c.rho0 + rho_min < 0.5 * c.rho0 or c.h0 + h_min < 0.5 * c.h0:
            raise ValueError(
                f"state leaves the admissible region: min(rho0+rho) = "
                f"{c.rho0 + rho_min:.6g}, min(h0+h) = {c.h0 + h_min:.6g}"
            )

    @property
    def fields(self) -> tuple[SpectralField, ...]:
        return (self.rho, self.u, self.v, self.h)

    @property
    def grid(self) -> Grid2D:
        return self.rho.grid


def _pow2_at_least(value: float) -> int:
    return 1 << max(4, math.ceil(math.log2(max(value, 16.0))))


def grid_for(n: int, delta: float = 0.25, points_per_unit: int = 48) -> Grid2D:
    """Grid sized for frequency n: box half-width 8 n^delta + 4 on both axes,
    y-spacing at most pi/(4n), x-spacing set by resolution of the slow
    variable (points_per_unit samples per unit of X = n^-delta x)."""
    half = 8.0 * float(n) ** delta + 4.0
    ny = _pow2_at_least(2.0 * half / (math.pi / (4.0 * n)))
    nx = _pow2_at_least(2.0 * points_per_unit * half * float(n) ** -delta)
    return Grid2D(nx=nx, ny=ny, lx=half, ly=half)


def _check_grid(p: AnsatzParams, grid: Grid2D) -> None:
    widest = 8.0 / p.scale  # supp phi2 and supp phi1 both end at slow coord 8
    if widest > grid.lx or widest > grid.ly:
        raise SupportOverflowError(
            f"scaled support half-width {widest:.4g} exceeds the box "
            f"({grid.lx:.4g} x {grid.ly:.4g}); grid too small for n = {p.n}"
        )
    if grid.dy > math.pi / (4.0 * p.n):
        raise ResolutionError(
            f"dy = {grid.dy:.4g} exceeds pi/(4n) = {math.pi / (4 * p.n):.4g}; "
            f"fewer than 8 points per oscillation at n = {p.n}"
        )


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.multiply.outer(a, b)


def _field(grid: Grid2D, values: np.ndarray, tag: str) -> SpectralField:
    return SpectralField(grid, physical=values, tag=tag)


def stream_function(p: AnsatzParams, t: float, grid: Grid2D,
                    family: CutoffFamily | None = None) -> SpectralField:
    """S(x, y, t) = psi(X) psi(Y) sin(ny + wt), sampled from closed form."""
    fam = family or default_family()
    _check_grid(p, grid)
    psi_x = fam.psi.value(p.scale * grid.x)
    psi_y = fam.psi.value(p.scale * grid.y)
    phase = np.sin(p.n * grid.y + p.omega * t)
    return _field(grid, _outer(psi_x, psi_y * phase), f"S[n={p.n}]")


def high_freq_velocity(p: AnsatzParams, t: float, grid: Grid2D,
                       family: CutoffFamily | None = None,
                       ) -> tuple[SpectralField, SpectralField]:
    """Oscillating packet (u2, v2) in expanded closed form."""
    fam = family or default_family()
    _check_grid(p, grid)
    n = float(p.n)
    lam = p.scale
    psi_x = fam.psi.value(lam * grid.x)
    dpsi_x = fam.psi.value(lam * grid.x, 1)
    psi_y = fam.psi.value(lam * grid.y)
    dpsi_y = fam.psi.value(lam * grid.y, 1)
    sin_y = np.sin(p.n * grid.y + p.omega * t)
    cos_y = np.cos(p.n * grid.y + p.omega * t)
    c_slow = n ** (-2.0 * p.delta - p.s - 1.0)
    c_fast = n ** (-p.delta - p.s)
    u2 = c_slow * _outer(psi_x, dpsi_y * sin_y) \
        + c_fast * _outer(psi_x, psi_y * cos_y)
    v2 = -c_slow * _outer(dpsi_x, psi_y * sin_y)
    return (_field(grid, u2, f"u2[n={p.n}]"), _field(grid, v2, f"v2[n={p.n}]"))


def low_freq_velocity(p: AnsatzParams, grid: Grid2D,
                      family: CutoffFamily | None = None,
                      ) -> tuple[SpectralField, SpectralField]:
    """Time-independent drift (u1, v1)."""
    fam = family or default_family()
    _check_grid(p, grid)
    lam = p.scale
    w_n = p.omega / float(p.n)
    phi1_x = fam.phi1.value(lam * grid.x)
    dphi1_x = fam.phi1.value(lam * grid.x, 1)
    phi2_y = fam.phi2.value(lam * grid.y)
    dphi2_y = fam.phi2.value(lam * grid.y, 1)
    u1 = w_n * _outer(phi1_x, dphi2_y)
    v1 = -w_n * _outer(dphi1_x, phi2_y)
    return (_field(grid, u1, f"u1[n={p.n}]"), _field(grid, v1, f"v1[n={p.n}]"))


def approximate_state(p: AnsatzParams, t: float, grid: Grid2D,
                      constants: GasConstants | None = None,
                      family: CutoffFamily | None = None) -> StateVector:
    """Full state (0, u1+u2, v1+v2, 0) at time t."""
    fam = family or default_family()
    consts = constants or GasConstants()
    u2, v2 = high_freq_velocity(p, t, grid, fam)
    u1, v1 = low_freq_velocity(p, grid, fam)
    zero = np.zeros((grid.nx, grid.ny))
    return StateVector(
        rho=_field(grid, zero, f"rho[n={p.n}]"),
        u=_field(grid, u1.physical + u2.physical, f"u[n={p.n}]"),
        v=_field(grid, v1.physical + v2.physical, f"v[n={p.n}]"),
        h=_field(grid, zero, f"h[n={p.n}]"),
        constants=consts,
    )


def ansatz_time_derivative(p: AnsatzParams, t: float, grid: Grid2D,
                           family: CutoffFamily | None = None,
                           ) -> tuple[SpectralField, SpectralField]:
    """Exact (u_t, v_t): only the packet's trig factors carry time."""
    fam = family or default_family()
    _check_grid(p, grid)
    n = float(p.n)
    lam = p.scale
    psi_x = fam.psi.value(lam * grid.x)
    dpsi_x = fam.psi.value(lam * grid.x, 1)
    psi_y = fam.psi.value(lam * grid.y)
    dpsi_y = fam.psi.value(lam * grid.y, 1)
    sin_y = np.sin(p.n * grid.y + p.omega * t)
    cos_y = np.cos(p.n * grid.y + p.omega * t)
    c_slow = n ** (-2.0 * p.delta - p.s - 1.0) * p.omega
    c_fast = n ** (-p.delta - p.s) * p.omega
    u_t = c_slow * _outer(psi_x, dpsi_y * cos_y) \
        - c_fast * _outer(psi_x, psi_y * sin_y)
    v_t = -c_slow * _outer(dpsi_x, psi_y * cos_y)
    return (_field(grid, u_t, f"u_t[n={p.n}]"),
            _field(grid, v_t, f"v_t[n={p.n}]"))


def initial_difference(p: AnsatzParams, grid: Grid2D,
                       family: CutoffFamily | None = None,
                       ) -> tuple[SpectralField, SpectralField]:
    """Closed form of the t = 0 difference between the w = +1 and w = -1
    states: twice the w = +1 drift, (2/n phi1 phi2', -2/n phi1' phi2).

    The packet carries no w at t = 0, so only the drift survives.
    """
    fam = family or default_family()
    plus = AnsatzParams(n=p.n, delta=p.delta, omega=1, s=p.s, sigma=p.sigma)
    u1, v1 = low_freq_velocity(plus, grid, fam)
    return (_field(grid, 2.0 * u1.physical, f"du[n={p.n}]"),
            _field(grid, 2.0 * v1.physical, f"dv[n={p.n}]"))


def velocity_divergence(p: AnsatzParams, t: float, grid: Grid2D,
                        family: CutoffFamily | None = None) -> float:
    """Largest pointwise divergence of the full velocity.

    Both parts come from stream functions, so this measures spectral
    truncation of the cutoff tails, not the construction.  Resolving the
    drift's narrow momentum bump below 1e-9 takes about double the
    default x resolution.
    """
    fam = family or default_family()
    u2, v2 = high_freq_velocity(p, t, grid, fam)
    u1, v1 = low_freq_velocity(p, grid, fam)
    u = _field(grid, u1.physical + u2.physical, "u")
    del u1, u2
    div = derivative(u, 0).physical
    del u
    v = _field(grid, v1.physical + v2.physical, "v")
    del v1, v2
    div = div + derivative(v, 1).physical
    return float(np.max(np.abs(div)))
