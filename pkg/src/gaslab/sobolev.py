"""Fractional Sobolev norms, scaling-law fits, and the inequality lab.

Discrete norms are Plancherel sums against the multiplier
``(1 + |k|^2)^s`` under the fixed transform normalization, so for fields
whose support fits the box they approximate the continuum integrals and are
comparable across grids.  The lab functions return *empirical ratios*; the
corresponding inequalities are falsified only through exponents and
stability under refinement, never through constants.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spectral import (MAX_BESSEL_ORDER, Grid2D, SpectralField,
                       bessel_potential, derivative, spectral_l2)

__all__ = [
    "FitRecord",
    "Grid1D",
    "NormEstimate",
    "ScalingFit",
    "c1_norm",
    "fit_scaling",
    "hs_norm",
    "hs_norm_1d",
    "hs_norm_state",
    "interpolation_check",
    "kato_ponce_check",
    "linf",
    "packet_inequality_check",
    "packet_norm_check",
    "random_band_limited",
    "reciprocal_check",
    "write_fit_csv",
]

# Row-block size (in spectral entries) for streaming norm accumulation on
# grids too large for cached multipliers.
_BLOCK_ENTRIES = 2**21


def _check_index(s: float) -> None:
    if abs(s) > MAX_BESSEL_ORDER:
        raise ValueError(f"|s| must not exceed {MAX_BESSEL_ORDER}, got {s}")


@dataclass(frozen=True)
class NormEstimate:
    """A computed norm value with its exponent and grid provenance."""

    value: float
    index: float
    grid_id: str

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares exponent of a log-log power-law fit."""

    slope: float
    intercept: float
    stderr: float
    npoints: int
    r2: float

    def __post_init__(self) -> None:
        if self.npoints < 3:
            raise ValueError(f"need at least 3 points, got {self.npoints}")
        if self.stderr < 0.0:
            raise ValueError(f"stderr must be nonnegative, got {self.stderr}")
        if not 0.0 <= self.r2 <= 1.0:
            raise ValueError(f"r2 must lie in [0, 1], got {self.r2}")


def fit_scaling(points) -> ScalingFit:
    """Fit ``value ~ C * n^slope`` by least squares on (log n, log value)."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points for a fit, got {len(pts)}")
    if any(n <= 0.0 or v <= 0.0 for n, v in pts):
        raise ValueError("scaling fits need strictly positive inputs")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    m = len(pts)
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    if sxx == 0.0:
        raise ValueError("all abscissae coincide; fit is degenerate")
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 1e-30:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    stderr = math.sqrt(max(ss_res, 0.0) / (m - 2) / sxx) if m > 2 else 0.0
    return ScalingFit(slope=slope, intercept=intercept, stderr=stderr,
                      npoints=m, r2=r2)


def hs_norm(field: SpectralField, s: float) -> NormEstimate:
    """Discrete H^s norm of a field (see module docstring for convention)."""
    _check_index(s)
    grid = field.grid
    coef = field.spectral
    w = grid.fold_weights
    ncols = grid.ny // 2 + 1
    if grid.nx * ncols <= _BLOCK_ENTRIES:
        mult = grid.bessel_multiplier(float(s))
        total = float(np.sum(mult * (w[None, :] * np.abs(coef) ** 2)))
    else:
        ky2 = grid.ky**2
        kx2 = grid.kx**2
        rows = max(1, _BLOCK_ENTRIES // ncols)
        total = 0.0
        for i0 in range(0, grid.nx, rows):
            mult = (1.0 + kx2[i0:i0 + rows, None] + ky2[None, :]) ** s
            block = np.abs(coef[i0:i0 + rows]) ** 2
            total += float(np.sum(mult * (w[None, :] * block)))
    value = math.sqrt(4.0 * grid.lx * grid.ly * total) if total >= 0 else float("nan")
    if not math.isfinite(value):
        raise ValueError("norm is not finite; field has non-finite content")
    return NormEstimate(value=value, index=float(s), grid_id=grid.ident)


def hs_norm_state(components, s: float) -> NormEstimate:
    """Root-sum-square of component norms for a multi-component state.

    Accepts anything with ``rho, u, v, h`` fields or an iterable of fields.
    """
    if hasattr(components, "rho"):
        fields = (components.rho, components.u, components.v, components.h)
    else:
        fields = tuple(components)
    grids = {f.grid.ident for f in fields}
    if len(grids) != 1:
        raise ValueError(f"components live on different grids: {sorted(grids)}")
    total = 0.0
    grid_id = ""
    for f in fields:
        est = hs_norm(f, s)
        total += est.value**2
        grid_id = est.grid_id
    return NormEstimate(value=math.sqrt(total), index=float(s), grid_id=grid_id)


@dataclass(frozen=True)
class Grid1D:
    """Periodic 1D sampling of ``[-l, l)``; companion of Grid2D for the
    one-dimensional norm statements."""

    m: int
    l: float

    def __post_init__(self) -> None:
        if self.m < 16 or self.m & (self.m - 1):
            raise ValueError(f"m must be a power of two >= 16, got {self.m}")
        if not self.l > 0.0:
            raise ValueError(f"l must be positive, got {self.l}")

    @cached_property
    def x(self) -> np.ndarray:
        return -self.l + (2.0 * self.l / self.m) * np.arange(self.m)

    @cached_property
    def k(self) -> np.ndarray:
        return (np.pi / self.l) * np.arange(self.m // 2 + 1)

    @cached_property
    def fold_weights(self) -> np.ndarray:
        w = np.full(self.m // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w


def hs_norm_1d(grid: Grid1D, values: np.ndarray, s: float) -> float:
    """1D H^s norm under the same convention as :func:`hs_norm`."""
    _check_index(s)
    if values.shape != (grid.m,):
        raise ValueError(f"expected {grid.m} samples, got {values.shape}")
    coef = np.fft.rfft(values) / grid.m
    mult = (1.0 + grid.k**2) ** s
    total = float(np.sum(mult * grid.fold_weights * np.abs(coef) ** 2))
    value = math.sqrt(2.0 * grid.l * total)
    if not math.isfinite(value):
        raise ValueError("norm is not finite")
    return value


def _packet_grid(n: int, delta: float) -> Grid1D:
    # box large enough for the dilated envelope, fine enough for frequency n
    # (at least 8 points per oscillation, margin 4 beyond the support)
    l = 4.0 * n**delta + 4.0
    m = 16
    while 2.0 * l / m > math.pi / (4.0 * n):
        m *= 2
    return Grid1D(m=max(m, 1024), l=l)


def packet_norm_check(sigma: float, delta: float, n_list, a: float = 0.0,
                      psi=None) -> ScalingFit:
    """Fit the H^sigma norm of the modulated packet psi(n^-delta y) cos(ny+a)
    against n; the expected exponent is sigma + delta/2."""
    if psi is None:
        from .cutoffs import default_family
        psi = default_family().psi
    pts = []
    for n in n_list:
        g = _packet_grid(int(n), delta)
        vals = psi.value(float(n) ** -delta * g.x) * np.cos(n * g.x + a)
        pts.append((n, hs_norm_1d(g, vals, sigma)))
    return fit_scaling(pts)


def packet_inequality_check(sigma: float, delta: float, n_list,
                            psi=None) -> list[tuple[int, float, float]]:
    """Check ``||psi(n^-delta .)||_sigma <= n^{delta/2} ||psi||_sigma`` for
    each n; returns (n, lhs, rhs) triples."""
    if psi is None:
        from .cutoffs import default_family
        psi = default_family().psi
    ref_grid = Grid1D(m=4096, l=8.0)
    ref = hs_norm_1d(ref_grid, psi.value(ref_grid.x), sigma)
    out = []
    for n in n_list:
        g = _packet_grid(int(n), delta)
        lhs = hs_norm_1d(g, psi.value(float(n) ** -delta * g.x), sigma)
        out.append((int(n), lhs, float(n) ** (delta / 2.0) * ref))
    return out


def linf(field: SpectralField) -> float:
    return float(np.max(np.abs(field.physical)))


def c1_norm(field: SpectralField) -> float:
    """Grid C1 norm: max of |f|, |f_x|, |f_y| over the grid."""
    return max(linf(field),
               linf(derivative(field, 0)),
               linf(derivative(field, 1)))


def interpolation_check(f: SpectralField, sigma: float, s: float,
                        tau: float) -> float:
    """Ratio ||f||_s / (||f||_sigma^alpha * ||f||_tau^beta); at most 1 up to
    rounding, with equality for single-mode fields."""
    if not sigma < s < tau:
        raise ValueError(f"need sigma < s < tau, got {sigma}, {s}, {tau}")
    alpha = (tau - s) / (tau - sigma)
    beta = (s - sigma) / (tau - sigma)
    num = hs_norm(f, s).value
    if num == 0.0:
        return 0.0
    den = hs_norm(f, sigma).value ** alpha * hs_norm(f, tau).value ** beta
    return num / den


def kato_ponce_check(f: SpectralField, g: SpectralField, s: float) -> float:
    """Empirical constant of the commutator estimate.

    Computes ``||[L^s, f] g||_L2 / (||grad f||_inf ||L^{s-1} g||_L2
    + ||L^s f||_L2 ||g||_inf)`` with the commutator
    ``L^s(fg) - f L^s(g)`` formed pointwise in physical space.
    """
    grad_f = float(np.max(np.hypot(derivative(f, 0).physical,
                                   derivative(f, 1).physical)))
    g_inf = linf(g)
    if g_inf == 0.0:
        raise ValueError("g is identically zero; the ratio is undefined")
    fg = SpectralField(f.grid, physical=f.physical * g.physical)
    comm = SpectralField(
        f.grid,
        physical=(bessel_potential(fg, s).physical
                  - f.physical * bessel_potential(g, s).physical))
    num = spectral_l2(comm)
    den = (grad_f * hs_norm(g, s - 1.0).value
           + hs_norm(f, s).value * g_inf)
    return num / den


def reciprocal_check(h: SpectralField, g: SpectralField, b: float,
                     s: float) -> float:
    """Empirical constant of the reciprocal estimate
    ``||h/(g+b)||_s <= C (1 + ||g||_C1^s + ||g||_s^s) ||h||_s``."""
    if not s > 1.0:
        raise ValueError(f"need s > 1, got {s}")
    denom_field = g.physical + b
    if np.min(denom_field) <= b / 2.0:
        raise ValueError(
            f"pointwise floor violated: min(g + b) = {np.min(denom_field):.3g}"
            f" <= b/2 = {b / 2.0:.3g}"
        )
    h_s = hs_norm(h, s).value
    if h_s == 0.0:
        return 0.0
    quotient = SpectralField(h.grid, physical=h.physical / denom_field)
    scale = 1.0 + c1_norm(g) ** s + hs_norm(g, s).value ** s
    return hs_norm(quotient, s).value / (scale * h_s)


def random_band_limited(grid: Grid2D, max_mode: int, rng: np.random.Generator,
                        tag: str = "") -> SpectralField:
    """Random real field supported on integer modes |jx|, jy <= max_mode.

    Keeping ``max_mode`` at or below a third of the grid's mode count makes
    pointwise products of two such fields exactly representable, so the
    inequality lab is grid-exact for everything except genuine quotients.
    """
    if max_mode < 1 or max_mode > grid.nx // 2 - 1 or max_mode > grid.ny // 2 - 1:
        raise ValueError(f"max_mode {max_mode} out of range for {grid.ident}")
    coef = np.zeros(grid.spectral_shape, dtype=np.complex128)
    jx = list(range(0, max_mode + 1)) + list(range(grid.nx - max_mode, grid.nx))
    block = rng.standard_normal((len(jx), max_mode + 1)) \
        + 1j * rng.standard_normal((len(jx), max_mode + 1))
    coef[np.ix_(jx, range(max_mode + 1))] = block
    # enforce conjugate symmetry inside the jy = 0 column so the physical
    # samples reconstruct the spectrum exactly
    coef[0, 0] = coef[0, 0].real
    for j in range(1, max_mode + 1):
        coef[grid.nx - j, 0] = np.conj(coef[j, 0])
    return SpectralField(grid, spectral=coef, tag=tag)


@dataclass(frozen=True)
class FitRecord:
    """One row of the lab's fit CSV."""

    check_name: str
    params: str
    slope: float
    stderr: float
    r2: float
    passed: bool


def write_fit_csv(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check_name", "params", "slope", "stderr", "r2",
                         "pass"])
        for r in records:
            writer.writerow([r.check_name, r.params, f"{r.slope:.12g}",
                             f"{r.stderr:.12g}", f"{r.r2:.12g}",
                             str(r.passed).lower()])
