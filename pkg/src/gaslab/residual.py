"""Term-by-term residual of the approximate solution family.

Inserting the approximate state (0, u1+u2, v1+v2, 0) into the gas system
leaves a residual only in the two velocity equations (the density and
entropy equations close exactly: rho = h = 0 and the velocity is
divergence-free).  Each velocity residual splits into nine terms,

    R_u = u2_t + u u_x + v u_y,   u = u1+u2, v = v1+v2  (expanded),
    R_v = v2_t + u v_x + v v_y,

indexed 0..8 in the order: time derivative, then the four x-transport
products (11, 12, 21, 22), then the four y-transport products.  Three of
the nine vanish identically because the cutoff supports are disjoint
(terms 2, 3, 7 in both rows), and the time derivative cancels against the
drift transport term 6 up to one order in n: those closed forms are
exposed for direct comparison.

Every term is assembled from closed-form 1D factors and outer products,
never by numerical differentiation, so exact vanishings are exact in
floating point and cancellation checks see no truncation noise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzParams, grid_for
from .cutoffs import CutoffFamily, default_family
from .sobolev import ScalingFit, fit_scaling, hs_norm
from .spectral import Grid2D, SpectralField

__all__ = [
    "ResidualBreakdown",
    "TERM_LABELS_U",
    "TERM_LABELS_V",
    "TermRecord",
    "crucial_cancellation",
    "packet_scale",
    "r3_closed_form",
    "read_term_csv",
    "residual_norm_scan",
    "residual_terms",
    "term_records",
    "term_slopes",
    "write_term_csv",
]

TERM_LABELS_U = ("u2_t", "u1u1x", "u1u2x", "u2u1x", "u2u2x",
                 "v1u1y", "v1u2y", "v2u1y", "v2u2y")
TERM_LABELS_V = ("v2_t", "u1v1x", "u1v2x", "u2v1x", "u2v2x",
                 "v1v1y", "v1v2y", "v2v1y", "v2v2y")
TOTAL_LABELS = ("total_u", "total_v", "total_joint")


class _Factory:
    """1D closed-form factor lines for one (params, t, grid) triple.

    Term builders return fresh 2D physical arrays; nothing 2D is cached,
    so peak memory per term is a handful of grid-sized arrays.
    """

    def __init__(self, p: AnsatzParams, t: float, grid: Grid2D,
                 family: CutoffFamily):
        n = float(p.n)
        lam = p.scale
        self.grid = grid
        self.omega = float(p.omega)
        self.a = n ** (-2.0 * p.delta - p.s - 1.0)   # slow packet amplitude
        self.b = n ** (-p.delta - p.s)               # fast packet amplitude
        self.c = p.omega / n                         # drift amplitude
        self.lam = lam
        self.n = n
        self.lam_power = p.delta
        self.s_power = p.s
        X = lam * grid.x
        Y = lam * grid.y
        psi, phi1, phi2 = family.psi, family.phi1, family.phi2
        self.P, self.dP, self.ddP = (psi.value(X, k) for k in range(3))
        self.Q, self.dQ, self.ddQ = (psi.value(Y, k) for k in range(3))
        self.F1, self.dF1, self.ddF1 = (phi1.value(X, k) for k in range(3))
        self.F2, self.dF2, self.ddF2 = (phi2.value(Y, k) for k in range(3))
        self.S = np.sin(p.n * grid.y + p.omega * t)
        self.C = np.cos(p.n * grid.y + p.omega * t)

    # -- R_u pieces, index order as in the module docstring ---------------
    def term_u(self, i: int) -> np.ndarray:
        a, b, c, lam, n, w = self.a, self.b, self.c, self.lam, self.n, self.omega
        o = np.multiply.outer
        if i == 0:    # u2_t
            return a * w * o(self.P, self.dQ * self.C) \
                - b * w * o(self.P, self.Q * self.S)
        if i == 1:    # u1 u1_x
            return c * c * lam * o(self.F1 * self.dF1, self.dF2 ** 2)
        if i == 2:    # u1 u2_x: y-support of phi2' misses psi entirely
            return c * lam * (
                a * o(self.F1 * self.dP, self.dF2 * self.dQ * self.S)
                + b * o(self.F1 * self.dP, self.dF2 * self.Q * self.C))
        if i == 3:    # u2 u1_x: same disjointness, other order
            return c * lam * (
                a * o(self.P * self.dF1, self.dQ * self.S * self.dF2)
                + b * o(self.P * self.dF1, self.Q * self.C * self.dF2))
        if i == 4:    # u2 u2_x
            y = (a * a) * self.dQ ** 2 * self.S ** 2 \
                + 2.0 * a * b * self.Q * self.dQ * self.S * self.C \
                + (b * b) * self.Q ** 2 * self.C ** 2
            return lam * o(self.P * self.dP, y)
        if i == 5:    # v1 u1_y
            return -c * c * lam * o(self.dF1 * self.F1, self.F2 * self.ddF2)
        if i == 6:    # v1 u2_y
            y = self.F2 * (a * lam * self.ddQ * self.S
                           + (a * n + b * lam) * self.dQ * self.C
                           - b * n * self.Q * self.S)
            return -c * o(self.dF1 * self.P, y)
        if i == 7:    # v2 u1_y: psi(Y) misses phi2''
            return -a * c * lam * o(self.dP * self.F1,
                                    self.Q * self.S * self.ddF2)
        if i == 8:    # v2 u2_y
            y = a * lam * self.Q * self.ddQ * self.S ** 2 \
                + (a * n + b * lam) * self.Q * self.dQ * self.S * self.C \
                - b * n * self.Q ** 2 * self.S ** 2
            return -a * o(self.dP * self.P, y)
        raise IndexError(f"term index {i} out of range 0..8")

    # -- R_v pieces --------------------------------------------------------
    def term_v(self, i: int) -> np.ndarray:
        a, b, c, lam, n, w = self.a, self.b, self.c, self.lam, self.n, self.omega
        o = np.multiply.outer
        if i == 0:    # v2_t
            return -a * w * o(self.dP, self.Q * self.C)
        if i == 1:    # u1 v1_x
            return -c * c * lam * o(self.F1 * self.ddF1, self.dF2 * self.F2)
        if i == 2:    # u1 v2_x: phi2'(Y) misses psi(Y)
            return -a * c * lam * o(self.F1 * self.ddP,
                                    self.dF2 * self.Q * self.S)
        if i == 3:    # u2 v1_x: phi1''(X) misses psi(X)
            return -c * lam * (
                a * o(self.P * self.ddF1, self.dQ * self.S * self.F2)
                + b * o(self.P * self.ddF1, self.Q * self.C * self.F2))
        if i == 4:    # u2 v2_x
            y = a * self.dQ * self.Q * self.S ** 2 \
                + b * self.Q ** 2 * self.S * self.C
            return -a * lam * o(self.P * self.ddP, y)
        if i == 5:    # v1 v1_y
            return c * c * lam * o(self.dF1 ** 2, self.F2 * self.dF2)
        if i == 6:    # v1 v2_y
            y = self.F2 * (a * lam * self.dQ * self.S
                           + a * n * self.Q * self.C)
            return c * o(self.dF1 * self.dP, y)
        if i == 7:    # v2 v1_y: phi2'(Y) misses psi(Y)
            return a * c * lam * o(self.dP * self.dF1,
                                   self.Q * self.S * self.dF2)
        if i == 8:    # v2 v2_y
            y = a * lam * self.Q * self.dQ * self.S ** 2 \
                + a * n * self.Q ** 2 * self.S * self.C
            return a * o(self.dP ** 2, y)
        raise IndexError(f"term index {i} out of range 0..8")

    def closed_form_u(self) -> np.ndarray:
        """Exact sum of terms 0 and 6: the order-n cutoff drops out."""
        w, n, lam = self.omega, self.n, self.lam
        amp = -w * n ** (-(2.0 + 2.0 * self.lam_power + self.s_power))
        y = lam * self.ddQ * self.S + n * self.dQ * self.C
        return amp * np.multiply.outer(self.P, y)

    def closed_form_v(self) -> np.ndarray:
        """Exact sum of v-terms 0 and 6: a single slow product survives."""
        w, n = self.omega, self.n
        amp = w * n ** (-(3.0 * self.lam_power + self.s_power + 2.0))
        return amp * np.multiply.outer(self.dP, self.dQ * self.S)

    def u2_scale(self) -> float:
        """Phase-independent envelope bound on the packet magnitude."""
        env = self.a * np.abs(np.multiply.outer(self.P, self.dQ)) \
            + self.b * np.abs(np.multiply.outer(self.P, self.Q))
        return float(np.max(env))


def _make_factory(p: AnsatzParams, t: float, grid: Grid2D,
                  family: CutoffFamily | None) -> _Factory:
    return _Factory(p, t, grid, family or default_family())


@dataclass(frozen=True)
class ResidualBreakdown:
    """All nine terms of each velocity residual plus totals and the two
    post-cancellation closed forms."""

    params: AnsatzParams
    t: float
    terms_u: tuple[SpectralField, ...]
    terms_v: tuple[SpectralField, ...]
    total_u: SpectralField
    total_v: SpectralField
    closed_form_u: SpectralField
    closed_form_v: SpectralField

    def __post_init__(self) -> None:
        if len(self.terms_u) != 9 or len(self.terms_v) != 9:
            raise ValueError("expected nine terms per residual row")
        for terms, total, row in ((self.terms_u, self.total_u, "u"),
                                  (self.terms_v, self.total_v, "v")):
            resum = np.zeros_like(total.physical)
            for f in reversed(terms):
                resum += f.physical
            scale = max(np.max(np.abs(total.physical)), 1e-300)
            gap = np.max(np.abs(resum - total.physical)) / scale
            if gap > 1e-12:
                raise ValueError(
                    f"sum of {row}-terms disagrees with total: {gap:.3e}")

    @property
    def grid(self) -> Grid2D:
        return self.total_u.grid


def residual_terms(p: AnsatzParams, t: float, grid: Grid2D,
                   family: CutoffFamily | None = None) -> ResidualBreakdown:
    fac = _make_factory(p, t, grid, family)
    terms_u, terms_v = [], []
    tot_u = np.zeros((grid.nx, grid.ny))
    tot_v = np.zeros((grid.nx, grid.ny))
    for i in range(9):
        arr = fac.term_u(i)
        tot_u += arr
        terms_u.append(SpectralField(grid, physical=arr,
                                     tag=f"{TERM_LABELS_U[i]}[n={p.n}]"))
        arr = fac.term_v(i)
        tot_v += arr
        terms_v.append(SpectralField(grid, physical=arr,
                                     tag=f"{TERM_LABELS_V[i]}[n={p.n}]"))
    return ResidualBreakdown(
        params=p, t=t,
        terms_u=tuple(terms_u), terms_v=tuple(terms_v),
        total_u=SpectralField(grid, physical=tot_u, tag=f"R_u[n={p.n}]"),
        total_v=SpectralField(grid, physical=tot_v, tag=f"R_v[n={p.n}]"),
        closed_form_u=SpectralField(grid, physical=fac.closed_form_u(),
                                    tag=f"R_u_06[n={p.n}]"),
        closed_form_v=SpectralField(grid, physical=fac.closed_form_v(),
                                    tag=f"R_v_06[n={p.n}]"),
    )


def packet_scale(p: AnsatzParams, t: float, grid: Grid2D,
                 family: CutoffFamily | None = None) -> float:
    """Reference magnitude of u2, for 'vanishes relative to the packet'
    style assertions."""
    return _make_factory(p, t, grid, family).u2_scale()


def crucial_cancellation(p: AnsatzParams, t: float, grid: Grid2D,
                         family: CutoffFamily | None = None,
                         ) -> tuple[SpectralField, SpectralField, float]:
    """Terms 0+6 of the u-row against their closed form.

    Both sides are closed-form samples; any disagreement is an algebra
    error, not discretization.  Returns (lhs, rhs, max relative error).
    """
    fac = _make_factory(p, t, grid, family)
    lhs_arr = fac.term_u(0) + fac.term_u(6)
    rhs_arr = fac.closed_form_u()
    denom = np.max(np.abs(rhs_arr))
    if denom == 0.0:
        raise ValueError("closed form vanished; degenerate cutoff family")
    err = float(np.max(np.abs(lhs_arr - rhs_arr)) / denom)
    return (SpectralField(grid, physical=lhs_arr, tag=f"u06[n={p.n}]"),
            SpectralField(grid, physical=rhs_arr, tag=f"u06cf[n={p.n}]"),
            err)


def r3_closed_form(p: AnsatzParams, t: float, grid: Grid2D,
                   family: CutoffFamily | None = None) -> SpectralField:
    """Closed form of v-terms 0+6; carries the drift's sign factor."""
    fac = _make_factory(p, t, grid, family)
    return SpectralField(grid, physical=fac.closed_form_v(),
                         tag=f"v06cf[n={p.n}]")


def _totals(fac: _Factory) -> tuple[np.ndarray, np.ndarray]:
    tot_u = fac.term_u(0)
    for i in range(1, 9):
        tot_u += fac.term_u(i)
    tot_v = fac.term_v(0)
    for i in range(1, 9):
        tot_v += fac.term_v(i)
    return tot_u, tot_v


def residual_norm_scan(n_list, template: AnsatzParams,
                       sigma: float | None = None, t: float = 0.5,
                       family: CutoffFamily | None = None,
                       points_per_unit: int = 48) -> ScalingFit:
    """Fit of the joint residual norm sqrt(|R_u|_sigma^2 + |R_v|_sigma^2)
    against n.  Needs at least four frequencies for a trustworthy slope."""
    ns = sorted(set(int(n) for n in n_list))
    if len(ns) < 4:
        raise ValueError("need >= 4 points for scaling fit")
    sig = template.sigma if sigma is None else float(sigma)
    points = []
    for n in ns:
        p = AnsatzParams(n=n, delta=template.delta, omega=template.omega,
                         s=template.s, sigma=template.sigma)
        grid = grid_for(n, template.delta, points_per_unit)
        fac = _make_factory(p, t, grid, family)
        tot_u, tot_v = _totals(fac)
        del fac
        nu = hs_norm(SpectralField(grid, physical=tot_u), sig).value
        del tot_u
        nv = hs_norm(SpectralField(grid, physical=tot_v), sig).value
        del tot_v
        points.append((n, math.hypot(nu, nv)))
    return fit_scaling(points)


@dataclass(frozen=True)
class TermRecord:
    """One row of the per-term measurement table."""

    n: int
    delta: float
    s: float
    sigma: float
    t: float
    term_label: str
    h_sigma_norm: float
    linf_norm: float


def term_records(n_list, template: AnsatzParams,
                 sigma: float | None = None,
                 times: tuple[float, ...] = (0.0, 0.5, 1.0),
                 family: CutoffFamily | None = None,
                 points_per_unit: int = 48) -> list[TermRecord]:
    """Norms of every term (and the totals) over an n-scan.

    Terms are built, measured, and dropped one at a time so the scan fits
    in memory at the largest default frequency.
    """
    sig = template.sigma if sigma is None else float(sigma)
    records: list[TermRecord] = []
    for n in sorted(set(int(n) for n in n_list)):
        p = AnsatzParams(n=n, delta=template.delta, omega=template.omega,
                         s=template.s, sigma=template.sigma)
        grid = grid_for(n, template.delta, points_per_unit)
        for t in times:
            fac = _make_factory(p, t, grid, family)
            tot_u = np.zeros((grid.nx, grid.ny))
            tot_v = np.zeros((grid.nx, grid.ny))
            for i in range(9):
                for labels, builder, tot in ((TERM_LABELS_U, fac.term_u, tot_u),
                                             (TERM_LABELS_V, fac.term_v, tot_v)):
                    arr = builder(i)
                    tot += arr
                    records.append(TermRecord(
                        n=n, delta=template.delta, s=template.s, sigma=sig,
                        t=t, term_label=labels[i],
                        h_sigma_norm=hs_norm(
                            SpectralField(grid, physical=arr), sig).value,
                        linf_norm=float(np.max(np.abs(arr)))))
                    del arr
            del fac
            nu = hs_norm(SpectralField(grid, physical=tot_u), sig).value
            lu = float(np.max(np.abs(tot_u)))
            del tot_u
            nv = hs_norm(SpectralField(grid, physical=tot_v), sig).value
            lv = float(np.max(np.abs(tot_v)))
            del tot_v
            records.append(TermRecord(n, template.delta, template.s, sig, t,
                                      "total_u", nu, lu))
            records.append(TermRecord(n, template.delta, template.s, sig, t,
                                      "total_v", nv, lv))
            records.append(TermRecord(n, template.delta, template.s, sig, t,
                                      "total_joint", math.hypot(nu, nv),
                                      max(lu, lv)))
    return records


def term_slopes(records: list[TermRecord],
                min_points: int = 3) -> dict[str, ScalingFit]:
    """Per-label scaling fits of the max-over-times norm against n.

    Labels whose norms sit at the floating-point floor (the identically
    vanishing terms) are skipped rather than fitted.
    """
    by_label: dict[str, dict[int, float]] = {}
    for r in records:
        slot = by_label.setdefault(r.term_label, {})
        slot[r.n] = max(slot.get(r.n, 0.0), r.h_sigma_norm)
    fits: dict[str, ScalingFit] = {}
    for label, values in by_label.items():
        pts = [(n, v) for n, v in sorted(values.items()) if v > 1e-290]
        if len(pts) >= min_points:
            fits[label] = fit_scaling(pts)
    return fits


_CSV_HEADER = ("n", "delta", "s", "sigma", "t", "term_label",
               "h_sigma_norm", "linf_norm")


def write_term_csv(path, records: list[TermRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_HEADER)
        for r in records:
            w.writerow([r.n, f"{r.delta!r}", f"{r.s!r}", f"{r.sigma!r}",
                        f"{r.t!r}", r.term_label,
                        f"{r.h_sigma_norm!r}", f"{r.linf_norm!r}"])


def read_term_csv(path) -> list[TermRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        if header != _CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        for row in rd:
            records.append(TermRecord(
                n=int(row[0]), delta=float(row[1]), s=float(row[2]),
                sigma=float(row[3]), t=float(row[4]), term_label=row[5],
                h_sigma_norm=float(row[6]), linf_norm=float(row[7])))
    return records
