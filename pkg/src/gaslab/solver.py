"""Pseudospectral time integration of the first-order gas system.

The state is the deviation (rho, u, v, h) from the constant background
(rho0, 0, 0, h0).  The system is solved in nonconservative form,

    W_t + A(W) W_x + B(W) W_y = 0,

with spectral derivatives, pointwise products in physical space, and a
classical four-stage Runge-Kutta step.  Only classical solutions are in
scope: admissibility guards (density and enthalpy at least half their
background values) abort a step rather than continue past a vacuum or a
loss of hyperbolicity, and a gradient cap flags incipient shock formation
as a structured outcome.

Dealiasing uses the 2/3 rule: spectral derivatives are masked at the
source (free, they are formed in coefficient space anyway) and the carried
state is re-masked once per accepted step.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .ansatz import GasConstants, StateVector
from .spectral import Grid2D, SpectralField, get_fft_workers

__all__ = [
    "GuardViolation",
    "SolverConfig",
    "StateTangent",
    "Trajectory",
    "cfl_timestep",
    "flux_matrices",
    "integrate",
    "load_snapshot",
    "read_norm_series",
    "rhs",
    "save_snapshot",
    "step_rk4",
    "symmetrizer",
    "wave_speed_bound",
    "write_norm_series",
]

_RHO, _U, _V, _H = 0, 1, 2, 3


class GuardViolation(RuntimeError):
    """A state left the admissible region; carries where and by how much."""

    def __init__(self, component: str, level: float, floor: float,
                 location: tuple[int, int], time: float | None = None):
        self.component = component
        self.level = level
        self.floor = floor
        self.location = location
        self.time = time
        at = "" if time is None else f" at t = {time:.6g}"
        super().__init__(
            f"admissibility guard: min({component}) = {level:.6g} below "
            f"floor {floor:.6g} at grid point {location}{at}")


# ----------------------------------------------------------------------
# pointwise matrices


def flux_matrices(state: StateVector, ix: int, iy: int,
                  ) -> tuple[np.ndarray, np.ndarray]:
    """The 4x4 coefficient matrices A, B of the quasilinear system at one
    grid point."""
    c = state.constants
    rho = c.rho0 + float(state.rho.physical[ix, iy])
    hh = c.h0 + float(state.h.physical[ix, iy])
    _check_point(rho, hh, c, (ix, iy))
    u = float(state.u.physical[ix, iy])
    v = float(state.v.physical[ix, iy])
    g1 = c.gamma - 1.0
    A = np.array([
        [u, rho, 0.0, 0.0],
        [hh / rho, u, 0.0, 1.0],
        [0.0, 0.0, u, 0.0],
        [0.0, g1 * hh, 0.0, u],
    ])
    B = np.array([
        [v, 0.0, rho, 0.0],
        [0.0, v, 0.0, 0.0],
        [hh / rho, 0.0, v, 1.0],
        [0.0, 0.0, g1 * hh, v],
    ])
    return A, B


def symmetrizer(state: StateVector, ix: int, iy: int,
                ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonal symmetrizer A0 and the symmetric products A1 = A0 A,
    B1 = A0 B, each assembled directly from its closed-form entries so the
    symmetry of A1, B1 is exact in floating point."""
    c = state.constants
    rho = c.rho0 + float(state.rho.physical[ix, iy])
    hh = c.h0 + float(state.h.physical[ix, iy])
    _check_point(rho, hh, c, (ix, iy))
    u = float(state.u.physical[ix, iy])
    v = float(state.v.physical[ix, iy])
    g1 = c.gamma - 1.0
    A0 = np.diag([hh / rho, rho, rho, rho / (g1 * hh)])
    A1 = np.array([
        [hh * u / rho, hh, 0.0, 0.0],
        [hh, rho * u, 0.0, rho],
        [0.0, 0.0, rho * u, 0.0],
        [0.0, rho, 0.0, rho * u / (g1 * hh)],
    ])
    B1 = np.array([
        [hh * v / rho, 0.0, hh, 0.0],
        [0.0, rho * v, 0.0, 0.0],
        [hh, 0.0, rho * v, rho],
        [0.0, 0.0, rho, rho * v / (g1 * hh)],
    ])
    return A0, A1, B1


def _check_point(rho: float, hh: float, c: GasConstants,
                 loc: tuple[int, int]) -> None:
    if rho < 0.5 * c.rho0:
        raise GuardViolation("rho0+rho", rho, 0.5 * c.rho0, loc)
    if hh < 0.5 * c.h0:
        raise GuardViolation("h0+h", hh, 0.5 * c.h0, loc)


# ----------------------------------------------------------------------
# right-hand side on raw (4, nx, ny) arrays


class _Plan:
    """Cached spectral machinery for one grid."""

    def __init__(self, grid: Grid2D):
        self.grid = grid
        self.ikx = (1j * grid.kx)[:, None].copy()
        self.ikx[grid.nx // 2, 0] = 0.0          # no odd-derivative Nyquist
        iky = 1j * grid.ky[: grid.ny // 2 + 1]
        iky[-1] = 0.0
        self.iky = iky[None, :].copy()
        self.mask = grid.dealias_mask

    def fwd(self, a: np.ndarray) -> np.ndarray:
        return sfft.rfft2(a, workers=get_fft_workers())

    def bwd(self, c: np.ndarray) -> np.ndarray:
        return sfft.irfft2(c, s=(self.grid.nx, self.grid.ny),
                           workers=get_fft_workers())


_plans: dict[str, _Plan] = {}


def _plan(grid: Grid2D) -> _Plan:
    plan = _plans.get(grid.ident)
    if plan is None:
        plan = _plans[grid.ident] = _Plan(grid)
    return plan


def _guard_arrays(W: np.ndarray, c: GasConstants,
                  fracs: tuple[float, float]) -> None:
    rho_min_idx = np.unravel_index(np.argmin(W[_RHO]), W[_RHO].shape)
    rho_min = c.rho0 + W[_RHO][rho_min_idx]
    if rho_min < fracs[0] * c.rho0:
        raise GuardViolation("rho0+rho", float(rho_min),
                             fracs[0] * c.rho0,
                             (int(rho_min_idx[0]), int(rho_min_idx[1])))
    h_min_idx = np.unravel_index(np.argmin(W[_H]), W[_H].shape)
    h_min = c.h0 + W[_H][h_min_idx]
    if h_min < fracs[1] * c.h0:
        raise GuardViolation("h0+h", float(h_min), fracs[1] * c.h0,
                             (int(h_min_idx[0]), int(h_min_idx[1])))


def _rhs_arrays(W: np.ndarray, grid: Grid2D, c: GasConstants,
                dealias: bool, fracs: tuple[float, float]) -> np.ndarray:
    _guard_arrays(W, c, fracs)
    plan = _plan(grid)
    dx = np.empty_like(W)
    dy = np.empty_like(W)
    for i in range(4):
        coef = plan.fwd(W[i])
        if dealias:
            coef *= plan.mask
        dx[i] = plan.bwd(coef * plan.ikx)
        dy[i] = plan.bwd(coef * plan.iky)
    rho = c.rho0 + W[_RHO]
    hh = c.h0 + W[_H]
    chi = hh / rho
    u, v = W[_U], W[_V]
    g1 = c.gamma - 1.0
    out = np.empty_like(W)
    out[_RHO] = -(u * dx[_RHO] + rho * dx[_U] + v * dy[_RHO] + rho * dy[_V])
    out[_U] = -(chi * dx[_RHO] + u * dx[_U] + dx[_H] + v * dy[_U])
    out[_V] = -(u * dx[_V] + chi * dy[_RHO] + v * dy[_V] + dy[_H])
    out[_H] = -(g1 * hh * (dx[_U] + dy[_V]) + u * dx[_H] + v * dy[_H])
    return out


def _mask_state(W: np.ndarray, grid: Grid2D) -> None:
    plan = _plan(grid)
    for i in range(4):
        W[i] = plan.bwd(plan.fwd(W[i]) * plan.mask)


def _rk4_arrays(W: np.ndarray, dt: float, grid: Grid2D, c: GasConstants,
                dealias: bool, fracs: tuple[float, float],
                forcing=None, t: float = 0.0) -> np.ndarray:
    def f(V: np.ndarray, tau: float) -> np.ndarray:
        k = _rhs_arrays(V, grid, c, dealias, fracs)
        if forcing is not None:
            k += forcing(tau)
        return k

    k1 = f(W, t)
    k2 = f(W + (0.5 * dt) * k1, t + 0.5 * dt)
    k3 = f(W + (0.5 * dt) * k2, t + 0.5 * dt)
    k4 = f(W + dt * k3, t + dt)
    out = W + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    if dealias:
        _mask_state(out, grid)
    _guard_arrays(out, c, fracs)
    return out


def _state_arrays(state: StateVector) -> np.ndarray:
    return np.stack([f.physical for f in state.fields])


def _wrap_state(W: np.ndarray, grid: Grid2D, c: GasConstants,
                n_tag: str = "") -> StateVector:
    names = ("rho", "u", "v", "h")
    return StateVector(
        *(SpectralField(grid, physical=W[i], tag=names[i] + n_tag)
          for i in range(4)),
        constants=c)


# ----------------------------------------------------------------------
# public single-state operations


@dataclass(frozen=True)
class StateTangent:
    """Time derivative of a state, as raw component arrays."""

    arrays: np.ndarray

    @property
    def rho(self) -> np.ndarray:
        return self.arrays[_RHO]

    @property
    def u(self) -> np.ndarray:
        return self.arrays[_U]

    @property
    def v(self) -> np.ndarray:
        return self.arrays[_V]

    @property
    def h(self) -> np.ndarray:
        return self.arrays[_H]


def rhs(state: StateVector, dealias: bool = True,
        guard_fracs: tuple[float, float] = (0.5, 0.5),
        forcing=None, t: float = 0.0) -> StateTangent:
    """-(A(W) W_x + B(W) W_y) over the whole grid, plus any injected
    source.  `forcing` maps a time to a (4, nx, ny) array."""
    out = _rhs_arrays(_state_arrays(state), state.grid, state.constants,
                      dealias, guard_fracs)
    if forcing is not None:
        out += forcing(t)
    return StateTangent(arrays=out)


def step_rk4(state: StateVector, dt: float, dealias: bool = True,
             guard_fracs: tuple[float, float] = (0.5, 0.5),
             forcing=None, t: float = 0.0) -> StateVector:
    """One classical Runge-Kutta step; negative dt steps backward.

    The forcing, when given, is sampled at the stage times of the
    non-autonomous tableau, so a manufactured source keeps the full
    fourth order.
    """
    if dt == 0.0:
        raise ValueError("dt must be nonzero")
    W = _rk4_arrays(_state_arrays(state), dt, state.grid, state.constants,
                    dealias, guard_fracs, forcing, t)
    return _wrap_state(W, state.grid, state.constants)


def wave_speed_bound(state: StateVector) -> float:
    """max |u|+|v| plus the fastest acoustic speed sqrt(gamma max(h0+h))."""
    c = state.constants
    flow = float(np.max(np.abs(state.u.physical) + np.abs(state.v.physical)))
    return flow + math.sqrt(c.gamma * (c.h0 + float(np.max(state.h.physical))))


def cfl_timestep(state: StateVector, cfl: float) -> float:
    g = state.grid
    return cfl * min(g.dx, g.dy) / wave_speed_bound(state)


def _cfl_arrays(W: np.ndarray, grid: Grid2D, c: GasConstants,
                cfl: float) -> float:
    flow = float(np.max(np.abs(W[_U]) + np.abs(W[_V])))
    speed = flow + math.sqrt(c.gamma * (c.h0 + float(np.max(W[_H]))))
    return cfl * min(grid.dx, grid.dy) / speed


# ----------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class SolverConfig:
    """Integration controls.

    Exactly one of dt (fixed step) or cfl (adaptive step from the wave
    speed bound) drives step selection.  Norms at monitor_indices are
    recorded at every accepted step; doubling detection uses
    doubling_index, defaulting to the largest monitored index.
    """

    t_end: float
    dt: float | None = None
    cfl: float | None = 0.75
    dealias: bool = True
    guard_margin: tuple[float, float] = (0.5, 0.5)
    monitor_indices: tuple[float, ...] = (1.45, 2.5)
    snapshot_times: tuple[float, ...] = ()
    doubling_index: float | None = None
    grad_cap: float = 100.0

    def __post_init__(self) -> None:
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.dt is not None:
            if not self.dt > 0.0:
                raise ValueError(f"dt must be positive, got {self.dt}")
        elif self.cfl is None or not 0.0 < self.cfl < 1.0:
            raise ValueError(
                f"need dt > 0 or cfl in (0,1), got dt={self.dt} "
                f"cfl={self.cfl}")
        if not self.monitor_indices:
            raise ValueError("monitor_indices must not be empty")
        for ts in self.snapshot_times:
            if ts < 0.0 or ts > self.t_end + 1e-12:
                raise ValueError(f"snapshot time {ts} outside [0, t_end]")
        if not (0.0 < self.guard_margin[0] <= 1.0
                and 0.0 < self.guard_margin[1] <= 1.0):
            raise ValueError(f"guard_margin fractions must lie in (0, 1], "
                             f"got {self.guard_margin}")

    @property
    def doubling_at(self) -> float:
        if self.doubling_index is not None:
            return self.doubling_index
        return max(self.monitor_indices)


@dataclass(frozen=True)
class Trajectory:
    """Result of one integration."""

    snapshots: tuple[tuple[float, StateVector], ...]
    norm_series: tuple[tuple[float, float, float], ...]
    doubling_time: float | None
    terminated_reason: str
    t_final: float
    steps: int
    guard_event: GuardViolation | None = None

    def __post_init__(self) -> None:
        times = [t for t, _ in self.snapshots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot times must increase strictly")
        if self.terminated_reason not in ("completed", "guard", "blowup"):
            raise ValueError(f"unknown reason {self.terminated_reason!r}")

    def series_at(self, index: float) -> list[tuple[float, float]]:
        return [(t, val) for t, idx, val in self.norm_series
                if abs(idx - index) < 1e-12]


def _state_norms(W: np.ndarray, grid: Grid2D,
                 indices: tuple[float, ...]) -> list[float]:
    """Component-shared-transform norms of the 4-vector at each index."""
    from .sobolev import hs_norm  # local import: sobolev pulls no solver
    vals = [0.0] * len(indices)
    for i in range(4):
        f = SpectralField(grid, physical=W[i])
        for j, s in enumerate(indices):
            vals[j] += hs_norm(f, s).value ** 2
        del f
    return [math.sqrt(v) for v in vals]


def _grad_max(W: np.ndarray, grid: Grid2D) -> float:
    plan = _plan(grid)
    worst = 0.0
    for i in (_U, _V):
        coef = plan.fwd(W[i])
        worst = max(worst,
                    float(np.max(np.abs(plan.bwd(coef * plan.ikx)))),
                    float(np.max(np.abs(plan.bwd(coef * plan.iky)))))
    return worst


def integrate(state0: StateVector, cfg: SolverConfig,
              observer=None, forcing=None) -> Trajectory:
    """March state0 to cfg.t_end, stepping exactly onto snapshot times.

    The observer, if given, is called as observer(t, W, grid, constants)
    with W a read-only (4, nx, ny) component array, after every accepted
    step including t = 0.  `forcing`, if given, maps a time to a
    (4, nx, ny) source array added to the right-hand side.
    """
    grid = state0.grid
    consts = state0.constants
    W = _state_arrays(state0)
    if cfg.dealias:
        _mask_state(W, grid)
    events = sorted(set(float(ts) for ts in cfg.snapshot_times)
                    | {float(cfg.t_end)})
    snaps: list[tuple[float, StateVector]] = []
    series: list[tuple[float, float, float]] = []
    t = 0.0
    steps = 0
    doubling_time: float | None = None
    reason = "completed"
    guard_event: GuardViolation | None = None

    def record(tc: float, Wc: np.ndarray) -> float:
        vals = _state_norms(Wc, grid, cfg.monitor_indices)
        for idx, val in zip(cfg.monitor_indices, vals):
            series.append((tc, idx, val))
        return vals[cfg.monitor_indices.index(cfg.doubling_at)] \
            if cfg.doubling_at in cfg.monitor_indices \
            else _state_norms(Wc, grid, (cfg.doubling_at,))[0]

    def snapshot(tc: float, Wc: np.ndarray) -> None:
        if any(abs(tc - ts) < 1e-9 for ts in cfg.snapshot_times):
            snaps.append((tc, _wrap_state(Wc, grid, consts,
                                          f"@t={tc:.4g}")))

    base_norm = record(0.0, W)
    snapshot(0.0, W)
    if observer is not None:
        view = W.view()
        view.flags.writeable = False
        observer(0.0, view, grid, consts)

    while t < cfg.t_end - 1e-12:
        dt = cfg.dt if cfg.dt is not None else _cfl_arrays(
            W, grid, consts, cfg.cfl)
        nxt = next(ev for ev in events if ev > t + 1e-12)
        dt = min(dt, nxt - t)
        try:
            W = _rk4_arrays(W, dt, grid, consts, cfg.dealias,
                            cfg.guard_margin, forcing, t)
        except GuardViolation as err:
            err.time = t + dt
            guard_event = err
            reason = "guard"
            break
        t = t + dt
        if abs(t - nxt) < 1e-9:
            t = nxt
        steps += 1
        norm_dbl = record(t, W)
        if doubling_time is None and norm_dbl > 2.0 * base_norm:
            doubling_time = t
        snapshot(t, W)
        if observer is not None:
            view = W.view()
            view.flags.writeable = False
            observer(t, view, grid, consts)
        if _grad_max(W, grid) > cfg.grad_cap:
            reason = "blowup"
            break

    return Trajectory(snapshots=tuple(snaps), norm_series=tuple(series),
                      doubling_time=doubling_time, terminated_reason=reason,
                      t_final=t, steps=steps, guard_event=guard_event)


# ----------------------------------------------------------------------
# persistence

_MAGIC = b"GLAB"
_VERSION = 1
_HEADER = struct.Struct("<4sIII6d")   # magic, version, nx, ny, then floats


def save_snapshot(path, time: float, state: StateVector) -> None:
    g = state.grid
    c = state.constants
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, g.nx, g.ny,
                              g.lx, g.ly, time, c.rho0, c.h0, c.gamma))
        for f in state.fields:
            fh.write(np.ascontiguousarray(f.physical, dtype="<f8").tobytes())


def load_snapshot(path) -> tuple[float, StateVector]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError("truncated snapshot header")
        magic, version, nx, ny, lx, ly, time, rho0, h0, gamma = \
            _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != _VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        grid = Grid2D(nx=nx, ny=ny, lx=lx, ly=ly)
        consts = GasConstants(rho0=rho0, h0=h0, gamma=gamma)
        count = nx * ny
        comps = []
        for _ in range(4):
            raw = fh.read(8 * count)
            if len(raw) != 8 * count:
                raise ValueError("truncated snapshot body")
            comps.append(np.frombuffer(raw, dtype="<f8").reshape(nx, ny))
    fields = [SpectralField(grid, physical=a.astype(float)) for a in comps]
    return time, StateVector(*fields, constants=consts)


def write_norm_series(path, series) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "index", "value"))
        for t, idx, val in series:
            w.writerow([f"{t!r}", f"{idx!r}", f"{val!r}"])


def read_norm_series(path) -> list[tuple[float, float, float]]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        if header != ("t", "index", "value"):
            raise ValueError(f"unexpected header {header}")
        for row in rd:
            out.append((float(row[0]), float(row[1]), float(row[2])))
    return out
