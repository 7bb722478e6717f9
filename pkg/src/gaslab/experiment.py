"""Orchestration of the four-step nonuniformity program.

For a scan of frequencies n the laboratory measures

1. boundedness: the exact initial data stay uniformly bounded in H^s,
2. initial-data convergence: the two family members (w = +1 and w = -1)
   start n^{delta-1}-close in H^s,
3. uniform approximation: the evolved solution stays within the
   approximate solution's residual budget in H^sigma, and an
   interpolation route converts that into decay in H^s,
4. nonuniform divergence: the evolved pair separates in H^s like
   2|sin t| times the packet normalizer.

Steps 1 and 2 need only sampled initial data on measurement grids; steps
3 and 4 need evolved pairs.  Both trajectories of a pair share one fixed
time step (frozen from the initial wave-speed bound) so snapshot and
observation times align exactly.

The asymptotic statements are read as fitted exponents over the n-scan
with stated tolerances; each verdict is recomputable from the numbers
stored in the report alone.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields as dc_fields, replace

import numpy as np

from .ansatz import (AnsatzParams, GasConstants, StateVector,
                     approximate_state, grid_for, initial_difference)
from .cutoffs import CutoffFamily, default_family
from .sobolev import ScalingFit, fit_scaling, hs_norm, hs_norm_state
from .solver import SolverConfig, Trajectory, cfl_timestep, integrate
from .spectral import Grid2D, SpectralField

__all__ = [
    "ErrorState",
    "ExperimentReport",
    "GronwallDiagnostic",
    "PairResult",
    "PairSummary",
    "SeparationCheck",
    "UniformApproxCheck",
    "Verdict",
    "check_boundedness",
    "check_initial_convergence",
    "check_separation",
    "check_uniform_approximation",
    "emit_report",
    "error_state",
    "gronwall_diagnostic",
    "parse_report",
    "recompute_verdicts",
    "run_pair",
    "run_scan",
    "separation_normalizer",
]

DEFAULT_TIMES = (0.25, 0.5, 1.0)
DEFAULT_TAU = 3.0


# ----------------------------------------------------------------------
# error states


@dataclass(frozen=True)
class ErrorState:
    """Deviation of an evolved state from the approximate solution at one
    time, with norms at the configured indices."""

    e_rho: SpectralField
    e_u: SpectralField
    e_v: SpectralField
    e_h: SpectralField
    norms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        grids = {f.grid.ident for f in self.fields}
        if len(grids) != 1:
            raise ValueError(f"error components on different grids: {grids}")

    @property
    def fields(self) -> tuple[SpectralField, ...]:
        return (self.e_rho, self.e_u, self.e_v, self.e_h)

    def norm(self, index: float) -> float:
        for idx, val in self.norms:
            if abs(idx - index) < 1e-12:
                return val
        raise KeyError(f"index {index} not recorded")


def error_state(state: StateVector, p: AnsatzParams, t: float,
                indices: tuple[float, ...],
                family: CutoffFamily | None = None) -> ErrorState:
    """Error of `state` against the approximate solution at time t."""
    ref = approximate_state(p, t, state.grid, state.constants, family)
    comps = []
    for got, want, tag in zip(state.fields, ref.fields, "EFGH"):
        comps.append(SpectralField(state.grid,
                                   physical=got.physical - want.physical,
                                   tag=f"{tag}[n={p.n},t={t:.4g}]"))
    norms = []
    for idx in indices:
        total = math.sqrt(sum(hs_norm(f, idx).value ** 2 for f in comps))
        norms.append((float(idx), total))
    return ErrorState(*comps, norms=tuple(norms))


# ----------------------------------------------------------------------
# paired evolution


@dataclass(frozen=True)
class PairSummary:
    """Numbers extracted from one evolved (w = +1, w = -1) pair."""

    n: int
    dt: float
    completed: bool
    reason_plus: str
    reason_minus: str
    t_final: float
    init_norm_sigma: float
    init_norm_s: float
    init_norm_tau: float
    init_diff_norm_s: float
    max_err_sigma: float
    max_err_s: float
    max_err_tau: float
    normalizer: float
    separation: tuple[tuple[float, float], ...]
    ratios: tuple[tuple[float, float], ...]
    gronwall_a: float
    gronwall_b: float
    doubling_plus: float | None
    doubling_minus: float | None


@dataclass(frozen=True)
class PairResult:
    """Full result of one pair run: trajectories, dense error series, and
    the extracted summary."""

    params: AnsatzParams
    trajectory_plus: Trajectory
    trajectory_minus: Trajectory
    error_series_plus: tuple[tuple[float, float, float, float], ...]
    error_series_minus: tuple[tuple[float, float, float, float], ...]
    summary: PairSummary

    def error_state(self, omega: int, t: float,
                    indices: tuple[float, ...] = (1.45, 2.5),
                    family: CutoffFamily | None = None) -> ErrorState:
        traj = self.trajectory_plus if omega == 1 else self.trajectory_minus
        for ts, state in traj.snapshots:
            if abs(ts - t) < 1e-9:
                p = replace(self.params, omega=omega)
                return error_state(state, p, t, indices, family)
        raise KeyError(f"no snapshot at t = {t}")


def separation_normalizer(p: AnsatzParams, grid: Grid2D,
                          family: CutoffFamily | None = None) -> float:
    """H^s size of the bare packet n^{-delta-s} psi psi cos(ny) on the
    given grid; the separation ratio is measured against it."""
    fam = family or default_family()
    amp = float(p.n) ** (-p.delta - p.s)
    px = fam.psi.value(p.scale * grid.x)
    py = fam.psi.value(p.scale * grid.y) * np.cos(p.n * grid.y)
    f = SpectralField(grid, physical=amp * np.multiply.outer(px, py))
    return hs_norm(f, p.s).value


class _ErrorObserver:
    """Per-step error norms against the drifting approximate solution.

    Caches the static 1D cutoff lines; only the trig factors are rebuilt
    each observation.
    """

    def __init__(self, p: AnsatzParams, grid: Grid2D, family: CutoffFamily,
                 indices: tuple[float, ...]):
        self.p = p
        self.grid = grid
        self.indices = indices
        n = float(p.n)
        lam = p.scale
        self.a = n ** (-2.0 * p.delta - p.s - 1.0)
        self.b = n ** (-p.delta - p.s)
        self.c = p.omega / n
        self.P = family.psi.value(lam * grid.x)
        self.dP = family.psi.value(lam * grid.x, 1)
        self.Q = family.psi.value(lam * grid.y)
        self.dQ = family.psi.value(lam * grid.y, 1)
        self.F1 = family.phi1.value(lam * grid.x)
        self.dF1 = family.phi1.value(lam * grid.x, 1)
        self.F2 = family.phi2.value(lam * grid.y)
        self.dF2 = family.phi2.value(lam * grid.y, 1)
        self.series: list[tuple[float, ...]] = []

    def reference_velocity(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        S = np.sin(self.p.n * self.grid.y + self.p.omega * t)
        C = np.cos(self.p.n * self.grid.y + self.p.omega * t)
        o = np.multiply.outer
        u = self.a * o(self.P, self.dQ * S) + self.b * o(self.P, self.Q * C) \
            + self.c * o(self.F1, self.dF2)
        v = -self.a * o(self.dP, self.Q * S) - self.c * o(self.dF1, self.F2)
        return u, v

    def __call__(self, t: float, W: np.ndarray, grid: Grid2D,
                 consts: GasConstants) -> None:
        u_ref, v_ref = self.reference_velocity(t)
        comps = (W[0], W[1] - u_ref, W[2] - v_ref, W[3])
        acc = [0.0] * len(self.indices)
        for arr in comps:
            f = SpectralField(grid, physical=arr)
            for j, idx in enumerate(self.indices):
                acc[j] += hs_norm(f, idx).value ** 2
            del f
        self.series.append((t, *(math.sqrt(v) for v in acc)))


def run_pair(n: int, template: AnsatzParams,
             solver_cfg: SolverConfig | None = None,
             times: tuple[float, ...] = DEFAULT_TIMES,
             tau: float = DEFAULT_TAU,
             points_per_unit: int = 12,
             constants: GasConstants | None = None,
             family: CutoffFamily | None = None) -> PairResult:
    """Evolve both family members from exact initial data and measure the
    error and separation series.

    Both runs share one fixed dt, frozen from the initial wave-speed
    bound of whichever member is faster, so observation times agree
    exactly.  Early termination of either run yields a partial summary
    flagged completed=False.
    """
    fam = family or default_family()
    consts = constants or GasConstants()
    p_plus = replace(template, n=n, omega=1)
    p_minus = replace(template, n=n, omega=-1)
    grid = grid_for(n, template.delta, points_per_unit)
    sigma, s = template.sigma, template.s
    if not s < tau <= math.floor(s) + 1:
        raise ValueError(f"tau must satisfy s < tau <= floor(s)+1, "
                         f"got tau={tau} for s={s}")

    states = {1: approximate_state(p_plus, 0.0, grid, consts, fam),
              -1: approximate_state(p_minus, 0.0, grid, consts, fam)}
    base_cfg = solver_cfg or SolverConfig(t_end=max(times) if times else 1.0)
    cfl = base_cfg.cfl if base_cfg.cfl is not None else 0.75
    dt = base_cfg.dt if base_cfg.dt is not None else min(
        cfl_timestep(states[1], cfl), cfl_timestep(states[-1], cfl))
    cfg = replace(base_cfg, dt=dt, cfl=None,
                  snapshot_times=tuple(sorted(set(times))),
                  monitor_indices=(sigma, s))

    observers = {}
    trajectories = {}
    for omega, p in ((1, p_plus), (-1, p_minus)):
        obs = _ErrorObserver(p, grid, fam, (sigma, s, tau))
        observers[omega] = obs
        trajectories[omega] = integrate(states[omega], cfg, observer=obs)

    du, dv = initial_difference(p_plus, grid, fam)
    init_diff = math.hypot(hs_norm(du, s).value, hs_norm(dv, s).value)
    init_norms = {idx: hs_norm_state(states[1], idx).value
                  for idx in (sigma, s, tau)}

    tp, tm = trajectories[1], trajectories[-1]
    completed = (tp.terminated_reason == "completed"
                 and tm.terminated_reason == "completed")
    sep = [(0.0, init_diff)]
    snap_p = dict(tp.snapshots)
    snap_m = dict(tm.snapshots)
    for t in sorted(set(times)):
        sp = _lookup(snap_p, t)
        sm = _lookup(snap_m, t)
        if sp is None or sm is None:
            continue
        val = math.sqrt(sum(
            hs_norm(SpectralField(grid, physical=a.physical - b.physical),
                    s).value ** 2
            for a, b in zip(sp.fields, sm.fields)))
        sep.append((t, val))
    norm_ref = separation_normalizer(p_plus, grid, fam)
    ratios = tuple((t, v / norm_ref) for t, v in sep)

    series_p = tuple(observers[1].series)
    series_m = tuple(observers[-1].series)
    err_max = [0.0, 0.0, 0.0]
    for row in list(series_p) + list(series_m):
        for j in range(3):
            err_max[j] = max(err_max[j], row[1 + j])
    try:
        gron = gronwall_diagnostic(series_p)
        ga, gb = gron.a, gron.b
    except ValueError:
        ga = gb = float("nan")

    summary = PairSummary(
        n=n, dt=dt, completed=completed,
        reason_plus=tp.terminated_reason, reason_minus=tm.terminated_reason,
        t_final=min(tp.t_final, tm.t_final),
        init_norm_sigma=init_norms[sigma], init_norm_s=init_norms[s],
        init_norm_tau=init_norms[tau], init_diff_norm_s=init_diff,
        max_err_sigma=err_max[0], max_err_s=err_max[1],
        max_err_tau=err_max[2], normalizer=norm_ref,
        separation=tuple(sep), ratios=ratios,
        gronwall_a=ga, gronwall_b=gb,
        doubling_plus=tp.doubling_time, doubling_minus=tm.doubling_time)
    return PairResult(params=p_plus, trajectory_plus=tp,
                      trajectory_minus=tm,
                      error_series_plus=series_p, error_series_minus=series_m,
                      summary=summary)


def _lookup(snaps: dict, t: float):
    for ts, state in snaps.items():
        if abs(ts - t) < 1e-9:
            return state
    return None


def run_scan(n_list, template: AnsatzParams,
             solver_cfg: SolverConfig | None = None,
             times: tuple[float, ...] = DEFAULT_TIMES,
             tau: float = DEFAULT_TAU,
             points_per_unit: int = 12,
             constants: GasConstants | None = None,
             family: CutoffFamily | None = None,
             keep_series: bool = True,
             ) -> tuple[list[PairSummary], dict[int, dict]]:
    """Pair runs across the n-scan; trajectories are released as soon as
    their numbers are extracted.  Returns summaries and, when keep_series
    is set, the dense per-step error series keyed by n for CSV emission."""
    summaries: list[PairSummary] = []
    series: dict[int, dict] = {}
    for n in sorted(set(int(n) for n in n_list)):
        pair = run_pair(n, template, solver_cfg, times, tau,
                        points_per_unit, constants, family)
        summaries.append(pair.summary)
        if keep_series:
            series[n] = {"plus": pair.error_series_plus,
                         "minus": pair.error_series_minus,
                         "norms_plus": pair.trajectory_plus.norm_series,
                         "norms_minus": pair.trajectory_minus.norm_series}
        del pair
    return summaries, series


# ----------------------------------------------------------------------
# static checks (no evolution)


def check_boundedness(n_list, template: AnsatzParams,
                      points_per_unit: int = 48,
                      family: CutoffFamily | None = None,
                      n_min: int = 32) -> tuple[ScalingFit, list]:
    """Fit of the exact initial-data H^s size against n, restricted to
    n >= n_min where the preasymptotic transient has settled.  Falls back
    to the full list when the restriction leaves fewer than two points."""
    fam = family or default_family()
    points = []
    for n in sorted(set(int(n) for n in n_list)):
        p = replace(template, n=n, omega=1)
        grid = grid_for(n, template.delta, points_per_unit)
        state = approximate_state(p, 0.0, grid, family=fam)
        points.append((n, hs_norm_state(state, template.s).value))
        del state
    tail = [(n, v) for n, v in points if n >= n_min]
    if len(tail) < 2:
        tail = points
    return fit_scaling(tail), points


def check_initial_convergence(n_list, template: AnsatzParams,
                              points_per_unit: int = 48,
                              family: CutoffFamily | None = None,
                              ) -> tuple[ScalingFit, list]:
    """Fit of the t = 0 pair difference in H^s against n."""
    fam = family or default_family()
    points = []
    for n in sorted(set(int(n) for n in n_list)):
        p = replace(template, n=n, omega=1)
        grid = grid_for(n, template.delta, points_per_unit)
        du, dv = initial_difference(p, grid, fam)
        points.append((n, math.hypot(hs_norm(du, template.s).value,
                                     hs_norm(dv, template.s).value)))
    return fit_scaling(points), points


# ----------------------------------------------------------------------
# evolved checks


@dataclass(frozen=True)
class UniformApproxCheck:
    """Error-decay fits: the direct H^sigma route and the interpolated
    H^s route with its implied epsilon."""

    fit: ScalingFit
    slope_bound: float
    passed: bool
    interp_fit: ScalingFit
    direct_s_fit: ScalingFit
    eps_measured: float
    eps_predicted: float
    eps_positive: bool
    tau: float


def predicted_epsilon(template: AnsatzParams, tau: float = DEFAULT_TAU,
                      ) -> float:
    s, sigma, delta = template.s, template.sigma, template.delta
    return -(tau - s) * (delta - 3.0 + 2.0 * s - 2.0 * sigma) / (tau - sigma)


def check_uniform_approximation(pairs: list[PairSummary],
                                template: AnsatzParams,
                                tau: float = DEFAULT_TAU,
                                slack: float = 0.15) -> UniformApproxCheck:
    done = [p for p in pairs if p.completed]
    if len(done) < 3:
        raise ValueError(
            f"insufficient completed runs: {len(done)} of {len(pairs)}")
    s, sigma, delta = template.s, template.sigma, template.delta
    fit = fit_scaling([(p.n, p.max_err_sigma) for p in done])
    bound = delta - 3.0 + s - sigma + slack
    alpha = (tau - s) / (tau - sigma)
    beta = (s - sigma) / (tau - sigma)
    interp_fit = fit_scaling(
        [(p.n, p.max_err_sigma ** alpha * p.max_err_tau ** beta)
         for p in done])
    direct = fit_scaling([(p.n, p.max_err_s) for p in done])
    eps_measured = -interp_fit.slope
    return UniformApproxCheck(
        fit=fit, slope_bound=bound, passed=fit.slope <= bound,
        interp_fit=interp_fit, direct_s_fit=direct,
        eps_measured=eps_measured,
        eps_predicted=predicted_epsilon(template, tau),
        eps_positive=eps_measured > 0.0, tau=tau)


@dataclass(frozen=True)
class SeparationCheck:
    """Separation ratios against the 2|sin t| profile."""

    n_max: int
    c_hat: float
    reference_ratio: float
    scale_gap: float
    scale_ok: bool
    profile_margins: tuple[tuple[float, float], ...]
    profile_ok: bool
    gaps_by_n: tuple[tuple[int, float], ...]
    monotone_ok: bool


def check_separation(pairs: list[PairSummary],
                     times: tuple[float, ...] = DEFAULT_TIMES,
                     t_ref: float = 1.0,
                     scale_tol: float = 0.15) -> SeparationCheck:
    done = [p for p in pairs if p.completed]
    if not done:
        raise ValueError("no completed pairs")
    done.sort(key=lambda p: p.n)
    target = 2.0 * abs(math.sin(t_ref))
    gaps = []
    for p in done:
        r = _ratio_at(p, t_ref)
        gaps.append((p.n, abs(r - target)))
    monotone_ok = all(b[1] <= a[1] + 1e-12 for a, b in zip(gaps, gaps[1:]))
    top = done[-1]
    ref_ratio = _ratio_at(top, t_ref)
    scale_gap = abs(ref_ratio - target) / target
    c_hat = _sep_at(top, t_ref) / abs(math.sin(t_ref))
    margins = []
    for t in sorted(set(times)):
        margins.append((t, _sep_at(top, t)
                        / (0.5 * c_hat * abs(math.sin(t)))))
    return SeparationCheck(
        n_max=top.n, c_hat=c_hat, reference_ratio=ref_ratio,
        scale_gap=scale_gap, scale_ok=scale_gap <= scale_tol,
        profile_margins=tuple(margins),
        profile_ok=all(m >= 1.0 for _, m in margins),
        gaps_by_n=tuple(gaps), monotone_ok=monotone_ok)


def _ratio_at(p: PairSummary, t: float) -> float:
    for ts, r in p.ratios:
        if abs(ts - t) < 1e-9:
            return r
    raise KeyError(f"no separation ratio at t = {t} for n = {p.n}")


def _sep_at(p: PairSummary, t: float) -> float:
    for ts, v in p.separation:
        if abs(ts - t) < 1e-9:
            return v
    raise KeyError(f"no separation value at t = {t} for n = {p.n}")


@dataclass(frozen=True)
class GronwallDiagnostic:
    """Linear growth model d/dt |E| <= a |E| + b read off a dense error
    series by finite differences and least squares."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    derivatives: tuple[float, ...]
    a: float
    b: float
    r2: float


def gronwall_diagnostic(series) -> GronwallDiagnostic:
    """series: rows (t, sigma_norm, ...) from a pair run's error observer;
    only the first norm column is used."""
    rows = [(float(r[0]), float(r[1])) for r in series]
    if len(rows) < 10:
        raise ValueError(f"needs >= 10 observations, got {len(rows)}")
    t = np.array([r[0] for r in rows])
    v = np.array([r[1] for r in rows])
    dv = np.gradient(v, t)
    A = np.stack([v, np.ones_like(v)], axis=1)
    (a, b), res, _, _ = np.linalg.lstsq(A, dv, rcond=None)
    ss_tot = float(np.sum((dv - dv.mean()) ** 2))
    ss_res = float(res[0]) if res.size else float(np.sum((dv - A @ [a, b]) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return GronwallDiagnostic(times=tuple(t), values=tuple(v),
                              derivatives=tuple(dv),
                              a=float(a), b=float(b), r2=max(0.0, min(1.0, r2)))


# ----------------------------------------------------------------------
# report


@dataclass(frozen=True)
class Verdict:
    name: str
    measured: float
    lo: float
    hi: float
    passed: bool

    def recompute(self) -> bool:
        return self.lo <= self.measured <= self.hi


@dataclass(frozen=True)
class ExperimentReport:
    config: tuple[tuple[str, str], ...]
    pairs: tuple[PairSummary, ...]
    fits: tuple[tuple[str, ScalingFit], ...]
    verdicts: tuple[Verdict, ...]
    meta: tuple[tuple[str, str], ...]

    def fit(self, name: str) -> ScalingFit:
        for key, f in self.fits:
            if key == name:
                return f
        raise KeyError(name)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


def recompute_verdicts(report: ExperimentReport) -> dict[str, bool]:
    return {v.name: v.recompute() for v in report.verdicts}


def config_hash(config: tuple[tuple[str, str], ...]) -> str:
    text = "\n".join(f"{k} = {v}" for k, v in sorted(config))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_INF = float("inf")


def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _parse_opt(tok: str) -> float | None:
    return None if tok == "none" else float(tok)


def emit_report(report: ExperimentReport, path) -> None:
    if not report.pairs:
        raise ValueError("refusing to emit a report with no pair records")
    lines = ["# nonuniform-dependence laboratory report", "format = 1", ""]
    lines.append("[meta]")
    for k, v in report.meta:
        lines.append(f"{k} = {v}")
    lines.append("")
    lines.append("[config]")
    for k, v in report.config:
        lines.append(f"{k} = {v}")
    lines.append("")
    for p in report.pairs:
        lines.append(f"[pair n={p.n}]")
        for f in dc_fields(PairSummary):
            val = getattr(p, f.name)
            if f.name in ("separation", "ratios"):
                lines.append(f"{f.name} = " + ";".join(
                    f"{_fmt(t)}:{_fmt(v)}" for t, v in val))
            else:
                lines.append(f"{f.name} = {_fmt(val)}")
        lines.append("")
    lines.append("[fits]")
    for name, f in report.fits:
        lines.append(f"{name} = {f.slope!r},{f.intercept!r},{f.stderr!r},"
                     f"{f.npoints},{f.r2!r}")
    lines.append("")
    lines.append("[verdicts]")
    for v in report.verdicts:
        word = "pass" if v.passed else "FAIL"
        lines.append(f"{v.name} = {word},{v.measured!r},{_fmt(v.lo)},"
                     f"{_fmt(v.hi)}")
    lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))


def parse_report(path) -> ExperimentReport:
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    section = None
    meta: list[tuple[str, str]] = []
    config: list[tuple[str, str]] = []
    pairs: list[PairSummary] = []
    fits: list[tuple[str, ScalingFit]] = []
    verdicts: list[Verdict] = []
    pair_acc: dict[str, str] | None = None

    def flush_pair() -> None:
        nonlocal pair_acc
        if pair_acc is None:
            return
        kw = {}
        for f in dc_fields(PairSummary):
            tok = pair_acc[f.name]
            if f.name in ("separation", "ratios"):
                kw[f.name] = tuple(
                    (float(a), float(b))
                    for a, b in (item.split(":") for item in tok.split(";")
                                 if item))
            elif f.name == "n":
                kw[f.name] = int(tok)
            elif f.name == "completed":
                kw[f.name] = tok == "True"
            elif f.name in ("reason_plus", "reason_minus"):
                kw[f.name] = tok
            elif f.name in ("doubling_plus", "doubling_minus"):
                kw[f.name] = _parse_opt(tok)
            else:
                kw[f.name] = float(tok)
        pairs.append(PairSummary(**kw))
        pair_acc = None

    for line in raw:
        line = line.strip()
        if not line or line.startswith("#") or line == "format = 1":
            continue
        if line.startswith("["):
            flush_pair()
            section = line.strip("[]")
            if section.startswith("pair "):
                pair_acc = {}
            continue
        key, _, val = line.partition(" = ")
        if section == "meta":
            meta.append((key, val))
        elif section == "config":
            config.append((key, val))
        elif section is not None and section.startswith("pair "):
            pair_acc[key] = val
        elif section == "fits":
            toks = val.split(",")
            fits.append((key, ScalingFit(
                slope=float(toks[0]), intercept=float(toks[1]),
                stderr=float(toks[2]), npoints=int(toks[3]),
                r2=float(toks[4]))))
        elif section == "verdicts":
            toks = val.split(",")
            verdicts.append(Verdict(
                name=key, passed=toks[0] == "pass",
                measured=float(toks[1]),
                lo=float(toks[2]) if toks[2] != "none" else -_INF,
                hi=float(toks[3]) if toks[3] != "none" else _INF))
    flush_pair()
    return ExperimentReport(config=tuple(config), pairs=tuple(pairs),
                            fits=tuple(fits), verdicts=tuple(verdicts),
                            meta=tuple(meta))
