"""Command-line front end.

Commands
  norms     packet-norm scaling and inequality spot checks
  ansatz    initial data: divergence, boundedness, pair-convergence fits
  residual  residual term scan: per-term norms, slopes, joint fit
  evolve    one evolved pair at a single n, with series and snapshots
  demo      the full four-step program across the n scan, with report
  fit       recompute scaling fits from a previously written term CSV

Settings resolve in three layers: built-in defaults, then an optional
``key = value`` config file (# comments allowed, unknown keys rejected
with the offending line echoed), then command-line flags.  Later layers
win.  Each run writes into ``<out>/<command>/<timestamp>/`` and updates
the ``latest`` pointer next to the timestamp directories.  The exit code
is 0 exactly when every verdict of the run passed, 2 on configuration or
usage errors.

All delimited outputs are deterministic for a fixed configuration and
seed; figures accompany them but are not the record.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import (AnsatzParams, GasConstants, grid_for,
                     velocity_divergence)
from .cutoffs import default_family
from .experiment import (DEFAULT_TAU, Verdict, check_boundedness,
                         check_initial_convergence, check_separation,
                         check_uniform_approximation, config_hash,
                         emit_report, parse_report, predicted_epsilon,
                         recompute_verdicts, run_pair, run_scan,
                         ExperimentReport)
from .residual import (TERM_LABELS_U, TERM_LABELS_V, crucial_cancellation,
                       packet_scale, read_term_csv, residual_norm_scan,
                       term_records, term_slopes, write_term_csv)
from .sobolev import (FitRecord, fit_scaling, hs_norm,
                      interpolation_check, kato_ponce_check,
                      packet_inequality_check, packet_norm_check,
                      random_band_limited, reciprocal_check, write_fit_csv)
from .solver import SolverConfig, save_snapshot, write_norm_series
from .spectral import SpectralField, make_grid, set_fft_workers

__all__ = ["ConfigError", "RunConfig", "build_config", "main",
           "parse_config_file"]


class ConfigError(ValueError):
    pass


# key -> (type, default, help); defaults are strings and run through the
# same coercion as file and flag values.
_SCHEMA = {
    "s": ("float", "2.5", "regularity index of the data"),
    "delta": ("float", "0.25", "envelope dilation exponent"),
    "sigma": ("float", "1.45", "measurement index, inside the window"),
    "tau": ("float", "3.0", "interpolation endpoint, s < tau <= floor(s)+1"),
    "n": ("int", "16", "single frequency for evolve"),
    "n_list": ("int_list", "16,32,64,128", "frequency scan"),
    "t_end": ("float", "1.0", "evolution horizon"),
    "dt": ("opt_float", "auto", "time step; auto derives it from cfl"),
    "cfl": ("float", "0.75", "CFL number when dt is auto"),
    "times": ("float_list", "0.25,0.5,1.0", "separation snapshot times"),
    "points_per_unit": ("int", "48", "x resolution of measurement grids"),
    "evolve_points_per_unit": ("int", "12", "x resolution of evolution grids"),
    "rho0": ("float", "1.0", "background density"),
    "h0": ("float", "1.0", "background enthalpy"),
    "gamma": ("float", "1.4", "adiabatic exponent"),
    "grad_cap": ("float", "100.0", "max velocity gradient before abort"),
    "seed": ("int", "0", "seed for the random-field spot checks"),
    "threads": ("int", "1", "FFT worker threads"),
    "out": ("str", "runs", "output root directory"),
    "input": ("opt_str", "none", "source CSV for the fit command"),
}


@dataclass(frozen=True)
class RunConfig:
    s: float
    delta: float
    sigma: float
    tau: float
    n: int
    n_list: tuple[int, ...]
    t_end: float
    dt: float | None
    cfl: float
    times: tuple[float, ...]
    points_per_unit: int
    evolve_points_per_unit: int
    rho0: float
    h0: float
    gamma: float
    grad_cap: float
    seed: int
    threads: int
    out: str
    input: str | None

    @property
    def template(self) -> AnsatzParams:
        return AnsatzParams(n=self.n_list[0] if self.n_list else self.n,
                            delta=self.delta, omega=1, s=self.s,
                            sigma=self.sigma)

    @property
    def constants(self) -> GasConstants:
        return GasConstants(rho0=self.rho0, h0=self.h0, gamma=self.gamma)

    @property
    def snapshot_times(self) -> tuple[float, ...]:
        return tuple(t for t in sorted(set(self.times)) if t <= self.t_end)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(t_end=self.t_end, dt=self.dt,
                            cfl=None if self.dt is not None else self.cfl,
                            grad_cap=self.grad_cap)

    def echo(self) -> tuple[tuple[str, str], ...]:
        out = []
        for key in _SCHEMA:
            val = getattr(self, key)
            if isinstance(val, tuple):
                text = ",".join(str(v) for v in val)
            elif val is None:
                text = "none"
            else:
                text = str(val)
            out.append((key, text))
        return tuple(out)


def _coerce(key: str, kind: str, raw: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "opt_float":
            return None if raw.lower() in ("none", "auto") else float(raw)
        if kind == "opt_str":
            return None if raw.lower() == "none" else raw
        if kind == "int_list":
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if kind == "float_list":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_file(path) -> dict[str, str]:
    """Read a key = value file; comments start with #.  Unknown keys are
    an error, echoed with their line number."""
    settings: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(
                    f"{path}:{lineno}: expected key = value, got: "
                    f"{raw.rstrip()}")
            key, val = (part.strip() for part in stripped.split("=", 1))
            if key not in _SCHEMA:
                raise ConfigError(
                    f"{path}:{lineno}: unknown key {key!r} in line: "
                    f"{raw.rstrip()}")
            settings[key] = val
        return settings


def build_config(file_settings: dict[str, str] | None = None,
                 flag_settings: dict[str, str] | None = None) -> RunConfig:
    merged = {key: default for key, (_, default, _) in _SCHEMA.items()}
    merged.update(file_settings or {})
    merged.update({k: v for k, v in (flag_settings or {}).items()
                   if v is not None})
    values = {key: _coerce(key, _SCHEMA[key][0], merged[key])
              for key in _SCHEMA}
    cfg = RunConfig(**values)
    if not cfg.n_list:
        raise ConfigError("n_list is empty")
    if cfg.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {cfg.threads}")
    if cfg.points_per_unit < 4 or cfg.evolve_points_per_unit < 4:
        raise ConfigError("points_per_unit must be >= 4")
    cfg.template  # validates s, delta, sigma, n
    cfg.constants  # validates rho0, h0, gamma
    return cfg


# ----------------------------------------------------------------------
# output layout


def make_outdir(base: str, command: str) -> Path:
    root = Path(base) / command
    root.mkdir(parents=True, exist_ok=True)
    stamp = time.strftime("%Y%m%d-%H%M%S", time.gmtime())
    cand, k = root / stamp, 1
    while cand.exists():
        cand = root / f"{stamp}-{k}"
        k += 1
    cand.mkdir()
    (root / "latest").write_text(cand.name + "\n", encoding="utf-8")
    return cand


def _write_verdicts(path: Path, verdicts: list[Verdict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "passed", "measured", "lo", "hi"])
        for v in verdicts:
            writer.writerow([v.name, str(v.passed).lower(), repr(v.measured),
                             repr(v.lo), repr(v.hi)])


def _write_points(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else str(v)
                             for v in row])


def _window(name: str, measured: float, lo: float, hi: float) -> Verdict:
    return Verdict(name=name, measured=float(measured), lo=lo, hi=hi,
                   passed=lo <= measured <= hi)


_INF = float("inf")


# ----------------------------------------------------------------------
# commands


def cmd_norms(cfg: RunConfig, outdir: Path) -> list[Verdict]:
    fit = packet_norm_check(cfg.sigma, cfg.delta, cfg.n_list)
    ineq = packet_inequality_check(cfg.sigma, cfg.delta, cfg.n_list)
    target = cfg.sigma + cfg.delta / 2.0

    rng = np.random.default_rng(cfg.seed)
    grid = make_grid(256, 256, 2.0 * math.pi, 2.0 * math.pi)
    f = random_band_limited(grid, 40, rng, tag="f")
    g = random_band_limited(grid, 40, rng, tag="g")
    interp = interpolation_check(f, cfg.sigma, cfg.s, cfg.tau)
    kp = kato_ponce_check(f, g, cfg.s)
    scale = 0.2 / max(1e-30, float(np.max(np.abs(g.physical))))
    g_small = SpectralField(grid, physical=scale * g.physical, tag="gs")
    recip = reciprocal_check(f, g_small, 1.0, cfg.s)

    verdicts = [
        _window("packet_slope", fit.slope, target - 0.05, target + 0.05),
        _window("packet_inequality_margin",
                min(rhs / lhs for _, lhs, rhs in ineq), 1.0, _INF),
        _window("interpolation_product", interp, 0.0, 1.0 + 1e-10),
        _window("kato_ponce_constant", kp, 0.0, 100.0),
        _window("reciprocal_constant", recip, 0.0, 100.0),
    ]
    write_fit_csv(outdir / "fits.csv", [
        FitRecord("packet_norm", f"sigma={cfg.sigma},delta={cfg.delta}",
                  fit.slope, fit.stderr, fit.r2, verdicts[0].passed)])
    _write_points(outdir / "inequality.csv", ["n", "lhs", "rhs"], ineq)
    _write_points(outdir / "checks.csv", ["check", "value"],
                  [("interpolation_product", interp),
                   ("kato_ponce_constant", kp),
                   ("reciprocal_constant", recip)])
    from .plots import scaling_figure
    scaling_figure(_packet_points(cfg), fit, "packet H^sigma norm",
                   outdir / "packet_scaling.png",
                   window=(target - 0.05, target + 0.05))
    return verdicts


def _packet_points(cfg: RunConfig):
    from .sobolev import _packet_grid, hs_norm_1d
    fam = default_family()
    pts = []
    for n in cfg.n_list:
        g = _packet_grid(int(n), cfg.delta)
        vals = fam.psi.value(float(n) ** -cfg.delta * g.x) * np.cos(n * g.x)
        pts.append((n, hs_norm_1d(g, vals, cfg.sigma)))
    return pts


def cmd_ansatz(cfg: RunConfig, outdir: Path) -> list[Verdict]:
    tpl = cfg.template
    fam = default_family()
    div_rows = []
    worst = 0.0
    for n in cfg.n_list:
        p = replace(tpl, n=int(n))
        grid = grid_for(int(n), cfg.delta, 2 * cfg.points_per_unit)
        for t in (0.0, 0.5, 1.0):
            d = velocity_divergence(p, t, grid, fam)
            div_rows.append((int(n), t, d))
            worst = max(worst, d)

    bound_fit, bound_pts = check_boundedness(
        cfg.n_list, tpl, cfg.points_per_unit, fam)
    conv_fit, conv_pts = check_initial_convergence(
        cfg.n_list, tpl, cfg.points_per_unit, fam)

    verdicts = [
        _window("divergence_linf", worst, 0.0, 1e-9),
        _window("initial_norm_slope", bound_fit.slope, -0.05, 0.05),
        _window("pair_difference_slope", conv_fit.slope,
                cfg.delta - 1.0 - 0.05, cfg.delta - 1.0 + 0.05),
    ]
    _write_points(outdir / "divergence.csv", ["n", "t", "div_linf"], div_rows)
    _write_points(outdir / "initial_norms.csv", ["n", "h_s_norm"], bound_pts)
    _write_points(outdir / "pair_difference.csv", ["n", "h_s_norm"], conv_pts)
    write_fit_csv(outdir / "fits.csv", [
        FitRecord("initial_norm", f"s={cfg.s}", bound_fit.slope,
                  bound_fit.stderr, bound_fit.r2, verdicts[1].passed),
        FitRecord("pair_difference", f"s={cfg.s}", conv_fit.slope,
                  conv_fit.stderr, conv_fit.r2, verdicts[2].passed)])
    from .plots import scaling_figure
    scaling_figure(bound_pts, bound_fit, "initial H^s norm",
                   outdir / "boundedness.png", window=(-0.05, 0.05))
    scaling_figure(conv_pts, conv_fit, "pair difference H^s norm",
                   outdir / "convergence.png",
                   window=(cfg.delta - 1.05, cfg.delta - 0.95))
    return verdicts


_BOXED = ("u1u2x", "u2u1x", "v2u1y", "u1v2x", "u2v1x", "v2v1y")


def cmd_residual(cfg: RunConfig, outdir: Path) -> list[Verdict]:
    tpl = cfg.template
    fam = default_family()
    joint_fit = residual_norm_scan(cfg.n_list, tpl, cfg.sigma, t=0.5,
                                   family=fam,
                                   points_per_unit=cfg.points_per_unit)
    records = term_records(cfg.n_list, tpl, cfg.sigma, family=fam,
                           points_per_unit=cfg.points_per_unit)
    slopes = term_slopes(records)

    boxed_rel = 0.0
    scale_cache: dict[tuple[int, float], float] = {}
    for r in records:
        if r.term_label not in _BOXED:
            continue
        key = (r.n, r.t)
        if key not in scale_cache:
            p = replace(tpl, n=r.n)
            grid = grid_for(r.n, cfg.delta, cfg.points_per_unit)
            scale_cache[key] = packet_scale(p, r.t, grid, fam)
        boxed_rel = max(boxed_rel, r.linf_norm / scale_cache[key])

    canc_pts = []
    canc_err = 0.0
    for n in cfg.n_list:
        p = replace(tpl, n=int(n))
        grid = grid_for(int(n), cfg.delta, cfg.points_per_unit)
        lhs, rhs, err = crucial_cancellation(p, 0.5, grid, fam)
        canc_err = max(canc_err, err)
        canc_pts.append((int(n), hs_norm(lhs, cfg.sigma).value))
        del lhs, rhs
    canc_fit = fit_scaling(canc_pts)

    d, s, sig = cfg.delta, cfg.s, cfg.sigma
    verdicts = [
        _window("joint_residual_slope", joint_fit.slope, -_INF, d - 2.0 + 0.1),
        _window("boxed_terms_relative", boxed_rel, 0.0, 1e-13),
        _window("cancellation_error", canc_err, 0.0, 1e-10),
        _window("cancellation_slope", canc_fit.slope, -_INF,
                sig - d - s - 1.0 + 0.05),
        _window("self_term_u_slope", slopes["u1u1x"].slope,
                d - 2.0 - 0.1, d - 2.0 + 0.1),
        _window("self_term_v_slope", slopes["v1u1y"].slope,
                d - 2.0 - 0.1, d - 2.0 + 0.1),
        _window("packet_term_u_slope", slopes["u2u2x"].slope, -_INF,
                -2.0 * (s - sig) - d + 0.1),
        _window("packet_term_v_slope", slopes["v2u2y"].slope, -_INF,
                -2.0 * (s - sig) - d + 0.1),
        _window("packet_term_r3_x_slope", slopes["u2v2x"].slope, -_INF,
                -2.0 * (s - sig) - 2.0 * d - 1.0 + 0.1),
        _window("packet_term_r3_y_slope", slopes["v2v2y"].slope, -_INF,
                -2.0 * (s - sig) - 2.0 * d - 1.0 + 0.1),
    ]
    write_term_csv(outdir / "terms.csv", records)
    _write_points(outdir / "slopes.csv",
                  ["label", "slope", "intercept", "stderr", "npoints", "r2"],
                  [(lab, f.slope, f.intercept, f.stderr, f.npoints, f.r2)
                   for lab, f in sorted(slopes.items())])
    _write_points(outdir / "cancellation.csv", ["n", "h_sigma_norm"],
                  canc_pts)
    write_fit_csv(outdir / "fits.csv", [
        FitRecord("joint_residual", f"sigma={sig},t=0.5", joint_fit.slope,
                  joint_fit.stderr, joint_fit.r2, verdicts[0].passed),
        FitRecord("cancellation", f"sigma={sig}", canc_fit.slope,
                  canc_fit.stderr, canc_fit.r2, verdicts[3].passed)])
    from .plots import term_figure, scaling_figure
    by_label: dict[str, list] = {}
    for lab in TERM_LABELS_U + TERM_LABELS_V + ("total_joint",):
        pts = {}
        for r in records:
            if r.term_label == lab:
                pts[r.n] = max(pts.get(r.n, 0.0), r.h_sigma_norm)
        by_label[lab] = sorted(pts.items())
    term_figure(by_label, outdir / "terms.png")
    scaling_figure(canc_pts, canc_fit, "cancellation H^sigma norm",
                   outdir / "cancellation.png",
                   bound=sig - d - s - 1.0 + 0.05)
    return verdicts


def cmd_evolve(cfg: RunConfig, outdir: Path) -> list[Verdict]:
    tpl = cfg.template
    pair = run_pair(cfg.n, tpl, cfg.solver_config(), cfg.snapshot_times,
                    cfg.tau, cfg.evolve_points_per_unit, cfg.constants)
    s = pair.summary

    write_norm_series(outdir / "norm_series_plus.csv",
                      pair.trajectory_plus.norm_series)
    write_norm_series(outdir / "norm_series_minus.csv",
                      pair.trajectory_minus.norm_series)
    header = ["t", "err_sigma", "err_s", "err_tau"]
    _write_points(outdir / "error_series_plus.csv", header,
                  pair.error_series_plus)
    _write_points(outdir / "error_series_minus.csv", header,
                  pair.error_series_minus)
    _write_points(outdir / "separation.csv", ["t", "value", "ratio"],
                  [(t, v, r) for (t, v), (_, r)
                   in zip(s.separation, s.ratios)])
    for omega, traj in ((1, pair.trajectory_plus),
                        (-1, pair.trajectory_minus)):
        sign = "plus" if omega == 1 else "minus"
        for ts, state in traj.snapshots:
            save_snapshot(outdir / f"state_{sign}_t{ts:.4g}.snap", ts, state)

    from .plots import series_figure, separation_figure
    series_figure(pair.error_series_plus, ["H^sigma", "H^s", "H^tau"],
                  "deviation from the family", outdir / "error_series.png",
                  title=f"n = {cfg.n}, w = +1")
    series_figure(_norm_rows(pair.trajectory_plus.norm_series),
                  [f"H^{i:g}" for i in _norm_indices(
                      pair.trajectory_plus.norm_series)],
                  "state norm", outdir / "norm_series.png", logy=False,
                  title=f"n = {cfg.n}, w = +1")
    separation_figure([s], outdir / "separation.png")

    verdicts = [
        _window("pair_completed",
                1.0 if s.completed else 0.0, 1.0, 1.0),
        _window("doubling_events",
                float(sum(d is not None for d in
                          (s.doubling_plus, s.doubling_minus))), 0.0, 0.0),
    ]
    return verdicts


def _gronwall_fit(pairs):
    """Slope of the positive Gronwall offsets, or None when starved.

    Concave error series push the fitted offset slightly negative (the
    forcing is measured net of decay), so at short horizons or large n
    fewer than three positive points can remain; the caller then records
    a failed nan verdict instead of dying."""
    pts = [(p.n, p.gronwall_b) for p in pairs if p.gronwall_b > 0.0]
    return fit_scaling(pts) if len(pts) >= 3 else None


def _norm_indices(series) -> list[float]:
    return sorted({idx for _, idx, _ in series})


def _norm_rows(series):
    indices = _norm_indices(series)
    rows: dict[float, list] = {}
    for t, idx, val in series:
        rows.setdefault(t, [None] * len(indices))[indices.index(idx)] = val
    return [(t, *vals) for t, vals in sorted(rows.items())]


def cmd_demo(cfg: RunConfig, outdir: Path) -> list[Verdict]:
    tpl = cfg.template
    fam = default_family()
    d, s, sig, tau = cfg.delta, cfg.s, cfg.sigma, cfg.tau
    if not cfg.snapshot_times:
        raise ConfigError("no snapshot times at or below t_end")

    bound_fit, bound_pts = check_boundedness(
        cfg.n_list, tpl, cfg.points_per_unit, fam)
    conv_fit, conv_pts = check_initial_convergence(
        cfg.n_list, tpl, cfg.points_per_unit, fam)
    joint_fit = residual_norm_scan(cfg.n_list, tpl, sig, t=0.5, family=fam,
                                   points_per_unit=cfg.points_per_unit)

    summaries, series = run_scan(
        cfg.n_list, tpl, cfg.solver_config(), cfg.snapshot_times, tau,
        cfg.evolve_points_per_unit, cfg.constants, fam)
    done = [p for p in summaries if p.completed]
    skipped = [p.n for p in summaries if not p.completed]

    ua = check_uniform_approximation(summaries, tpl, tau)
    sep = check_separation(summaries, cfg.snapshot_times,
                           t_ref=max(cfg.snapshot_times))
    t_ref = max(cfg.snapshot_times)
    gron_b_fit = _gronwall_fit(done)
    a_max = max(p.gronwall_a for p in done)
    gap_steps = [b[1] - a[1] for a, b in
                 zip(sep.gaps_by_n, sep.gaps_by_n[1:])]

    verdicts = [
        _window("initial_norm_slope", bound_fit.slope, -0.05, 0.05),
        _window("pair_difference_slope", conv_fit.slope,
                d - 1.05, d - 0.95),
        _window("residual_slope", joint_fit.slope, -_INF, d - 2.0 + 0.1),
        _window("uniform_error_slope", ua.fit.slope, -_INF, ua.slope_bound),
        _window("interpolated_eps", ua.eps_measured, 0.0, _INF),
        _window("separation_scale_gap", sep.scale_gap, 0.0, 0.15),
        _window("separation_profile_margin",
                min(m for _, m in sep.profile_margins), 1.0, _INF),
        _window("separation_gap_monotone",
                max(gap_steps) if gap_steps else 0.0, -_INF, 0.0),
        _window("gronwall_b_slope",
                gron_b_fit.slope if gron_b_fit is not None else math.nan,
                -_INF, d - 2.0 + 0.15),
        _window("gronwall_a_max", a_max, -_INF, 2.0),
        _window("pairs_completed", float(len(done)) / len(summaries),
                1.0, 1.0),
    ]

    fits = [
        ("initial_norm", bound_fit),
        ("pair_difference", conv_fit),
        ("joint_residual", joint_fit),
        ("uniform_error_sigma", ua.fit),
        ("interpolated_error_s", ua.interp_fit),
        ("direct_error_s", ua.direct_s_fit),
    ]
    if gron_b_fit is not None:
        fits.append(("gronwall_b", gron_b_fit))
    meta = [
        ("created", time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())),
        ("package_version", __version__),
        ("numpy_version", np.__version__),
        ("scipy_version", _scipy_version()),
        ("eps_predicted", repr(predicted_epsilon(tpl, tau))),
        ("skipped_pairs", ",".join(str(n) for n in skipped) or "none"),
        ("config_hash", config_hash(cfg.echo())),
    ]
    report = ExperimentReport(config=cfg.echo(), pairs=tuple(summaries),
                              fits=tuple(fits), verdicts=tuple(verdicts),
                              meta=tuple(meta))
    emit_report(report, outdir / "report.txt")
    back = parse_report(outdir / "report.txt")
    redo = recompute_verdicts(back)
    if any(redo[v.name] != v.passed for v in verdicts):
        raise RuntimeError("verdicts did not survive the report round trip")

    _write_points(outdir / "initial_norms.csv", ["n", "h_s_norm"], bound_pts)
    _write_points(outdir / "pair_difference.csv", ["n", "h_s_norm"],
                  conv_pts)
    _write_points(
        outdir / "pairs.csv",
        ["n", "dt", "completed", "init_norm_s", "init_diff_norm_s",
         "max_err_sigma", "max_err_s", "max_err_tau", "normalizer",
         "gronwall_a", "gronwall_b"],
        [(p.n, p.dt, p.completed, p.init_norm_s, p.init_diff_norm_s,
          p.max_err_sigma, p.max_err_s, p.max_err_tau, p.normalizer,
          p.gronwall_a, p.gronwall_b) for p in summaries])
    _write_points(
        outdir / "separation.csv", ["n", "t", "value", "ratio"],
        [(p.n, t, v, r) for p in summaries
         for (t, v), (_, r) in zip(p.separation, p.ratios)])
    header = ["t", "err_sigma", "err_s", "err_tau"]
    for n, data in series.items():
        _write_points(outdir / f"error_series_plus_{n}.csv", header,
                      data["plus"])
        _write_points(outdir / f"error_series_minus_{n}.csv", header,
                      data["minus"])

    from .plots import scaling_figure, separation_figure, series_figure
    scaling_figure(bound_pts, bound_fit, "initial H^s norm",
                   outdir / "boundedness.png", window=(-0.05, 0.05))
    scaling_figure(conv_pts, conv_fit, "pair difference H^s norm",
                   outdir / "convergence.png", window=(d - 1.05, d - 0.95))
    scaling_figure([(p.n, p.max_err_sigma) for p in done], ua.fit,
                   "max deviation, H^sigma", outdir / "uniform.png",
                   bound=ua.slope_bound)
    separation_figure(summaries, outdir / "separation.png")
    for n, data in series.items():
        series_figure(data["plus"], ["H^sigma", "H^s", "H^tau"],
                      "deviation from the family",
                      outdir / f"error_series_{n}.png",
                      title=f"n = {n}, w = +1")
    return verdicts


def _scipy_version() -> str:
    import scipy
    return scipy.__version__


def cmd_fit(cfg: RunConfig, outdir: Path) -> list[Verdict]:
    if cfg.input is None:
        raise ConfigError("fit needs input = <term csv path>")
    records = read_term_csv(cfg.input)
    if not records:
        raise ConfigError(f"no records in {cfg.input}")
    slopes = term_slopes(records)
    _write_points(outdir / "slopes.csv",
                  ["label", "slope", "intercept", "stderr", "npoints", "r2"],
                  [(lab, f.slope, f.intercept, f.stderr, f.npoints, f.r2)
                   for lab, f in sorted(slopes.items())])
    from .plots import term_figure
    by_label: dict[str, list] = {}
    for r in records:
        pts = by_label.setdefault(r.term_label, {})
        pts[r.n] = max(pts.get(r.n, 0.0), r.h_sigma_norm)
    term_figure({lab: sorted(pts.items()) for lab, pts in by_label.items()},
                outdir / "terms.png")
    d = cfg.delta
    verdicts = []
    if "total_joint" in slopes:
        verdicts.append(_window("joint_residual_slope",
                                slopes["total_joint"].slope, -_INF,
                                d - 2.0 + 0.1))
    else:
        verdicts.append(_window("fit_count", float(len(slopes)), 1.0, _INF))
    return verdicts


_COMMANDS = {
    "norms": cmd_norms,
    "ansatz": cmd_ansatz,
    "residual": cmd_residual,
    "evolve": cmd_evolve,
    "demo": cmd_demo,
    "fit": cmd_fit,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaslab",
        description="numerical laboratory for nonuniform dependence in 2D "
                    "gas dynamics")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", default=None,
                       help="key = value settings file")
        for key, (_, default, text) in _SCHEMA.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key,
                           default=None, metavar="V",
                           help=f"{text} (default {default})")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    flags = {key: getattr(args, key) for key in _SCHEMA}
    try:
        file_settings = (parse_config_file(args.config)
                         if args.config else {})
        cfg = build_config(file_settings, flags)
        set_fft_workers(cfg.threads)
        outdir = make_outdir(cfg.out, args.command)
        verdicts = _COMMANDS[args.command](cfg, outdir)
        _write_verdicts(outdir / "verdicts.csv", verdicts)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for v in verdicts:
        word = "pass" if v.passed else "FAIL"
        print(f"{v.name}: {word} (measured {v.measured:.6g}, "
              f"window [{v.lo:.6g}, {v.hi:.6g}])")
    npass = sum(v.passed for v in verdicts)
    print(f"result: {'PASS' if npass == len(verdicts) else 'FAIL'} "
          f"({npass}/{len(verdicts)})  ->  {outdir}")
    return 0 if npass == len(verdicts) else 1


if __name__ == "__main__":
    sys.exit(main())
