"""Tests for the paired-evolution orchestration layer.

The synthetic-data expectations (exponential growth recovery, exact
power-law fits, separation profiles) were computed ahead of time from
the defining formulas with numpy/scipy only; see the inline values.
Evolved smoke runs use n = 8 on coarse grids so the whole file stays
in the ten-second range.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from gaslab.ansatz import AnsatzParams, approximate_state, grid_for
from gaslab.cutoffs import default_family
from gaslab.experiment import (DEFAULT_TIMES, ErrorState, ExperimentReport,
                               PairSummary, Verdict, check_boundedness,
                               check_initial_convergence, check_separation,
                               check_uniform_approximation, config_hash,
                               emit_report, error_state, gronwall_diagnostic,
                               parse_report, predicted_epsilon,
                               recompute_verdicts, run_pair, run_scan,
                               separation_normalizer)
from gaslab.sobolev import fit_scaling, hs_norm
from gaslab.solver import SolverConfig, cfl_timestep
from gaslab.spectral import SpectralField, make_grid

TPL = AnsatzParams(n=8)
TARGET = 2.0 * abs(math.sin(1.0))  # separation target 2|sin 1|


@pytest.fixture(scope="module")
def pair():
    # shared evolved pair: n = 8, two snapshot times, default dealiasing
    cfg = SolverConfig(t_end=0.4)
    return run_pair(8, TPL, cfg, times=(0.2, 0.4), points_per_unit=12)


# ----------------------------------------------------------------------
# error states


class TestErrorState:
    def test_zero_against_identical_reconstruction(self):
        grid = grid_for(8, TPL.delta, 12)
        state = approximate_state(TPL, 0.3, grid)
        err = error_state(state, TPL, 0.3, (1.45, 2.5))
        # same formulas, same grid, same time: the difference is bitwise zero
        for f in err.fields:
            assert np.all(f.physical == 0.0)
        assert err.norm(1.45) == 0.0
        assert err.norm(2.5) == 0.0

    def test_norm_lookup_missing_index(self):
        grid = grid_for(8, TPL.delta, 12)
        state = approximate_state(TPL, 0.0, grid)
        err = error_state(state, TPL, 0.0, (1.45,))
        with pytest.raises(KeyError, match="index 3.0 not recorded"):
            err.norm(3.0)

    def test_components_on_different_grids_rejected(self):
        g1 = make_grid(32, 32, 4.0, 4.0)
        g2 = make_grid(64, 32, 4.0, 4.0)
        z1 = SpectralField(g1, physical=np.zeros((32, 32)))
        z2 = SpectralField(g2, physical=np.zeros((64, 32)))
        with pytest.raises(ValueError, match="different grids"):
            ErrorState(z1, z1, z2, z1, norms=((0.0, 0.0),))

    def test_fields_property_order(self):
        g = make_grid(32, 32, 4.0, 4.0)
        comps = [SpectralField(g, physical=np.full((32, 32), float(i)))
                 for i in range(4)]
        err = ErrorState(*comps, norms=())
        assert [f.physical[0, 0] for f in err.fields] == [0.0, 1.0, 2.0, 3.0]


class TestSeparationNormalizer:
    def test_positive_and_stable_across_n(self):
        # the support width n^delta cancels the amplitude n^{-delta}, so
        # the packet normalizer is nearly n-independent
        fam = default_family()
        vals = {}
        for n in (8, 16):
            p = replace(TPL, n=n)
            vals[n] = separation_normalizer(p, grid_for(n, TPL.delta, 12),
                                            fam)
        assert vals[8] > 0.0
        assert abs(vals[16] / vals[8] - 1.0) < 0.05

    def test_matches_directly_built_field(self):
        fam = default_family()
        grid = grid_for(8, TPL.delta, 12)
        amp = 8.0 ** (-TPL.delta - TPL.s)
        fx = fam.psi.value(TPL.scale * grid.x)
        fy = fam.psi.value(TPL.scale * grid.y) * np.cos(8.0 * grid.y)
        f = SpectralField(grid, physical=amp * np.multiply.outer(fx, fy))
        want = hs_norm(f, TPL.s).value
        got = separation_normalizer(TPL, grid, fam)
        assert math.isclose(got, want, rel_tol=1e-12)


# ----------------------------------------------------------------------
# paired evolution


class TestRunPair:
    def test_completed(self, pair):
        s = pair.summary
        assert s.completed
        assert s.reason_plus == "completed"
        assert s.reason_minus == "completed"
        assert s.n == 8
        assert s.t_final == pytest.approx(0.4)

    def test_dt_frozen_from_initial_wave_speed(self, pair):
        fam = default_family()
        grid = grid_for(8, TPL.delta, 12)
        plus = approximate_state(replace(TPL, omega=1), 0.0, grid, family=fam)
        minus = approximate_state(replace(TPL, omega=-1), 0.0, grid,
                                  family=fam)
        want = min(cfl_timestep(plus, 0.75), cfl_timestep(minus, 0.75))
        assert math.isclose(pair.summary.dt, want, rel_tol=1e-12)

    def test_separation_starts_at_initial_difference(self, pair):
        s = pair.summary
        t0, v0 = s.separation[0]
        assert t0 == 0.0
        assert v0 == s.init_diff_norm_s
        assert [t for t, _ in s.separation] == [0.0, 0.2, 0.4]

    def test_ratios_divide_by_normalizer(self, pair):
        s = pair.summary
        assert s.normalizer > 0.0
        for (t_s, sep), (t_r, ratio) in zip(s.separation, s.ratios):
            assert t_s == t_r
            assert math.isclose(ratio, sep / s.normalizer, rel_tol=1e-12)

    def test_error_series_shape(self, pair):
        for series in (pair.error_series_plus, pair.error_series_minus):
            assert len(series) == pair.trajectory_plus.steps + 1
            assert all(len(row) == 4 for row in series)  # t, sigma, s, tau
            times = [row[0] for row in series]
            assert times[0] == 0.0
            assert all(b > a for a, b in zip(times, times[1:]))

    def test_max_errors_cover_both_series(self, pair):
        s = pair.summary
        rows = list(pair.error_series_plus) + list(pair.error_series_minus)
        assert s.max_err_sigma == max(r[1] for r in rows)
        assert s.max_err_s == max(r[2] for r in rows)
        assert s.max_err_tau == max(r[3] for r in rows)

    def test_initial_norms_increase_with_index(self, pair):
        s = pair.summary
        assert 0.0 < s.init_norm_sigma < s.init_norm_s < s.init_norm_tau

    def test_snapshots_at_requested_times(self, pair):
        for traj in (pair.trajectory_plus, pair.trajectory_minus):
            assert [t for t, _ in traj.snapshots] == [0.2, 0.4]

    def test_gronwall_coefficients_recorded(self, pair):
        assert math.isfinite(pair.summary.gronwall_a)
        assert math.isfinite(pair.summary.gronwall_b)

    def test_error_state_from_snapshot(self, pair):
        err = pair.error_state(1, 0.2)
        assert err.norm(1.45) > 0.0
        assert err.norm(2.5) > err.norm(1.45)
        errm = pair.error_state(-1, 0.2)
        assert errm.norm(2.5) > 0.0

    def test_error_state_missing_time(self, pair):
        with pytest.raises(KeyError, match="no snapshot at t = 0.3"):
            pair.error_state(1, 0.3)

    def test_tau_window_validated(self):
        with pytest.raises(ValueError, match="tau must satisfy"):
            run_pair(8, TPL, SolverConfig(t_end=0.1), times=(0.1,), tau=2.4)
        with pytest.raises(ValueError, match="tau must satisfy"):
            run_pair(8, TPL, SolverConfig(t_end=0.1), times=(0.1,), tau=3.5)

    def test_observer_sees_exact_initial_data_without_dealiasing(self):
        # with the dealias projection off, the state handed to the
        # observer at t = 0 is exactly the sampled family member, and the
        # cached reference reproduces it bitwise
        cfg = SolverConfig(t_end=0.1, dealias=False)
        res = run_pair(8, TPL, cfg, times=(0.1,), points_per_unit=12)
        assert res.error_series_plus[0] == (0.0, 0.0, 0.0, 0.0)
        assert res.error_series_minus[0] == (0.0, 0.0, 0.0, 0.0)


class TestRunScan:
    def test_summaries_and_series_structure(self):
        cfg = SolverConfig(t_end=0.2)
        summaries, series = run_scan((8,), TPL, cfg, times=(0.2,),
                                     points_per_unit=12)
        assert [s.n for s in summaries] == [8]
        assert set(series) == {8}
        bundle = series[8]
        assert set(bundle) == {"plus", "minus", "norms_plus", "norms_minus"}
        # norm series carries two monitor indices per recorded time
        assert len(bundle["norms_plus"]) == 2 * len(bundle["plus"])
        assert len(bundle["minus"]) == len(bundle["plus"])


# ----------------------------------------------------------------------
# growth-rate diagnostic


class TestGronwallDiagnostic:
    def test_recovers_exponential_growth_law(self):
        # v' = a v + b sampled exactly; gradient+lstsq recover the pair
        # to a few tenths of a percent at 50 points (checked offline)
        a, b, v0 = 0.7, 0.2, 0.1
        t = np.linspace(0.0, 2.0, 50)
        v = (v0 + b / a) * np.exp(a * t) - b / a
        diag = gronwall_diagnostic(list(zip(t, v)))
        assert abs(diag.a - a) < 0.01
        assert abs(diag.b - b) < 0.005
        assert diag.r2 > 0.999
        assert len(diag.times) == 50
        assert len(diag.derivatives) == 50

    def test_extra_columns_ignored(self):
        t = np.linspace(0.0, 1.0, 12)
        v = np.exp(t)
        two = gronwall_diagnostic(list(zip(t, v)))
        four = gronwall_diagnostic([(ti, vi, 99.0, -1.0)
                                    for ti, vi in zip(t, v)])
        assert two == four

    def test_needs_ten_observations(self):
        rows = [(0.1 * i, 1.0 + i) for i in range(5)]
        with pytest.raises(ValueError, match="needs >= 10 observations, got 5"):
            gronwall_diagnostic(rows)


# ----------------------------------------------------------------------
# scan-level checks on synthetic summaries


def _summary(n, **over):
    base = dict(
        n=n, dt=0.01, completed=True, reason_plus="completed",
        reason_minus="completed", t_final=1.0,
        init_norm_sigma=1.0, init_norm_s=2.0, init_norm_tau=4.0,
        init_diff_norm_s=0.5, max_err_sigma=0.1, max_err_s=0.2,
        max_err_tau=0.4, normalizer=4.0,
        separation=((0.0, 0.5), (1.0, 1.0)),
        ratios=((0.0, 0.125), (1.0, 0.25)),
        gronwall_a=1.0, gronwall_b=0.5,
        doubling_plus=None, doubling_minus=None)
    base.update(over)
    return PairSummary(**base)


def _powerlaw_summaries():
    # exact power laws so every fitted slope is known in closed form
    out = []
    for n in (16, 32, 64):
        out.append(_summary(n,
                            max_err_sigma=2.0 * n ** -1.9,
                            max_err_s=0.8 * n ** -0.9,
                            max_err_tau=1.5 * n ** -0.3))
    return out


class TestUniformApproximation:
    def test_exact_power_laws(self):
        chk = check_uniform_approximation(_powerlaw_summaries(), TPL)
        assert abs(chk.fit.slope + 1.9) < 1e-9
        # bound = delta - 3 + s - sigma + slack at the defaults
        assert abs(chk.slope_bound + 1.55) < 1e-12
        assert chk.passed
        # interpolation exponent alpha p_sigma + beta p_tau with
        # alpha = (tau-s)/(tau-sigma), beta = (s-sigma)/(tau-sigma)
        assert abs(chk.interp_fit.slope + 0.8161290322580645) < 1e-9
        assert chk.eps_measured == -chk.interp_fit.slope
        assert chk.eps_positive
        assert abs(chk.direct_s_fit.slope + 0.9) < 1e-9
        assert abs(chk.eps_predicted - 0.20967741935483866) < 1e-12
        assert chk.tau == 3.0

    def test_incomplete_pairs_excluded(self):
        clean = _powerlaw_summaries()
        noisy = clean + [_summary(128, completed=False, max_err_sigma=1e6,
                                  max_err_s=1e6, max_err_tau=1e6)]
        a = check_uniform_approximation(clean, TPL)
        b = check_uniform_approximation(noisy, TPL)
        assert a.fit == b.fit
        assert a.interp_fit == b.interp_fit

    def test_insufficient_completed_runs(self):
        pairs = _powerlaw_summaries()[:2] + [
            _summary(64, completed=False), _summary(128, completed=False)]
        with pytest.raises(ValueError,
                           match="insufficient completed runs: 2 of 4"):
            check_uniform_approximation(pairs, TPL)

    def test_predicted_epsilon_formula(self):
        assert abs(predicted_epsilon(TPL, 3.0)
                   - 0.20967741935483866) < 1e-12
        # widening tau toward s shrinks the implied decay rate to zero
        assert predicted_epsilon(TPL, 2.6) < predicted_epsilon(TPL, 3.0)


def _separation_summaries(gaps=(0.3, 0.15, 0.05), norm=4.0):
    sin1 = abs(math.sin(1.0))
    out = []
    for n, g in zip((16, 32, 64), gaps):
        ratio1 = TARGET - g
        sep = [(0.0, 0.0)]
        ratios = [(0.0, 0.0)]
        for t in DEFAULT_TIMES:
            r = ratio1 * abs(math.sin(t)) / sin1
            ratios.append((t, r))
            sep.append((t, r * norm))
        out.append(_summary(n, normalizer=norm, separation=tuple(sep),
                            ratios=tuple(ratios)))
    return out


class TestSeparationCheck:
    def test_sinusoidal_profile(self):
        chk = check_separation(_separation_summaries())
        assert chk.n_max == 64
        assert abs(chk.reference_ratio - (TARGET - 0.05)) < 1e-12
        assert abs(chk.scale_gap - 0.05 / TARGET) < 1e-12
        assert chk.scale_ok
        assert chk.monotone_ok
        # sep(t) proportional to |sin t| makes every margin exactly 2
        assert chk.profile_ok
        for _, m in chk.profile_margins:
            assert abs(m - 2.0) < 1e-12
        assert [n for n, _ in chk.gaps_by_n] == [16, 32, 64]

    def test_gap_growth_flags_monotonicity(self):
        chk = check_separation(_separation_summaries(gaps=(0.05, 0.15, 0.3)))
        assert not chk.monotone_ok
        # the top-n member is still the reference, so scale fails too
        assert not chk.scale_ok

    def test_scale_tolerance(self):
        chk = check_separation(_separation_summaries(gaps=(0.3, 0.2, 0.1)),
                               scale_tol=0.05)
        assert not chk.scale_ok
        assert chk.scale_gap > 0.05

    def test_no_completed_pairs(self):
        pairs = [_summary(16, completed=False)]
        with pytest.raises(ValueError, match="no completed pairs"):
            check_separation(pairs)

    def test_missing_reference_time(self):
        pairs = [_summary(16, ratios=((0.0, 0.0), (0.5, 1.0)),
                          separation=((0.0, 0.0), (0.5, 4.0)))]
        with pytest.raises(KeyError, match="no separation ratio at t = 1.0"):
            check_separation(pairs, times=(0.5,))


# ----------------------------------------------------------------------
# static (unevolved) checks


class TestStaticChecks:
    def test_boundedness_restricts_to_large_n(self):
        fit, pts = check_boundedness((8, 12, 16, 24), TPL,
                                     points_per_unit=16, n_min=12)
        assert fit.npoints == 3  # n = 8 dropped from the fit
        assert len(pts) == 4     # but still reported
        assert [n for n, _ in pts] == [8, 12, 16, 24]
        vals = [v for _, v in pts]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_boundedness_falls_back_when_tail_too_short(self):
        fit, pts = check_boundedness((8, 12, 16), TPL,
                                     points_per_unit=16, n_min=32)
        assert fit.npoints == 3
        assert len(pts) == 3

    def test_initial_convergence_decays(self):
        fit, pts = check_initial_convergence((8, 12, 16), TPL,
                                             points_per_unit=16)
        assert fit.npoints == 3
        assert fit.slope < 0.0
        vals = [v for _, v in pts]
        assert all(b < a for a, b in zip(vals, vals[1:]))


# ----------------------------------------------------------------------
# report persistence


def _report():
    fits = (("err_sigma", fit_scaling([(16, 1.0), (32, 0.25), (64, 0.0625)])),
            ("err_s", fit_scaling([(16, 2.0), (32, 1.0), (64, 0.5)])))
    verdicts = (
        Verdict("residual_decay", measured=-2.3, lo=-math.inf, hi=-1.65,
                passed=True),
        Verdict("separation_scale", measured=0.03, lo=0.0, hi=0.15,
                passed=True),
        Verdict("initial_size", measured=-1.22, lo=-0.05, hi=0.05,
                passed=False))
    pairs = (_summary(16, doubling_plus=0.75),
             _summary(32, separation=((0.0, 0.5), (0.25, 0.2), (1.0, 1.1))))
    return ExperimentReport(
        config=(("n_list", "16,32"), ("s", "2.5"), ("delta", "0.25")),
        pairs=pairs, fits=fits, verdicts=verdicts,
        meta=(("created", "2026-02-11T10:00:00"), ("seed", "0")))


class TestReportRoundTrip:
    def test_bitwise_round_trip(self, tmp_path):
        rep = _report()
        path = tmp_path / "report.txt"
        emit_report(rep, path)
        back = parse_report(path)
        assert back == rep

    def test_repeated_emission_is_identical(self, tmp_path):
        rep = _report()
        emit_report(rep, tmp_path / "a.txt")
        emit_report(rep, tmp_path / "b.txt")
        assert (tmp_path / "a.txt").read_bytes() \
            == (tmp_path / "b.txt").read_bytes()

    def test_lookups(self):
        rep = _report()
        assert rep.fit("err_s").slope == pytest.approx(-1.0)
        assert rep.verdict("separation_scale").passed
        with pytest.raises(KeyError):
            rep.fit("nope")
        with pytest.raises(KeyError):
            rep.verdict("nope")

    def test_all_passed_reflects_verdicts(self):
        rep = _report()
        assert not rep.all_passed
        good = ExperimentReport(rep.config, rep.pairs, rep.fits,
                                rep.verdicts[:2], rep.meta)
        assert good.all_passed

    def test_recompute_verdicts_from_stored_numbers(self):
        rep = _report()
        got = recompute_verdicts(rep)
        assert got == {"residual_decay": True, "separation_scale": True,
                       "initial_size": False}
        # a tampered pass flag is caught by recomputation
        bad = Verdict("tampered", measured=0.5, lo=0.0, hi=0.1, passed=True)
        assert bad.recompute() is False

    def test_infinite_bounds_round_trip(self, tmp_path):
        rep = _report()
        emit_report(rep, tmp_path / "r.txt")
        back = parse_report(tmp_path / "r.txt")
        v = back.verdict("residual_decay")
        assert v.lo == -math.inf
        assert v.hi == -1.65

    def test_refuses_empty_pair_set(self, tmp_path):
        rep = _report()
        empty = ExperimentReport(rep.config, (), rep.fits, rep.verdicts,
                                 rep.meta)
        with pytest.raises(ValueError, match="no pair records"):
            emit_report(empty, tmp_path / "r.txt")

    def test_optional_doubling_round_trip(self, tmp_path):
        rep = _report()
        emit_report(rep, tmp_path / "r.txt")
        back = parse_report(tmp_path / "r.txt")
        assert back.pairs[0].doubling_plus == 0.75
        assert back.pairs[0].doubling_minus is None


class TestConfigHash:
    def test_order_insensitive(self):
        cfg = (("a", "1"), ("b", "2"))
        assert config_hash(cfg) == config_hash(tuple(reversed(cfg)))

    def test_value_sensitive(self):
        assert config_hash((("a", "1"),)) != config_hash((("a", "2"),))

    def test_shape(self):
        h = config_hash((("a", "1"),))
        assert len(h) == 64
        assert set(h) <= set("0123456789abcdef")
