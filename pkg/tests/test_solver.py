"""Tests for the direct and transformed time steppers."""

from __future__ import annotations

import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracrds.errors import (
    BlowUpError,
    ConfigError,
    EnergyViolationError,
    NewtonConvergenceError,
    TransformOverflowError,
)
from fracrds.models import LinearModel, NavierStokesModel, PorousMediumModel, TripleConstants
from fracrds.noise import TwoSidedPath, build_two_sided_path, subsample_path
from fracrds.plots import loglog_fit
from fracrds.solver import (
    SolveConfig,
    continuous_dependence_gap,
    equivalence_gap,
    pairing_holder_estimate,
    solve,
    solve_direct_young,
    solve_transformed,
)

TRANSFORM = ("transform-explicit", "transform-imex", "transform-implicit")


@pytest.fixture(scope="module")
def fine_path():
    return build_two_sided_path(0.75, 2.0**-14, 0, 2**14, 7)


@pytest.fixture(scope="module")
def path12(fine_path):
    return subsample_path(fine_path, 4)


@pytest.fixture(scope="module")
def pme():
    return PorousMediumModel(16, 3.0)


def pme_start(model, seed=1, amp=0.3):
    u = model.random_state(np.random.default_rng(seed))
    return amp * u / np.abs(u).max()


def closed_form(a, beta, u0, path, t):
    w = np.array([path(float(s)) for s in np.atleast_1d(t)])
    return u0 * np.exp(-a * np.asarray(t) + beta * w)


class TestSolveConfig:
    def test_defaults(self):
        cfg = SolveConfig(0.01)
        assert cfg.scheme == "transform-imex" and cfg.newton_tol == 1e-12 and cfg.newton_max_iter == 50

    @pytest.mark.parametrize("kw", [{"dt": 0.0}, {"dt": 0.1, "scheme": "rk4"},
                                    {"dt": 0.1, "newton_tol": 0.0}, {"dt": 0.1, "save_every": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            SolveConfig(**kw)

    def test_substeps(self):
        assert SolveConfig(0.25).substeps(1.0) == 4
        with pytest.raises(ConfigError):
            SolveConfig(0.3).substeps(1.0)
        with pytest.raises(ConfigError):
            SolveConfig(2.0).substeps(1.0)


class TestLinearClosedForm:
    @pytest.mark.parametrize("scheme", TRANSFORM)
    def test_transform_route(self, path12, scheme):
        m = LinearModel(1.0, 0.0)
        traj = solve_transformed(m, path12, 0.5, np.array([1.5]), (0.0, 1.0), SolveConfig(2.0**-12, scheme))
        exact = closed_form(1.0, 0.5, 1.5, path12, traj.state_times)
        rel = np.abs(traj.states[:, 0] - exact) / np.abs(exact)
        assert rel.max() < 1e-3

    def test_direct_route(self, path12):
        m = LinearModel(1.0, 0.0)
        traj = solve_direct_young(m, path12, 0.25, np.array([1.5]), (0.0, 1.0), SolveConfig(2.0**-12))
        exact = closed_form(1.0, 0.25, 1.5, path12, traj.state_times)
        assert (np.abs(traj.states[:, 0] - exact) / np.abs(exact)).max() < 1e-3

    def test_direct_route_order(self, fine_path):
        m = LinearModel(1.0, 0.0)
        dts, errs = [], []
        for k in range(8, 15):
            p = subsample_path(fine_path, 2 ** (14 - k))
            traj = solve_direct_young(m, p, 0.5, np.array([1.0]), (0.0, 1.0), SolveConfig(p.step))
            exact = closed_form(1.0, 0.5, 1.0, p, traj.state_times)
            errs.append(np.abs(traj.states[:, 0] - exact).max())
            dts.append(p.step)
        assert loglog_fit(dts, errs)[0] >= 0.4

    def test_forward_euler_first_order(self):
        zero = TwoSidedPath.from_increments(np.zeros(2**10), 2.0**-10, 0)
        m = LinearModel(1.0, 0.0)
        errs = []
        for k in (6, 8, 10):
            p = subsample_path(zero, 2 ** (10 - k))
            traj = solve_direct_young(m, p, 0.0, np.array([1.0]), (0.0, 1.0), SolveConfig(p.step))
            errs.append(abs(traj.final_state[0] - np.exp(-1.0)))
        assert loglog_fit([2.0**-6, 2.0**-8, 2.0**-10], errs)[0] == pytest.approx(1.0, abs=0.05)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 5.0), st.floats(-2.0, 2.0), st.integers(0, 10_000), st.floats(-3, 3))
    def test_imex_discrete_closed_form(self, a, beta, seed, u0):
        p = build_two_sided_path(0.7, 1 / 64, 0, 64, seed)
        traj = solve(LinearModel(a, 0.0), p, beta, np.array([u0]), (0.0, 1.0), SolveConfig(1 / 64))
        expect = u0 * (1 + a / 64) ** -64.0 * np.exp(beta * p(1.0))
        assert traj.final_state[0] == pytest.approx(expect, rel=1e-12, abs=1e-300)

    def test_beta_zero_matches_deterministic(self, path12):
        m = LinearModel(2.0, 0.5)
        cfg = SolveConfig(2.0**-12, "transform-explicit")
        a = solve_transformed(m, path12, 0.0, np.array([1.0]), (0.0, 1.0), cfg)
        zero = TwoSidedPath.from_increments(np.zeros(2**12), 2.0**-12, 0)
        b = solve(m, zero, 0.0, np.array([1.0]), (0.0, 1.0), cfg)
        assert np.array_equal(a.states, b.states)
        assert equivalence_gap(m, path12, 0.0, np.array([1.0]), (0.0, 1.0), SolveConfig(2.0**-12, "direct-young")) <= 1e-12

    def test_linear_equivalence_order(self, fine_path):
        m = LinearModel(1.0, 0.0)
        dts, gaps = [], []
        for k in range(8, 15, 2):
            p = subsample_path(fine_path, 2 ** (14 - k))
            gaps.append(equivalence_gap(m, p, 0.5, np.array([1.0]), (0.0, 1.0), SolveConfig(p.step, "transform-imex")))
            dts.append(p.step)
        assert loglog_fit(dts, gaps)[0] >= 0.4


class TestPorousMediumSolves:
    def test_transformed_energy_nonincreasing(self, pme, path12):
        u0 = pme_start(pme)
        traj = solve_transformed(pme, path12, 0.5, u0, (0.0, 1.0), SolveConfig(2.0**-12, "transform-implicit"))
        energy = traj.z * traj.norm_h
        assert np.all(np.diff(energy) <= 1e-14 * energy[:-1])
        # the coercivity inequality is an identity for this model, so only rounding remains
        assert traj.energy_excess_max <= 1e-12

    def test_halved_dt_reference(self, pme, fine_path):
        u0 = pme_start(pme)
        p = subsample_path(fine_path, 4)
        coarse = solve(pme, p, 0.5, u0, (0.0, 1.0), SolveConfig(2.0**-12, "transform-implicit"))
        fine = solve(pme, subsample_path(fine_path, 2), 0.5, u0, (0.0, 1.0),
                     SolveConfig(2.0**-13, "transform-implicit"))
        assert pme.norm_h(coarse.final_state - fine.final_state) < 1e-3 * pme.norm_h(u0)

    def test_substeps_interpolate(self, pme, fine_path):
        u0 = pme_start(pme)
        p = subsample_path(fine_path, 16)
        a = solve(pme, p, 0.5, u0, (0.0, 1.0), SolveConfig(2.0**-12, "transform-imex"))
        assert a.times.size == 2**12 + 1
        np.testing.assert_allclose(a.omega[::4], p.values(0, 2**10), atol=1e-15)
        np.testing.assert_allclose(a.omega[2], 0.5 * (p.value(0) + p.value(1)), atol=1e-15)

    @pytest.mark.parametrize("scheme", ["transform-imex", "transform-implicit"])
    def test_equivalence_gap_and_order(self, pme, fine_path, scheme):
        u0 = pme_start(pme)
        dts, gaps = [], []
        for k in (10, 12, 14):
            p = subsample_path(fine_path, 2 ** (14 - k))
            gaps.append(equivalence_gap(pme, p, 0.5, u0, (0.0, 1.0), SolveConfig(p.step, scheme)))
            dts.append(p.step)
        assert gaps[1] < 1e-2
        assert loglog_fit(dts, gaps)[0] >= 0.4

    def test_newton_iterations_counted(self, pme, path12):
        traj = solve(pme, path12, 0.5, pme_start(pme), (0.0, 0.25), SolveConfig(2.0**-12, "transform-implicit"))
        assert traj.newton_iterations >= 2**10


class TestStructure:
    @pytest.mark.parametrize("scheme", ["direct-young", "transform-explicit", "transform-imex", "transform-implicit"])
    def test_restart_is_bitwise(self, pme, path12, scheme):
        u0 = pme_start(pme)
        cfg = SolveConfig(2.0**-12, scheme)
        whole = solve(pme, path12, 0.3, u0, (0.0, 0.5), cfg)
        first = solve(pme, path12, 0.3, u0, (0.0, 0.25), cfg)
        second = solve(pme, path12, 0.3, first.final_state, (0.25, 0.5), cfg)
        assert np.array_equal(whole.final_state, second.final_state)

    def test_replay_is_bitwise(self, pme, path12):
        cfg = SolveConfig(2.0**-12, "transform-implicit")
        a = solve(pme, path12, 0.3, pme_start(pme), (0.0, 0.25), cfg)
        b = solve(pme, path12, 0.3, pme_start(pme), (0.0, 0.25), cfg)
        assert np.array_equal(a.states, b.states) and np.array_equal(a.norm_v, b.norm_v)

    def test_diagnostics(self, pme, path12):
        traj = solve(pme, path12, 0.3, pme_start(pme), (0.0, 0.5), SolveConfig(2.0**-12, save_every=64))
        assert traj.times[0] == 0.0 and traj.times[-1] == 0.5
        assert np.all(traj.norm_h >= 0) and np.all(traj.norm_v >= 0)
        assert np.all(np.diff(traj.v_integral) >= 0)
        nv = traj.norm_v**4
        assert traj.v_integral[-1] == pytest.approx(np.trapezoid(nv, traj.times), rel=1e-12)
        assert traj.states.shape == (2**11 // 64 + 1, 16)
        np.testing.assert_array_equal(traj.state_at(0.25), traj.states[2**10 // 64])
        with pytest.raises(ConfigError):
            traj.state_at(2.0**-12)

    def test_csv_and_summary(self, pme, path12):
        traj = solve(pme, path12, 0.3, pme_start(pme), (0.0, 2.0**-10), SolveConfig(2.0**-12, save_every=2))
        buf = io.StringIO()
        traj.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "time,normH,normV" and len(lines) == 6
        buf = io.StringIO()
        traj.write_csv(buf, coefficients=True)
        lines = buf.getvalue().splitlines()
        assert lines[0].split(",")[-1] == "coeff_15" and len(lines) == 4
        summary = json.loads(traj.summary_json())
        assert {"scheme", "dt", "final_normH", "energy_slack_max"} <= set(summary)

    def test_time_offset_enters_forcing(self):
        nse = NavierStokesModel(16, 1.0)
        forced = nse.with_forcing(nse.cosine_forcing(2.0))
        p = build_two_sided_path(0.75, 2.0**-8, 0, 256, 0)
        cfg = SolveConfig(2.0**-8)
        a = solve(forced, p, 0.0, forced.zero(), (0.0, 0.5), cfg)
        b = solve(forced, p, 0.0, forced.zero(), (0.0, 0.5), cfg, time_offset=1.0)
        assert not np.allclose(a.final_state, b.final_state)


class TestFailures:
    def test_newton_failure_reports_step(self, pme, path12):
        cfg = SolveConfig(2.0**-12, "transform-implicit", newton_max_iter=1, newton_tol=1e-300)
        with pytest.raises(NewtonConvergenceError) as info:
            solve(pme, path12, 0.3, pme_start(pme, amp=3.0), (0.0, 0.25), cfg)
        assert info.value.context["step"] == 0

    def test_blow_up(self, pme):
        p = build_two_sided_path(0.75, 0.01, 0, 100, 0)
        with pytest.raises(BlowUpError) as info:
            solve(pme, p, 0.0, pme_start(pme, amp=5.0), (0.0, 1.0), SolveConfig(0.01, "direct-young"))
        assert "step" in info.value.context

    def test_overflow(self):
        p = TwoSidedPath.from_function(lambda t: 100 * t, 0.5, 0, 20)
        with pytest.raises(TransformOverflowError):
            solve(LinearModel(), p, 10.0, np.array([1.0]), (0.0, 10.0), SolveConfig(0.5))

    def test_energy_violation(self):
        class Liar(LinearModel):
            def __init__(self):
                super().__init__(1.0, 1.0)
                # drop the additive constant the forcing requires
                self.constants = TripleConstants(lambda_embed=1.0, alpha=2.0, gamma_coercive=1.0)

        p = build_two_sided_path(0.75, 0.01, 0, 100, 0)
        with pytest.raises(EnergyViolationError) as info:
            solve(Liar(), p, 0.2, np.array([0.5]), (0.0, 1.0), SolveConfig(0.01))
        assert info.value.context["relative_excess"] > 1e-8

    def test_implicit_needs_jacobian(self):
        nse = NavierStokesModel(8)
        p = build_two_sided_path(0.75, 0.01, 0, 10, 0)
        with pytest.raises(ConfigError, match="Jacobian"):
            solve(nse, p, 0.1, nse.zero(), (0.0, 0.1), SolveConfig(0.01, "transform-implicit"))

    def test_transformed_rejects_direct(self, path12):
        with pytest.raises(ConfigError):
            solve_transformed(LinearModel(), path12, 0.1, np.array([1.0]), (0.0, 0.1),
                              SolveConfig(2.0**-12, "direct-young"))


class TestContinuousDependence:
    def test_identical_starts(self, path12):
        m = LinearModel(1.0, 0.3)
        rep = continuous_dependence_gap(m, path12, 0.5, np.array([1.0]), np.array([1.0]), (0.0, 1.0),
                                        SolveConfig(2.0**-12))
        assert np.all(rep.lhs == 0.0) and rep.holds()

    def test_linear_contraction(self, path12):
        m = LinearModel(1.0, 0.0)
        rep = continuous_dependence_gap(m, path12, 0.5, np.array([1.0]), np.array([-0.5]), (0.0, 1.0),
                                        SolveConfig(2.0**-12))
        np.testing.assert_allclose(rep.rhs, 2.25, rtol=1e-15)
        np.testing.assert_allclose(rep.lhs, 2.25 * np.exp(-2 * rep.times), rtol=1e-3)
        assert np.all(rep.lhs[1:] < rep.rhs[1:])

    def test_nse_pairs(self):
        nse = NavierStokesModel(16, 1.0)
        forced = nse.with_forcing(nse.cosine_forcing(5.0))
        p = build_two_sided_path(0.75, 2.0**-8, 0, 256, 3)
        rng = np.random.default_rng(4)
        for _ in range(3):
            a, b = forced.random_state(rng, 2.0), forced.random_state(rng, 2.0)
            rep = continuous_dependence_gap(forced, p, 0.5, a, b, (0.0, 1.0), SolveConfig(2.0**-8))
            assert rep.holds(1e-6), rep.worst_ratio()


class TestPairingHolder:
    def test_constant_trajectory(self):
        m = LinearModel(1.0, 2.0)
        p = build_two_sided_path(0.75, 1 / 64, 0, 64, 0)
        traj = solve(m, p, 0.0, np.array([m.fixed_point()]), (0.0, 1.0), SolveConfig(1 / 64))
        assert pairing_holder_estimate(traj, np.array([1.0]), 0.5).seminorm == 0.0

    def test_refinement(self, fine_path):
        m = LinearModel(1.0, 0.0)
        est = {}
        for k in (10, 11, 13, 14):
            p = subsample_path(fine_path, 2 ** (14 - k))
            traj = solve(m, p, 0.5, np.array([1.0]), (0.0, 1.0), SolveConfig(p.step))
            est[k] = (pairing_holder_estimate(traj, np.array([1.0]), 0.25).seminorm,
                      pairing_holder_estimate(traj, np.array([1.0]), 0.95).seminorm)
        assert np.isfinite(est[10][0])
        assert abs(est[11][0] - est[10][0]) <= 0.1 * est[10][0]
        assert est[14][1] > est[13][1] > est[11][1] > est[10][1]
