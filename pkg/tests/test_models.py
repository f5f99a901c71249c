"""Tests for the discretized models and the inequality checkers."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracrds.errors import ConfigError, PreconditionError
from fracrds.models import (
    LinearModel,
    NavierStokesModel,
    NonautonomousForcing,
    PorousMediumModel,
    TripleConstants,
    build_model,
    calibrate_growth_constant,
    check_assumptions,
    check_coercivity,
    check_embedding,
    check_growth,
    check_hemicontinuity,
    check_local_monotonicity,
    check_uniqueness_condition,
    eta_rho_eval,
    linear_apply,
    nse_apply,
    pme_apply,
    random_states,
)
from fracrds.models.porous import dirichlet_laplacian


@pytest.fixture(scope="module")
def pme():
    return PorousMediumModel(16, 3.0)


@pytest.fixture(scope="module")
def nse():
    return NavierStokesModel(32, 1.0)


@pytest.fixture(scope="module")
def nse8():
    return NavierStokesModel(8, 1.0)


class TestTripleConstants:
    def test_alpha_two_requires_small_k(self):
        with pytest.raises(ConfigError, match="k_coercive"):
            TripleConstants(lambda_embed=1.0, alpha=2.0, gamma_coercive=1.0, k_coercive=1.0)
        TripleConstants(lambda_embed=1.0, alpha=2.0, gamma_coercive=1.0, k_coercive=0.99)

    def test_alpha_below_two(self):
        with pytest.raises(ConfigError):
            TripleConstants(lambda_embed=1.0, alpha=1.5, gamma_coercive=1.0)

    def test_negative_constants(self):
        with pytest.raises(ConfigError):
            TripleConstants(lambda_embed=1.0, alpha=3.0, gamma_coercive=1.0, c_bound=-1.0)


class TestLinear:
    def test_apply_values(self):
        assert linear_apply(1.0, 0.7, 0.0) == 0.7
        assert linear_apply(1.0, 0.0, 2.0) == -2.0

    def test_coercivity_by_completing_square(self):
        m = LinearModel(1.3, 0.8)
        u = np.random.default_rng(0).normal(scale=5, size=(1000, 1))
        slack = 1.3 * u[:, 0] ** 2 + 0.8**2 / 1.3 - 2 * (linear_apply(1.3, 0.8, u) * u)[:, 0]
        assert slack.min() >= 0
        assert check_coercivity(m, 0.0, u) >= 0

    def test_coercivity_zero_forcing(self):
        m = LinearModel(1.0, 0.0)
        samples = random_states(m, np.random.default_rng(1), 1000, 3.0)
        assert check_coercivity(m, 0.0, samples) >= 0

    def test_growth_at_zero(self):
        assert check_growth(LinearModel(2.0, 0.0), 0.0, [np.zeros(1)]) == 0.0

    def test_monotonicity_slack_is_exact(self):
        m = LinearModel(0.6, 1.0)
        rng = np.random.default_rng(2)
        for _ in range(20):
            v1, v2 = rng.normal(size=1), rng.normal(size=1)
            slack = check_local_monotonicity(m, 0.0, [(v1, v2)])
            assert slack == pytest.approx(2 * 0.6 * float((v1 - v2)[0]) ** 2, rel=1e-13)

    def test_identical_pair_has_zero_slack(self):
        v = np.array([0.3])
        assert check_local_monotonicity(LinearModel(), 0.0, [(v, v)]) == 0.0

    def test_imex_step_is_backward_euler(self):
        m = LinearModel(2.0, 1.5)
        u, z, dt = np.array([0.4]), 1.1, 0.01
        v = m.imex_step(0.0, u, z, dt)
        assert v - dt * z * m.apply(0.0, v / z) == pytest.approx(u, abs=1e-15)

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ConfigError):
            LinearModel(0.0, 1.0)

    def test_all_checks_pass(self):
        rep = check_assumptions(LinearModel(1.0, 2.0), 0.0, np.random.default_rng(3), 1000, 4.0)
        assert rep.passed(1e-10), rep.as_dict()


class TestPorousMedium:
    def test_apply_zero(self, pme):
        assert np.all(pme.apply(0.0, np.zeros(16)) == 0.0)

    def test_rejects_small_exponent(self):
        with pytest.raises(ConfigError):
            pme_apply(1.0, np.ones(4))
        with pytest.raises(ConfigError):
            PorousMediumModel(8, 0.5)

    def test_pairing_identity_dense_oracle(self):
        n, r = 8, 3.0
        m = PorousMediumModel(n, r)
        L = dirichlet_laplacian(n)
        dx = 1.0 / (n + 1)
        rng = np.random.default_rng(4)
        for _ in range(100):
            u = rng.normal(size=n)
            # dense oracle: <L phi(u), u>_H with <a, b>_H = dx a^T (-L)^{-1} b
            Au = L @ (np.abs(u) ** (r - 1) * u)
            dense = dx * Au @ np.linalg.solve(-L, u)
            target = -dx * np.sum(np.abs(u) ** (r + 1))
            assert dense == pytest.approx(target, rel=1e-10)
            assert m.pairing(m.apply(0.0, u), u) == pytest.approx(target, rel=1e-10)

    def test_pairing_identity_random_states(self, pme):
        states = random_states(pme, np.random.default_rng(5), 100, 1.0)
        got = pme.pairing(pme.apply(0.0, states), states)
        target = -pme.dx * np.sum(np.abs(states) ** 4, axis=-1)
        np.testing.assert_allclose(got, target, rtol=1e-10)

    def test_degenerate_heat_operator(self):
        m = PorousMediumModel(16, 1.0, allow_degenerate=True)
        lam = np.linalg.eigvalsh(-dirichlet_laplacian(16)).min()
        assert m.mu1 == pytest.approx(lam, rel=1e-12)
        v = m.first_mode()
        # decay rate of the slowest mode under du/dt = A(u)
        rate = -(m.apply(0.0, v) @ v) / (v @ v)
        assert rate == pytest.approx(lam, rel=1e-8)
        # linearly implicit step contracts it by 1 / (1 + dt mu1)
        dt = 1e-3
        w = m.imex_step(0.0, v, 1.0, dt)
        np.testing.assert_allclose(w, v / (1 + dt * lam), rtol=1e-10)

    def test_embedding(self, pme):
        states = random_states(pme, np.random.default_rng(6), 1000, 1.0)
        assert check_embedding(pme, states) >= 0

    def test_eta_rho_vanish(self, pme):
        v = pme.random_state(np.random.default_rng(0))
        assert eta_rho_eval(pme, v) == (0.0, 0.0)

    def test_coercivity_identity(self, pme):
        states = random_states(pme, np.random.default_rng(7), 1000, 1.0)
        assert check_coercivity(pme, 0.0, states) >= -1e-10

    def test_local_monotonicity(self, pme):
        rng = np.random.default_rng(8)
        a = random_states(pme, rng, 1000, 1.0)
        b = random_states(pme, rng, 1000, 1.0)
        assert check_local_monotonicity(pme, 0.0, zip(a, b)) >= -1e-10

    @given(arrays(float, 2, elements=st.floats(-1e3, 1e3)))
    def test_scalar_monotonicity_sign(self, x):
        # oracle for the monotone nonlinearity phi(u) = |u|^{r-1} u
        phi = np.abs(x) ** 2 * x
        assert (phi[0] - phi[1]) * (x[0] - x[1]) >= 0

    def test_growth_stored_and_calibrated(self, pme):
        rng = np.random.default_rng(9)
        pilot = random_states(pme, rng, 10000, 1.0)
        fresh = random_states(pme, rng, 1000, 1.0)
        assert check_growth(pme, 0.0, fresh) <= 1.0
        C = calibrate_growth_constant(pme, 0.0, pilot)
        assert C <= pme.constants.c_growth
        assert check_growth(pme, 0.0, fresh, c_growth=C) <= 1.0

    def test_growth_ratio_saturates_for_large_states(self, pme):
        # |A v|_{V*}^{a/(a-1)} = |v|_V^a exactly; with varpi = 0 the H factor
        # is 2, so the ratio tends to 1/2 as |v|_V grows
        v = 1e3 * pme.first_mode()
        assert check_growth(pme, 0.0, [v]) == pytest.approx(0.5, rel=1e-9)
        Av = pme.apply(0.0, v)
        assert pme.dual_norm(Av) ** (4 / 3) == pytest.approx(pme.norm_v(v) ** 4, rel=1e-12)

    def test_imex_step_solves_lagged_system(self, pme):
        u = pme.random_state(np.random.default_rng(10), 2.0)
        dt = 1e-3
        v = pme.imex_step(0.0, u, 1.0, dt)
        lhs = v - dt * pme.laplacian @ (np.abs(u) ** 2 * v)
        np.testing.assert_allclose(lhs, u, atol=1e-12)

    def test_jacobian_matches_finite_difference(self, pme):
        u = pme.random_state(np.random.default_rng(11))
        J = pme.jacobian(0.0, u)
        e = np.random.default_rng(12).normal(size=16)
        h = 1e-6
        fd = (pme.apply(0.0, u + h * e) - pme.apply(0.0, u - h * e)) / (2 * h)
        np.testing.assert_allclose(J @ e, fd, rtol=1e-6, atol=1e-6 * np.abs(fd).max())

    def test_all_checks_pass(self, pme):
        rep = check_assumptions(pme, 0.0, np.random.default_rng(13), 1000, 1.0)
        assert rep.passed(1e-10), rep.as_dict()


def _triad_bilinear(model: NavierStokesModel, uh):
    """Brute-force -P[(u.grad)u] by summing all retained triads."""
    N, K = model.N, model.K
    ks = [(p, q) for p in range(-K, K + 1) for q in range(-K, K + 1) if (p, q) != (0, 0)]
    out = np.zeros((2, N, N), dtype=complex)
    for p in ks:
        up = uh[:, p[0] % N, p[1] % N]
        for q in ks:
            k = (p[0] + q[0], p[1] + q[1])
            if max(abs(k[0]), abs(k[1])) > K or k == (0, 0):
                continue
            uq = uh[:, q[0] % N, q[1] % N]
            out[:, k[0] % N, k[1] % N] += 1j * (up[0] * q[0] + up[1] * q[1]) * uq
    return -model.leray(out)


def _quadrature_grid(n):
    x = 2 * np.pi * np.arange(n) / n
    return np.meshgrid(x, x, indexing="ij")


class TestNavierStokes:
    def test_zero_state_zero_forcing(self, nse):
        assert np.all(nse_apply(nse, 0.0, nse.zero()) == 0)

    def test_rejects_divergent_field(self, nse8):
        x, y = nse8.grid()
        bad = nse8.from_physical(np.stack([np.sin(x), np.zeros_like(x)]))
        with pytest.raises(PreconditionError):
            nse8.apply(0.0, bad)

    def test_bilinear_against_triad_sum(self, nse8):
        rng = np.random.default_rng(14)
        for _ in range(5):
            u = nse8.random_state(rng, 1.0)
            np.testing.assert_allclose(nse8.bilinear(u), _triad_bilinear(nse8, u), atol=1e-12)

    def test_energy_orthogonality_quadrature_oracle(self, nse8):
        # brute force int (u.grad u).u dx on a fine real-space grid
        X, Y = _quadrature_grid(64)
        rng = np.random.default_rng(15)
        for _ in range(10):
            uh = nse8.random_state(rng, 2.0)
            fields = []
            for comp in range(2):
                c = uh[comp]
                val = np.zeros_like(X)
                dxv = np.zeros_like(X)
                dyv = np.zeros_like(X)
                for a in range(-nse8.K, nse8.K + 1):
                    for b in range(-nse8.K, nse8.K + 1):
                        coef = c[a % nse8.N, b % nse8.N]
                        e = np.exp(1j * (a * X + b * Y))
                        val += (coef * e).real
                        dxv += (1j * a * coef * e).real
                        dyv += (1j * b * coef * e).real
                fields.append((val, dxv, dyv))
            (u, ux, uy), (v, vx, vy) = fields
            integrand = (u * ux + v * uy) * u + (u * vx + v * vy) * v
            quad = integrand.mean() * (2 * np.pi) ** 2
            nrm = float(nse8.norm_h(uh))
            assert abs(quad) < 1e-12 * nrm**3
            assert abs(nse8.inner_h(nse8.bilinear(uh), uh)) < 1e-12 * nrm**3

    def test_energy_orthogonality_random_states(self, nse):
        states = random_states(nse, np.random.default_rng(16), 100, 1.0)
        vals = nse.inner_h(nse.bilinear(states), states)
        norms = nse.norm_h(states)
        assert np.all(np.abs(vals) < 1e-12 * norms**3)

    def test_taylor_green_is_steady_for_euler(self, nse):
        tg = nse.taylor_green(1.0)
        assert np.max(np.abs(nse.bilinear(tg))) < 1e-12

    def test_apply_preserves_divergence_free(self, nse):
        forced = nse.with_forcing(nse.cosine_forcing(3.0))
        u = forced.random_state(np.random.default_rng(17), 2.0)
        F = forced.apply(0.4, u)
        assert np.max(np.abs(forced.divergence(F))) < 1e-12 * max(1.0, np.abs(F).max())

    def test_rho_single_mode_quadrature(self, nse8):
        x, y = nse8.grid()
        uh = nse8.from_physical(np.stack([np.sin(x) * np.sin(y), np.cos(x) * np.cos(y)]))
        X, Y = _quadrature_grid(64)
        speed2 = (np.sin(X) * np.sin(Y)) ** 2 + (np.cos(X) * np.cos(Y)) ** 2
        quad = (speed2**2).mean() * (2 * np.pi) ** 2
        assert quad == pytest.approx(5 * np.pi**2 / 4, rel=1e-12)
        eta, rho = eta_rho_eval(nse8, uh)
        assert eta == 0.0
        assert rho == pytest.approx(quad, rel=1e-10)

    def test_eta_rho_at_zero(self, nse8):
        assert eta_rho_eval(nse8, nse8.zero()) == (0.0, 0.0)

    def test_stored_constants(self, nse):
        c = nse.constants
        assert (c.alpha, c.gamma_coercive, c.k_coercive, c.varpi) == (2.0, 0.5, 0.0, 2.0)

    def test_coercivity_with_forcing(self, nse):
        forced = nse.with_forcing(nse.cosine_forcing(5.0))
        states = random_states(forced, np.random.default_rng(18), 1000, 2.0)
        for t in (0.0, 0.7, np.pi / 2):
            assert check_coercivity(forced, t, states) >= 0

    def test_growth_stored_and_calibrated(self, nse):
        rng = np.random.default_rng(19)
        pilot = random_states(nse, rng, 1000, 1.0)
        fresh = random_states(nse, rng, 1000, 1.0)
        assert check_growth(nse, 0.0, fresh) <= 1.0
        C = calibrate_growth_constant(nse, 0.0, pilot)
        assert check_growth(nse, 0.0, fresh, c_growth=C) <= 1.0

    def test_uniqueness_condition(self, nse):
        states = random_states(nse, np.random.default_rng(20), 1000, 3.0)
        assert check_uniqueness_condition(nse, states) >= 0

    def test_all_checks_pass(self, nse):
        rep = check_assumptions(nse, 0.0, np.random.default_rng(21), 1000, 1.0)
        assert rep.passed(1e-10), rep.as_dict()

    def test_imex_step_viscous_decay(self, nse):
        tg = nse.taylor_green(1.0)
        dt = 0.01
        out = nse.imex_step(0.0, tg, 1.0, dt)
        np.testing.assert_allclose(out, tg / (1 + 2 * dt), atol=1e-14)


class TestHemicontinuity:
    def test_continuous_models_pass(self, pme):
        rng = np.random.default_rng(22)
        triples = [tuple(random_states(pme, rng, 3)) for _ in range(50)]
        assert check_hemicontinuity(pme, 0.0, triples) >= 0

    def test_jump_is_detected(self):
        class Jump(LinearModel):
            def apply(self, t, u):
                return np.where(np.asarray(u) > 0.5, 10.0, 0.0)

        m = Jump()
        triple = (np.array([0.5]), np.array([1.0]), np.array([1.0]))
        assert check_hemicontinuity(m, 0.0, [triple]) < 0


class TestForcing:
    def test_constant_certificate(self):
        f = NonautonomousForcing.constant(2.0)
        assert f.certify([0.1, 1.0])
        assert not f.certify([0.0])

    def test_exponential_envelope(self):
        f = NonautonomousForcing(lambda t: np.exp(0.5 * np.abs(t)), bound=1.0, rate=0.5)
        assert f.certify([0.6])
        assert not f.certify([0.4])

    def test_lying_bound_is_rejected(self):
        f = NonautonomousForcing(lambda t: 3.0 + 0 * t, bound=1.0)
        assert not f.certify([1.0])

    def test_cosine_envelope_matches_field(self, nse):
        forcing = nse.cosine_forcing(2.0)
        for t in (0.0, 0.3, 2.0):
            h = forcing.field(t)
            assert forcing(t) == pytest.approx(nse.c_f * float(nse.inner_h(h, h)), rel=1e-12)
        assert forcing.certify([0.1])


class TestBuildModel:
    def test_kinds(self):
        assert isinstance(build_model("linear", {"a": 2.0}), LinearModel)
        assert isinstance(build_model("pme", {"n": 8}), PorousMediumModel)
        m = build_model("nse", {"N": 16, "forcing_amplitude": 1.0})
        assert not m.is_autonomous

    def test_unknown(self):
        with pytest.raises(ConfigError, match="model type"):
            build_model("heat", {})
        with pytest.raises(ConfigError, match="'b'"):
            build_model("linear", {"b": 1})

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 40), st.floats(1.1, 5.0))
    def test_pme_embedding_any_grid(self, n, r):
        m = PorousMediumModel(n, r)
        states = random_states(m, np.random.default_rng(n), 50, 1.0)
        assert check_embedding(m, states) >= -1e-12 * np.max(m.norm_v(states) ** 2)
