"""Tendencies, integrators, runs, and the twin-run diagnostic."""

import numpy as np
import pytest

import rotmhd as rm
from rotmhd.cutoff import CutoffParams
from rotmhd.solver import (BlowupError, SolverConfig, advection_tendency,
                           nonlinear_rhs, run, step, twin_run_divergence)
from rotmhd.spectral import (l2_inner, l2_norm, state_h0s_norm,
                             state_h_gradient_sq, state_l2_sq)
from conftest import random_state


MP = rm.ModelParams.fast_rotation(0.25, 0.8, s=1.0)


def zero_state(grid):
    z = rm.SpectralField(grid, np.zeros((3,) + grid.shape, complex))
    return rm.StateVector(z, z)


def single_mode_state(grid, idx=(2, 0, 3), w=(0.0, 1.0, 0.0)):
    # one +-xi pair with w orthogonal to xi: the self-advection vanishes
    c = np.zeros((3,) + grid.shape, complex)
    c[:, idx[0], idx[1], idx[2]] = w
    c[:, -idx[0] if idx[0] else 0, -idx[1] if idx[1] else 0,
      -idx[2] if idx[2] else 0] = np.conj(w)
    u = rm.SpectralField(grid, c)
    return rm.StateVector(u, rm.SpectralField(grid, np.zeros_like(c)))


class TestTendencies:
    def test_zero_state(self, grid16):
        rhs = nonlinear_rhs(zero_state(grid16), MP)
        assert np.max(np.abs(rhs.as_stack())) == 0.0

    def test_single_mode_advection_vanishes(self, grid16):
        st = single_mode_state(grid16)
        adv = advection_tendency(st)
        assert np.max(np.abs(adv.as_stack())) == 0.0

    def test_advection_energy_cancellation(self, grid16, rng):
        st = random_state(grid16, rng)
        adv = advection_tendency(st)
        bracket = l2_inner(adv.u, st.u) + l2_inner(adv.b, st.b)
        scale = (np.sqrt(state_l2_sq(st)) ** 3) or 1.0
        assert abs(bracket) < 1e-10 * scale

    def test_dissipative_identity(self, grid16, rng):
        # <rhs(U), U> = -eps^alpha ||grad_h U||^2 (all other terms cancel)
        st = random_state(grid16, rng)
        rhs = nonlinear_rhs(st, MP)
        got = l2_inner(rhs.u, st.u) + l2_inner(rhs.b, st.b)
        want = -MP.epsilon**MP.alpha * state_h_gradient_sq(st)
        assert abs(got - want) < 1e-9 * abs(want)

    def test_generic_mode_uses_explicit_coefficients(self, grid16, rng):
        st = random_state(grid16, rng)
        mp = rm.ModelParams(epsilon=0.25, alpha=0.8, nu=0.1, nu_prime=0.2, mu=3.0)
        rhs = nonlinear_rhs(st, mp, mode="generic")
        got = l2_inner(rhs.u, st.u) + l2_inner(rhs.b, st.b)
        from rotmhd.spectral import h_gradient_sq
        want = -(0.1 * h_gradient_sq(st.u) + 0.2 * h_gradient_sq(st.b))
        assert abs(got - want) < 1e-9 * abs(want)

    def test_nonfinite_raises_blowup(self, grid16):
        c = np.full((3,) + grid16.shape, np.nan, dtype=complex)
        bad = rm.StateVector(rm.SpectralField(grid16, c), rm.SpectralField(grid16, c))
        with pytest.raises(BlowupError):
            nonlinear_rhs(bad, MP)


class TestStep:
    def test_linear_step_is_exact_propagator(self, grid16):
        st = single_mode_state(grid16)
        cfg = SolverConfig(dt=0.02, t_end=0.1)
        out = step(st, 0.02, cfg, MP)
        want = rm.propagate_exact(st, 0.02, MP)
        err = np.max(np.abs(out.as_stack() - want.as_stack()))
        assert err < 1e-12 * np.max(np.abs(want.as_stack()))

    def test_fourth_order_self_convergence(self, grid16, rng):
        st = random_state(grid16, rng, norm=0.4)
        cfg = SolverConfig(dt=1.0, t_end=1.0)

        def final(dt):
            out = st
            n = int(round(0.2 / dt))
            for _ in range(n):
                out = step(out, dt, cfg, MP)
            return out.as_stack()

        ref = final(0.0025)
        e1 = np.max(np.abs(final(0.02) - ref))
        e2 = np.max(np.abs(final(0.01) - ref))
        order = np.log2(e1 / e2)
        assert order >= 3.5

    def test_preserves_divfree_and_hermitian(self, grid16, rng):
        st = random_state(grid16, rng, norm=0.5)
        cfg = SolverConfig(dt=0.01, t_end=0.1)
        out = st
        for _ in range(10):
            out = step(out, 0.01, cfg, MP)
        assert rm.max_divergence(out.u) < 1e-10
        assert rm.max_divergence(out.b) < 1e-10
        w = rm.inverse_transform(out.u)
        assert np.max(np.abs(w.imag)) < 1e-10 * np.max(np.abs(w.real))

    def test_imex_euler_first_order_consistency(self, grid16, rng):
        st = random_state(grid16, rng, norm=0.3)
        cfg = SolverConfig(dt=1.0, t_end=1.0, integrator="imex-euler")

        def final(dt):
            out = st
            for _ in range(int(round(0.1 / dt))):
                out = step(out, dt, cfg, MP)
            return out.as_stack()

        ref_cfg = SolverConfig(dt=1.0, t_end=1.0)
        ref = st
        for _ in range(100):
            ref = step(ref, 0.001, ref_cfg, MP)
        e1 = np.max(np.abs(final(0.01) - ref.as_stack()))
        e2 = np.max(np.abs(final(0.005) - ref.as_stack()))
        assert 0.6 < np.log2(e1 / e2) < 1.6


class TestRun:
    def test_small_data_stays_bounded(self, grid16, rng):
        nu = MP.epsilon**MP.alpha
        st = random_state(grid16, rng, norm=0.01 * nu)
        res = run(st, SolverConfig(dt=0.02, t_end=1.0, cadence=10), MP)
        assert res.status == "completed"
        h0 = res.records[0].h0s
        assert all(r.h0s <= 1.05 * h0 for r in res.records)

    def test_single_mode_exact_decay(self, grid16):
        st = single_mode_state(grid16)
        res = run(st, SolverConfig(dt=0.05, t_end=0.5, cadence=2), MP)
        xi_h_sq = float(grid16.xi1[2, 0, 0] ** 2)
        nu = MP.epsilon**MP.alpha
        e0 = res.records[0].l2_energy
        for rec in res.records:
            want = e0 * np.exp(-2 * nu * xi_h_sq * rec.t)
            assert abs(rec.l2_energy - want) < 1e-9 * e0

    def test_energy_residual_scales(self, grid16, rng):
        st = random_state(grid16, rng, norm=0.5)
        resids = []
        for dt in (0.02, 0.01):
            res = run(st, SolverConfig(dt=dt, t_end=0.2, cadence=1000), MP)
            resids.append(abs(res.records[-1].energy_residual))
        assert resids[1] < resids[0] / 6.0   # at least ~3rd order decay

    def test_blowup_flagged(self, grid8, rng):
        import warnings
        st = random_state(grid8, rng, norm=50.0)
        cfg = SolverConfig(dt=0.5, t_end=50.0, cadence=1, blowup_factor=2.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # CFL advisory is expected here
            res = run(st, cfg, rm.ModelParams.fast_rotation(0.5, 30.0))
        assert res.status == "blowup"
        assert res.blowup_time is not None
        assert res.records[-1].blowup

    def test_two_route_consistency(self, grid16, rng):
        st = random_state(grid16, rng, norm=0.4)
        cut = CutoffParams(r=0.9, R=3.0, beta=1.0, eta=1.0, s=1.0,
                           epsilon=MP.epsilon, alpha=MP.alpha)
        cfg = SolverConfig(dt=0.01, t_end=0.3, cadence=10)
        direct = run(st, cfg, MP, mode="direct")
        split = run(st, cfg, MP, mode="coupled-split", cutoff=cut)
        num = state_h0s_norm(direct.state - split.state, 1.0)
        den = state_h0s_norm(direct.state, 1.0)
        assert num < 1e-6 * den
        assert split.sup_tilde_h0s is not None
        assert split.bootstrap_threshold == pytest.approx(
            MP.epsilon**MP.alpha / 2.0)

    def test_coupled_split_requires_cutoff(self, grid16, rng):
        with pytest.raises(rm.ConfigurationError):
            run(random_state(grid16, rng), SolverConfig(dt=0.1, t_end=0.1),
                MP, mode="coupled-split")

    def test_cfl_advisory_warns(self, grid16, rng):
        st = random_state(grid16, rng, norm=200.0)
        with pytest.warns(rm.DiagnosticWarning):
            run(st, SolverConfig(dt=1.0, t_end=1.0, cadence=1,
                                 blowup_factor=1e6), MP)


class TestTwinRuns:
    def test_zero_perturbation(self, grid16, rng):
        st = random_state(grid16, rng, norm=0.3)
        rep = twin_run_divergence(st, zero_state(grid16),
                                  SolverConfig(dt=0.02, t_end=0.1, cadence=2), MP)
        assert np.max(rep.delta_hs1) == 0.0

    def test_linear_regime_contracts(self, grid16, rng):
        nu = MP.epsilon**MP.alpha
        st = random_state(grid16, rng, norm=1e-4 * nu)
        delta = random_state(grid16, rng, norm=1e-7)
        rep = twin_run_divergence(st, delta,
                                  SolverConfig(dt=0.02, t_end=0.4, cadence=4), MP)
        assert rep.complete
        assert rep.delta_hs1[-1] <= rep.delta_hs1[0] * (1 + 1e-9)

    def test_gronwall_envelope(self, rng):
        g = rm.Grid(16, 16)
        mp = rm.ModelParams.fast_rotation(0.5, 0.5, s=1.0)
        for seed in range(3):
            local = np.random.default_rng(seed)
            from conftest import random_state as rs
            st = rs(g, local, norm=0.6)
            delta = rs(g, local, norm=1e-6)
            rep = twin_run_divergence(st, delta,
                                      SolverConfig(dt=0.01, t_end=0.3, cadence=5), mp)
            assert rep.complete
            # log growth of the squared norm is dominated by C int f
            growth = 2 * (np.log(rep.delta_hs1[1:]) - np.log(rep.delta_hs1[0]))
            bound = rep.empirical_c * rep.f_integral[1:]
            assert np.all(growth <= bound + 1e-9)
            assert rep.empirical_c < 50.0
