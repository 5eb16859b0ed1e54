"""Phase functions, kernel quadrature, decay fits, and semigroup norms."""

import numpy as np
import pytest

import rotmhd as rm
from rotmhd.dispersion import (KernelValue, PhaseFunctions, big_gamma, dgamma_dxi2,
                               gamma_phase, kernel, kernel_sup, kernel_tensor2d,
                               linear_solution_strichartz_norm, phase_bound_report,
                               profile_l2_norm, semigroup_strichartz_norm,
                               strichartz_scaling_table, _default_profile)


def sample_enlarged_set(rng, r, R, n):
    pts = []
    while len(pts) < n:
        cand = rng.uniform(-2 * R, 2 * R, size=3)
        xh = np.hypot(cand[0], cand[1])
        if (xh >= r / 2 and abs(cand[2]) >= r / 2
                and np.linalg.norm(cand) <= 2 * R):
            pts.append(cand)
    return np.asarray(pts)


class TestPhases:
    def test_gamma_product_identity(self, rng):
        # Gamma_A * Gamma_B = xi3^2 since A B = 1
        pts = sample_enlarged_set(rng, 0.25, 4.0, 50)
        ga = big_gamma(pts[:, 0], pts[:, 1], pts[:, 2], "A")
        gb = big_gamma(pts[:, 0], pts[:, 1], pts[:, 2], "B")
        assert np.max(np.abs(ga * gb - pts[:, 2] ** 2)) < 1e-12 * np.max(pts[:, 2] ** 2)

    @pytest.mark.parametrize("branch", ["A", "B"])
    def test_first_derivative_fd_order(self, branch, rng):
        # central differences of Gamma converge to -gamma at O(h^2)
        pts = sample_enlarged_set(rng, 0.25, 4.0, 20)
        errs = []
        for h in (1e-2, 5e-3):
            fd = -(big_gamma(pts[:, 0], pts[:, 1] + h, pts[:, 2], branch)
                   - big_gamma(pts[:, 0], pts[:, 1] - h, pts[:, 2], branch)) / (2 * h)
            errs.append(np.max(np.abs(fd - gamma_phase(pts[:, 0], pts[:, 1],
                                                       pts[:, 2], branch))))
        order = np.log2(errs[0] / errs[1])
        assert order > 1.7

    @pytest.mark.parametrize("branch", ["A", "B"])
    def test_second_derivative_fd_order(self, branch, rng):
        pts = sample_enlarged_set(rng, 0.25, 4.0, 20)
        errs = []
        for h in (1e-2, 5e-3):
            fd = (gamma_phase(pts[:, 0], pts[:, 1] + h, pts[:, 2], branch)
                  - gamma_phase(pts[:, 0], pts[:, 1] - h, pts[:, 2], branch)) / (2 * h)
            errs.append(np.max(np.abs(fd - dgamma_dxi2(pts[:, 0], pts[:, 1],
                                                       pts[:, 2], branch))))
        assert np.log2(errs[0] / errs[1]) > 1.7

    def test_bounds_report_finite(self, rng):
        rep = phase_bound_report(0.25, 4.0, 1.0, rng, n_samples=2000)
        for br in ("A", "B"):
            assert 0 < rep[br]["upper_c"] < np.inf
            assert 0 < rep[br]["lower_c"] < np.inf
            assert 0 < rep[br]["dupper_c"] < np.inf

    def test_phase_bundle(self):
        pf = PhaseFunctions("A")
        assert pf.Gamma(1.0, 0.5, 2.0) == big_gamma(1.0, 0.5, 2.0, "A")
        with pytest.raises(rm.ConfigurationError):
            big_gamma(1.0, 0.5, 2.0, "C")


class TestKernel:
    def test_theta_zero_positive_real(self):
        kv = kernel(0.0, 0.0, 0.0, 1.0, 0.25, 4.0)
        assert kv.converged
        assert abs(kv.value.imag) < 1e-10 * kv.value.real
        assert kv.value.real > 0

    def test_radial_matches_tensor2d(self):
        for theta, tau, z, x3 in ((0.0, 0.1, 0.0, 1.0), (3.0, 0.0, (0.4, 0.3), 0.7),
                                  (11.0, 0.2, (1.0, 0.0), 2.0)):
            a = kernel(theta, tau, z, x3, 0.25, 4.0)
            b = kernel_tensor2d(theta, tau, z, x3, 0.25, 4.0)
            assert abs(a.value - b.value) < 1e-5 * max(abs(a.value), 1e-10)

    def test_self_convergence_flag(self):
        kv = kernel(5.0, 0.0, 0.0, 1.0, 0.25, 4.0, rtol=1e-6)
        assert kv.converged and kv.error_estimate <= 1e-6 * abs(kv.value) + 1e-30

    def test_tau_damps(self):
        k0 = abs(kernel(1.0, 0.0, 0.0, 1.0, 0.25, 4.0).value)
        k1 = abs(kernel(1.0, 5.0, 0.0, 1.0, 0.25, 4.0).value)
        assert k1 < k0

    def test_branch_and_sign_variants(self):
        vals = {(br, sg): kernel(2.0, 0.0, 0.5, 1.0, 0.25, 4.0, branch=br,
                                 sign=sg).value
                for br in ("A", "B") for sg in (1, -1)}
        # opposite signs conjugate each other (real weight, odd phase)
        for br in ("A", "B"):
            assert vals[(br, 1)] == pytest.approx(np.conj(vals[(br, -1)]))

    def test_outside_support_xi3(self):
        kv = kernel(1.0, 0.0, 0.0, 9.0, 0.25, 4.0)  # |xi3| > 2R
        assert abs(kv.value) < 1e-12


class TestKernelSup:
    def test_sup_positive_and_stable(self):
        s1 = kernel_sup(2.0, 0.0, 0.25, 4.0, n_z=12, n_xi3=12)
        s2 = kernel_sup(2.0, 0.0, 0.25, 4.0, n_z=24, n_xi3=24)
        assert s1.value > 0
        assert abs(s1.value - s2.value) < 0.1 * s2.value

    def test_theta_zero_plateau(self):
        # continuity: tiny theta matches theta = 0
        a = kernel_sup(0.0, 0.0, 0.25, 4.0).value
        b = kernel_sup(1e-4, 0.0, 0.25, 4.0).value
        assert abs(a - b) < 1e-3 * a


class TestStrichartz:
    def test_profile_norm_positive(self):
        n = profile_l2_norm(_default_profile(0.25, 4.0), 0.25, 4.0, n=512)
        assert n > 0

    def test_t0_value_bernstein_bound(self):
        # || Psi(D) f ||_{Linf_h L2_v} at t ~ 0 is positive and <= C R ||f||_{L2}
        res = semigroup_strichartz_norm(0.5, 0.0, np.inf, 0.25, 4.0,
                                        n_t=8, n_x=32, n_xi3=24)
        f_l2 = profile_l2_norm(_default_profile(0.25, 4.0), 0.25, 4.0, n=512)
        assert res.sup_series[0] > 0
        assert res.sup_series[0] <= 10.0 * 4.0 * f_l2

    def test_p_inf_is_sup(self):
        res = semigroup_strichartz_norm(0.5, 0.0, np.inf, 0.25, 4.0,
                                        n_t=8, n_x=16, n_xi3=12)
        assert res.value == pytest.approx(np.max(res.sup_series))

    def test_refinement_stability(self):
        a = semigroup_strichartz_norm(0.2, 0.0, 1, 0.25, 4.0,
                                      n_t=24, n_x=32, n_xi3=16)
        b = semigroup_strichartz_norm(0.2, 0.0, 1, 0.25, 4.0,
                                      n_t=48, n_x=64, n_xi3=32)
        assert abs(a.value - b.value) < 0.05 * b.value

    def test_p_validation(self):
        with pytest.raises(rm.ConfigurationError):
            semigroup_strichartz_norm(0.1, 0.0, 0.5, 0.25, 4.0)

    def test_sweep_validation(self):
        with pytest.raises(rm.ConfigurationError):
            strichartz_scaling_table(0.0, [1], [0.1, 0.05], 0.25, 4.0)
        with pytest.raises(rm.ConfigurationError):
            strichartz_scaling_table(0.5, [1], [0.1, 0.01, 0.001], 0.25, 4.0)

    def test_full_linear_route_runs(self):
        res = linear_solution_strichartz_norm(0.2, 0.0, 1, 0.5, 2.0, n_xi=32,
                                              n_x=12, n_xi3=12, n_t=10, t_max=5.0)
        assert np.isfinite(res.value) and res.value > 0
        assert np.all(np.isfinite(res.sup_series))
