import numpy as np
import pytest
from scipy.integrate import solve_ivp

from mcflab.flow import (
    ConvexityError,
    FlowControls,
    StepSizeError,
    SupportFunction,
    circle,
    curvature_from_support,
    ellipse,
    extinction_estimates,
    max_stable_step,
    perturbed_circle,
    run_to_extinction,
    step_flow,
)


def flow_for(sf, tau, n_steps):
    dt = tau / n_steps
    for _ in range(n_steps):
        sf = step_flow(sf, dt)
    return sf


class TestCurvature:
    def test_circle(self):
        assert np.allclose(curvature_from_support(circle(2.5)), 1 / 2.5, atol=1e-14)

    def test_translated_circle(self):
        k = curvature_from_support(circle(0.8, center=(0.3, -0.2)))
        assert np.allclose(k, 1 / 0.8, atol=1e-13)

    def test_ellipse_against_parametric_oracle(self):
        a, b = 1.2, 1 / 1.2
        sf = ellipse(a, b, m=128)
        k = curvature_from_support(sf)
        # parametric curve (a cos t, b sin t): kappa = ab / (a^2 sin^2 t + b^2 cos^2 t)^(3/2)
        t = np.linspace(0, 2 * np.pi, 20001)
        kp = a * b / (a ** 2 * np.sin(t) ** 2 + b ** 2 * np.cos(t) ** 2) ** 1.5
        assert np.max(k) == pytest.approx(np.max(kp), abs=1e-8)
        assert np.min(k) == pytest.approx(np.min(kp), abs=1e-8)

    def test_convexity_loss_reported(self):
        sf = SupportFunction.from_function(lambda t: 1 + 0.5 * np.cos(3 * t), 64)
        with pytest.raises(ConvexityError) as info:
            curvature_from_support(sf)
        assert info.value.theta is not None


class TestStep:
    def test_circle_radius_against_ode_oracle(self):
        sol = solve_ivp(lambda t, r: -1 / r, (0, 0.3), [1.0], rtol=1e-13, atol=1e-14)
        sf = flow_for(circle(1.0, m=32), 0.3, 300)
        assert np.allclose(sf.h, sol.y[0, -1], atol=1e-10)
        assert np.allclose(sf.h, np.sqrt(1 - 0.6), atol=1e-10)

    def test_translation_mode_constant(self):
        a = 0.2
        sf = flow_for(circle(1.0, center=(a, 0), m=64), 0.2, 200)
        ref = flow_for(circle(1.0, m=64), 0.2, 200)
        np.testing.assert_allclose(sf.h - ref.h, a * np.cos(sf.theta), atol=1e-12)

    def test_area_decrease_per_step(self):
        sf = ellipse(m=64)
        for dt in (1e-4, 5e-5):
            nxt = step_flow(sf, dt)
            assert (sf.area() - nxt.area()) / dt == pytest.approx(2 * np.pi, rel=1e-6)

    def test_rejects_bad_steps(self):
        sf = circle(m=64)
        with pytest.raises(StepSizeError):
            step_flow(sf, -1e-3)
        with pytest.raises(StepSizeError):
            step_flow(sf, 10 * max_stable_step(sf))


class TestRun:
    def test_unit_circle(self, circle_flow):
        assert circle_flow.T_hat == pytest.approx(0.5, abs=1e-6)
        assert np.hypot(*circle_flow.x0_hat) < 1e-8

    def test_circle_estimates_match_ball(self):
        tr = run_to_extinction(circle(0.6, center=(0.1, 0.2)), FlowControls(ds=0.2))
        T, x0 = extinction_estimates(tr)
        assert T == pytest.approx(0.18, abs=1e-9)
        np.testing.assert_allclose(x0, (0.1, 0.2), atol=1e-9)

    def test_ellipse_time_and_centre(self, ellipse_flow):
        assert ellipse_flow.T_hat == pytest.approx(0.5, abs=1e-6)
        assert np.hypot(*ellipse_flow.x0_hat) < 1e-6
        assert ellipse_flow.x0_converged

    def test_offset_circle(self):
        tr = run_to_extinction(circle(1.0, center=(0.3, 0.0)), FlowControls(ds=0.2))
        np.testing.assert_allclose(tr.x0_hat, (0.3, 0.0), atol=1e-6)

    def test_area_law_along_trajectory(self, ellipse_flow):
        A0 = ellipse_flow.area0
        for sf in ellipse_flow.snapshots[::10]:
            assert sf.area() == pytest.approx(A0 - 2 * np.pi * sf.tau, abs=1e-12)

    def test_area_strictly_decreasing(self, ellipse_flow):
        assert np.all(np.diff([sf.area() for sf in ellipse_flow.snapshots]) < 0)

    def test_isoperimetric_ratio_non_increasing(self, ellipse_flow):
        q = [sf.length() ** 2 / (4 * np.pi * sf.area()) for sf in ellipse_flow.snapshots]
        assert np.all(np.diff(q) <= 1e-12)

    def test_snapshots_uniform_in_s(self, ellipse_flow):
        s = ellipse_flow.s_values()
        np.testing.assert_allclose(np.diff(s), 0.025, atol=1e-6)

    def test_translation_equivariance(self):
        c = FlowControls(ds=0.5, area_floor=1e-3)
        v = np.array([0.37, -0.21])
        a = run_to_extinction(ellipse(m=64), c, refine_x0=False)
        b = run_to_extinction(ellipse(m=64).translated(v), c, refine_x0=False)
        sa, sb = a.snapshots[3], b.snapshots[3]
        assert sa.tau == pytest.approx(sb.tau, abs=1e-14)
        np.testing.assert_allclose(sb.h, sa.translated(v).h, atol=1e-10)

    def test_scaling(self):
        lam = 0.7
        sf = ellipse(m=64)
        a = flow_for(sf, 0.1, 200)
        b = flow_for(sf.scaled(lam), lam ** 2 * 0.1, 200)
        np.testing.assert_allclose(b.h, lam * a.h, atol=1e-10)

    def test_x0_grid_reproducible(self):
        c = FlowControls(cfl=2.5, ds=0.5, area_floor=1e-4)
        x = [run_to_extinction(perturbed_circle(11, m=m), c).x0_hat for m in (256, 512)]
        assert np.hypot(*(x[0] - x[1])) < 1e-4

    def test_bad_cfl(self):
        with pytest.raises(StepSizeError):
            run_to_extinction(circle(), FlowControls(cfl=3.0))

    def test_perturbed_circle_seeded(self):
        a, b = perturbed_circle(3), perturbed_circle(3)
        np.testing.assert_array_equal(a.h, b.h)
        assert not np.array_equal(a.h, perturbed_circle(4).h)
        assert np.min(a.curvature_radius()) > 0
