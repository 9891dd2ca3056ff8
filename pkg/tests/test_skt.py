import numpy as np
import pytest

from btflow.errors import CFLViolation
from btflow.fdref import OracleProfile, l1_error
from btflow.measures import Grid2D, JointDensity, normalize
from btflow.skt import (
    MarginalPair,
    SKTConfig,
    build_mobility,
    compare_correlated_vs_decoupled,
    constant_mobility,
    decoupled_stable_dt,
    joint_stable_dt,
    marginals,
    nonlocal_coefficient,
    product_gaussian,
    relative_entropy,
    run_skt_scenario,
    step_decoupled_fd,
    step_joint_fd,
)


def square_grid(n=32, lo=-5.0, hi=5.0):
    return Grid2D(n, n, lo, hi, lo, hi)


class TestMobility:
    def test_peak_on_diagonal(self):
        g = square_grid(16)
        mob = build_mobility(g, sigma=0.5, c_floor=0.1)
        z = 1.0 / (0.5 * np.sqrt(2 * np.pi))
        np.testing.assert_allclose(np.diag(mob.values), 0.1 + z, atol=1e-12)
        assert mob.upper_bound == pytest.approx(0.1 + z)

    def test_far_field_floor(self):
        g = square_grid(32)
        mob = build_mobility(g, sigma=0.3, c_floor=0.05)
        assert mob.values[0, -1] == pytest.approx(0.05, abs=1e-12)
        assert mob.lower_bound >= 0.05

    def test_halving_sigma_doubles_peak(self):
        g = square_grid(16)
        m1 = build_mobility(g, sigma=0.4, c_floor=0.1)
        m2 = build_mobility(g, sigma=0.2, c_floor=0.1)
        peak1 = m1.upper_bound - 0.1
        peak2 = m2.upper_bound - 0.1
        assert peak2 == pytest.approx(2.0 * peak1, rel=1e-12)

    def test_swap_symmetry(self):
        g = square_grid(16)
        mob = build_mobility(g, sigma=0.3, c_floor=0.1)
        np.testing.assert_allclose(mob.values, mob.values.T, atol=1e-14)

    def test_validation(self):
        with pytest.raises(ValueError):
            build_mobility(square_grid(8), sigma=-1.0, c_floor=0.1)


class TestStepJointFd:
    def test_constant_density_fixed(self):
        g = Grid2D(16, 16, 0.0, 1.0, 0.0, 1.0)
        p = JointDensity(g, np.ones((16, 16)))
        mob = constant_mobility(g, 1.0)
        out = step_joint_fd(p, mob, 0.5 * joint_stable_dt(p, mob))
        np.testing.assert_array_equal(out.values, p.values)

    def test_mass_conserved(self):
        g = square_grid(32)
        p = product_gaussian(g, (-1.0, 1.0), 0.5)
        mob = build_mobility(g, 0.5, 0.2)
        out = p
        for _ in range(20):
            out = step_joint_fd(out, mob, 0.5 * joint_stable_dt(out, mob))
        assert g.h1 * g.h2 * out.values.sum() == pytest.approx(1.0, abs=1e-12)

    def test_rotation_equivariance_constant_mobility(self):
        # with M constant the dynamics is the 2D porous-medium flow; a
        # quarter-turn symmetric state stays symmetric (the sequential axis
        # sweeps add in a fixed order, so drift is a few ulp per step)
        g = Grid2D(32, 32, -1.0, 1.0, -1.0, 1.0)
        p = product_gaussian(g, (0.0, 0.0), 0.05)
        mob = constant_mobility(g, 1.0)
        state = p
        for _ in range(10):
            state = step_joint_fd(state, mob, 0.5 * joint_stable_dt(state, mob))
        assert np.abs(state.values - np.rot90(state.values)).max() <= 1e-12

    def test_swap_reflection_equivariance(self):
        cfg = SKTConfig(n1=32, n2=32)
        g = cfg.grid()
        mob = build_mobility(g, cfg.sigma, cfg.c_floor)
        p = product_gaussian(g, cfg.center, cfg.variance)

        def sym(v):
            return v[::-1, ::-1].T

        state = p
        for _ in range(50):
            state = step_joint_fd(state, mob, 0.5 * joint_stable_dt(state, mob))
        assert np.abs(state.values - sym(state.values)).max() <= 1e-12

    def test_cfl_violation(self):
        g = square_grid(16)
        p = product_gaussian(g, (0.0, 0.0), 1.0)
        mob = constant_mobility(g, 1.0)
        with pytest.raises(CFLViolation):
            step_joint_fd(p, mob, 10.0 * joint_stable_dt(p, mob))


class TestMarginals:
    def test_product_recovers_factors(self):
        g = square_grid(24)
        gx = g.axis1()
        u = normalize(np.exp(-0.5 * (gx.centers() + 1.0) ** 2), gx)
        v = normalize(np.exp(-0.5 * (gx.centers() - 2.0) ** 2 / 0.5), gx)
        p = JointDensity(g, np.outer(u.values, v.values))
        pair = marginals(p)
        np.testing.assert_allclose(pair.u1.values, u.values, atol=1e-12)
        np.testing.assert_allclose(pair.u2.values, v.values, atol=1e-12)

    def test_symmetric_joint_equal_marginals(self):
        g = square_grid(16)
        c1, c2 = g.centers()
        vals = np.exp(-0.5 * (c1[:, None] ** 2 + c2[None, :] ** 2))
        vals /= g.h1 * g.h2 * vals.sum()
        pair = marginals(JointDensity(g, vals))
        np.testing.assert_allclose(pair.u1.values, pair.u2.values, atol=1e-14)

    def test_unit_masses(self):
        g = square_grid(16)
        p = product_gaussian(g, (-2.0, 2.0), 0.4)
        pair = marginals(p)
        assert g.h1 * pair.u1.values.sum() == pytest.approx(1.0, abs=1e-12)
        assert g.h2 * pair.u2.values.sum() == pytest.approx(1.0, abs=1e-12)


class TestRelativeEntropy:
    def test_product_density_zero(self):
        g = square_grid(24)
        p = product_gaussian(g, (-1.0, 1.0), 0.5)
        assert abs(relative_entropy(p)) <= 1e-12

    def test_uniform_diagonal_log_n(self):
        # p uniform on the n diagonal cells of an n x n grid has marginals
        # uniform over rows/columns, so H = log n exactly
        n = 4
        g = Grid2D(n, n, 0.0, 1.0, 0.0, 1.0)
        vals = np.diag(np.full(n, (1.0 / n) / (g.h1 * g.h2)))  # mass 1/n per diagonal cell
        p = JointDensity(g, vals)
        assert relative_entropy(p) == pytest.approx(np.log(n), abs=1e-12)

    def test_mixture_monotone_in_correlation(self):
        n = 16
        g = Grid2D(n, n, 0.0, 1.0, 0.0, 1.0)
        product = np.ones((n, n))
        diagonal = np.diag(np.full(n, n))
        values = []
        for epsilon in (0.0, 0.25, 0.5):
            mix = (1 - epsilon) * product + epsilon * diagonal
            values.append(relative_entropy(JointDensity(g, mix)))
        assert values[0] <= 1e-12
        assert values[0] < values[1] < values[2]

    def test_nonnegative(self):
        rng = np.random.default_rng(0)
        g = square_grid(12)
        vals = rng.uniform(0.1, 1.0, (12, 12))
        vals /= g.h1 * g.h2 * vals.sum()
        assert relative_entropy(JointDensity(g, vals)) >= -1e-12


class TestScenario:
    def test_default_scenario_checks(self):
        cfg = SKTConfig(n1=64, n2=64, t_final=0.5, dt_cap=1e-2, snapshot_times=(0.5,))
        run = run_skt_scenario(cfg)
        assert run.record.all_passed()
        ent = run.record.tv["relative_entropy"]
        assert ent[0] <= 1e-6
        assert ent[-1] > 10 * max(ent[0], 0.0)
        assert run.contact_time is not None
        assert len(run.snapshots) == 1
        assert len(run.marginal_snapshots) == 1

    def test_entropy_monotone_after_contact(self):
        cfg = SKTConfig(n1=64, n2=64, t_final=0.4, dt_cap=1e-2)
        run = run_skt_scenario(cfg)
        t = run.record.times
        ent = run.record.tv["relative_entropy"]
        after = ent[t >= run.contact_time]
        assert np.diff(after).min() >= -1e-9


class TestDecoupled:
    def test_swap_symmetry_exact(self):
        g = square_grid(32)
        gx = g.axis1()
        u1 = normalize(np.exp(-0.5 * (gx.centers() + 1.5) ** 2 / 0.3), gx)
        u2 = normalize(np.exp(-0.5 * (gx.centers() - 1.5) ** 2 / 0.3), gx)
        mob = build_mobility(g, 0.4, 0.2)
        pair = MarginalPair(u1, u2)
        swapped = MarginalPair(u2, u1)
        dt = 0.5 * decoupled_stable_dt(pair, mob, "quadratic")
        out = step_decoupled_fd(pair, mob, dt, "quadratic")
        out_swapped = step_decoupled_fd(swapped, mob, dt, "quadratic")
        np.testing.assert_array_equal(out.u1.values, out_swapped.u2.values)
        np.testing.assert_array_equal(out.u2.values, out_swapped.u1.values)

    def test_entropy_variant_heat_equation(self):
        # with M = 1 the entropy variant is the unit heat equation for each
        # species: compare against the exact kernel on a large domain
        g = Grid2D(256, 256, -8.0, 8.0, -8.0, 8.0)
        gx = g.axis1()
        var0 = 0.25
        u0 = OracleProfile("heat_kernel", variance0=var0).evaluate(0.0, gx)
        pair = MarginalPair(u0, u0)
        mob = constant_mobility(g, 1.0)
        t, t_final = 0.0, 0.05
        while t < t_final:
            dt = min(0.9 * decoupled_stable_dt(pair, mob, "entropy"), t_final - t)
            pair = step_decoupled_fd(pair, mob, dt, "entropy")
            t += dt
        exact = OracleProfile("heat_kernel", variance0=var0).evaluate(t_final, gx)
        assert l1_error(pair.u1, exact) <= 5e-2

    def test_far_supports_reduce_to_floor_coefficient(self):
        # species far from each other only see the mobility floor, so the
        # nonlocal coefficient collapses to c_floor * int u_other^2
        g = square_grid(64)
        gx = g.axis1()
        u1 = normalize(np.exp(-0.5 * (gx.centers() + 3.0) ** 2 / 0.1), gx)
        u2 = normalize(np.exp(-0.5 * (gx.centers() - 3.0) ** 2 / 0.1), gx)
        mob = build_mobility(g, 0.2, 0.1)
        coef = nonlocal_coefficient(mob, u2, 2)
        expected = 0.1 * g.h2 * float((u2.values**2).sum())
        support1 = u1.values > 1e-6 * u1.values.max()
        np.testing.assert_allclose(coef[support1], expected, rtol=1e-6)

    def test_mass_conserved(self):
        g = square_grid(32)
        gx = g.axis1()
        u1 = normalize(np.exp(-0.5 * gx.centers() ** 2), gx)
        u2 = normalize(np.exp(-0.5 * (gx.centers() - 1.0) ** 2), gx)
        mob = build_mobility(g, 0.4, 0.2)
        pair = MarginalPair(u1, u2)
        for _ in range(10):
            pair = step_decoupled_fd(pair, mob, 0.5 * decoupled_stable_dt(pair, mob, "quadratic"))
        assert gx.h * pair.u1.values.sum() == pytest.approx(1.0, abs=1e-12)
        assert gx.h * pair.u2.values.sum() == pytest.approx(1.0, abs=1e-12)

    def test_unknown_variant(self):
        g = square_grid(16)
        gx = g.axis1()
        u = normalize(np.ones(16), gx)
        with pytest.raises(ValueError):
            step_decoupled_fd(MarginalPair(u, u), constant_mobility(g), 1e-6, "cubic")


class TestComparison:
    def test_gap_zero_at_start_then_grows(self):
        cfg = SKTConfig(n1=48, n2=48, t_final=0.3, dt_cap=1e-2)
        report = compare_correlated_vs_decoupled(cfg, n_compare=4)
        assert report.l1_gaps[0] <= 1e-6
        assert report.l1_gaps[-1] > report.l1_gaps[0]

    def test_far_supports_small_gap_short_horizon(self):
        cfg = SKTConfig(
            n1=48, n2=48, center=(-2.5, 2.5), variance=0.2, t_final=0.05, dt_cap=1e-2
        )
        report = compare_correlated_vs_decoupled(cfg, n_compare=3)
        assert report.l1_gaps[-1] <= 1e-3
