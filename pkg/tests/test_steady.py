import numpy as np
import pytest

from fblv import GridSpec, ModelParams, ProblemKind, make_initial_data, simulate
from fblv.errors import ConfigError
from fblv.steady import (
    HalfLineGrid,
    build_barriers,
    check_sandwich,
    solve_coupled_halfline,
    solve_logistic_halfline,
)

from oracles import LogisticHalfLineOracle


def params(**kw) -> ModelParams:
    base = dict(k=0.5, h=0.5, r=1.0, D=1.0, mu=1.0, rho=1.0, s0=4.0)
    base.update(kw)
    return ModelParams(**base)


@pytest.fixture(scope="module")
def grid() -> HalfLineGrid:
    return HalfLineGrid(L=40.0, m=4000)


@pytest.fixture(scope="module")
def logistic_profile(grid):
    return solve_logistic_halfline(1.0, 1.0, grid)


class TestLogisticHalfline:
    def test_slope_at_origin_vs_energy_relation(self, grid, logistic_profile):
        y = logistic_profile
        slope = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * grid.hx)
        assert slope == pytest.approx(np.sqrt(1.0 / 3.0), abs=1e-4)

    def test_profile_matches_quadrature_oracle(self, grid, logistic_profile):
        oracle = LogisticHalfLineOracle(1.0, 1.0)
        xs = np.linspace(0.0, 10.0, 81)
        ref = oracle.profile(xs)
        num = np.interp(xs, grid.x, logistic_profile)
        assert np.max(np.abs(num - ref)) <= 1e-4

    def test_far_field_value(self, grid, logistic_profile):
        assert np.interp(5.0, grid.x, logistic_profile) >= 0.95
        assert logistic_profile[-1] == 1.0

    def test_interior_in_unit_interval(self, grid, logistic_profile):
        y = logistic_profile[1:-1]
        assert np.all(y > 0.0) and np.all(y < 1.0 + 1e-12)
        assert np.all(np.diff(logistic_profile) >= -1e-12)

    def test_short_grid_rejected(self):
        with pytest.raises(ConfigError, match="diffusion lengths"):
            solve_logistic_halfline(9.0, 1.0, HalfLineGrid(L=20.0, m=400))


class TestCoupledHalfline:
    def test_constant_coefficient_reduces_to_scaled_logistic(self, grid):
        c = 0.7
        u = solve_coupled_halfline(np.full(grid.m + 1, c), 1.0, 1.0, grid)
        assert abs(u[-1] - c) <= 1e-3
        assert abs(np.interp(grid.L * 0.9, grid.x, u) - c) <= 1e-3

    def test_decreasing_coefficient_far_field(self, grid):
        f = 1.0 + np.exp(-grid.x)  # decreasing toward 1
        u = solve_coupled_halfline(f, 1.0, 2.0, grid)
        assert abs(u[-1] - f[-1] / 2.0) <= 1e-3

    def test_nonpositive_infimum_rejected(self, grid):
        f = 1.0 - grid.x / 20.0
        with pytest.raises(ConfigError, match="positive infimum"):
            solve_coupled_halfline(f, 1.0, 1.0, grid)

    def test_comparison_principle(self, grid):
        # f1 <= f2 nodewise implies u1 <= u2 nodewise
        rng = np.random.default_rng(23)
        for _ in range(5):
            base = rng.uniform(0.3, 1.0)
            bump = rng.uniform(0.0, 0.5)
            f1 = base + bump * np.exp(-0.3 * grid.x)
            f2 = f1 + rng.uniform(0.05, 0.5)
            u1 = solve_coupled_halfline(f1, 1.0, 1.0, grid)
            u2 = solve_coupled_halfline(f2, 1.0, 1.0, grid)
            assert np.max(u1 - u2) <= 1e-8


class TestBuildBarriers:
    def test_reference_bounds(self, grid):
        prof = build_barriers(params(), grid)
        assert np.max(prof.u_low) <= 0.5 + 1e-6
        assert np.max(prof.v_low) <= 0.5 + 1e-6
        assert prof.u_bar[0] == 0.0 and prof.v_low[0] == 0.0
        assert np.all(prof.u_bar[1:] > 0.0) and np.all(prof.u_low[1:] > 0.0)
        assert np.max(prof.u_low - prof.u_bar) <= 1e-8
        assert np.max(prof.v_low - prof.v_bar) <= 1e-8

    def test_vanishing_competition_closes_gap(self, grid):
        prof = build_barriers(params(k=1e-3, h=1e-3), grid)
        assert np.max(prof.u_bar - prof.u_low) < 1e-2
        assert np.max(prof.v_bar - prof.v_low) < 1e-2

    def test_strong_competition_rejected(self, grid):
        with pytest.raises(ConfigError, match="weak competition"):
            build_barriers(params(k=1.2), grid)

    def test_truncation_robustness(self):
        # doubling L moves the profiles on [0, L/2] by less than 1e-6
        g1 = HalfLineGrid(L=30.0, m=3000)
        g2 = HalfLineGrid(L=60.0, m=6000)
        p1 = build_barriers(params(), g1)
        p2 = build_barriers(params(), g2)
        xs = np.linspace(0.0, 15.0, 301)
        for a, b in ((p1.u_bar, p2.u_bar), (p1.v_low, p2.v_low),
                     (p1.u_low, p2.u_low), (p1.v_bar, p2.v_bar)):
            assert np.max(np.abs(np.interp(xs, g1.x, a) - np.interp(xs, g2.x, b))) < 1e-6

    def test_csv_export(self, grid, tmp_path):
        prof = build_barriers(params(), grid)
        prof.to_csv(tmp_path / "barriers.csv")
        lines = (tmp_path / "barriers.csv").read_text().splitlines()
        assert lines[0] == "x,u_bar,v_bar,u_low,v_low"
        assert len(lines) == grid.m + 2


@pytest.fixture(scope="module")
def short_dfb_run():
    p = params(s0=4.0)
    init = make_initial_data(ProblemKind.DFB, 4.0, 128)
    return simulate(p, ProblemKind.DFB, init, GridSpec(128, 5e-4, 1.0))


class TestCheckSandwich:
    def test_profile_equal_to_upper_barrier_passes(self, grid, short_dfb_run):
        prof = build_barriers(params(), grid)
        rec = short_dfb_run
        snap = rec.snapshots[-1]
        snap.U[:] = np.interp(snap.x, grid.x, prof.u_bar)
        snap.V[:] = np.interp(snap.x, grid.x, prof.v_bar)
        report = check_sandwich(rec, prof, (0.0, 3.0), 0.0)
        assert report.max_upper_violation_u <= 1e-12
        assert report.max_upper_violation_v <= 1e-12
        assert report.passed

    def test_window_outside_front_rejected(self, grid, short_dfb_run):
        prof = build_barriers(params(), grid)
        with pytest.raises(ConfigError, match="beyond the final front"):
            check_sandwich(short_dfb_run, prof, (0.0, 100.0), 0.02)

    def test_negative_slack_rejected(self, grid, short_dfb_run):
        prof = build_barriers(params(), grid)
        with pytest.raises(ConfigError, match="slack"):
            check_sandwich(short_dfb_run, prof, (0.0, 3.0), -1.0)

    def test_nfb_record_rejected(self, grid):
        prof = build_barriers(params(), grid)
        p = params(s0=4.0)
        init = make_initial_data(ProblemKind.NFB, 4.0, 64)
        rec = simulate(p, ProblemKind.NFB, init, GridSpec(64, 1e-3, 0.1))
        with pytest.raises(ConfigError, match="DFB"):
            check_sandwich(rec, prof, (0.0, 3.0), 0.02)
