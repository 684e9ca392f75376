import math

import numpy as np
import pytest

from fblv import (
    InitSpec,
    ModelParams,
    Preset,
    ProblemKind,
    Regime,
    a_priori_bound,
    classify_regime,
    coexistence_limit,
    lambda_threshold,
    make_initial_data,
)
from fblv.errors import ConfigError, UncoveredRegimeError

from oracles import scalar_logistic_flow

NFB, DFB = ProblemKind.NFB, ProblemKind.DFB


def params(**kw) -> ModelParams:
    base = dict(k=0.5, h=0.5, r=1.0, D=1.0, mu=1.0, rho=1.0, s0=2.0)
    base.update(kw)
    return ModelParams(**base)


class TestLambdaThreshold:
    def test_nfb_reference(self):
        assert lambda_threshold(params(D=1.0, r=1.0), NFB) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_dfb_min_branch(self):
        # min(1, sqrt(4/1)) = 1, so the DFB value is exactly pi
        assert lambda_threshold(params(D=4.0, r=1.0), DFB) == pytest.approx(math.pi, abs=1e-12)

    def test_nfb_diffusion_branch(self):
        assert lambda_threshold(params(D=1.0, r=4.0), NFB) == pytest.approx(math.pi / 4, abs=1e-12)

    def test_monotonicity_and_kind_ratio(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            D, r = rng.uniform(0.1, 5.0, 2)
            p = params(D=D, r=r)
            assert lambda_threshold(p, DFB) == pytest.approx(2.0 * lambda_threshold(p, NFB), rel=1e-15)
            # nonincreasing in r (strictly decreasing off the min{1,.}=1
            # branch, where the threshold saturates), nondecreasing in D
            bumped = lambda_threshold(params(D=D, r=r * 1.5), NFB)
            assert bumped <= lambda_threshold(p, NFB)
            if r * 1.5 > D:
                assert bumped < lambda_threshold(p, NFB)
            assert lambda_threshold(params(D=D * 1.5, r=r), NFB) >= lambda_threshold(p, NFB)


class TestRegimes:
    @pytest.mark.parametrize("h,k,expected", [
        (0.3, 0.2, Regime.WEAK_COMPETITION),
        (0.5, 1.5, Regime.V_WINS),
        (2.0, 2.0, Regime.UNCOVERED),
        (1.5, 0.5, Regime.U_WINS),
        # closed-inequality boundaries
        (0.5, 1.0, Regime.V_WINS),
        (1.0, 0.5, Regime.U_WINS),
        (1.0, 1.0, Regime.UNCOVERED),
    ])
    def test_partition(self, h, k, expected):
        assert classify_regime(params(h=h, k=k)) is expected

    def test_interior_stability(self):
        # points strictly inside a regime stay there under small perturbation
        rng = np.random.default_rng(11)
        for _ in range(100):
            h, k = rng.uniform(0.05, 2.0, 2)
            if abs(h - 1.0) < 1e-3 or abs(k - 1.0) < 1e-3:
                continue
            regime = classify_regime(params(h=h, k=k))
            eps = 1e-6
            for dh, dk in ((eps, 0), (-eps, 0), (0, eps), (0, -eps)):
                assert classify_regime(params(h=h + dh, k=k + dk)) is regime


class TestCoexistenceLimit:
    def test_weak_formula(self):
        u, v = coexistence_limit(params(k=0.2, h=0.3))
        assert u == pytest.approx(0.8 / 0.94, rel=1e-12)
        assert v == pytest.approx(0.7 / 0.94, rel=1e-12)

    def test_symmetric(self):
        assert coexistence_limit(params(k=0.5, h=0.5)) == pytest.approx((2 / 3, 2 / 3), rel=1e-12)

    def test_exclusion(self):
        assert coexistence_limit(params(k=1.5, h=0.5)) == (0.0, 1.0)
        assert coexistence_limit(params(k=0.5, h=1.5)) == (1.0, 0.0)

    def test_uncovered_rejected(self):
        with pytest.raises(UncoveredRegimeError):
            coexistence_limit(params(k=2.0, h=2.0))

    def test_fixed_point_equations(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            k, h = rng.uniform(0.01, 0.99, 2)
            u, v = coexistence_limit(params(k=k, h=h))
            assert abs(1.0 - u - k * v) < 1e-14
            assert abs(1.0 - v - h * u) < 1e-14


class TestAPrioriBound:
    def test_carrying_capacity_dominates(self):
        init = make_initial_data(NFB, 2.0, 64)
        assert a_priori_bound(init) == 1.0

    def test_large_initial_data(self):
        init = make_initial_data(NFB, 2.0, 64, InitSpec(amplitude_u=3.0, amplitude_v=0.5))
        assert a_priori_bound(init) == 3.0
        # oracle: the spatially homogeneous logistic flow from 3 decreases,
        # so its running maximum is the initial value
        flow = scalar_logistic_flow(3.0, 20.0)
        assert np.max(flow) == pytest.approx(3.0, rel=1e-12)
        assert np.all(np.diff(flow) <= 0.0)

    def test_boundary_case(self):
        init = make_initial_data(NFB, 2.0, 64, InitSpec(amplitude_u=1.0, amplitude_v=1.0))
        assert a_priori_bound(init) == 1.0


class TestModelParams:
    def test_positive_required(self):
        for field, value in [("r", 0.0), ("D", -1.0), ("rho", 0.0), ("s0", -2.0),
                             ("k", -0.1), ("mu", -1e-9)]:
            with pytest.raises(ConfigError):
                params(**{field: value})

    def test_switched_off_coupling_allowed(self):
        params(k=0.0, h=0.0, mu=0.0)


class TestInitialData:
    def test_nfb_preset_compatibility(self):
        init = make_initial_data(NFB, 1.5, 128)
        assert init.preset is Preset.COSINE_BUMP
        assert init.u0[-1] == 0.0 and init.v0[-1] == 0.0
        assert init.u0[0] == 0.5  # cosine bump peaks at the no-flux wall
        assert np.all(init.u0[1:-1] > 0.0)

    def test_dfb_preset_compatibility(self):
        init = make_initial_data(DFB, 1.5, 128)
        assert init.preset is Preset.SINE_BUMP
        assert init.u0[0] == 0.0 and init.u0[-1] == 0.0
        assert np.all(init.v0[1:-1] > 0.0)

    def test_preset_kind_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            make_initial_data(NFB, 1.0, 64, InitSpec(preset="sine"))
        with pytest.raises(ConfigError):
            make_initial_data(DFB, 1.0, 64, InitSpec(preset="cosine"))

    def test_table_roundtrip_and_validation(self):
        x = np.linspace(0.0, 2.0, 65)
        u = 0.4 * np.cos(np.pi * x / 4.0)
        u[-1] = 0.0
        init = make_initial_data(NFB, 2.0, 64, InitSpec(preset="table", table=(x, u, u)))
        assert init.preset is Preset.TABLE
        # a sine table violates the NFB no-flux condition at x = 0
        bad = 0.4 * np.sin(np.pi * x / 2.0)
        bad[-1] = 0.0
        with pytest.raises(ConfigError, match="no-flux"):
            make_initial_data(NFB, 2.0, 64, InitSpec(preset="table", table=(x, bad, bad)))

    def test_endpoint_zero_enforced(self):
        x = np.linspace(0.0, 2.0, 65)
        u = np.full(65, 0.3)
        with pytest.raises(ConfigError):
            make_initial_data(NFB, 2.0, 64, InitSpec(preset="table", table=(x, u, u)))
