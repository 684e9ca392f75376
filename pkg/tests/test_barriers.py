import pytest

from fblv import ModelParams, ProblemKind, lambda_threshold, make_initial_data
from fblv.barriers import (
    BarrierGrid,
    SearchSpec,
    SupersolutionParams,
    certificate_dict,
    eval_barrier,
    search_mu0,
    verify_supersolution,
)
from fblv.errors import ConfigError, NoThresholdError, NoWitnessError

DFB = ProblemKind.DFB


def params(**kw) -> ModelParams:
    base = dict(k=0.5, h=0.5, r=1.0, D=1.0, mu=1.0, rho=1.0, s0=2.0)
    base.update(kw)
    return ModelParams(**base)


@pytest.fixture(scope="module")
def dfb_init():
    return make_initial_data(DFB, 2.0, 256)


@pytest.fixture(scope="module")
def witness(dfb_init):
    return search_mu0(params(), dfb_init)


class TestEvalBarrier:
    def test_cap_at_time_zero(self, dfb_init):
        p = SupersolutionParams(0.2, 0.1, 1.0, params(), dfb_init)
        sigma, _ = eval_barrier(p, 0.0, 0.0)
        assert sigma == pytest.approx(2.0 * 1.1, rel=1e-15)  # s0 (1 + delta/2)

    def test_cap_saturates(self, dfb_init):
        p = SupersolutionParams(0.2, 0.1, 1.0, params(), dfb_init)
        sigma, _ = eval_barrier(p, 500.0, 0.0)
        assert sigma == pytest.approx(2.0 * 1.2, rel=1e-12)  # s0 (1 + delta)
        assert p.sigma_infinity == pytest.approx(2.4, rel=1e-15)

    def test_envelope_vanishes_at_both_ends(self, dfb_init):
        p = SupersolutionParams(0.2, 0.1, 1.0, params(), dfb_init)
        for t in (0.0, 0.7, 3.0, 42.0):
            sigma = float(p.sigma(t))
            assert eval_barrier(p, t, 0.0)[1] == 0.0
            assert abs(eval_barrier(p, t, sigma)[1]) < 1e-15

    def test_outside_domain_rejected(self, dfb_init):
        p = SupersolutionParams(0.2, 0.1, 1.0, params(), dfb_init)
        with pytest.raises(ConfigError):
            eval_barrier(p, 1.0, -0.1)
        with pytest.raises(ConfigError):
            eval_barrier(p, 1.0, float(p.sigma(1.0)) + 1e-6)


class TestVerifySupersolution:
    def test_zero_candidate_fails_initial_domination(self, dfb_init):
        p = SupersolutionParams(0.1, 0.05, 0.0, params(), dfb_init)
        report = verify_supersolution(p, 0.01)
        assert not report.passed
        assert report.margins["initial"] < 0.0

    def test_huge_mu_fails_front_inequality(self, witness):
        mu0, w = witness
        report = verify_supersolution(w, 1e3)
        assert not report.passed
        assert report.margins["front"] < 0.0
        assert report.margins["pde_u"] >= 0.0  # mu only enters the front check

    def test_certification_monotone_in_mu(self, witness):
        mu0, w = witness
        for factor in (0.5, 0.1, 0.01):
            assert verify_supersolution(w, mu0 * factor).passed

    def test_margins_computed_in_closed_form_at_refined_grid(self, witness):
        mu0, w = witness
        report = verify_supersolution(w, mu0, grid=BarrierGrid().refined())
        assert report.passed
        assert all(v >= 0.0 for v in report.margins.values())


class TestSearchMu0:
    def test_witness_found_and_frozen_regression(self, witness):
        mu0, w = witness
        # regression anchor from the first run of the default lattice
        assert mu0 == pytest.approx(0.06563289444755385, rel=1e-9)
        assert mu0 > 0.0
        assert w.K >= max(w.init.sup_u, w.init.sup_v)
        assert w.sigma_infinity < lambda_threshold(params(), DFB)

    def test_above_lambda_rejected(self, dfb_init):
        p = params(s0=4.0)
        init = make_initial_data(DFB, 4.0, 128)
        with pytest.raises(NoThresholdError):
            search_mu0(p, init)

    def test_nfb_not_covered(self):
        init = make_initial_data(ProblemKind.NFB, 2.0, 128)
        with pytest.raises(ConfigError):
            search_mu0(params(), init, kind=ProblemKind.NFB)

    def test_empty_lattice_reports_bounds(self, dfb_init):
        # gammas far too large: the reaction inequalities cannot hold
        spec = SearchSpec(deltas=(0.2,), gammas=(50.0, 80.0), k_factors=(1.2,))
        with pytest.raises(NoWitnessError, match="lattice"):
            search_mu0(params(), dfb_init, spec)

    def test_certificate_document(self, witness):
        mu0, w = witness
        report = verify_supersolution(w, mu0)
        lam = lambda_threshold(params(), DFB)
        doc = certificate_dict(mu0, w, report, lam)
        assert doc["mu0"] == mu0
        assert doc["s_infinity_bound"] == w.sigma_infinity
        assert set(doc["worst_margins"]) == {"pde_u", "pde_v", "initial", "front"}
        assert doc["grid"] == {"nt": 400, "nx": 400}
        assert doc["lambda"] == lam
