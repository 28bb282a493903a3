import math

import numpy as np
import pytest

from ppcm import phase_model as pm
from ppcm.errors import DomainError
from ppcm.phase_model import ModelParams

HALF_PI = math.pi / 2
OP = ModelParams(HALF_PI, HALF_PI, 0.1, 6.1e-8, 1e5, 2)  # the calibrated operating point

# mpmath at 200 bits on the exact doubles 1e15 and 1.22e-7
REDUCE_REF = 0.35946877298219382018


def params(**kw):
    return ModelParams(**{**dict(theta_i=HALF_PI, theta_f=HALF_PI, epsilon=0.1, g=0.0, n=0.0, kappa=2), **kw})


class TestParams:
    @pytest.mark.parametrize("kw", [dict(theta_i=-0.1), dict(theta_f=3.2), dict(n=-1.0), dict(kappa=3),
                                    dict(n=math.inf), dict(g=math.nan), dict(epsilon=math.inf)])
    def test_rejects_out_of_range(self, kw):
        with pytest.raises(DomainError):
            params(**kw)

    def test_negative_g_allowed_for_difference_quotients(self):
        assert params(g=-1e-8, n=10.0).g == -1e-8


class TestCoherentOverlap:
    def test_identical_states(self):
        assert complex(pm.coherent_overlap(7.3, 0.0)) == 1 + 0j

    def test_vacuum(self):
        assert complex(pm.coherent_overlap(0.0, math.pi)) == 1 + 0j

    def test_antiphase_unit_mean(self):
        ov = pm.coherent_overlap(1.0, math.pi)
        assert ov.magnitude == pytest.approx(math.exp(-2.0), rel=1e-15)
        assert abs(ov.value.imag) < 1e-15

    def test_underflow_keeps_log(self):
        ov = pm.coherent_overlap(1e6, 1.0)
        assert ov.magnitude == 0.0
        assert ov.log_magnitude == pytest.approx(-1e6 * (1 - math.cos(1.0)), rel=1e-12)


class TestAcceptedProbability:
    def test_orthogonal_projection(self):
        assert pm.accepted_probability(params(epsilon=0.0)).p_d == 0.0

    def test_aligned_projection(self):
        assert pm.accepted_probability(params(epsilon=math.pi)).p_d == pytest.approx(1.0, abs=1e-15)

    def test_operating_point(self):
        pair = pm.accepted_probability(OP)
        assert pair.p_d == pytest.approx(0.0031439101113163, rel=1e-12)
        assert pair.p_d + pair.p_r == 1.0
        assert abs(pair.p_d - pm.accepted_probability_limit(6.1e-8, 1e5, 0.1)) < 1e-9

    def test_limit_examples(self):
        assert pm.accepted_probability_limit(0.0, 1e6, 0.0) == 0.0
        g, n = 3.7e-7, 2e5
        assert pm.accepted_probability_limit(g, n, math.pi) == pytest.approx((1 + math.cos(2 * g * n)) / 2, abs=1e-15)

    def test_clamp_window_only_absorbs_round_off(self):
        ev = pm.evaluate(HALF_PI, HALF_PI, 0.0, 0.0, 1e5, 2)
        assert float(ev.p_d) == 0.0


class TestSensitivity:
    def test_no_superposition(self):
        assert pm.sensitivity(params(theta_i=0.0, g=1e-3, n=100.0)) == 0.0

    def test_operating_point(self):
        assert pm.sensitivity(OP) == pytest.approx(1e5 * math.sin(0.1122), rel=1e-5)
        assert pm.sensitivity(OP) == pytest.approx(11196.485797491925, rel=1e-12)

    def test_stationary_at_zero(self):
        assert pm.sensitivity(params(epsilon=0.0, n=1e5)) == 0.0


class TestFisher:
    def test_no_superposition(self):
        assert pm.fisher_projective(params(theta_i=0.0, g=1e-3, n=100.0)) == 0.0

    def test_plateau_kappa1(self):
        f = pm.fisher_projective(params(kappa=1, g=1e-15, n=5e4))
        assert f == pytest.approx(2.5e9, rel=0.01)

    def test_decayed(self):
        assert pm.fisher_projective(params(g=0.02, n=5e4)) < 1e-20

    def test_from_prob_examples(self):
        assert pm.fisher_from_prob(0.5, 0.0) == 0.0
        assert pm.fisher_from_prob(0.5, 1.0) == 4.0

    @pytest.mark.parametrize("p, bound", [(0.0, "lower"), (1.0, "upper")])
    def test_from_prob_bounds(self, p, bound):
        with pytest.raises(DomainError, match=bound):
            pm.fisher_from_prob(p, 1.0)

    def test_from_prob_matches_closed_form(self):
        pd, s = pm.accepted_probability(OP).p_d, pm.sensitivity(OP)
        f = pm.fisher_from_prob(pd, s)
        assert f == pytest.approx(pm.fisher_projective(OP), rel=1e-9)
        assert f == pytest.approx(4.0e10, rel=1e-4)

    def test_pinned_probability_uses_curvature_limit(self):
        # P_d = 0 exactly at g = 0, eps = 0; the 0/0 ratio tends to kappa^2 n (n + 1)
        p = params(epsilon=0.0, g=0.0, n=10.0, kappa=1)
        assert pm.fisher_projective(p) == pytest.approx(10.0 * 11.0, rel=1e-12)
        assert pm.fisher_projective(params(epsilon=0.0, g=0.0, n=10.0)) == pytest.approx(4 * 110.0, rel=1e-12)

    def test_log_fisher(self):
        assert pm.log_fisher_projective(OP) == pytest.approx(math.log(pm.fisher_projective(OP)), rel=1e-14)
        assert pm.log_fisher_projective(params(g=0.3, n=1e6)) < -1e4


class TestQuantumFisher:
    def test_no_superposition(self):
        q = pm.quantum_fisher_joint(0.0, 50.0)
        assert q.as_printed == 0.0 and q.generator_variance == 0.0

    def test_printed(self):
        assert pm.quantum_fisher_joint(HALF_PI, 100.0, 1).as_printed == pytest.approx(10050.0, rel=1e-14)

    def test_generator_variance(self):
        assert pm.quantum_fisher_joint(HALF_PI, 100.0, 1).generator_variance == pytest.approx(10200.0, rel=1e-14)
        assert pm.quantum_fisher_joint(HALF_PI, 100.0, 2).generator_variance == pytest.approx(40800.0, rel=1e-14)


class TestBudget:
    def test_printed(self):
        b = pm.fisher_budget_small_g(1e4, 0.1)
        assert b.pd_qd == pytest.approx(9975.0)
        assert b.pr_qr == pytest.approx(25.0)
        assert b.f_tot == b.f_p + b.pd_qd + b.pr_qr
        assert b.provenance["pd_qd"] == "printed"

    def test_printed_zero_eps(self):
        assert pm.fisher_budget_small_g(1e4, 0.0).pr_qr == 0.0

    def test_calibrated_matches_oracle(self):
        from ppcm.fock_oracle import conditional_qfi

        b = pm.fisher_budget_small_g(16.0, 0.1, kappa=1, calibrated=True)
        q_d, q_r, p_d = conditional_qfi(HALF_PI, 16.0, 1, HALF_PI, 0.1, 1e-6)
        assert b.pd_qd == pytest.approx(p_d * q_d, rel=0.02)
        assert b.pr_qr == pytest.approx((1 - p_d) * q_r, rel=0.02)
        assert b.provenance["pr_qr"] == "oracle-calibrated"
        assert b.f_tot <= b.q_j * (1 + 1e-6)


class TestCramerRao:
    def test_examples(self):
        assert pm.cramer_rao(4.0, 1) == 0.5
        assert pm.cramer_rao(2.5e9, 1) == pytest.approx(2e-5, rel=1e-14)
        assert pm.cramer_rao(2.5e9, 100) == pytest.approx(2e-6, rel=1e-14)

    @pytest.mark.parametrize("f, nu", [(0.0, 1), (-1.0, 1), (1.0, 0)])
    def test_domain(self, f, nu):
        with pytest.raises(DomainError):
            pm.cramer_rao(f, nu)


class TestReducePhase:
    def test_zero(self):
        assert pm.reduce_phase(0.0, 123.4) == 0.0

    def test_full_turn(self):
        assert pm.reduce_phase(4.0, HALF_PI) == 0.0

    def test_high_precision_reference(self):
        assert abs(pm.reduce_phase(1e15, 1.22e-7) - REDUCE_REF) <= 1e-6
        assert abs(pm.reduce_phase(1e15, 1.22e-7) - REDUCE_REF) <= 1e-12

    def test_large_product_against_mpmath(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.prec = 200
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = float(10 ** rng.uniform(0, 16))
            x = float(rng.uniform(-1, 1))
            ref = float((mp.mpf(n) * mp.mpf(x)) % (2 * mp.pi))
            got = pm.reduce_phase(n, x)
            assert 0.0 <= got < 2 * math.pi
            d = abs(got - ref)
            assert min(d, 2 * math.pi - d) <= 1e-6

    @pytest.mark.parametrize("args", [(math.inf, 1.0), (1.0, math.nan)])
    def test_non_finite(self, args):
        with pytest.raises(DomainError):
            pm.reduce_phase(*args)

    def test_evaluate_rejects_non_finite(self):
        with pytest.raises(DomainError):
            pm.evaluate(HALF_PI, HALF_PI, 0.1, math.nan, 1.0)
