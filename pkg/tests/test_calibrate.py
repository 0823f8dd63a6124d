import math

import numpy as np
import pytest
from scipy.integrate import quad

from knnids.calibrate import (
    lambert_w,
    lebesgue_constant,
    moment_integral,
    solve_omega0,
    threshold_for_far,
    validate_moment_condition,
)
from knnids.detector import Hyperparams, TrainedModel, fit
from knnids.exceptions import NoPositiveRoot, OutOfDomain


def bisection_lambert_minus_one(x, lo=-50.0, hi=-1.0, iters=200):
    """Independent oracle: solve w*exp(w) = x on (-inf, -1] by bisection."""
    f = lambda w: w * math.exp(w) - x
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        if f(mid) * f(hi) <= 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


@pytest.fixture(scope="module")
def uniform_model():
    rng = np.random.default_rng(30)
    return fit(rng.uniform(0, 1, (3000, 2)), Hyperparams(), seed=6)


class TestLebesgueConstant:
    def test_d1_interval(self):
        assert lebesgue_constant(1) == pytest.approx(2.0, rel=1e-15)

    def test_d2_disk(self):
        assert lebesgue_constant(2) == pytest.approx(math.pi, rel=1e-15)

    def test_d3_ball(self):
        assert lebesgue_constant(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-15)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            lebesgue_constant(0)


class TestLambertW:
    def test_principal_zero(self):
        assert lambert_w(0.0) == 0.0

    def test_principal_e(self):
        assert lambert_w(math.e) == pytest.approx(1.0, rel=1e-12)

    def test_minus_one_bisection_oracle(self):
        w = lambert_w(-0.1, branch="minus_one")
        assert w == pytest.approx(bisection_lambert_minus_one(-0.1), abs=1e-10)
        assert w == pytest.approx(-3.577152, abs=1e-6)

    @pytest.mark.parametrize("branch,xs", [
        ("principal", np.linspace(-1 / math.e + 1e-9, 50.0, 200)),
        ("minus_one", -np.geomspace(1e-8, 1 / math.e - 1e-12, 200)),
    ])
    def test_round_trip(self, branch, xs):
        for x in xs:
            w = lambert_w(float(x), branch=branch)
            assert w * math.exp(w) == pytest.approx(float(x), rel=1e-12, abs=1e-15)

    def test_branch_point(self):
        assert lambert_w(-1 / math.e) == pytest.approx(-1.0, abs=1e-6)
        assert lambert_w(-1 / math.e, branch="minus_one") == pytest.approx(-1.0, abs=1e-6)

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomain):
            lambert_w(-1.0)
        with pytest.raises(OutOfDomain):
            lambert_w(0.5, branch="minus_one")
        with pytest.raises(ValueError):
            lambert_w(1.0, branch="nope")


class TestSolveOmega0:
    def test_quadrature_oracle(self, uniform_model):
        m = uniform_model
        omega0 = solve_omega0(m)
        v_d = lebesgue_constant(m.d)
        lm_d = m.baseline_LM**m.d
        theta = v_d * math.exp(-v_d * lm_d)
        integral, _ = quad(lambda y: math.exp(omega0 * y) * theta * math.exp(-v_d * y),
                           -lm_d, m.evidence_bound_phi, limit=200)
        assert integral == pytest.approx(1.0, abs=1e-8)

    def test_trivial_root_rejected(self, uniform_model):
        omega0 = solve_omega0(uniform_model, refine=False)
        v_d = lebesgue_constant(uniform_model.d)
        assert abs(omega0 - v_d) > 1e-6
        assert omega0 > 0

    def test_closed_form_close_to_refined(self, uniform_model):
        raw = solve_omega0(uniform_model, refine=False)
        refined = solve_omega0(uniform_model)
        assert refined == pytest.approx(raw, rel=0.05)

    def test_reference_permutation_invariance(self, uniform_model):
        m = uniform_model
        rng = np.random.default_rng(31)
        permuted = TrainedModel(
            reference=m.reference[rng.permutation(m.reference.shape[0])],
            baseline_LM=m.baseline_LM, evidence_bound_phi=m.evidence_bound_phi,
            bounds=m.bounds, params=m.params, d=m.d, M=m.M,
        )
        assert solve_omega0(permuted) == solve_omega0(m)

    def test_nonpositive_phi_rejected(self, uniform_model):
        m = uniform_model
        broken = TrainedModel(reference=m.reference, baseline_LM=m.baseline_LM,
                              evidence_bound_phi=0.0, bounds=m.bounds,
                              params=m.params, d=m.d, M=m.M)
        with pytest.raises(NoPositiveRoot):
            solve_omega0(broken)

    def test_warns_off_theorem_hyperparams(self):
        rng = np.random.default_rng(32)
        m = fit(rng.uniform(0, 1, (500, 2)), Hyperparams(k=2, s=2, gamma=2.0), seed=7)
        with pytest.warns(UserWarning):
            solve_omega0(m, refine=False)


class TestMomentIntegral:
    def test_matches_quadrature(self, uniform_model):
        m = uniform_model
        v_d = lebesgue_constant(m.d)
        lm_d = m.baseline_LM**m.d
        theta = v_d * math.exp(-v_d * lm_d)
        for omega in (0.5, v_d, 2 * v_d, 10.0):
            numeric, _ = quad(
                lambda y: math.exp(omega * y) * theta * math.exp(-v_d * y),
                -lm_d, m.evidence_bound_phi, limit=200)
            assert moment_integral(omega, v_d, lm_d, m.evidence_bound_phi) == (
                pytest.approx(numeric, rel=1e-10))


class TestThresholdForFar:
    def test_h_formula(self, uniform_model):
        cal = threshold_for_far(uniform_model, 0.05)
        assert cal.h == pytest.approx(-math.log(0.05) / cal.omega0, rel=1e-15)
        assert cal.beta == 0.05
        assert cal.v_d == lebesgue_constant(uniform_model.d)

    def test_beta_to_one_gives_h_to_zero(self, uniform_model):
        assert threshold_for_far(uniform_model, 1.0 - 1e-12).h < 1e-10

    def test_beta_exp_minus_omega_gives_h_one(self, uniform_model):
        # hand-built sparse model so omega0 is small enough that e^{-omega0}
        # does not underflow
        m = uniform_model
        sparse = TrainedModel(reference=m.reference, baseline_LM=0.5,
                              evidence_bound_phi=2.0, bounds=m.bounds,
                              params=m.params, d=m.d, M=m.M)
        omega0 = solve_omega0(sparse)
        assert 0 < omega0 < 50
        cal = threshold_for_far(sparse, math.exp(-omega0))
        assert cal.h == pytest.approx(1.0, rel=1e-9)

    def test_h_decreasing_in_beta(self, uniform_model):
        hs = [threshold_for_far(uniform_model, b).h for b in (0.5, 0.1, 0.01)]
        assert hs[0] < hs[1] < hs[2]

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_bad_beta(self, uniform_model, beta):
        with pytest.raises(ValueError):
            threshold_for_far(uniform_model, beta)


class TestValidateMomentCondition:
    def test_omega_zero_is_exactly_one(self, uniform_model):
        sampler = lambda n, rng: rng.uniform(0, 1, (n, 2))
        est = validate_moment_condition(uniform_model, 0.0, sampler,
                                        n_samples=100, seed=0)
        assert est == 1.0

    def test_deterministic_in_seed(self, uniform_model):
        sampler = lambda n, rng: rng.uniform(0, 1, (n, 2))
        a = validate_moment_condition(uniform_model, 1.0, sampler, 500, seed=3)
        b = validate_moment_condition(uniform_model, 1.0, sampler, 500, seed=3)
        assert a == b
