""" Testing the joint log posterior and its factor cache """

from dataclasses import replace
from itertools import permutations
import math
import unittest

import numpy as np
from scipy.special import expit, gammaln
from scipy.stats import binom, bernoulli, norm, multivariate_normal

try:
    from src.nts.evsynth.evidence import (
        Treatment,
        IpdRecord,
        AdArm,
        Study,
        EvidenceNetwork,
        Design,
        DataFormat,
        RiskOfBias,
        Direction,
        aggregate_ipd,
        as_aggregate_study,
    )
    from src.nts.evsynth.model import (
        ModelConfig,
        ParameterSpace,
        ParameterState,
        Support,
        build_parameter_space,
        initial_state,
    )
    from src.nts.evsynth.kernel import (
        normal_logpdf,
        bernoulli_logpmf,
        multiarm_covariance,
        multiarm_logpdf,
        geometric_covariance,
        mvn_logpdf,
        mixture_conditional_logdensity,
        mixture_marginal_logdensity,
        PosteriorKernel,
        FactorCache,
        symbol_audit,
        log_posterior,
    )
except ModuleNotFoundError:
    from nts.evsynth.evidence import (
        Treatment,
        IpdRecord,
        AdArm,
        Study,
        EvidenceNetwork,
        Design,
        DataFormat,
        RiskOfBias,
        Direction,
        aggregate_ipd,
        as_aggregate_study,
    )
    from nts.evsynth.model import (
        ModelConfig,
        ParameterSpace,
        ParameterState,
        Support,
        build_parameter_space,
        initial_state,
    )
    from nts.evsynth.kernel import (
        normal_logpdf,
        bernoulli_logpmf,
        multiarm_covariance,
        multiarm_logpdf,
        geometric_covariance,
        mvn_logpdf,
        mixture_conditional_logdensity,
        mixture_marginal_logdensity,
        PosteriorKernel,
        FactorCache,
        symbol_audit,
        log_posterior,
    )


def ad_study(sid: str, ref: int, counts: dict, rob=RiskOfBias.HIGH, direction=None) -> Study:
    """Aggregate study from {treatment: (r, n)}"""
    return Study(
        id=sid,
        design=Design.RCT,
        data_format=DataFormat.AD,
        reference_arm=ref,
        arms=tuple(sorted(counts)),
        rob_level=rob,
        ad=tuple(AdArm(sid, k, r, n) for k, (r, n) in sorted(counts.items())),
        bias_direction=direction or {},
    )


def two_arm_network() -> EvidenceNetwork:
    """One placebo-controlled AD study"""
    return EvidenceNetwork(
        treatments=(Treatment(1, "placebo", False), Treatment(2, "A")),
        studies=(ad_study("S1", 1, {1: (10, 100), 2: (6, 100)}, rob=RiskOfBias.LOW),),
        reference_treatment=1,
    )


def mixed_orientation_network() -> EvidenceNetwork:
    """Placebo-referenced and active-referenced studies of the same pair"""
    return EvidenceNetwork(
        treatments=(Treatment(1, "placebo", False), Treatment(2, "A")),
        studies=(
            ad_study("S1", 1, {1: (10, 100), 2: (6, 100)}),
            ad_study("S2", 2, {1: (12, 90), 2: (7, 90)}),
        ),
        reference_treatment=1,
    )


def ipd_study(sid: str, ref: int, rows: list, rob=RiskOfBias.LOW) -> Study:
    """Participant study from (treatment, y) rows without covariates"""
    return Study(
        id=sid,
        design=Design.RCT,
        data_format=DataFormat.IPD,
        reference_arm=ref,
        arms=tuple(sorted({k for k, _ in rows})),
        rob_level=rob,
        ipd=tuple(IpdRecord(sid, k, y) for k, y in rows),
    )


def three_study_network() -> EvidenceNetwork:
    """Two aggregate studies, one of them active-active, and a three-arm IPD study"""
    rows = (
        [(1, 1)] * 6 + [(1, 0)] * 14 + [(2, 1)] * 4 + [(2, 0)] * 16 + [(3, 1)] * 3 + [(3, 0)] * 17
    )
    return EvidenceNetwork(
        treatments=(Treatment(1, "placebo", False), Treatment(2, "A"), Treatment(3, "B")),
        studies=(
            ad_study("S1", 1, {1: (10, 100), 2: (6, 100)}),
            ad_study("S2", 2, {2: (9, 60), 3: (7, 60)}, rob=RiskOfBias.LOW),
            ipd_study("P1", 1, rows),
        ),
        reference_treatment=1,
    )


def covariate_network() -> EvidenceNetwork:
    """One IPD study with a single covariate"""
    rows = ((1, 0, 30.0), (1, 1, 40.0), (2, 1, 35.0), (2, 0, 45.0))
    study = Study(
        id="P1",
        design=Design.RCT,
        data_format=DataFormat.IPD,
        reference_arm=1,
        arms=(1, 2),
        rob_level=RiskOfBias.LOW,
        ipd=tuple(IpdRecord("P1", k, y, (x,)) for k, y, x in rows),
    )
    return EvidenceNetwork(
        treatments=(Treatment(1, "placebo", False), Treatment(2, "A")),
        studies=(study,),
        reference_treatment=1,
        covariate_names=("x1",),
    )


def random_state(space: ParameterSpace, rng: np.random.Generator) -> ParameterState:
    """Reals from N(0, 1), tau in (0.1, 1), probabilities in (0.05, 0.95), random indicators"""
    values = np.empty(len(space.continuous))
    for i, p in enumerate(space.continuous):
        if p.support is Support.REAL:
            values[i] = rng.normal(0.0, 1.0)
        elif p.support is Support.TAU:
            values[i] = rng.uniform(0.1, min(1.0, p.upper))
        else:
            values[i] = rng.uniform(0.05, 0.95)
    return ParameterState(values, rng.integers(0, 2, size=len(space.discrete)))


class TestDensities(unittest.TestCase):
    """
    Test scalar and multivariate densities.
    """

    def test_normal(self) -> None:
        """Normal log density and degenerate sd"""
        self.assertAlmostEqual(normal_logpdf(0.3, -0.2, 1.5), norm.logpdf(0.3, -0.2, 1.5))
        self.assertEqual(normal_logpdf(0.0, 0.0, 0.0), -math.inf)

    def test_bernoulli(self) -> None:
        """Bernoulli log mass at the edges"""
        self.assertAlmostEqual(bernoulli_logpmf(1, 0.3), math.log(0.3))
        self.assertAlmostEqual(bernoulli_logpmf(0, 0.3), math.log(0.7))
        self.assertEqual(bernoulli_logpmf(1, 0.0), -math.inf)
        self.assertEqual(bernoulli_logpmf(0, 1.0), -math.inf)
        self.assertEqual(bernoulli_logpmf(0, 0.0), 0.0)

    def test_multiarm(self) -> None:
        """Closed form matches the dense multivariate normal"""
        resid = [0.2, -0.4, 0.1]
        cov = multiarm_covariance(3, 0.7)
        self.assertAlmostEqual(cov[0, 0], 0.49)
        self.assertAlmostEqual(cov[0, 1], 0.245)
        expected = multivariate_normal(mean=np.zeros(3), cov=cov).logpdf(resid)
        self.assertAlmostEqual(multiarm_logpdf(resid, 0.7), expected, places=10)
        self.assertAlmostEqual(mvn_logpdf(resid, cov), expected, places=10)
        self.assertAlmostEqual(multiarm_logpdf([0.3], 0.7), norm.logpdf(0.3, 0.0, 0.7))
        self.assertEqual(multiarm_logpdf(resid, 0.0), -math.inf)

    def test_geometric(self) -> None:
        """Off-diagonals are half the geometric mean of the variances"""
        cov = geometric_covariance([0.25, 1.0])
        np.testing.assert_allclose(cov, [[0.25, 0.25], [0.25, 1.0]])
        self.assertEqual(mvn_logpdf([0.1, 0.2], np.zeros((2, 2))), -math.inf)

    def test_mixture(self) -> None:
        """Marginal mixture equals the pi-weighted conditionals"""
        theta, mean, gamma, tau, tg, pi = 0.4, -0.1, 0.3, 0.2, 0.5, 0.35
        c0 = mixture_conditional_logdensity(theta, mean, gamma, tau, tg, 0)
        c1 = mixture_conditional_logdensity(theta, mean, gamma, tau, tg, 1)
        self.assertAlmostEqual(c0, norm.logpdf(theta, mean, tau))
        self.assertAlmostEqual(c1, norm.logpdf(theta, mean + gamma, math.hypot(tau, tg)))
        expected = math.log((1 - pi) * math.exp(c0) + pi * math.exp(c1))
        self.assertAlmostEqual(
            mixture_marginal_logdensity(theta, mean, gamma, tau, tg, pi), expected, places=12
        )
        self.assertAlmostEqual(mixture_marginal_logdensity(theta, mean, gamma, tau, tg, 0.0), c0)
        self.assertAlmostEqual(mixture_marginal_logdensity(theta, mean, gamma, tau, tg, 1.0), c1)

    def test_mixture_random_points(self) -> None:
        """Marginal mixture equals the weighted conditionals at random points"""
        rng = np.random.default_rng(5)
        for _ in range(10000):
            theta, mean, gamma = (float(v) for v in rng.normal(0.0, 1.0, size=3))
            tau, tg = (float(v) for v in rng.uniform(0.2, 1.0, size=2))
            pi = float(rng.uniform(0.001, 0.999))
            c0 = mixture_conditional_logdensity(theta, mean, gamma, tau, tg, 0)
            c1 = mixture_conditional_logdensity(theta, mean, gamma, tau, tg, 1)
            expected = float(np.logaddexp(math.log1p(-pi) + c0, math.log(pi) + c1))
            self.assertAlmostEqual(
                mixture_marginal_logdensity(theta, mean, gamma, tau, tg, pi), expected, delta=1e-12
            )

    def test_covariance_positive_definite(self) -> None:
        """Multi-arm covariances are positive definite up to five arms"""
        rng = np.random.default_rng(8)
        for m in range(2, 6):
            for tau in (0.05, 0.5, 1.9):
                self.assertGreater(float(np.linalg.eigvalsh(multiarm_covariance(m, tau)).min()), 0.0)
            for _ in range(50):
                variances = [float(v) for v in rng.uniform(0.01, 4.0, size=m)]
                self.assertGreater(float(np.linalg.eigvalsh(geometric_covariance(variances)).min()), 0.0)
            resid = [float(v) for v in rng.normal(0.0, 0.5, size=m)]
            expected = multivariate_normal(mean=np.zeros(m), cov=multiarm_covariance(m, 0.7)).logpdf(resid)
            self.assertAlmostEqual(multiarm_logpdf(resid, 0.7), expected, places=9)


class TestLikelihood(unittest.TestCase):
    """
    Test the data likelihood against direct evaluation.
    """

    def test_ad_binomial(self) -> None:
        """Aggregate arms use the binomial with coefficients"""
        net = two_arm_network()
        kernel = PosteriorKernel(net, ModelConfig(trt_effect="common"))
        state = ParameterState.from_dict(kernel.space, {"u[S1]": -2.0, "d[2]": -0.5})
        expected = binom.logpmf(10, 100, expit(-2.0)) + binom.logpmf(6, 100, expit(-2.5))
        self.assertAlmostEqual(kernel.ad_loglik(state), expected, places=9)
        self.assertAlmostEqual(kernel.log_likelihood(state), expected, places=9)
        self.assertEqual(kernel.ipd_loglik(state), 0.0)
        prior = norm.logpdf(-2.0, 0.0, 10.0) + norm.logpdf(-0.5, 0.0, 10.0)
        self.assertAlmostEqual(kernel.log_prior(state), prior, places=9)
        self.assertAlmostEqual(kernel.log_posterior(state), expected + prior, places=9)
        self.assertAlmostEqual(
            log_posterior(state, net, ModelConfig(trt_effect="common")), expected + prior, places=9
        )

    def test_ipd_bernoulli(self) -> None:
        """Participant rows use the Bernoulli likelihood with the covariate slopes"""
        rows = ((1, 0, 30.0), (1, 1, 40.0), (2, 1, 35.0), (2, 0, 45.0), (2, 0, 45.0))
        study = Study(
            id="P1",
            design=Design.RCT,
            data_format=DataFormat.IPD,
            reference_arm=1,
            arms=(1, 2),
            rob_level=RiskOfBias.LOW,
            ipd=tuple(IpdRecord("P1", k, y, (x,)) for k, y, x in rows),
        )
        net = EvidenceNetwork(
            treatments=(Treatment(1, "placebo", False), Treatment(2, "A")),
            studies=(study,),
            reference_treatment=1,
            covariate_names=("x1",),
        )
        cfg = ModelConfig(trt_effect="common", regression={"covariate": "x1"}, interaction_effect="common")
        kernel = PosteriorKernel(net, cfg)
        values = {"u[P1]": -1.0, "d[2]": 0.4, "beta0[P1]": 0.02, "B_B[2]": 0.03, "B_W[2]": -0.01}
        state = ParameterState.from_dict(kernel.space, values)
        xbar = np.mean([x for _, _, x in rows])
        expected = 0.0
        for k, y, x in rows:
            eta = -1.0 + 0.02 * x
            if k == 2:
                eta += 0.4 - 0.01 * x + (0.03 + 0.01) * xbar
            expected += bernoulli.logpmf(y, expit(eta))
        self.assertAlmostEqual(kernel.ipd_loglik(state), expected, places=9)
        self.assertAlmostEqual(
            kernel.linear_predictor_ipd(state, "P1", 40.0, 2),
            -1.0 + 0.02 * 40.0 + 0.4 - 0.01 * 40.0 + 0.04 * xbar,
            places=12,
        )

    def test_random_effects(self) -> None:
        """Study effects enter the likelihood, their prior uses tau"""
        net = two_arm_network()
        kernel = PosteriorKernel(net, ModelConfig())
        state = ParameterState.from_dict(
            kernel.space, {"u[S1]": -2.0, "d[2]": -0.5, "delta[S1|2]": -0.3, "tau": 0.4}
        )
        self.assertAlmostEqual(kernel.linear_predictor_ad(state, "S1", 2), -2.3)
        self.assertAlmostEqual(
            kernel.random_effects_logprior(state, "S1"), norm.logpdf(-0.3, -0.5, 0.4)
        )
        out = ParameterState.from_dict(
            kernel.space, {"u[S1]": -2.0, "d[2]": -0.5, "delta[S1|2]": -0.3, "tau": 3.0}
        )
        self.assertEqual(kernel.log_posterior(out), -math.inf)

    def test_bad_state(self) -> None:
        """NaN and shape mismatches are hard errors"""
        kernel = PosteriorKernel(two_arm_network(), ModelConfig(trt_effect="common"))
        with self.assertRaises(ValueError):
            kernel.log_posterior(ParameterState(np.asarray([math.nan, 0.0]), np.zeros(0, dtype=int)))
        with self.assertRaises(ValueError):
            kernel.log_posterior(ParameterState(np.zeros(3), np.zeros(0, dtype=int)))

    def test_aggregation_consistency(self) -> None:
        """Without covariates IPD rows and their aggregate differ by the binomial coefficients"""
        net = three_study_network()
        aggregated = replace(
            net, studies=tuple(as_aggregate_study(s) if s.is_ipd else s for s in net.studies)
        )
        log_binom = math.fsum(
            float(gammaln(a.n + 1) - gammaln(a.r + 1) - gammaln(a.n - a.r + 1))
            for a in aggregate_ipd(net.study("P1"))
        )
        rng = np.random.default_rng(17)
        for cfg in (ModelConfig(trt_effect="common"), ModelConfig()):
            kernel = PosteriorKernel(net, cfg)
            collapsed = PosteriorKernel(aggregated, cfg)
            self.assertEqual(kernel.space.names, collapsed.space.names)
            for _ in range(500):
                state = random_state(kernel.space, rng)
                ipd_part = collapsed.ad_loglik(state) - kernel.ad_loglik(state) - log_binom
                self.assertAlmostEqual(kernel.ipd_loglik(state), ipd_part, places=9)
                self.assertAlmostEqual(collapsed.ipd_loglik(state), 0.0)


class TestBiasModels(unittest.TestCase):
    """
    Test bias-adjusted relative effects.
    """

    def test_additive_orientation(self) -> None:
        """Mean bias favours the active arm whichever arm is the reference"""
        cfg = ModelConfig(approach="bias_model_1", trt_effect="common", bias={"effect": "common"})
        kernel = PosteriorKernel(mixed_orientation_network(), cfg)
        values = {"u[S1]": 0.0, "u[S2]": 0.0, "d[2]": -0.5, "g2": 0.3, "pi[S1]": 0.5, "pi[S2]": 0.5}
        biased = ParameterState.from_dict(kernel.space, values | {"R[S1]": 1, "R[S2]": 1})
        self.assertAlmostEqual(kernel.linear_predictor_ad(biased, "S1", 2), -0.2)
        self.assertAlmostEqual(kernel.linear_predictor_ad(biased, "S2", 1), 0.2)
        clean = ParameterState.from_dict(kernel.space, values | {"R[S1]": 0, "R[S2]": 0})
        self.assertAlmostEqual(kernel.linear_predictor_ad(clean, "S1", 2), -0.5)
        self.assertAlmostEqual(kernel.linear_predictor_ad(clean, "S2", 1), 0.5)
        self.assertAlmostEqual(kernel.study_bias_probability(biased, "S1"), 0.5)

    def test_multiplicative(self) -> None:
        """Multiplicative bias scales the effect by exp(g1)"""
        cfg = ModelConfig(
            approach="bias_model_1",
            trt_effect="common",
            bias={"effect": "common", "form": "multiplicative"},
        )
        kernel = PosteriorKernel(mixed_orientation_network(), cfg)
        values = {"u[S1]": 0.0, "u[S2]": 0.0, "d[2]": -0.5, "g1": 0.2, "pi[S1]": 0.5, "pi[S2]": 0.5}
        state = ParameterState.from_dict(kernel.space, values | {"R[S1]": 1, "R[S2]": 1})
        self.assertAlmostEqual(kernel.linear_predictor_ad(state, "S1", 2), -0.5 * math.exp(0.2))
        self.assertAlmostEqual(kernel.linear_predictor_ad(state, "S2", 1), 0.5 * math.exp(0.2))

    def test_signed_active_active(self) -> None:
        """Direction favours_k subtracts the active-active bias, favours_b adds it"""
        treatments = (Treatment(1, "placebo", False), Treatment(2, "A"), Treatment(3, "B"))
        cfg = ModelConfig(
            approach="bias_model_1",
            trt_effect="common",
            bias={"effect": "common", "mean_structure": "signed_active_active"},
        )
        for direction, sign in ((Direction.FAVOURS_K, -1.0), (Direction.FAVOURS_B, 1.0)):
            net = EvidenceNetwork(
                treatments=treatments,
                studies=(
                    ad_study("S1", 1, {1: (10, 100), 3: (6, 100)}),
                    ad_study("S3", 2, {2: (9, 60), 3: (7, 60)}, direction={3: direction}),
                ),
                reference_treatment=1,
            )
            kernel = PosteriorKernel(net, cfg)
            self.assertNotIn("p_dir", kernel.space)
            values = {
                "u[S1]": 0.0,
                "u[S3]": -1.0,
                "d[2]": -0.2,
                "d[3]": -0.6,
                "g2": 0.1,
                "g2_act": 0.25,
                "pi[S1]": 0.5,
                "pi[S3]": 0.5,
                "R[S1]": 1,
                "R[S3]": 1,
            }
            state = ParameterState.from_dict(kernel.space, values)
            self.assertAlmostEqual(
                kernel.linear_predictor_ad(state, "S3", 3), -1.0 + (-0.6 + 0.2) + sign * 0.25
            )

    def test_model_2_common(self) -> None:
        """Common-effect mixture shifts by pi times the mean bias"""
        cfg = ModelConfig(approach="bias_model_2", trt_effect="common", bias={"effect": "common"})
        kernel = PosteriorKernel(two_arm_network(), cfg)
        self.assertEqual(kernel.space.discrete_names, [])
        state = ParameterState.from_dict(
            kernel.space, {"u[S1]": -1.0, "d[2]": -0.5, "g": 0.4, "pi[S1]": 0.25}
        )
        self.assertAlmostEqual(kernel.linear_predictor_ad(state, "S1", 2), -1.0 - 0.5 + 0.1)

    def test_model_2_random(self) -> None:
        """Conditional mixture prior of theta given R"""
        cfg = ModelConfig(approach="bias_model_2", bias={"effect": "common"})
        kernel = PosteriorKernel(two_arm_network(), cfg)
        values = {
            "u[S1]": -1.0,
            "d[2]": -0.5,
            "theta[S1|2]": -0.2,
            "g": 0.3,
            "tau": 0.2,
            "tau_gamma": 0.4,
            "pi[S1]": 0.3,
        }
        for r in (0, 1):
            state = ParameterState.from_dict(kernel.space, values | {"R[S1]": r})
            expected = mixture_conditional_logdensity(-0.2, -0.5, 0.3, 0.2, 0.4, r)
            self.assertAlmostEqual(kernel.mixture_logprior_theta(state, "S1", 2), expected)
            self.assertAlmostEqual(kernel.random_effects_logprior(state, "S1"), expected)


class TestInvariance(unittest.TestCase):
    """
    Test properties that hold at every state.
    """

    def test_study_order(self) -> None:
        """Permuting the studies leaves the joint log posterior unchanged"""
        net = three_study_network()
        cfg = ModelConfig(approach="bias_model_1")
        kernel = PosteriorKernel(net, cfg)
        rng = np.random.default_rng(13)
        for order in permutations(range(len(net.studies))):
            permuted = PosteriorKernel(replace(net, studies=tuple(net.studies[i] for i in order)), cfg)
            self.assertEqual(sorted(permuted.space.names), sorted(kernel.space.names))
            for _ in range(20):
                state = random_state(kernel.space, rng)
                moved = ParameterState.from_dict(permuted.space, state.as_dict(kernel.space))
                self.assertAlmostEqual(
                    permuted.log_posterior(moved), kernel.log_posterior(state), places=9
                )

    def test_clean_indicators(self) -> None:
        """Model 1 with every R = 0 has the unadjusted data likelihood"""
        net = three_study_network()
        plain = PosteriorKernel(net, ModelConfig())
        rng = np.random.default_rng(29)
        for form in ("additive", "multiplicative", "both"):
            biased = PosteriorKernel(net, ModelConfig(approach="bias_model_1", bias={"form": form}))
            for _ in range(200):
                state = random_state(biased.space, rng)
                state.indicators[:] = 0
                named = state.as_dict(biased.space)
                clean = ParameterState.from_dict(plain.space, {n: named[n] for n in plain.space.names})
                self.assertAlmostEqual(biased.ipd_loglik(state), plain.ipd_loglik(clean), places=9)
                self.assertAlmostEqual(biased.ad_loglik(state), plain.ad_loglik(clean), places=9)
                self.assertAlmostEqual(
                    biased.log_likelihood(state), plain.log_likelihood(clean), places=9
                )


class TestSymbolAudit(unittest.TestCase):
    """
    Test the demanded-versus-housed symbol audit.
    """

    def test_housed(self) -> None:
        """Every demanded symbol is housed for the supported configurations"""
        configs = [
            (three_study_network(), ModelConfig()),
            (three_study_network(), ModelConfig(trt_effect="common")),
            (three_study_network(), ModelConfig(approach="bias_model_1", bias={"form": "both"})),
            (
                three_study_network(),
                ModelConfig(approach="bias_model_1", bias={"form": "multiplicative", "effect": "common"}),
            ),
            (three_study_network(), ModelConfig(approach="bias_model_1", bias={"heterogeneity": "rob_weight"})),
            (three_study_network(), ModelConfig(approach="bias_model_2", bias={"effect": "common"})),
            (
                three_study_network(),
                ModelConfig(approach="bias_model_2", trt_effect="common", bias={"effect": "common"}),
            ),
            (
                covariate_network(),
                ModelConfig(trt_effect="common", regression={"covariate": "x1"}, interaction_effect="common"),
            ),
            (
                covariate_network(),
                ModelConfig(
                    regression={"covariate": "x1", "baseline_beta0": "random"},
                    interaction_effect="random",
                ),
            ),
        ]
        for net, cfg in configs:
            kernel = PosteriorKernel(net, cfg)
            unhoused, _ = symbol_audit(kernel)
            self.assertEqual(unhoused, [])
            self.assertEqual(sorted(kernel.demanded_symbols()), sorted(kernel.space.names))

    def test_unhoused(self) -> None:
        """A demanded symbol dropped from the space is reported"""
        net = mixed_orientation_network()
        cfg = ModelConfig(approach="bias_model_1")
        full = build_parameter_space(net, cfg)
        for name in ("g2", "tau", "tau_gamma2"):
            reduced = ParameterSpace(
                tuple(p for p in full.continuous if p.name != name), full.discrete
            )
            unhoused, _ = symbol_audit(PosteriorKernel(net, cfg, space=reduced))
            self.assertEqual(unhoused, [name])


class TestFactorCache(unittest.TestCase):
    """
    Test cached single-site updates against full evaluation.
    """

    def setUp(self) -> None:
        cfg = ModelConfig(approach="bias_model_1")
        self.kernel = PosteriorKernel(mixed_orientation_network(), cfg)
        self.state = initial_state(self.kernel.space, 3)

    def test_total(self) -> None:
        """Cached total equals the joint log posterior"""
        cache = FactorCache(self.kernel, self.state)
        self.assertAlmostEqual(cache.total, self.kernel.log_posterior(self.state), places=9)

    def test_prior_components(self) -> None:
        """Prior components add up to the joint prior"""
        k, s = self.kernel, self.state
        parts = [k.random_effects_logprior(s, sid) for sid in ("S1", "S2")]
        parts += [
            k.interaction_logprior(s),
            k.bias_structure_logprior(s),
            k.bias_probability_logprior(s),
            k.hyperprior_logdensity(s),
        ]
        self.assertEqual(k.interaction_logprior(s), 0.0)
        self.assertAlmostEqual(math.fsum(parts), k.log_prior(s), places=9)
        self.assertAlmostEqual(
            k.log_prior(s) + k.log_likelihood(s), k.log_posterior(s), places=9
        )

    def test_propose_accept(self) -> None:
        """Deltas and committed totals match full re-evaluation"""
        cache = FactorCache(self.kernel, self.state)
        before = cache.total
        i = self.kernel.space.index("d[2]")
        delta, pending = cache.propose(i, 0.35)
        np.testing.assert_array_equal(cache.state.values, self.state.values)
        cache.accept(pending)
        self.assertAlmostEqual(cache.total, before + delta, places=9)
        self.assertAlmostEqual(cache.total, self.kernel.log_posterior(cache.state), places=9)

    def test_out_of_support(self) -> None:
        """Proposals outside the prior support are rejected outright"""
        cache = FactorCache(self.kernel, self.state)
        delta, pending = cache.propose(self.kernel.space.index("tau"), 2.5)
        self.assertEqual(delta, -math.inf)
        self.assertEqual(pending, ())

    def test_indicator_weights(self) -> None:
        """Indicator weights differ by the joint log posterior difference"""
        cache = FactorCache(self.kernel, self.state)
        i = self.kernel.space.index("R[S1]")
        w0, w1, updates = cache.indicator_log_weights(i)
        s0, s1 = self.state.copy(), self.state.copy()
        s0.indicators[i], s1.indicators[i] = 0, 1
        self.assertAlmostEqual(
            w1 - w0, self.kernel.log_posterior(s1) - self.kernel.log_posterior(s0), places=9
        )
        cache.set_indicator(i, 1, updates)
        self.assertAlmostEqual(cache.total, self.kernel.log_posterior(s1), places=9)

    def test_symbol_audit(self) -> None:
        """Every housed symbol is read by some factor"""
        self.assertEqual(symbol_audit(self.kernel), ([], []))
        plain = PosteriorKernel(two_arm_network(), ModelConfig())
        self.assertEqual(symbol_audit(plain), ([], []))
        self.assertEqual(
            build_parameter_space(two_arm_network(), ModelConfig()).names, plain.space.names
        )


if __name__ == "__main__":
    unittest.main()
