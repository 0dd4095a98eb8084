"""End-to-end checks on the headline numbers.

These run full-size grids, optimizations and million-sample Monte Carlo
runs, so they are skipped unless CVMDI_SLOW_TESTS=1.
"""

import math
import os
import unittest

import numpy

from cvmdi import commands, gaussian, inforates, integrate, optimize, probability, protocol
from cvmdi import config as cfg
from cvmdi.base import PSPoint, ProtocolParams, SignPair
from cvmdi.integrate import GridSpec

SLOW = os.environ.get("CVMDI_SLOW_TESTS") == "1"
THREADS = max(1, os.cpu_count() or 1)
ORDER_SLACK = 1e-6

PINNED = [
    dict(tau_a=0.9, tau_b=0.9, sigma_a=2.0, sigma_b=2.0),
    dict(tau_a=0.9, tau_b=0.95, eps_a=0.05, eps_b=0.05, eta=0.98, sigma_a=1.5, sigma_b=2.5),
    dict(scenario="restricted_collective", tau_a=0.6, tau_b=0.6, sigma_a=2.0, mu=3.0),
    dict(scenario="restricted_individual", tau_a=0.9, tau_b=0.85, eps_a=0.02, eps_b=0.02, sigma_a=1.0, mu=2.5),
    dict(scenario="restricted_collective", detector_model="absorbed", tau_a=0.8, tau_b=0.8,
         eps_a=0.05, eps_b=0.05, eta=0.8, sigma_a=1.5, mu=4.0),
]


def _random_params(rng):
    scenario = rng.choice(["complete_collective", "restricted_individual", "restricted_collective"])
    return ProtocolParams(
        scenario=str(scenario),
        tau_a=rng.uniform(0.3, 1.0), tau_b=rng.uniform(0.3, 1.0),
        eps_a=rng.uniform(0.0, 0.05), eps_b=rng.uniform(0.0, 0.05),
        eta=rng.uniform(0.7, 1.0),
        sigma_a=rng.uniform(0.5, 5.0), sigma_b=rng.uniform(0.5, 5.0),
        mu=rng.uniform(1.2, 6.0),
    )


@unittest.skipUnless(SLOW, "set CVMDI_SLOW_TESTS=1 to run")
class RangeAcceptanceTester(unittest.TestCase):
    def test_ideal_complete_range(self):
        d = optimize.max_range(ProtocolParams(), threads=THREADS)
        self.assertAlmostEqual(d, 14.0, delta=2.0)

    def test_realistic_restricted_reaches_55_km(self):
        config = cfg.getPresetConfig("realistic-restricted")
        params = protocol.params_at_total_distance(commands.build_params(config), 55.0)
        res = optimize.optimize_rate(params, threads=THREADS)
        self.assertGreater(res.best_rate, 0.0)

    def test_scenario_ordering(self):
        for d in (2.0, 6.0, 10.0):
            rates = {}
            for scenario in ("restricted_individual", "restricted_collective", "complete_collective"):
                params = protocol.params_at_total_distance(ProtocolParams(scenario=scenario), d)
                rates[scenario] = optimize.optimize_rate(params, threads=THREADS).best_rate
            self.assertGreaterEqual(rates["restricted_individual"], rates["restricted_collective"] - ORDER_SLACK)
            self.assertGreaterEqual(rates["restricted_collective"], rates["complete_collective"] - ORDER_SLACK)
            self.assertGreaterEqual(rates["complete_collective"], -ORDER_SLACK)

    def test_restricted_optimum_small_and_smooth(self):
        window = [10.0, 12.5, 15.0, 17.5, 20.0]
        for scenario in ("restricted_individual", "restricted_collective"):
            rows = optimize.optimal_param_sweep(ProtocolParams(scenario=scenario), window, threads=THREADS)
            for row in rows:
                self.assertGreater(row.best_rate, 0.0, msg=scenario)
                self.assertLess(row.best_params["sigma_a"], 10.0, msg=scenario)
            for (before, after) in zip(rows, rows[1:]):
                for name in ("sigma_a", "mu"):
                    jump = abs(after.best_params[name] - before.best_params[name]) / before.best_params[name]
                    self.assertLess(jump, 0.5, msg="{} {} at {} km".format(scenario, name, after.distance_km))


@unittest.skipUnless(SLOW, "set CVMDI_SLOW_TESTS=1 to run")
class IntegrationAcceptanceTester(unittest.TestCase):
    def test_post_selection_never_hurts(self):
        rng = numpy.random.default_rng(2024)
        for _ in range(20):
            params = _random_params(rng)
            (raw, ps) = integrate.integrate_rates(params, GridSpec(24, 24, 48), THREADS)
            self.assertGreaterEqual(ps.value, raw.value - 1e-9, msg=str(params))
            self.assertGreaterEqual(ps.value, 0.0)

    def test_montecarlo_agrees_with_quadrature(self):
        for (i, p) in enumerate(PINNED):
            params = ProtocolParams(**p)
            quad = integrate.integrate_rates(params, threads=THREADS)
            mc = integrate.montecarlo_rates(params, 1000000, seed=100 + i, threads=THREADS)
            self.assertGreater(quad[1].value, 0.0, msg=str(p))
            for (q, m) in zip(quad, mc):
                self.assertGreater(m.std_err, 0.0, msg=str(p))
                z = (m.value - q.value) / m.std_err
                self.assertLess(abs(z), 3.0, msg="{}: quadrature {} Monte Carlo {}".format(p, q.value, m.value))

    def test_raw_montecarlo_agrees_with_quadrature(self):
        params = ProtocolParams(tau_a=0.7, tau_b=0.7, sigma_a=2.0, sigma_b=2.0)
        quad = integrate.raw_rate(params, threads=THREADS)
        mc = integrate.raw_rate_montecarlo(params, 1000000, seed=99, threads=THREADS)
        self.assertLess(abs(mc.value - quad.value), 3.0 * mc.std_err)

    def test_transparent_link_has_no_eavesdropper(self):
        for scenario in ("complete_collective", "restricted_individual", "restricted_collective"):
            params = ProtocolParams(scenario=scenario)
            (raw, ps) = integrate.integrate_rates(params, threads=THREADS)
            self.assertGreater(ps.value, 0.0)
            self.assertAlmostEqual(ps.value, raw.value, delta=1e-6 * ps.value)

    def test_convergence(self):
        ideal = protocol.params_at_total_distance(ProtocolParams(), 10.0)
        ideal = optimize.optimize_rate(ideal, threads=THREADS).params
        self.assertLess(integrate.convergence_check(ideal, threads=THREADS), 1e-3)
        config = cfg.getPresetConfig("realistic-restricted")
        realistic = protocol.params_at_total_distance(commands.build_params(config), 40.0)
        realistic = optimize.optimize_rate(realistic, threads=THREADS).params
        self.assertLess(integrate.convergence_check(realistic, threads=THREADS), 1e-3)

    def test_workers_do_not_change_output(self):
        config = cfg.getDefaultConfig()
        config.update(distance_km=6.0, eta=0.9, eps_a=0.02, eps_b=0.02)
        single = commands.cmd_rate(config, 1)
        many = commands.cmd_rate(config, max(THREADS, 4))
        self.assertEqual(single.rows, many.rows)
        mc = [integrate.montecarlo_rates(ProtocolParams(**PINNED[1]), 200000, 5, t) for t in (1, 4)]
        self.assertEqual(mc[0], mc[1])


@unittest.skipUnless(SLOW, "set CVMDI_SLOW_TESTS=1 to run")
class AnchorAcceptanceTester(unittest.TestCase):
    DRAWS = 1000

    def _draw_point(self, rng):
        return PSPoint(rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0), rng.normal())

    def test_overlaps_match_toolbox(self):
        rng = numpy.random.default_rng(31)
        for _ in range(self.DRAWS):
            params = _random_params(rng).replace(scenario="complete_collective")
            dn = protocol.derived_noise(params)
            point = self._draw_point(rng)
            c = inforates.overlap_coeffs(point, dn, params)
            for (which, signs) in (("ov_a", ((1, 1), (-1, 1))), ("ov_b", ((1, 1), (1, -1)))):
                (s1, s2) = [
                    protocol.eve_state_complete(params, k, b, point.amp_a, point.amp_b, point.gamma)
                    for (k, b) in signs
                ]
                toolbox = gaussian.pure_overlap_same_cm(s1.mean, s2.mean, s1.cm)
                numpy.testing.assert_allclose(float(getattr(c, which)) ** 2, toolbox, atol=1e-9)

    def test_posteriors_match_bayes(self):
        rng = numpy.random.default_rng(32)
        for _ in range(self.DRAWS):
            params = _random_params(rng)
            dn = protocol.derived_noise(params)
            point = self._draw_point(rng)
            closed = probability.cond_sign_probs(point, dn, params)
            if params.restricted:
                bayes = probability.bayes_sign_probs_restricted(point, dn, params)
            else:
                bayes = probability.bayes_sign_probs_complete(point, dn, params)
            for table in ("kappa_given_b", "b_given_kappa", "kappa", "bsign", "joint"):
                for (key, value) in getattr(closed, table).items():
                    numpy.testing.assert_allclose(value, getattr(bayes, table)[key], atol=1e-10, err_msg=table)

    def test_relay_density_matches_toolbox(self):
        rng = numpy.random.default_rng(33)
        for _ in range(self.DRAWS):
            params = _random_params(rng).replace(scenario="complete_collective")
            dn = protocol.derived_noise(params)
            point = self._draw_point(rng)
            (kappa, bsign) = rng.choice([1, -1], size=2)
            state = protocol.build_pre_relay_state(params, int(kappa), point.amp_a, int(bsign), point.amp_b)
            r = protocol.relay_and_condition(state, params, point.gamma)
            closed = probability.p_gamma_complete(point, SignPair(int(kappa), int(bsign)), dn, params)
            numpy.testing.assert_allclose(r.density_q, float(closed), rtol=1e-9)

    def test_conditional_eigenvalues(self):
        rng = numpy.random.default_rng(34)
        for _ in range(self.DRAWS):
            coeffs = inforates.OverlapCoeffs.from_overlaps(rng.uniform(), rng.uniform())
            p_plus = rng.uniform()
            rho = inforates.eve_conditional_matrix(coeffs, 1, {(1, 1): p_plus, (1, -1): 1.0 - p_plus})
            (lam, lam2) = inforates.conditional_eigenvalues(p_plus, coeffs.ov_b)
            numpy.testing.assert_allclose(numpy.linalg.eigvalsh(rho)[-2:], [lam2, lam], atol=1e-10)

    def test_eve_matrices_valid(self):
        rng = numpy.random.default_rng(35)
        for _ in range(self.DRAWS):
            (ov_a, ov_b) = rng.uniform(0.0, 1.0, size=2)
            joint = dict(zip([(1, 1), (1, -1), (-1, 1), (-1, -1)], rng.dirichlet(numpy.ones(4))))
            rho = inforates.eve_total_matrix(inforates.OverlapCoeffs.from_overlaps(ov_a, ov_b), joint)
            self.assertAlmostEqual(float(numpy.trace(rho)), 1.0, places=9)
            self.assertGreaterEqual(float(numpy.linalg.eigvalsh(rho).min()), -1e-10)

    def test_mixture_covariance(self):
        rng = numpy.random.default_rng(36)
        cm = numpy.array([[3.0, 0.8], [0.8, 1.2]])
        (m_plus, m_minus, p) = (numpy.array([0.7, 1.5]), numpy.array([-0.4, -1.0]), 0.65)
        n = 1000000
        pick = rng.uniform(size=n) < p
        x = rng.multivariate_normal([0.0, 0.0], cm, size=n) + numpy.where(pick[:, None], m_plus, m_minus)
        centred = x - x.mean(axis=0)
        products = centred[:, :, None] * centred[:, None, :]
        err = products.std(axis=0) / math.sqrt(n)
        expected = inforates.mixture_cm_inflation(cm, m_plus, m_minus, p)
        self.assertTrue(numpy.all(numpy.abs(products.mean(axis=0) - expected) < 5.0 * err))


if __name__ == "__main__":
    unittest.main()
