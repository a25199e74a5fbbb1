# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.
import unittest

import numpy as np

from drift_net import DriftNet
from forward import DiffusionConfig
from incidence import as_entries
from tests.helpers import TWO_BY_TWO, random_hypergraph
from validation import (
    CheckResult,
    LinearDrift,
    ValidationReport,
    check_conditional_law,
    check_em_order,
    check_equivariance,
    check_heat_operator,
    check_lipschitz,
    check_mixture_identity,
    check_ou_moments,
    check_reverse_exactness,
    check_stability_bound,
    check_total_error,
    estimate_one_sided_lipschitz,
)


def density_config(h) -> DiffusionConfig:
    entries = as_entries(h)
    return DiffusionConfig.from_density(entries.shape, float(entries.mean()))


class TestReport(unittest.TestCase):
    def test_skipped_checks_do_not_fail(self):
        report = ValidationReport(
            seed=0,
            checks=[
                CheckResult(name="a", passed=True),
                CheckResult(name="b", passed=None, reason="not applicable"),
            ],
        )
        self.assertTrue(report.passed)
        self.assertTrue(report.checks[1].skipped)
        report.checks.append(CheckResult(name="c", passed=False))
        self.assertFalse(report.passed)
        self.assertEqual(report.failed, ["c"])

    def test_out_of_band_checks_are_listed(self):
        report = ValidationReport(
            seed=0,
            checks=[
                CheckResult(name="em.strong_order", passed=True, details={"in_band": False}),
                CheckResult(name="steady", passed=True, details={"in_band": True}),
                CheckResult(name="broken", passed=False, details={"in_band": False}),
                CheckResult(name="plain", passed=True),
            ],
        )
        self.assertEqual(report.out_of_band, ["em.strong_order"])


class TestOperatorChecks(unittest.TestCase):
    def test_heat_operator(self):
        for seed in range(3):
            for check in check_heat_operator(random_hypergraph(seed, 5, 6), seed):
                self.assertTrue(check.passed, check)

    def test_ou_moments(self):
        (check,) = check_ou_moments(random_hypergraph(1, 3, 4))
        self.assertTrue(check.passed, check)
        self.assertLess(check.measured, 1e-8)

    def test_conditional_law(self):
        checks = check_conditional_law(
            TWO_BY_TWO, density_config(TWO_BY_TWO), paths=2000, dt=2e-4, seed=3
        )
        for check in checks:
            self.assertTrue(check.passed, check)

    def test_mixture_identity(self):
        dataset = [random_hypergraph(2, 3, 4), random_hypergraph(3, 3, 4)]
        cfg = DiffusionConfig.from_density((3, 4), 0.4)
        for check in check_mixture_identity(dataset, cfg, probes=4, seed=1):
            self.assertTrue(check.passed, check)


class TestEquivariance(unittest.TestCase):
    def setUp(self):
        self.h = random_hypergraph(4, 4, 5)

    def test_targets_and_net(self):
        net = DriftNet(channels=[1, 4, 1], seed=2, zero_final=False)
        checks = check_equivariance(self.h, density_config(self.h), net, seed=0)
        self.assertEqual([c.name for c in checks], ["equivariance.targets", "equivariance.net"])
        for check in checks:
            self.assertTrue(check.passed, check)

    def test_non_invariant_base_mean_is_caught(self):
        skewed = DiffusionConfig(m0=np.random.default_rng(0).uniform(size=(4, 5)))
        (check,) = check_equivariance(self.h, skewed, pairs=3, seed=1)
        self.assertFalse(check.passed)


class TestReverseChecks(unittest.TestCase):
    def test_em_order(self):
        (check,) = check_em_order(paths=32, seed=0)
        self.assertTrue(check.passed, check)
        self.assertEqual(len(check.details["rms_errors"]), 4)
        self.assertTrue(all(r > 1.0 for r in check.details["ratios"]))
        self.assertIsInstance(check.details["in_band"], bool)
        self.assertEqual(check.details["in_band"], 0.4 <= check.measured <= 0.65)

    def test_em_order_skipped_without_noise(self):
        cfg = DiffusionConfig(
            m0=np.zeros((2, 2)), tau=0.0, schedule_kind="constant", variant="pure_ou"
        )
        (check,) = check_em_order(cfg)
        self.assertTrue(check.skipped)

    def test_reverse_exactness(self):
        cfg = density_config(TWO_BY_TWO)
        (check,) = check_reverse_exactness(TWO_BY_TWO, cfg, paths=500, steps=1000, seed=2)
        self.assertTrue(check.passed, check)
        self.assertEqual(check.details["s_stop"], 0.25)


class TestStability(unittest.TestCase):
    def setUp(self):
        self.ideal = LinearDrift.ou((2, 2), rate=1.0, center=0.5)
        self.perturbed = LinearDrift.ou((2, 2), rate=1.5, center=0.5, shift=np.full((2, 2), 0.1))

    def test_linear_drift(self):
        x = np.arange(4.0).reshape(2, 2)
        np.testing.assert_allclose(self.ideal(x), -(x - 0.5))
        self.assertAlmostEqual(self.perturbed.one_sided_lipschitz(), -1.5)
        self.assertAlmostEqual(
            estimate_one_sided_lipschitz(self.perturbed, x, 0.0), -1.5, places=6
        )

    def test_identical_drifts_have_no_error(self):
        (check,) = check_stability_bound(self.ideal, self.ideal, (2, 2), paths=50, steps=50)
        self.assertTrue(check.passed, check)
        self.assertEqual(check.details["mean_error_sq"], 0.0)

    def test_perturbed_drift(self):
        (check,) = check_stability_bound(
            self.ideal, self.perturbed, (2, 2), paths=500, steps=200, seed=1
        )
        self.assertTrue(check.passed, check)

    def test_total_error(self):
        (check,) = check_total_error(self.ideal, self.perturbed, (2, 2), paths=500, seed=1)
        self.assertTrue(check.passed, check)
        self.assertGreater(check.details["reverse_error"], 0.0)

    def test_net_lipschitz(self):
        net = DriftNet(channels=[1, 4, 4, 1], seed=0, zero_final=False)
        (check,) = check_lipschitz(net, (3, 3), 0.5, probes=2)
        self.assertTrue(check.passed, check)
