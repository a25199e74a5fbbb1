# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.
import unittest

import numpy as np
from scipy.optimize import linprog

from constants import FEATURE_NAMES
from metrics import (
    EmptyBatchError,
    EmptySampleError,
    calibration_gaps,
    default_spectral_k,
    evaluate,
    feature_mmd,
    feature_table,
    pairwise_intersections,
    spectral_wd,
    structural_features,
    tail_mass,
    unbiased_mmd2,
    wasserstein_1d,
)
from tests.helpers import TWO_BY_TWO, random_batch, random_permutations


def transport_oracle(a: np.ndarray, b: np.ndarray) -> float:
    """W₁ as the optimal transport linear program between uniform weights."""
    cost = np.abs(a[:, None] - b[None, :]).ravel()
    n, m = len(a), len(b)
    rows = np.kron(np.eye(n), np.ones((1, m)))
    cols = np.kron(np.ones((1, n)), np.eye(m))
    result = linprog(
        cost,
        A_eq=np.vstack([rows, cols]),
        b_eq=np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)]),
        bounds=(0, None),
        method="highs",
    )
    return float(result.fun)


def mmd_oracle(x: np.ndarray, y: np.ndarray, bandwidth: float) -> float:
    def k(a, b):
        return np.exp(-np.sum((a - b) ** 2) / (2.0 * bandwidth**2))

    n, m = len(x), len(y)
    xx = sum(k(x[i], x[j]) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
    yy = sum(k(y[i], y[j]) for i in range(m) for j in range(m) if i != j) / (m * (m - 1))
    xy = sum(k(x[i], y[j]) for i in range(n) for j in range(m)) / (n * m)
    return xx + yy - 2.0 * xy


class TestDistances(unittest.TestCase):
    def test_wasserstein_matches_transport_program(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            a, b = rng.integers(0, 6, size=5).astype(float), rng.normal(2.0, 1.5, size=7)
            self.assertAlmostEqual(wasserstein_1d(a, b), transport_oracle(a, b), places=8)

    def test_wasserstein_of_empty_sample(self):
        with self.assertRaises(EmptySampleError):
            wasserstein_1d([], [1.0])

    def test_mmd_matches_double_sum(self):
        rng = np.random.default_rng(1)
        x, y = rng.standard_normal((6, 3)), rng.standard_normal((4, 3)) + 0.5
        self.assertAlmostEqual(unbiased_mmd2(x, y, 1.3), mmd_oracle(x, y, 1.3), places=12)


class TestStatistics(unittest.TestCase):
    def test_calibration_gaps(self):
        gaps = calibration_gaps([TWO_BY_TWO], [np.ones((2, 2))])
        self.assertAlmostEqual(gaps.delta_rho, 0.25)
        self.assertAlmostEqual(gaps.delta_k, 0.5)
        self.assertAlmostEqual(gaps.delta_e, 0.5)
        self.assertAlmostEqual(gaps.w1_degree, 0.5)
        self.assertAlmostEqual(gaps.w1_size, 0.5)

    def test_intersections(self):
        h = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]])
        np.testing.assert_array_equal(pairwise_intersections(h), [2, 1, 2])
        self.assertAlmostEqual(tail_mass(h), 2 / 3)
        with self.assertRaises(EmptySampleError):
            pairwise_intersections(np.ones((3, 1)))

    def test_structural_features(self):
        features = structural_features(TWO_BY_TWO)
        self.assertEqual(len(features), len(FEATURE_NAMES))
        np.testing.assert_allclose(features[:8], [0.75, 1.5, 0.5, 1.5, 0.5, 0.0, 1.0, 1.0])
        self.assertAlmostEqual(features[11], 2.0)
        self.assertEqual(set(feature_table([TWO_BY_TWO])), set(FEATURE_NAMES))

    def test_spectral_wd_on_two_by_two_spectra(self):
        self.assertAlmostEqual(wasserstein_1d(np.array([0.0, 2.0]), np.zeros(2)), 1.0, places=12)
        # L_E spectra {0, 2} against {1, 1}; L_V spectra {0, 0.75} against {0, 0}.
        node_wd, edge_wd = spectral_wd([TWO_BY_TWO], [np.eye(2)], k=2)
        self.assertAlmostEqual(edge_wd, 1.0, places=10)
        self.assertAlmostEqual(node_wd, 0.375, places=10)

    def test_spectral_truncation(self):
        self.assertEqual(default_spectral_k([TWO_BY_TWO], [np.ones((3, 4))]), 2)
        with self.assertRaises(ValueError):
            spectral_wd([TWO_BY_TWO], [TWO_BY_TWO], k=0)

    def test_feature_mmd_needs_two_per_batch(self):
        with self.assertRaises(EmptyBatchError):
            feature_mmd([TWO_BY_TWO], random_batch(0, 3))


class TestEvaluate(unittest.TestCase):
    def setUp(self):
        self.real = random_batch(0, 6, 5, 6)
        self.gen = random_batch(1, 4, 5, 6)

    def test_identical_batches(self):
        report = evaluate(self.real, list(self.real))
        for name in (
            "delta_rho",
            "delta_k",
            "delta_e",
            "w1_degree",
            "w1_size",
            "node_spec_wd",
            "edge_spec_wd",
            "tail_gap",
            "intersection_wd",
            "feature_mmd",
        ):
            self.assertAlmostEqual(getattr(report, name), 0.0, places=12, msg=name)
        self.assertEqual(report.spectral_k, 5)

    def test_relabeling_invariance(self):
        moved = []
        for k, h in enumerate(self.gen):
            rows, cols = random_permutations(k, 5, 6)
            moved.append(h.permuted(rows, cols))
        first, second = evaluate(self.real, self.gen), evaluate(self.real, moved)
        for name, value in first.dict().items():
            if isinstance(value, float):
                self.assertAlmostEqual(value, getattr(second, name), places=9, msg=name)

    def test_empty_batch(self):
        with self.assertRaises(EmptyBatchError):
            evaluate([], self.gen)

    def test_counts(self):
        report = evaluate(self.real, self.gen)
        self.assertEqual((report.real_count, report.gen_count), (6, 4))
        self.assertGreaterEqual(report.feature_mmd, 0.0)
