# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.
import unittest

import numpy as np
import scipy.linalg

from incidence import (
    DimensionMismatchError,
    IncidenceMatrix,
    InvalidIncidenceError,
    degree_profile,
    edge_laplacian,
    heat_apply,
    inverse_power,
    node_laplacian,
    random_incidence,
)
from tests.helpers import TWO_BY_TWO, permutation_matrix, random_hypergraph, random_permutations


class TestIncidenceMatrix(unittest.TestCase):
    def test_rejects_non_binary_entries(self):
        with self.assertRaises(InvalidIncidenceError):
            IncidenceMatrix(np.array([[1, 2], [1, 0]]))

    def test_rejects_empty_hyperedge(self):
        with self.assertRaises(InvalidIncidenceError):
            IncidenceMatrix(np.array([[1, 0], [1, 0]]))

    def test_isolated_nodes(self):
        entries = np.array([[1, 1], [0, 0]])
        with self.assertRaises(InvalidIncidenceError):
            IncidenceMatrix(entries)
        h = IncidenceMatrix(entries, allow_isolated=True)
        self.assertEqual(h.shape, (2, 2))
        self.assertEqual(h.nnz, 2)

    def test_rejects_empty_shape(self):
        with self.assertRaises(InvalidIncidenceError):
            IncidenceMatrix(np.zeros((0, 3)))

    def test_entries_are_read_only(self):
        h = IncidenceMatrix(TWO_BY_TWO)
        with self.assertRaises(ValueError):
            h.entries[0, 0] = 0

    def test_permuted(self):
        h = random_hypergraph(3, 4, 5)
        rows, cols = random_permutations(3, 4, 5)
        expected = permutation_matrix(rows) @ h.relaxed() @ permutation_matrix(cols).T
        np.testing.assert_array_equal(h.permuted(rows, cols).relaxed(), expected)


class TestOperators(unittest.TestCase):
    def test_degree_profile(self):
        profile = degree_profile(TWO_BY_TWO)
        np.testing.assert_array_equal(profile.d_v, [2, 1])
        np.testing.assert_array_equal(profile.d_e, [2, 1])
        self.assertEqual(profile.total, 3)

    def test_inverse_power_maps_zero_to_zero(self):
        np.testing.assert_allclose(inverse_power(np.array([0.0, 4.0]), 0.5), [0.0, 0.5])

    def test_two_by_two_edge_spectrum(self):
        l_e = edge_laplacian(TWO_BY_TWO)
        np.testing.assert_allclose(scipy.linalg.eigvalsh(l_e.matrix), [0.0, 2.0], atol=1e-12)

    def test_two_by_two_literal_operators(self):
        np.testing.assert_allclose(
            node_laplacian(TWO_BY_TWO).matrix,
            [[0.25, -0.35355339], [-0.35355339, 0.5]],
            atol=1e-8,
        )
        l_e = edge_laplacian(TWO_BY_TWO)
        np.testing.assert_allclose(l_e.overlap, [[0.0, 0.70710678], [0.70710678, 0.0]], atol=1e-8)
        np.testing.assert_allclose(l_e.ov_degrees, [0.70710678, 0.70710678], atol=1e-8)
        np.testing.assert_allclose(l_e.matrix, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-12)

    def test_singleton_hyperedges_have_zero_node_laplacian(self):
        for n in (1, 3, 6):
            l_v = node_laplacian(np.eye(n)).matrix
            np.testing.assert_allclose(l_v, np.zeros((n, n)), atol=1e-15)
            np.testing.assert_allclose(edge_laplacian(np.eye(n)).matrix, np.eye(n))

    def test_single_hyperedge(self):
        # One hyperedge holding every node: L_V = I - J/n, L_E = [1].
        h = np.ones((3, 1))
        np.testing.assert_allclose(node_laplacian(h).matrix, np.eye(3) - np.ones((3, 3)) / 3)
        np.testing.assert_allclose(edge_laplacian(h).matrix, [[1.0]])

    def test_disjoint_hyperedges_have_no_overlap(self):
        h = np.array([[1, 0], [1, 0], [0, 1]])
        l_e = edge_laplacian(h)
        np.testing.assert_array_equal(l_e.overlap, np.zeros((2, 2)))
        np.testing.assert_allclose(l_e.matrix, np.eye(2))

    def test_isolated_node_block(self):
        entries = np.array([[1, 1], [1, 0], [0, 0]])
        l_v = node_laplacian(entries).matrix
        np.testing.assert_allclose(l_v[2], [0.0, 0.0, 1.0])

    def test_symmetric_psd_on_random_hypergraphs(self):
        for seed in range(200):
            rng = np.random.default_rng(seed)
            h = random_incidence(rng, int(rng.integers(1, 13)), int(rng.integers(1, 13)))
            for matrix in (node_laplacian(h).matrix, edge_laplacian(h).matrix):
                np.testing.assert_array_equal(matrix, matrix.T)
                self.assertGreaterEqual(scipy.linalg.eigvalsh(matrix).min(), -1e-10)

    def test_equivariance(self):
        for seed in range(10):
            h = random_hypergraph(seed, 6, 7)
            l_v, l_e = node_laplacian(h).matrix, edge_laplacian(h).matrix
            for trial in range(20):
                rows, cols = random_permutations(100 * seed + trial, 6, 7)
                p, q = permutation_matrix(rows), permutation_matrix(cols)
                moved = h.permuted(rows, cols)
                np.testing.assert_allclose(node_laplacian(moved).matrix, p @ l_v @ p.T, atol=1e-9)
                np.testing.assert_allclose(edge_laplacian(moved).matrix, q @ l_e @ q.T, atol=1e-9)

    def test_heat_apply(self):
        h = random_hypergraph(5)
        l_v, l_e = node_laplacian(h), edge_laplacian(h)
        x = np.random.default_rng(0).standard_normal(h.shape)
        np.testing.assert_allclose(heat_apply(l_v, l_e, x), l_v.matrix @ x + x @ l_e.matrix)
        with self.assertRaises(DimensionMismatchError):
            heat_apply(l_v, l_e, np.zeros((2, 2)))

    def test_random_incidence_is_valid(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            h = random_incidence(rng, 5, 6, density=0.05)
            self.assertTrue(np.all(h.entries.sum(axis=0) > 0))
            self.assertTrue(np.all(h.entries.sum(axis=1) > 0))
