# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.

import os
import unittest
from unittest.mock import patch

import numpy as np

from utils import array_checksum, as_generator, payload_hash, substream, worker_count


class TestUtils(unittest.TestCase):
    def test_substreams(self):
        # Same path, same stream; any change in the path gives another stream.
        first = substream(3, "train", 1).random(4)
        np.testing.assert_array_equal(first, substream(3, "train", 1).random(4))
        self.assertFalse(np.array_equal(first, substream(3, "train", 2).random(4)))
        self.assertFalse(np.array_equal(first, substream(4, "train", 1).random(4)))
        self.assertFalse(np.array_equal(first, substream(3, "sample", 1).random(4)))

    def test_as_generator(self):
        rng = np.random.default_rng(0)
        self.assertIs(as_generator(rng), rng)
        expected = np.random.default_rng(5).random(2)
        np.testing.assert_array_equal(as_generator(5).random(2), expected)

    def test_payload_hash_ignores_key_order(self):
        self.assertEqual(payload_hash({"a": 1, "b": [2, 3]}), payload_hash({"b": [2, 3], "a": 1}))
        self.assertNotEqual(payload_hash({"a": 1}), payload_hash({"a": 2}))

    def test_array_checksum(self):
        a = np.arange(6.0).reshape(2, 3)
        self.assertEqual(array_checksum(a), array_checksum(a.astype(np.float32)))
        self.assertNotEqual(array_checksum(a), array_checksum(a, a))

    def test_worker_count(self):
        with patch.dict(os.environ, {"HEDGE_THREADS": "3"}):
            self.assertEqual(worker_count(), 3)
        with patch.dict(os.environ, {"HEDGE_THREADS": "0"}):
            self.assertEqual(worker_count(), 1)
        with patch.dict(os.environ, {"HEDGE_THREADS": "many"}), patch(
            "utils.os.cpu_count", return_value=6
        ):
            self.assertEqual(worker_count(), 6)
