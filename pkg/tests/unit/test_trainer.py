# Copyright 2026 The HEDGE Authors.
# See LICENSE file for licensing details.
import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from config import TrainConfig
from drift_net import DriftNet
from forward import DiffusionConfig, ForwardProcess
from incidence import InvalidIncidenceError
from tests.helpers import permutation_matrix, random_batch, random_permutations
from trainer import (
    Adam,
    DatasetShapeError,
    NonFiniteTargetError,
    TargetClipper,
    TrainingBatch,
    batch_density,
    build_basis_bank,
    check_dataset,
    cosine_lr,
    loss_and_gradients,
    regression_loss,
    sample_training_batch,
    train,
    train_step,
)
from utils import substream


class TestOptimisation(unittest.TestCase):
    def test_adam_first_step_has_learning_rate_size(self):
        params = {"w": np.array([3.0, -2.0])}
        Adam(params).step(params, {"w": np.array([6.0, -4.0])}, lr=0.1)
        np.testing.assert_allclose(params["w"], [2.9, -1.9], atol=1e-6)

    def test_adam_minimises_a_quadratic(self):
        params = {"w": np.array([3.0, -2.0, 0.5])}
        optimizer = Adam(params)
        for _ in range(500):
            optimizer.step(params, {"w": 2.0 * params["w"]}, lr=0.05)
        self.assertLess(np.linalg.norm(params["w"]), 5e-2)

    def test_cosine_lr(self):
        self.assertAlmostEqual(cosine_lr(0, 100, 1e-3, 1e-5), 1e-3)
        self.assertAlmostEqual(cosine_lr(99, 100, 1e-3, 1e-5), 1e-5)
        self.assertAlmostEqual(cosine_lr(50, 101, 1e-3, 1e-5), 0.5 * (1e-3 + 1e-5))
        self.assertEqual(cosine_lr(0, 1, 1e-3, 1e-5), 1e-3)


class TestTargetClipper(unittest.TestCase):
    def test_no_warmup_disables_clipping(self):
        targets = np.full((2, 2, 2), 100.0)
        np.testing.assert_array_equal(TargetClipper(0.5, 0)(targets), targets)

    def test_threshold_fixed_after_warmup(self):
        clipper = TargetClipper(0.5, 4)
        warm = np.stack([np.full((1, 1), v) for v in (1.0, 2.0, 3.0, 4.0)])
        np.testing.assert_array_equal(clipper(warm[:2]), warm[:2])
        clipped = clipper(warm[2:])
        self.assertEqual(clipper.threshold, 2.5)
        np.testing.assert_allclose(clipped.ravel(), [2.5, 2.5])
        np.testing.assert_allclose(clipper(np.full((1, 1, 1), -10.0)).ravel(), [-2.5])


class TestDataset(unittest.TestCase):
    def test_empty(self):
        with self.assertRaises(DatasetShapeError):
            check_dataset([])

    def test_mixed_shapes(self):
        with self.assertRaises(DatasetShapeError):
            check_dataset(random_batch(0, 2, 3, 4) + random_batch(1, 1, 4, 3))

    def test_invalid_entries(self):
        with self.assertRaises(InvalidIncidenceError):
            check_dataset([np.array([[1, 2], [0, 1]])])

    def test_isolated_nodes_are_allowed(self):
        matrices = check_dataset([np.array([[1, 1], [0, 0]])])
        self.assertEqual(matrices[0].nnz, 2)

    def test_batch_density(self):
        self.assertEqual(batch_density([np.ones((2, 2)), np.array([[1, 0], [0, 1]])]), 0.75)


class TestRegression(unittest.TestCase):
    def setUp(self):
        self.data = check_dataset(random_batch(2, 3, 3, 4))
        self.diffusion = DiffusionConfig.from_density((3, 4), batch_density(self.data))
        self.cfg = TrainConfig(batch=8, s_min=0.2, warmup=0)
        self.bank = build_basis_bank(self.diffusion, self.data)
        self.batch = sample_training_batch(self.bank, self.cfg, substream(0, "test"), 8)

    def test_batch_draws(self):
        self.assertEqual(self.batch.states.shape, (8, 3, 4))
        self.assertTrue(np.all((self.batch.times >= 0.2) & (self.batch.times <= 1.0)))
        k = 0
        process = self.bank[self.batch.indices[k]]
        np.testing.assert_allclose(
            self.batch.targets[k],
            process.reverse_drift(self.batch.states[k], self.batch.times[k]),
        )

    def test_zero_net_loss_is_target_energy(self):
        net = DriftNet(channels=[1, 4, 1])
        energy = np.mean(np.sum(self.batch.targets**2, axis=(1, 2)))
        self.assertAlmostEqual(regression_loss(net, self.batch), energy)

    def test_non_finite_targets(self):
        targets = self.batch.targets.copy()
        targets[0, 0, 0] = np.nan
        bad = TrainingBatch(self.batch.indices, self.batch.times, self.batch.states, targets)
        with self.assertRaises(NonFiniteTargetError):
            regression_loss(DriftNet(channels=[1, 4, 1]), bad)

    def test_gradient_directional_derivative(self):
        net = DriftNet(channels=[1, 4, 1], seed=1, zero_final=False)
        loss, grads = loss_and_gradients(net, self.batch)
        rng = np.random.default_rng(0)
        direction = {k: rng.standard_normal(v.shape) for k, v in net.params.items()}
        step = 1e-6

        def shifted(sign: float) -> float:
            moved = net.copy()
            for name in moved.params:
                moved.params[name] = moved.params[name] + sign * step * direction[name]
            return regression_loss(moved, self.batch)

        numeric = (shifted(1.0) - shifted(-1.0)) / (2.0 * step)
        exact = sum(float(np.sum(grads[k] * direction[k])) for k in grads)
        self.assertAlmostEqual(loss, regression_loss(net, self.batch))
        self.assertLessEqual(abs(numeric - exact), 1e-4 * max(abs(exact), 1.0))

    def test_loss_is_invariant_under_relabeling(self):
        net = DriftNet(channels=[1, 4, 1], seed=1, zero_final=False)
        states, targets = [], []
        for k, index in enumerate(self.batch.indices):
            rows, cols = random_permutations(k, 3, 4)
            p, q = permutation_matrix(rows), permutation_matrix(cols)
            moved = ForwardProcess(self.diffusion, self.data[index].permuted(rows, cols))
            state = p @ self.batch.states[k] @ q.T
            target = moved.reverse_drift(state, self.batch.times[k])
            np.testing.assert_allclose(
                target, p @ self.batch.targets[k] @ q.T, rtol=1e-8, atol=1e-8
            )
            states.append(state)
            targets.append(target)
        relabeled = TrainingBatch(
            self.batch.indices, self.batch.times, np.stack(states), np.stack(targets)
        )
        self.assertAlmostEqual(
            regression_loss(net, relabeled), regression_loss(net, self.batch), places=8
        )

    def test_small_steps_on_a_frozen_batch_do_not_increase_the_loss(self):
        net = DriftNet(channels=[1, 8, 1], seed=3, zero_final=False)
        optimizer = Adam(net.params)
        losses = [train_step(net, optimizer, self.batch, lr=1e-4) for _ in range(50)]
        losses.append(regression_loss(net, self.batch))
        for before, after in zip(losses, losses[1:]):
            self.assertLessEqual(after, before * (1.0 + 1e-9))
        self.assertLess(losses[-1], losses[0])


class TestTrain(unittest.TestCase):
    def setUp(self):
        self.data = random_batch(4, 3, 3, 4)

    def test_training_reduces_held_out_loss(self):
        cfg = TrainConfig(
            steps=300, batch=16, lr=1e-2, lr_final=1e-3, s_min=0.2, warmup=0, channels=[1, 8, 1]
        )
        net, report = train(self.data, cfg)
        diffusion = DiffusionConfig.from_density((3, 4), batch_density(self.data))
        bank = build_basis_bank(diffusion, check_dataset(self.data))
        held_out = sample_training_batch(bank, cfg, substream(99, "held-out"), 256)
        zero = regression_loss(DriftNet(channels=[1, 8, 1]), held_out)
        self.assertLess(regression_loss(net, held_out), 0.9 * zero)
        self.assertEqual(len(report.losses), 300)
        self.assertEqual(report.params_checksum, net.checksum())

    def test_same_seed_same_parameters(self):
        cfg = TrainConfig(steps=5, batch=4, warmup=2, channels=[1, 4, 1], seed=7)
        first, _ = train(self.data, cfg)
        second, _ = train(self.data, cfg)
        self.assertEqual(first.checksum(), second.checksum())

    def test_log_file_and_callback(self):
        cfg = TrainConfig(steps=12, batch=4, warmup=0, channels=[1, 4, 1], log_every=5)
        calls = []
        with tempfile.TemporaryDirectory() as tmp:
            log_path = Path(tmp) / "train_log.jsonl"
            train(self.data, cfg, log_path=log_path, on_step=lambda step, net: calls.append(step))
            records = [json.loads(line) for line in log_path.read_text().splitlines()]
        self.assertEqual([r["step"] for r in records], [0, 5, 10, 11])
        self.assertEqual(set(records[0]), {"step", "loss", "lr", "wall_ms"})
        self.assertEqual(calls, list(range(12)))

    def test_s_max_beyond_horizon(self):
        cfg = TrainConfig(steps=1, s_max=1.0)
        diffusion = DiffusionConfig.from_density((3, 4), 0.4, horizon=0.5)
        with self.assertRaises(ValueError):
            train(self.data, cfg, diffusion=diffusion)
