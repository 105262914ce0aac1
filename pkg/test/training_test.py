import json
import os
import tempfile
import unittest

import torch

from autoencoders.models import CoperModel
from autoencoders.training import (CoperModule, TrainConfig, coper_objective, load_checkpoint, save_checkpoint,
                                   train_coper)
from dataset.synth import benchmark_dataset
from linalg.errors import ConfigError, InvalidState
from linalg.linalg import DTYPE
from metrics.metrics import evaluate


def small_config(**overrides):
    values = dict(epochs=2, start_epoch=0, perm_epoch=1, batch_size=30, lr=1e-3, embed_dim=4,
                  hidden_dims=[16], head_dims=[8], seed=0)
    values.update(overrides)
    return TrainConfig(**values)


class TestTrainConfig(unittest.TestCase):

    def test_schedule_defaults(self):
        config = TrainConfig(epochs=200)
        self.assertEqual((config.start_epoch, config.perm_epoch), (20, 30))

    def test_unknown_option(self):
        with self.assertRaises(ConfigError):
            TrainConfig.from_dict({'epochs': 3, 'momentum': 0.9})

    def test_from_json_overrides(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'preset.json')
            with open(path, 'w') as f:
                json.dump({'epochs': 50, 'lr': 0.01}, f)
            config = TrainConfig.from_json(path, epochs=None, seed=3)
        self.assertEqual((config.epochs, config.lr, config.seed), (50, 0.01, 3))

    def test_variants(self):
        base = TrainConfig()
        self.assertTrue(base.for_variant('linear').linear)
        self.assertFalse(base.for_variant('no-perm').use_perm)
        self.assertFalse(base.for_variant('no-agreement').use_agreement)
        with self.assertRaises(ConfigError):
            base.for_variant('no-head')

    def test_validate(self):
        with self.assertRaises(ConfigError):
            small_config(batch_size=5).validate(100, 3)
        with self.assertRaises(ConfigError):
            small_config().validate(100, 1)
        with self.assertRaises(ConfigError):
            small_config(start_epoch=5).validate(100, 3)
        self.assertEqual(small_config().validate(100, 3).batch_for(20), 20)


class TestObjective(unittest.TestCase):

    def setUp(self):
        g = torch.Generator().manual_seed(0)
        self.views = [torch.randn(32, 5, generator=g, dtype=DTYPE), torch.randn(32, 6, generator=g, dtype=DTYPE)]
        self.model = CoperModel([5, 6], 3, embed_dim=4, hidden_dims=[16], head_dims=[8])

    def test_warmup_has_only_correlation_and_reconstruction(self):
        losses = coper_objective(self.model, self.views, small_config(), ce_active=False, perm_active=False)
        self.assertEqual(set(losses.parts), {'corr', 'mse'})
        self.assertTrue(torch.isfinite(losses.total))

    def test_full_objective_backpropagates(self):
        config = small_config(top_count=1)
        losses = coper_objective(self.model, self.views, config, ce_active=True, perm_active=True, step=3)
        self.assertTrue({'corr', 'mse', 'ce', 'perm_corr', 'retained'} <= set(losses.parts))
        losses.total.backward()
        self.assertIsNotNone(self.model.encoders[1].layers[0].weight.grad)
        self.assertIsNotNone(self.model.head.layers[-1].weight.grad)

    def test_no_corr_drops_both_correlation_terms(self):
        config = small_config(top_count=1, use_corr=False, decoders=False)
        model = CoperModel([5, 6], 3, embed_dim=4, hidden_dims=[16], head_dims=[8], decoders=False)
        losses = coper_objective(model, self.views, config, ce_active=True, perm_active=True)
        self.assertNotIn('corr', losses.parts)
        self.assertNotIn('perm_corr', losses.parts)
        self.assertNotIn('mse', losses.parts)


class TestObjectiveGradient(unittest.TestCase):

    def test_matches_finite_differences(self):
        g = torch.Generator().manual_seed(1)
        views = [torch.randn(8, 4, generator=g, dtype=DTYPE), torch.randn(8, 5, generator=g, dtype=DTYPE)]
        model = CoperModel([4, 5], 3, embed_dim=3, hidden_dims=[6], head_dims=[5])
        config = small_config(embed_dim=3, top_count=1, ridge=1e-2)

        def objective():
            return coper_objective(model, views, config, ce_active=True, perm_active=True).total

        objective().backward()
        eps = 1e-6
        for param in (model.encoders[0].layers[0].weight, model.decoders[1].layers[-1].bias,
                      model.head.layers[-1].weight, model.fusion_weights):
            index = (0,) * param.ndim
            with torch.no_grad():
                param[index] += eps
                up = objective().item()
                param[index] -= 2 * eps
                down = objective().item()
                param[index] += eps
            numeric = (up - down) / (2 * eps)
            analytic = param.grad[index].item()
            self.assertLess(abs(numeric - analytic), 1e-6 + 1e-4 * abs(analytic))


class TestTraining(unittest.TestCase):

    def test_short_run_is_reproducible(self):
        ds = benchmark_dataset('blobs', n_samples=60)
        first = train_coper(ds, small_config())
        second = train_coper(ds, small_config())
        self.assertEqual(len(first.assignment), 60)
        self.assertEqual(first.assignment.labels.tolist(), second.assignment.labels.tolist())
        self.assertEqual(list(first.log['epoch']), [0, 1])
        self.assertIn('acc', first.log.columns)
        self.assertEqual(first.log['loss'].tolist(), second.log['loss'].tolist())

    def test_checkpoint_restores_predictions(self):
        ds = benchmark_dataset('blobs', n_samples=60)
        config = small_config(epochs=1)
        result = train_coper(ds, config)
        views = [v.T for v in ds.views]
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'checkpoint.json')
            save_checkpoint(path, result.model, config)
            with open(path) as f:
                first_bytes = f.read()
            save_checkpoint(path, result.model, config)
            with open(path) as f:
                self.assertEqual(f.read(), first_bytes)
            model, restored = load_checkpoint(path)
        self.assertEqual(restored.embed_dim, 4)
        with torch.no_grad():
            self.assertTrue(torch.allclose(model(views), result.model(views)))

    def test_step_without_active_terms_is_skipped(self):
        config = small_config(use_corr=False, decoders=False, start_epoch=1)
        module = CoperModule(config, [5, 6], 3)
        g = torch.Generator().manual_seed(0)
        views = [torch.randn(30, 5, generator=g, dtype=DTYPE), torch.randn(30, 6, generator=g, dtype=DTYPE)]
        self.assertIsNone(module.training_step((views, torch.arange(30)), 0))

    def test_late_start_equals_correlation_only_training(self):
        ds = benchmark_dataset('blobs', n_samples=60)
        late = train_coper(ds, small_config(start_epoch=2, perm_epoch=2))
        # options that only matter once pseudo-labels are in use
        plain = train_coper(ds, small_config(start_epoch=2, perm_epoch=2, use_perm=False, use_agreement=False,
                                             lam=0.9, w_ce=5., top_count=3, perm_rounds=4))
        self.assertEqual(late.assignment.labels.tolist(), plain.assignment.labels.tolist())
        self.assertTrue(late.log.equals(plain.log))
        self.assertEqual(set(late.log.columns) & {'ce', 'perm_corr', 'retained'}, set())
        for (name, a), b in zip(late.model.state_dict().items(), plain.model.state_dict().values()):
            self.assertTrue(torch.equal(a, b), name)

    def test_malformed_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'broken.json')
            with open(path, 'w') as f:
                f.write('{"epochs": 3,')
            with self.assertRaises(ConfigError):
                TrainConfig.from_json(path)
            with self.assertRaises(InvalidState):
                load_checkpoint(path)
            with open(path, 'w') as f:
                f.write('[1, 2]')
            with self.assertRaises(ConfigError):
                TrainConfig.from_json(path)
            with self.assertRaises(InvalidState):
                load_checkpoint(path)


class TestDeskBenchmark(unittest.TestCase):
    "the desk preset on blobs, a few seeds"

    PRESET = os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'model_configs', 'desk.json')

    def test_variant_ordering(self):
        ds = benchmark_dataset('blobs', n_samples=600)
        seeds = range(3)
        acc = {}
        for variant in ('full', 'no-perm', 'no-corr'):
            scores = []
            for seed in seeds:
                config = TrainConfig.from_json(self.PRESET, epochs=50, seed=seed).for_variant(variant)
                result = train_coper(ds, config)
                scores.append(evaluate(result.assignment, ds.true_labels).acc)
            acc[variant] = sum(scores) / len(scores)
        self.assertGreaterEqual(acc['full'], 0.90)
        # seed-averaged accuracy, two points of slack for three seeds
        self.assertGreaterEqual(acc['full'], acc['no-perm'] - 0.02)
        self.assertGreaterEqual(acc['no-perm'], acc['no-corr'] - 0.02)


if __name__ == '__main__':
    unittest.main()
