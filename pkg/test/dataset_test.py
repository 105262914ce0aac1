import os
import tempfile
import unittest

import numpy as np
import torch

from dataset.dataloader import MultiViewDataModule
from dataset.dataset import MultiViewDataset, load_manifest, read_view_csv, save_dataset
from dataset.synth import LatentSpec, benchmark_dataset, join_views, split_views, synth_images, synth_multiview
from linalg.errors import AlignmentError, InvalidShape, InvalidSpec, ParseError


class TestDataset(unittest.TestCase):

    def test_views_must_align(self):
        with self.assertRaises(AlignmentError):
            MultiViewDataset([torch.zeros(2, 5), torch.zeros(3, 4)])

    def test_items_are_columns(self):
        ds = MultiViewDataset([torch.arange(6.).reshape(2, 3), torch.arange(3.).reshape(1, 3)])
        views, idx = ds[1]
        self.assertEqual(idx, 1)
        self.assertEqual(views[0].tolist(), [1., 4.])
        self.assertEqual(views[1].tolist(), [1.])

    def test_save_and_load_manifest(self):
        ds = synth_multiview(LatentSpec.random(view_dims=(3, 4), seed=2), 30, seed=0)
        with tempfile.TemporaryDirectory() as tmp:
            save_dataset(ds, tmp)
            loaded = load_manifest(tmp)
        self.assertEqual(loaded.dims, [3, 4])
        self.assertEqual(loaded.k, 3)
        self.assertTrue(torch.equal(loaded.true_labels, ds.true_labels))
        self.assertTrue(torch.equal(loaded.views[1], ds.views[1]))

    def test_parse_error_reports_line(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'view.csv')
            with open(path, 'w') as f:
                f.write('1,2,3\n4,x,6\n')
            with self.assertRaises(ParseError) as ctx:
                read_view_csv(path)
        self.assertEqual(ctx.exception.line, 2)

    def test_header_row_is_skipped(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'view.csv')
            with open(path, 'w') as f:
                f.write('a,b\n1,2\n3,4\n')
            X = read_view_csv(path)
        self.assertEqual(X.tolist(), [[1., 2.], [3., 4.]])

    def test_malformed_manifest(self):
        cases = {'broken.json': '{"views": [\n', 'noviews.json': '{"k": 3}', 'nopath.json': '{"views": [{"dim": 2}]}',
                 'badlabels.json': '{"views": [{"path": "v.csv"}], "labels_path": 4}'}
        with tempfile.TemporaryDirectory() as tmp:
            for name, text in cases.items():
                path = os.path.join(tmp, name)
                with open(path, 'w') as f:
                    f.write(text)
                with self.assertRaises(ParseError, msg=name) as ctx:
                    load_manifest(path)
                self.assertEqual(ctx.exception.path, path)
                if name == 'broken.json':
                    self.assertEqual(ctx.exception.line, 2)

    def test_dataloader_batches_are_seeded(self):
        ds = benchmark_dataset('blobs', n_samples=40)
        batches = []
        for _ in range(2):
            data_module = MultiViewDataModule(ds, 8, seed=3)
            data_module.setup()
            batches.append(next(iter(data_module.train_dataloader())))
        first, second = batches
        self.assertEqual(tuple(first[0][0].shape), (8, 10))
        self.assertTrue(torch.equal(first[1], second[1]))


class TestSynth(unittest.TestCase):

    def test_synth_is_deterministic(self):
        spec = LatentSpec.random(n_clusters=4, view_dims=(5, 6, 7), seed=1)
        a = synth_multiview(spec, 50, seed=9)
        b = synth_multiview(spec, 50, seed=9)
        self.assertEqual(a.dims, [5, 6, 7])
        self.assertEqual(tuple(a.latent.shape), (4, 50))
        self.assertTrue(torch.equal(a.views[2], b.views[2]))
        self.assertTrue(torch.equal(a.true_labels, b.true_labels))
        self.assertTrue(0 <= int(a.true_labels.min()) and int(a.true_labels.max()) < 4)

    def test_synth_needs_enough_samples(self):
        with self.assertRaises(InvalidSpec):
            synth_multiview(LatentSpec.random(n_clusters=3), 2)

    def test_spec_rejects_empty_view(self):
        with self.assertRaises(InvalidSpec):
            LatentSpec.random(view_dims=(4, 0))

    def test_split_and_join_images(self):
        images, labels = synth_images(n_clusters=3, n_samples=12, seed=0)
        ds = split_views(images, 8, 8, labels, 3)
        self.assertEqual(ds.dims, [32, 32])
        self.assertTrue(torch.equal(join_views(ds, 8, 8), images))

    def test_split_rejects_odd_height(self):
        with self.assertRaises(InvalidShape):
            split_views(torch.zeros(21, 4), 7, 3)

    def test_unknown_benchmark(self):
        with self.assertRaises(InvalidSpec):
            benchmark_dataset('mnist')

    def test_cluster_counts_stay_within_three_sigma(self):
        n, k = 600, 3
        sigma = (n * (1 / k) * (1 - 1 / k)) ** 0.5
        for seed in range(10):
            counts = torch.bincount(benchmark_dataset('blobs', seed=seed, n_samples=n).true_labels, minlength=k)
            self.assertTrue(torch.all((counts - n / k).abs() <= 3 * sigma), f'seed {seed}: {counts.tolist()}')

    def test_nuisance_benchmark(self):
        plain = benchmark_dataset('blobs', seed=2, n_samples=400)
        noisy = benchmark_dataset('blobs-nuisance', seed=2, n_samples=400)
        again = benchmark_dataset('blobs-nuisance', seed=2, n_samples=400)
        self.assertTrue(torch.equal(noisy.views[0], again.views[0]))
        self.assertTrue(torch.equal(noisy.true_labels, plain.true_labels))
        self.assertEqual(noisy.dims, [10, 10])
        # the first seven features share the blobs noise, the last three are swamped
        self.assertTrue(torch.equal(noisy.views[1][:7], plain.views[1][:7]))
        self.assertTrue(torch.all(noisy.views[0][7:].var(dim=1) > 2 * plain.views[0][7:].var(dim=1)))

    def test_per_feature_noise_must_match_view(self):
        with self.assertRaises(InvalidSpec):
            LatentSpec.random(view_dims=(4, 3), noise=[np.ones(4), np.ones(4)])
        with self.assertRaises(InvalidSpec):
            LatentSpec.random(view_dims=(2, 2), noise=[np.array([1., -1.]), np.ones(2)])


if __name__ == '__main__':
    unittest.main()
