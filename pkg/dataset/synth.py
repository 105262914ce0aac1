"""Synthetic multi-view data.

Views are noisy pushforwards of a shared latent variable theta drawn from a K-component
spherical Gaussian mixture: X_v = A_v theta + b_v + eps_v.
"""
from dataclasses import dataclass, field
from typing import List

import numpy as np
import torch
from einops import rearrange

from linalg.errors import InvalidShape, InvalidSpec
from linalg.linalg import DTYPE, as_matrix

from .dataset import MultiViewDataset


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class LatentSpec:
    n_clusters: int
    latent_dim: int
    cluster_means: np.ndarray          # (K, latent_dim)
    cluster_scales: np.ndarray         # (K,)
    view_maps: List[tuple] = field(default_factory=list)  # [(A_v (d_v, latent_dim), b_v (d_v,))]
    view_noise: List = field(default_factory=list)  # per view: one scale, or one per feature

    def validate(self):
        if self.n_clusters < 2:
            raise InvalidSpec(f'need at least 2 clusters, got {self.n_clusters}')
        if self.latent_dim < 1:
            raise InvalidSpec(f'latent_dim must be positive, got {self.latent_dim}')
        if np.shape(self.cluster_means) != (self.n_clusters, self.latent_dim):
            raise InvalidSpec(f'cluster_means has shape {np.shape(self.cluster_means)}, '
                              f'expected {(self.n_clusters, self.latent_dim)}')
        if np.shape(self.cluster_scales) != (self.n_clusters,) or np.any(np.asarray(self.cluster_scales) <= 0):
            raise InvalidSpec('cluster_scales must hold one positive scale per cluster')
        if not self.view_maps:
            raise InvalidSpec('at least one view is required')
        if len(self.view_noise) != len(self.view_maps):
            raise InvalidSpec(f'{len(self.view_noise)} noise scales for {len(self.view_maps)} views')
        for v, (A, b) in enumerate(self.view_maps):
            if A.shape[0] == 0:
                raise InvalidSpec(f'view {v} has zero dimensions')
            if A.shape[1] != self.latent_dim or b.shape != (A.shape[0],):
                raise InvalidSpec(f'view {v} map has shape {A.shape} / bias {b.shape}')
        for v, ((A, _), eps) in enumerate(zip(self.view_maps, self.view_noise)):
            if np.ndim(eps) and np.shape(eps) != (A.shape[0],):
                raise InvalidSpec(f'view {v} has {A.shape[0]} features but {np.size(eps)} noise scales')
            if np.any(np.asarray(eps) < 0):
                raise InvalidSpec('view noise scales must be non-negative')

    @property
    def view_dims(self):
        return [A.shape[0] for A, _ in self.view_maps]

    @classmethod
    def random(cls, n_clusters=3, latent_dim=4, view_dims=(10, 10), separation=2.5, scale=1.0,
               noise=1.0, seed=0):
        "draws cluster means and random linear view maps from one seed"
        if any(d <= 0 for d in view_dims) or len(view_dims) == 0:
            raise InvalidSpec(f'view dimensions must be positive, got {list(view_dims)}')
        if n_clusters < 2:
            raise InvalidSpec(f'need at least 2 clusters, got {n_clusters}')
        rng = _rng(seed)
        means = separation * rng.normal(size=(n_clusters, latent_dim))
        maps = [(rng.normal(size=(d, latent_dim)) / np.sqrt(latent_dim), rng.normal(size=d))
                for d in view_dims]
        noises = list(noise) if np.ndim(noise) else [float(noise)] * len(view_dims)
        spec = cls(n_clusters, latent_dim, means, np.full(n_clusters, float(scale)), maps, noises)
        spec.validate()
        return spec


def synth_multiview(spec, n_samples, seed=0):
    spec.validate()
    if n_samples < spec.n_clusters:
        raise InvalidSpec(f'n_samples ({n_samples}) must be at least K ({spec.n_clusters})')
    # one independent counter-based stream for the latent draw and one per view
    streams = [_rng(s) for s in np.random.SeedSequence(seed).spawn(1 + len(spec.view_maps))]
    latent_rng = streams[0]

    labels = latent_rng.integers(0, spec.n_clusters, size=n_samples)
    theta = spec.cluster_means[labels] + \
        np.asarray(spec.cluster_scales)[labels, None] * latent_rng.normal(size=(n_samples, spec.latent_dim))
    theta = theta.T

    views = []
    for (A, b), eps, rng in zip(spec.view_maps, spec.view_noise, streams[1:]):
        eps = np.reshape(eps, (-1, 1)) if np.ndim(eps) else eps
        x = A @ theta + b[:, None] + eps * rng.normal(size=(A.shape[0], n_samples))
        views.append(torch.as_tensor(x, dtype=DTYPE))
    return MultiViewDataset(views, torch.as_tensor(labels), spec.n_clusters,
                            latent=torch.as_tensor(theta, dtype=DTYPE))


def synth_images(n_clusters=3, n_samples=600, height=8, width=8, n_bumps=3, noise=0.3, max_shift=1, seed=0):
    """Digit-like images: each class is a sum of Gaussian bumps, each sample a shifted,
    rescaled copy of its class prototype plus pixel noise.

    Returns (images (height*width, N), labels (N,)).
    """
    if n_clusters < 2 or n_samples < n_clusters:
        raise InvalidSpec(f'need 2 <= K <= N, got K={n_clusters}, N={n_samples}')
    proto_rng, sample_rng = [_rng(s) for s in np.random.SeedSequence(seed).spawn(2)]
    yy, xx = np.mgrid[0:height, 0:width]
    prototypes = np.zeros((n_clusters, height, width))
    for k in range(n_clusters):
        for _ in range(n_bumps):
            cy, cx = proto_rng.uniform(0, height), proto_rng.uniform(0, width)
            r = proto_rng.uniform(0.8, 1.8)
            prototypes[k] += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r ** 2))

    labels = sample_rng.integers(0, n_clusters, size=n_samples)
    shifts = sample_rng.integers(-max_shift, max_shift + 1, size=(n_samples, 2))
    gains = sample_rng.uniform(0.8, 1.2, size=n_samples)
    images = np.stack([gains[i] * np.roll(prototypes[labels[i]], tuple(shifts[i]), axis=(0, 1))
                       for i in range(n_samples)], axis=-1)
    images = images + noise * sample_rng.normal(size=images.shape)
    images = rearrange(images, 'h w n -> (h w) n')
    return torch.as_tensor(images, dtype=DTYPE), torch.as_tensor(labels)


def split_views(images, height, width, labels=None, k=None):
    "top half of each image is view 1, bottom half view 2"
    images = as_matrix(images, 'images')
    if height % 2:
        raise InvalidShape(f'image height must be even to split, got {height}')
    if height * width != images.shape[0]:
        raise InvalidShape(f'{height}x{width} images need {height * width} features, got {images.shape[0]}')
    grid = rearrange(images, '(h w) n -> h w n', h=height, w=width)
    top = rearrange(grid[:height // 2], 'h w n -> (h w) n')
    bottom = rearrange(grid[height // 2:], 'h w n -> (h w) n')
    return MultiViewDataset([top.contiguous(), bottom.contiguous()], labels, k)


def join_views(ds, height, width):
    "inverse of split_views"
    top = rearrange(ds.views[0], '(h w) n -> h w n', h=height // 2, w=width)
    bottom = rearrange(ds.views[1], '(h w) n -> h w n', h=height // 2, w=width)
    return rearrange(torch.cat([top, bottom], dim=0), 'h w n -> (h w) n')


BENCHMARKS = ('blobs', 'blobs-nuisance', 'digits')

# per-feature noise of the blobs-nuisance views: the last three features of each view are
# dominated by noise the other view does not share
NUISANCE_NOISE = np.array([1.] * 7 + [6.] * 3)


def benchmark_dataset(name='blobs', seed=0, n_samples=600):
    """The shipped benchmarks. The generating spec is fixed; ``seed`` only redraws samples.

    blobs: K=3, two 10-D views of a 4-D latent mixture with moderate noise.
    blobs-nuisance: the blobs mixture and maps with three high-variance, view-specific noise
        features per view. Raw features are dominated by that noise, while the correlation
        between the views is not; this is the regime the linear baselines are compared in.
    digits: K=3 split 8x8 digit-like images (two 32-D views).
    """
    if name == 'blobs':
        spec = LatentSpec.random(n_clusters=3, latent_dim=4, view_dims=(10, 10), separation=2.5,
                                 scale=1.0, noise=1.0, seed=1234)
        return synth_multiview(spec, n_samples, seed)
    if name == 'blobs-nuisance':
        spec = LatentSpec.random(n_clusters=3, latent_dim=4, view_dims=(10, 10), separation=2.5,
                                 scale=1.0, noise=[NUISANCE_NOISE, NUISANCE_NOISE], seed=1234)
        return synth_multiview(spec, n_samples, seed)
    if name == 'digits':
        images, labels = synth_images(n_clusters=3, n_samples=n_samples, height=8, width=8,
                                      noise=0.4, max_shift=1, seed=seed)
        return split_views(images, 8, 8, labels, 3)
    raise InvalidSpec(f'unknown benchmark {name!r}; choose from {", ".join(BENCHMARKS)}')
