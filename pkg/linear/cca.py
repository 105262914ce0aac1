"""Linear CCA through the whitened cross-covariance.

The singular values of C11^(-1/2) C12 C22^(-1/2) are the canonical correlations; the
left/right singular vectors mapped back through the whitening give the canonical vectors.
"""
import warnings
from dataclasses import dataclass

import torch

from linalg.errors import InvalidShape
from linalg.linalg import as_matrix, center, covariance, fix_signs, inv_sqrt


@dataclass(frozen=True)
class CcaModel:
    proj_a: torch.Tensor        # (dim, D1), rows are canonical vectors a^T
    proj_b: torch.Tensor        # (dim, D2)
    correlations: torch.Tensor  # (dim,), descending
    ridge: float

    @property
    def dim(self):
        return self.correlations.numel()


def fit_cca(X1, X2, dim, ridge=1e-4):
    X1, X2 = as_matrix(X1, 'X1'), as_matrix(X2, 'X2')
    (d1, n), (d2, n2) = X1.shape, X2.shape
    if n != n2:
        raise InvalidShape(f'views disagree on the number of samples: {n} vs {n2}')
    if not 1 <= dim <= min(d1, d2):
        raise InvalidShape(f'dim {dim} outside [1, {min(d1, d2)}]')
    if n <= max(d1, d2):
        warnings.warn(f'CCA on {n} samples with {max(d1, d2)} features; covariances are rank deficient')

    X1c, X2c = center(X1), center(X2)
    w1 = inv_sqrt(covariance(X1c, X1c), ridge)
    w2 = inv_sqrt(covariance(X2c, X2c), ridge)
    T = w1 @ covariance(X1c, X2c) @ w2
    U, S, Vh = torch.linalg.svd(T)

    proj_a, signs = fix_signs((w1 @ U[:, :dim]).T)
    proj_b = signs[:, None] * (Vh[:dim] @ w2)
    return CcaModel(proj_a, proj_b, S[:dim], ridge)


def transform(model, X, side='first'):
    "canonical variates (dim, N) of X, centered with its own mean"
    proj = {'first': model.proj_a, 'second': model.proj_b}.get(side)
    if proj is None:
        raise ValueError(f"side must be 'first' or 'second', got {side!r}")
    X = as_matrix(X)
    if X.shape[0] != proj.shape[1]:
        raise InvalidShape(f'{side} view has {proj.shape[1]} features, got {X.shape[0]}')
    return proj @ center(X)


def embed(model, X1, X2):
    "both views' variates stacked row-wise, (2 dim, N)"
    return torch.cat([transform(model, X1, 'first'), transform(model, X2, 'second')], dim=0)
