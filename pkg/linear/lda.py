"""Scatter matrices and the LDA eigenproblem C_e^-1 C_a h = lambda h.

Scatters use the 1/N divisor so that C_e + C_a equals the total covariance of globally
centered data exactly.
"""
from dataclasses import dataclass

import torch

from linalg.errors import InvalidLabels, InvalidShape, SingularCovariance, SingularScatter
from linalg.linalg import DTYPE, as_matrix, center, inv_sqrt, sym_eig


@dataclass(frozen=True)
class LdaModel:
    eigvals: torch.Tensor          # descending
    eigvecs: torch.Tensor          # (D, D), unit-norm columns h
    within_scatter: torch.Tensor   # C_e
    between_scatter: torch.Tensor  # C_a
    class_means: torch.Tensor      # (K, D)
    ridge: float


def _labels(labels, n):
    labels = torch.as_tensor(labels, dtype=torch.long).reshape(-1)
    if labels.numel() != n:
        raise InvalidLabels(f'{labels.numel()} labels for {n} samples')
    if n and labels.min() < 0:
        raise InvalidLabels('every sample needs a class for the scatter matrices')
    return labels


def class_means(X, labels, k=None, fill=None):
    """(K, D) per-class means of the columns of X.

    Empty classes raise InvalidLabels unless `fill` (K, D) supplies their means.
    """
    X = as_matrix(X)
    labels = _labels(labels, X.shape[1])
    k = k or int(labels.max()) + 1
    counts = torch.bincount(labels, minlength=k)
    sums = torch.zeros(k, X.shape[0], dtype=DTYPE).index_add_(0, labels, X.T)
    means = sums / counts.clamp(min=1)[:, None].to(DTYPE)
    empty = counts == 0
    if empty.any():
        if fill is None:
            raise InvalidLabels(f'classes {empty.nonzero()[:, 0].tolist()} have no samples')
        means[empty] = fill[empty]
    return means, counts


def scatter_matrices(X, labels, k=None, allow_empty=False):
    "(C_e, C_a) of globally centered X (D, N) with the 1/N divisor"
    X = as_matrix(X)
    n = X.shape[1]
    if n == 0:
        raise InvalidShape('no samples')
    labels = _labels(labels, n)
    k = k or int(labels.max()) + 1
    counts = torch.bincount(labels, minlength=k)
    if not allow_empty and (counts == 0).any():
        raise InvalidLabels(f'classes {(counts == 0).nonzero()[:, 0].tolist()} have no samples')
    means, _ = class_means(X, labels, k, fill=torch.zeros(k, X.shape[0], dtype=DTYPE))

    residual = X - means[labels].T
    within = residual @ residual.T / n
    weights = counts.to(DTYPE) / n
    between = (means.T * weights) @ means
    return within, between


def fit_lda(X, labels, ridge=1e-4, k=None):
    "solves the generalized problem through the symmetric C_e^-1/2 C_a C_e^-1/2"
    X = center(as_matrix(X))
    within, between = scatter_matrices(X, labels, k)
    try:
        w = inv_sqrt(within, ridge)
    except SingularCovariance as e:
        raise SingularScatter(f'within-class scatter is singular; use ridge > 0 ({e})') from e
    eig = sym_eig(w @ between @ w)
    vecs = w @ eig.vectors
    vecs = vecs / vecs.norm(dim=0, keepdim=True)
    pivots = vecs.abs().argmax(dim=0)
    signs = torch.sign(vecs.gather(0, pivots[None])[0])
    signs[signs == 0] = 1.
    means, _ = class_means(X, labels, k)
    return LdaModel(eig.values, vecs * signs, within, between, means, ridge)


def normalized_eigvals(model):
    """lambda / (1 + lambda), the spectrum of C^-1 C_a. Canonical correlations of within-class
    permuted pairs approach these values."""
    vals = model.eigvals.clamp(min=0)
    return vals / (1 + vals)


def project(model, X, n_components):
    "(n_components, N) LDA coordinates of centered X"
    return model.eigvecs[:, :n_components].T @ center(as_matrix(X))
