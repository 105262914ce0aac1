"""Dense real linear algebra on float64 torch tensors.

Matrices are (features, samples) unless a function says otherwise.
"""
from typing import NamedTuple

import numpy as np
import torch
from scipy.optimize import linear_sum_assignment

from .errors import EigenFailure, InvalidShape, NotPSD, NotSymmetric, SingularCovariance

DTYPE = torch.float64


class EigenDecomposition(NamedTuple):
    values: torch.Tensor   # descending
    vectors: torch.Tensor  # one orthonormal column per value


def as_matrix(x, name='matrix'):
    "converts array-likes to a finite 2-D float64 tensor"
    x = torch.as_tensor(x, dtype=DTYPE)
    if x.ndim != 2:
        raise InvalidShape(f'{name} must be 2-D, got shape {tuple(x.shape)}')
    if not torch.isfinite(x).all():
        raise InvalidShape(f'{name} has non-finite entries')
    return x


def center(X, dim=1):
    "subtracts the mean along the sample axis"
    X = as_matrix(X)
    if X.numel() == 0:
        raise InvalidShape('cannot center an empty matrix')
    return X - X.mean(dim=dim, keepdim=True)


def covariance(A, B, ddof=1):
    """Cross-covariance of two centered matrices sharing the sample axis.

    ddof=1 divides by N-1 (the correlation-loss convention), ddof=0 by N (the scatter
    convention, which keeps C = C_e + C_a exact).
    """
    A, B = as_matrix(A, 'A'), as_matrix(B, 'B')
    if A.shape[1] != B.shape[1]:
        raise InvalidShape(f'sample counts differ: {A.shape[1]} vs {B.shape[1]}')
    n = A.shape[1]
    if ddof not in (0, 1):
        raise ValueError(f'ddof must be 0 or 1, got {ddof}')
    if n - ddof < 1:
        raise InvalidShape(f'need more than {ddof} samples, got {n}')
    return A @ B.T / (n - ddof)


def sym_eig(A, tol=1e-9):
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise InvalidShape(f'expected a square matrix, got {tuple(A.shape)}')
    asym = (A - A.T).abs().max().item() if A.numel() else 0.
    if asym > tol * (1. + A.abs().max().item()):
        raise NotSymmetric(f'matrix is not symmetric (max asymmetry {asym:.3e})')
    try:
        values, vectors = torch.linalg.eigh((A + A.T) / 2)
    except torch.linalg.LinAlgError as e:
        raise EigenFailure(str(e)) from e
    return EigenDecomposition(values.flip(0), vectors.flip(1))


def _spectral_map(A, ridge, fn):
    A = as_matrix(A)
    eig = sym_eig(A + ridge * torch.eye(A.shape[0], dtype=DTYPE))
    if eig.values.numel() and eig.values.min() < -1e-8:
        raise NotPSD(f'smallest eigenvalue {eig.values.min().item():.3e} after ridge {ridge}')
    scale = max(1., eig.values.abs().max().item()) if eig.values.numel() else 1.
    if eig.values.numel() and eig.values.min() <= 1e-12 * scale:
        raise SingularCovariance(
            f'matrix is singular (smallest eigenvalue {eig.values.min().item():.3e}); use ridge > 0')
    return eig.vectors @ torch.diag(fn(eig.values)) @ eig.vectors.T


def inv_sqrt(A, ridge=0.):
    "(A + ridge I)^(-1/2) for a symmetric PSD matrix"
    return _spectral_map(A, ridge, lambda v: v.rsqrt())


def inv_psd(A, ridge=0.):
    "(A + ridge I)^(-1) through the same eigendecomposition as inv_sqrt"
    return _spectral_map(A, ridge, lambda v: v.reciprocal())


def fix_signs(rows):
    "flips each row so its largest-magnitude entry is positive; returns (rows, signs)"
    if rows.numel() == 0:
        return rows, torch.ones(rows.shape[0], dtype=rows.dtype)
    pivots = rows.abs().argmax(dim=1)
    signs = torch.sign(rows.gather(1, pivots[:, None])[:, 0])
    signs[signs == 0] = 1.
    return rows * signs[:, None], signs


def pca(X, target_dim):
    """Principal components of X (d, N).

    Returns (projection (target_dim, d), embedded (target_dim, N)).
    """
    X = as_matrix(X)
    d, n = X.shape
    if not 1 <= target_dim <= min(d, n):
        raise InvalidShape(f'target_dim {target_dim} outside [1, {min(d, n)}]')
    Xc = center(X)
    ddof = 1 if n > 1 else 0
    eig = sym_eig(covariance(Xc, Xc, ddof=ddof))
    projection, _ = fix_signs(eig.vectors[:, :target_dim].T)
    return projection, projection @ Xc


def spectral_norm(A):
    A = as_matrix(A)
    if A.numel() == 0:
        return 0.
    return torch.linalg.matrix_norm(A, ord=2).item()


def optimal_assignment(cost):
    "permutation pi (list) minimizing sum_i cost[i][pi[i]]"
    cost = as_matrix(cost, 'cost')
    if cost.shape[0] != cost.shape[1] or cost.shape[0] < 1:
        raise InvalidShape(f'cost must be a non-empty square matrix, got {tuple(cost.shape)}')
    rows, cols = linear_sum_assignment(cost.numpy())
    perm = [0] * cost.shape[0]
    for r, c in zip(rows, cols):
        perm[r] = int(c)
    return perm


def principal_cosines(A, B):
    "cosines of the principal angles between the column spaces of A and B, descending"
    A, B = as_matrix(A, 'A'), as_matrix(B, 'B')
    if A.shape[0] != B.shape[0]:
        raise InvalidShape(f'row counts differ: {A.shape[0]} vs {B.shape[0]}')
    qa, _ = torch.linalg.qr(A)
    qb, _ = torch.linalg.qr(B)
    return torch.linalg.svdvals(qa.T @ qb).clamp(0., 1.)


def make_generator(seed, *stream):
    "torch.Generator for the stream (seed, *stream); distinct streams are independent"
    state = np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(1, np.uint64)[0]
    return torch.Generator().manual_seed(int(state) & 0x7fffffffffffffff)
