"""Batch correlation loss between two embeddings.

L(Hv, Hw) = -tr(Cv^-1 Cvw Cw^-1 Cwv) with ridge-regularized covariances, centered within
the batch and divided by N - 1. The negated loss is the sum of squared canonical
correlations, so it is bounded below by -min(d_v, d_w).

Embeddings here are (features, samples). The functions are plain torch expressions, so
autograd differentiates them during training; `correlation_loss_gradient` is the closed
form of the same derivative.
"""
from itertools import combinations

import torch

from linalg.errors import InvalidShape, SingularCovariance

DTYPE = torch.float64


def _check(Hv, Hw):
    if Hv.ndim != 2 or Hw.ndim != 2:
        raise InvalidShape(f'embeddings must be 2-D, got {tuple(Hv.shape)} and {tuple(Hw.shape)}')
    if Hv.shape[1] != Hw.shape[1]:
        raise InvalidShape(f'sample counts differ: {Hv.shape[1]} vs {Hw.shape[1]}')
    if Hv.shape[1] <= 1:
        raise InvalidShape(f'correlation loss needs more than one sample, got {Hv.shape[1]}')


def _solve(C, B):
    "C^-1 B for a symmetric positive definite C"
    try:
        L, info = torch.linalg.cholesky_ex(C)
        if info.item() != 0:
            raise torch.linalg.LinAlgError('not positive definite')
        return torch.cholesky_solve(B, L)
    except torch.linalg.LinAlgError as e:
        raise SingularCovariance(f'covariance is singular ({e}); use ridge > 0') from e


def _moments(Hv, Hw, ridge):
    _check(Hv, Hw)
    m = Hv.shape[1] - 1
    Hv_bar = Hv - Hv.mean(dim=1, keepdim=True)
    Hw_bar = Hw - Hw.mean(dim=1, keepdim=True)
    Cv = Hv_bar @ Hv_bar.T / m + ridge * torch.eye(Hv.shape[0], dtype=Hv.dtype, device=Hv.device)
    Cw = Hw_bar @ Hw_bar.T / m + ridge * torch.eye(Hw.shape[0], dtype=Hw.dtype, device=Hw.device)
    Cvw = Hv_bar @ Hw_bar.T / m
    return m, Hv_bar, Hw_bar, Cv, Cw, Cvw


def correlation_loss(Hv, Hw, ridge=1e-4):
    _, _, _, Cv, Cw, Cvw = _moments(Hv, Hw, ridge)
    # tr(Cv^-1 Cvw Cw^-1 Cwv)
    return -torch.trace(_solve(Cv, Cvw) @ _solve(Cw, Cvw.T))


def correlation_loss_gradient(Hv, Hw, ridge=1e-4):
    "(dL/dHv, dL/dHw), the closed-form derivative of correlation_loss"
    m, Hv_bar, Hw_bar, Cv, Cw, Cvw = _moments(Hv, Hw, ridge)
    P = _solve(Cv, _solve(Cw, Cvw.T).T)        # Cv^-1 Cvw Cw^-1
    Gv = _solve(Cv, (P @ Cvw.T).T).T           # Cv^-1 Cvw Cw^-1 Cwv Cv^-1
    Gw = _solve(Cw, (P.T @ Cvw).T).T           # Cw^-1 Cwv Cv^-1 Cvw Cw^-1
    grad_v = 2. / m * (Gv @ Hv_bar - P @ Hw_bar)
    grad_w = 2. / m * (Gw @ Hw_bar - P.T @ Hv_bar)
    # back through the batch centering
    return grad_v - grad_v.mean(dim=1, keepdim=True), grad_w - grad_w.mean(dim=1, keepdim=True)


def pairwise_correlation_loss(embeddings, ridge=1e-4):
    "sum of correlation_loss over all unordered view pairs, in pair order"
    total = 0.
    for i, j in combinations(range(len(embeddings)), 2):
        total = total + correlation_loss(embeddings[i], embeddings[j], ridge)
    return total
