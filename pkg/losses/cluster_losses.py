import torch
from torch.nn import functional as F

from linalg.errors import InvalidShape

EPS = 1e-12


def cross_entropy(probs, targets, eps=EPS):
    "mean over rows of -sum_k y_ik log(P_ik + eps); zero for an empty batch"
    if probs.shape != targets.shape or probs.ndim != 2:
        raise InvalidShape(f'probabilities {tuple(probs.shape)} and targets {tuple(targets.shape)} differ')
    if probs.shape[0] == 0:
        return probs.sum() * 0.
    return -(targets * torch.log(probs + eps)).sum(dim=1).mean()


def reconstruction_loss(decoders, views, embeddings):
    "per-entry mean squared error of each decoded view, averaged over views"
    if not (len(decoders) == len(views) == len(embeddings)):
        raise InvalidShape(f'{len(decoders)} decoders, {len(views)} views, {len(embeddings)} embeddings')
    losses = []
    for decoder, x, h in zip(decoders, views, embeddings):
        recon = decoder(h)
        if recon.shape != x.shape:
            raise InvalidShape(f'decoder output {tuple(recon.shape)} does not match view {tuple(x.shape)}')
        losses.append(F.mse_loss(recon, x))
    return torch.stack(losses).mean()
