"""Multi-view pseudo-labels.

Four stages: take the top-B samples of every cluster column of P (the confident sets
T_k), refine them per view by cosine similarity to the cluster centers, require agreement
between the views that label a sample, and gather each view's (sample, soft label) pairs.

Embeddings here are row-sample (N, d) matrices, as produced by the encoders.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple

import torch

from cluster.kmeans import kmeans, soft_assign
from linalg.errors import InvalidParameter, InvalidShape
from linalg.linalg import DTYPE, as_matrix
from metrics.metrics import best_map


def check_probabilities(P, tol=1e-8):
    "validates a row-stochastic (N, K) matrix"
    P = as_matrix(P, 'P')
    if (P < 0).any():
        raise InvalidParameter('probabilities must be non-negative')
    if P.numel() and (P.sum(dim=1) - 1).abs().max() > tol:
        raise InvalidParameter('probability rows must sum to 1')
    return P


def default_top_count(batch_size, k):
    "B = ceil(batch size / K)"
    return math.ceil(batch_size / k)


def select_confident(P, B):
    """Returns (T_k per cluster, union T). T_k holds the B largest entries of column k,
    highest first, ties going to the lower index."""
    P = check_probabilities(P)
    n = P.shape[0]
    if not 1 <= B <= n:
        raise InvalidParameter(f'B must lie in [1, {n}], got {B}')
    sets = [torch.sort(P[:, k], descending=True, stable=True).indices[:B] for k in range(P.shape[1])]
    union = torch.unique(torch.cat(sets)) if sets else torch.zeros(0, dtype=torch.long)
    return sets, union


def cosine_to(H, center):
    "cosine similarity of every row of H with center; 0 for zero-norm vectors"
    norms = H.norm(dim=1) * center.norm()
    dots = H @ center
    return torch.where(norms > 0, dots / norms.clamp(min=1e-300), torch.zeros((), dtype=H.dtype))


def refine_per_view(H, sets, lam=0.5):
    """Soft labels {index: (K,) vector} for one view.

    Centers are the means of the full T_k. Index i keeps cluster k when s_ik >= lam; a sample
    kept in several clusters gets its similarities renormalized into a probability vector.
    Negative similarities carry no weight; if none are positive the vector is uniform over
    the kept clusters.
    """
    H = as_matrix(H, 'H')
    k = len(sets)
    scores = {}
    for c, members in enumerate(sets):
        if members.numel() == 0:
            raise InvalidParameter(f'confident set of cluster {c} is empty')
        s = cosine_to(H[members], H[members].mean(dim=0))
        for i, sim in zip(members.tolist(), s.tolist()):
            if sim >= lam:
                scores.setdefault(i, {})[c] = sim

    labels = {}
    for i, kept in scores.items():
        weights = torch.zeros(k, dtype=DTYPE)
        for c, sim in kept.items():
            weights[c] = max(sim, 0.)
        if weights.sum() <= 0:
            weights[list(kept)] = 1.
        labels[i] = weights / weights.sum()
    return labels


@dataclass
class PseudoLabelSet:
    per_view: List[Dict[int, torch.Tensor]]
    k: int
    lam: float = 0.5
    top_count: int = 0
    retained: List[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.retained:
            self.retained = sorted(set().union(*[set(v) for v in self.per_view])) if self.per_view else []

    def hard_labels(self, view):
        return {i: int(y.argmax()) for i, y in self.per_view[view].items()}

    def views_of(self, i):
        return [v for v, labels in enumerate(self.per_view) if i in labels]


def multiview_agreement(per_view, k=None, lam=0.5, top_count=0):
    """Drops every index whose labeling views disagree on the argmax; indices labeled by a
    single view are kept for that view."""
    k = k or next((y.numel() for labels in per_view for y in labels.values()), 0)
    indices = sorted(set().union(*[set(labels) for labels in per_view])) if per_view else []
    kept = [dict() for _ in per_view]
    for i in indices:
        views = [v for v, labels in enumerate(per_view) if i in labels]
        if len({int(per_view[v][i].argmax()) for v in views}) > 1:
            continue
        for v in views:
            kept[v][i] = per_view[v][i]
    return PseudoLabelSet(kept, k, lam, top_count)


class TrainingSet(NamedTuple):
    indices: torch.Tensor   # (M,)
    inputs: torch.Tensor    # (d_v, M)
    targets: torch.Tensor   # (M, K)


def build_training_sets(ds, plset):
    "one TrainingSet per view from the view's retained soft labels, in index order"
    sets = []
    for v, view in enumerate(ds.views):
        labels = plset.per_view[v] if v < len(plset.per_view) else {}
        idx = sorted(labels)
        indices = torch.as_tensor(idx, dtype=torch.long)
        targets = torch.stack([labels[i] for i in idx]) if idx else torch.zeros(0, plset.k, dtype=DTYPE)
        sets.append(TrainingSet(indices, view[:, indices], targets))
    return sets


def soft_kmeans_probabilities(H, k, temperature=1., seed=0, restarts=20):
    "(N, K) soft assignments of rows of H to their k-means centers"
    if k < 2:
        raise InvalidParameter(f'soft k-means needs K >= 2, got {k}')
    H = as_matrix(H, 'H')
    result = kmeans(H, k, restarts=restarts, seed=seed)
    return soft_assign(H, result.centers, temperature)


def pseudo_label_pipeline(embeddings, P, B, lam=0.5, agreement=True):
    """select_confident on P, refine every view's (N, d) embedding, then multiview_agreement.

    With agreement=False the refined per-view labels are kept as they are.
    """
    P = check_probabilities(P)
    if any(H.shape[0] != P.shape[0] for H in embeddings):
        raise InvalidShape('embeddings and P disagree on the number of samples')
    sets, _ = select_confident(P, B)
    per_view = [refine_per_view(H, sets, lam) for H in embeddings]
    if not agreement:
        return PseudoLabelSet(per_view, P.shape[1], lam, B)
    return multiview_agreement(per_view, P.shape[1], lam, B)


def permutation_labels(plset, n_samples, P=None):
    """(N,) hard labels for permuting: a retained sample's agreed label, kept only when it
    also matches argmax of the fused prediction P. Everything else is -1."""
    labels = torch.full((n_samples,), -1, dtype=torch.long)
    fused = None if P is None else P.argmax(dim=1)
    for i in plset.retained:
        views = plset.views_of(i)
        if not views:
            continue
        label = int(plset.per_view[views[0]][i].argmax())
        if fused is None or int(fused[i]) == label:
            labels[i] = label
    return labels


def precision(plset, truth, view=None):
    "fraction of retained hard labels that match truth after optimal cluster matching"
    views = range(len(plset.per_view)) if view is None else [view]
    pairs = [(i, y) for v in views for i, y in plset.hard_labels(v).items()]
    if not pairs:
        return float('nan')
    idx = [i for i, _ in pairs]
    pred = [y for _, y in pairs]
    truth = torch.as_tensor(truth)[idx]
    mapped = best_map(pred, truth, plset.k)
    return float((torch.as_tensor(mapped) == truth).double().mean())
