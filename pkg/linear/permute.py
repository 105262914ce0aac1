"""Within-cluster permutations and permuted CCA.

A plan re-pairs samples across views only inside a cluster: for every cluster k the
member columns are shuffled among themselves. Samples labeled -1 keep their pairing.
"""
from dataclasses import dataclass
from typing import List

import torch

from linalg.errors import InvalidPlan, InvalidShape
from linalg.linalg import DTYPE, as_matrix, center, make_generator, principal_cosines

from .cca import fit_cca
from .lda import project


@dataclass(frozen=True)
class PermutationPlan:
    members: List[torch.Tensor]    # per cluster, ascending member indices
    permuted: List[torch.Tensor]   # per cluster, the same indices reordered
    n_samples: int
    round_index: int = 0
    seed: int = 0

    def order(self):
        "source column for every position; identity outside the clusters"
        order = torch.arange(self.n_samples)
        for members, permuted in zip(self.members, self.permuted):
            order[members] = permuted
        return order

    def is_identity(self):
        return all(torch.equal(m, p) for m, p in zip(self.members, self.permuted))


def sample_plan(labels, round_index=0, seed=0):
    "one uniform permutation per cluster, drawn from the stream (seed, round_index)"
    labels = torch.as_tensor(labels, dtype=torch.long).reshape(-1)
    generator = make_generator(seed, round_index)
    members, permuted = [], []
    for k in torch.unique(labels[labels >= 0]).tolist():
        idx = (labels == k).nonzero()[:, 0]
        members.append(idx)
        permuted.append(idx[torch.randperm(idx.numel(), generator=generator)])
    return PermutationPlan(members, permuted, labels.numel(), round_index, seed)


def _validate(plan, n_samples):
    if plan.n_samples != n_samples:
        raise InvalidPlan(f'plan covers {plan.n_samples} samples, dataset has {n_samples}')
    for members, permuted in zip(plan.members, plan.permuted):
        if members.numel() != permuted.numel():
            raise InvalidPlan('per-cluster permutation changes the cluster size')
        if members.numel() and (min(members.min(), permuted.min()) < 0 or
                                max(members.max(), permuted.max()) >= n_samples):
            raise InvalidPlan(f'plan index out of range [0, {n_samples})')
        if not torch.equal(torch.sort(members).values, torch.sort(permuted).values):
            raise InvalidPlan('plan moves samples across clusters')


def permute_columns(X, plan):
    X = as_matrix(X)
    _validate(plan, X.shape[1])
    return X[:, plan.order()]


def apply_plan(ds, plan, views_to_permute=(1,)):
    "dataset with the selected views' columns re-paired by the plan"
    _validate(plan, ds.n_samples)
    views_to_permute = set(views_to_permute)
    if any(v < 0 or v >= ds.n_views for v in views_to_permute):
        raise InvalidPlan(f'views {sorted(views_to_permute)} outside [0, {ds.n_views})')
    order = plan.order()
    return ds.with_views([view[:, order] if v in views_to_permute else view
                          for v, view in enumerate(ds.views)])


def stacked_views(ds, labels, rounds, seed=0):
    """The original pairing followed by `rounds` permuted copies, concatenated column-wise.

    Round l (1-based) permutes view (l - 1) % 2, so the two sides alternate.
    """
    if ds.n_views != 2:
        raise InvalidShape(f'permuted CCA pairs exactly two views, got {ds.n_views}')
    first, second = [ds.views[0]], [ds.views[1]]
    for l in range(1, rounds + 1):
        permuted = apply_plan(ds, sample_plan(labels, l, seed), [(l - 1) % 2])
        first.append(permuted.views[0])
        second.append(permuted.views[1])
    return torch.cat(first, dim=1), torch.cat(second, dim=1)


def permuted_cca(ds, labels, rounds=4, dim=None, ridge=1e-4, seed=0):
    X1, X2 = stacked_views(ds, labels, rounds, seed)
    dim = dim or min(X1.shape[0], X2.shape[0])
    return fit_cca(X1, X2, dim, ridge)


def within_class_correlation(ds, labels):
    """Mean |corr| between every feature of view 0 and every feature of view 1, computed
    inside each class and averaged over classes with at least three members."""
    labels = torch.as_tensor(labels, dtype=torch.long).reshape(-1)
    scores = []
    for k in torch.unique(labels[labels >= 0]).tolist():
        idx = (labels == k).nonzero()[:, 0]
        if idx.numel() < 3:
            continue
        a, b = center(ds.views[0][:, idx]), center(ds.views[1][:, idx])
        na, nb = a.norm(dim=1), b.norm(dim=1)
        denom = na[:, None] * nb[None, :]
        corr = torch.where(denom > 0, (a @ b.T) / denom.clamp(min=1e-300), torch.zeros((), dtype=DTYPE))
        scores.append(corr.abs().mean().item())
    return sum(scores) / len(scores) if scores else 0.


def lda_alignment(cca_model, lda_model, X, n_dirs):
    """Mean principal cosine between the sample-space spans of the top `n_dirs` canonical
    variates and the top `n_dirs` LDA coordinates of the same view X (D, N)."""
    Xc = center(as_matrix(X))
    variates = (cca_model.proj_a[:n_dirs] @ Xc).T
    discriminants = project(lda_model, X, n_dirs).T
    return principal_cosines(variates, discriminants).mean().item()
