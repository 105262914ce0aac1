"""Lloyd's k-means with k-means++ seeding, on row-sample matrices (N, d)."""
from dataclasses import dataclass, field
from typing import List

import torch

from linalg.errors import InvalidParameter
from linalg.linalg import as_matrix, make_generator
from metrics.metrics import ClusterAssignment


@dataclass
class KMeansResult:
    centers: torch.Tensor          # (K, d)
    assignment: ClusterAssignment
    inertia: float
    iterations: int
    inertia_history: List[float] = field(default_factory=list)

    @property
    def labels(self):
        return self.assignment.labels


def sq_distances(X, centers):
    "(N, K) squared Euclidean distances"
    return ((X[:, None, :] - centers[None, :, :]) ** 2).sum(-1)


def _plus_plus(X, k, generator):
    n = X.shape[0]
    first = torch.randint(n, (1,), generator=generator).item()
    centers = [X[first]]
    closest = ((X - X[first]) ** 2).sum(-1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = torch.randint(n, (1,), generator=generator).item()
        else:
            idx = torch.multinomial(closest / total, 1, generator=generator).item()
        centers.append(X[idx])
        closest = torch.minimum(closest, ((X - X[idx]) ** 2).sum(-1))
    return torch.stack(centers)


def _repair_empty(X, centers, assign, point_d2, counts):
    "moves each empty center onto the point farthest from its own center"
    empty = (counts == 0).nonzero()[:, 0]
    if empty.numel() == 0:
        return centers
    order = torch.argsort(point_d2, descending=True, stable=True)
    for slot, idx in zip(empty.tolist(), order.tolist()):
        centers[slot] = X[idx]
    return centers


def _lloyd(X, k, max_iter, tol, generator):
    centers = _plus_plus(X, k, generator)
    history = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d2 = sq_distances(X, centers)
        assign = d2.argmin(dim=1)  # first minimum on ties
        point_d2 = d2.gather(1, assign[:, None])[:, 0]
        history.append(point_d2.sum().item())

        counts = torch.bincount(assign, minlength=k)
        sums = torch.zeros_like(centers).index_add_(0, assign, X)
        new_centers = torch.where(counts[:, None] > 0, sums / counts.clamp(min=1)[:, None], centers)
        new_centers = _repair_empty(X, new_centers, assign, point_d2, counts)

        shift = (new_centers - centers).norm(dim=1).max().item()
        centers = new_centers
        if shift <= tol:
            break

    d2 = sq_distances(X, centers)
    assign = d2.argmin(dim=1)
    inertia = d2.gather(1, assign[:, None]).sum().item()
    return centers, assign, inertia, iterations, history


def kmeans(X, k, restarts=20, max_iter=300, tol=1e-6, seed=0):
    """Best of `restarts` Lloyd runs by inertia; ties go to the lower restart index.

    Restart r draws its k-means++ seeds from the stream (seed, r), so each restart is
    reproducible on its own.
    """
    X = as_matrix(X, 'X')
    n = X.shape[0]
    if k < 1 or n < k:
        raise InvalidParameter(f'k-means needs 1 <= K <= N, got K={k}, N={n}')
    if restarts < 1 or max_iter < 1:
        raise InvalidParameter('restarts and max_iter must be positive')

    best = None
    for r in range(restarts):
        centers, assign, inertia, iterations, history = _lloyd(X, k, max_iter, tol, make_generator(seed, r))
        if best is None or inertia < best.inertia:
            best = KMeansResult(centers, ClusterAssignment(assign.numpy(), k), inertia, iterations, history)
    return best


def soft_assign(X, centers, temperature=1.):
    "row-stochastic (N, K) softmax of -d^2 / temperature"
    if temperature <= 0:
        raise InvalidParameter(f'temperature must be positive, got {temperature}')
    return torch.softmax(-sq_distances(as_matrix(X, 'X'), as_matrix(centers, 'centers')) / temperature, dim=1)
