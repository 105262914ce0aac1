"""Clustering scores: ACC, ARI, NMI and silhouette.

ARI, NMI and silhouette are computed by sklearn.metrics; the conventions for degenerate
partitions are applied here before delegating.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
from sklearn import metrics as skm

from linalg.errors import InvalidLabels, InvalidShape
from linalg.linalg import as_matrix, optimal_assignment


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise InvalidLabels(f'cluster ids must lie in [0, {self.k})')
        object.__setattr__(self, 'labels', labels)

    @classmethod
    def of(cls, labels, k=None):
        if isinstance(labels, cls):
            return labels
        labels = _as_labels(labels)
        if k is None:
            k = int(labels.max()) + 1 if labels.size else 0
        return cls(labels, k)

    def __len__(self):
        return self.labels.size


@dataclass
class MetricsReport:
    acc: float = math.nan
    ari: float = math.nan
    nmi: float = math.nan
    silhouette: float = math.nan

    def as_dict(self):
        return asdict(self)


def _as_labels(x):
    if isinstance(x, ClusterAssignment):
        return x.labels
    if isinstance(x, torch.Tensor):
        x = x.detach().cpu().numpy()
    x = np.asarray(x).reshape(-1)
    if x.size and not np.all(x == np.round(x)):
        raise InvalidLabels('cluster ids must be integers')
    x = x.astype(np.int64)
    if x.size and x.min() < 0:
        raise InvalidLabels('cluster ids must be non-negative')
    return x


def _pair(pred, truth):
    pred, truth = _as_labels(pred), _as_labels(truth)
    if pred.size != truth.size:
        raise InvalidShape(f'label lengths differ: {pred.size} vs {truth.size}')
    if pred.size == 0:
        raise InvalidShape('cannot score an empty labeling')
    return pred, truth


def confusion_matrix(pred, truth, k=None):
    "square (k, k) counts, rows = predicted cluster, columns = true class; zero-padded"
    pred, truth = _pair(pred, truth)
    k = max(k or 0, int(pred.max()) + 1, int(truth.max()) + 1)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (pred, truth), 1)
    return confusion


def best_map(pred, truth, k=None):
    "relabels pred onto truth's ids by the assignment maximizing agreement"
    confusion = confusion_matrix(pred, truth, k)
    perm = optimal_assignment(torch.as_tensor(-confusion, dtype=torch.float64))
    return np.asarray(perm)[_as_labels(pred)]


def accuracy(pred, truth):
    k = max(getattr(pred, 'k', 0), getattr(truth, 'k', 0))
    pred, truth = _pair(pred, truth)
    confusion = confusion_matrix(pred, truth, k)
    perm = optimal_assignment(torch.as_tensor(-confusion, dtype=torch.float64))
    matched = sum(confusion[i, perm[i]] for i in range(confusion.shape[0]))
    return float(matched / pred.size)


def adjusted_rand_index(pred, truth):
    pred, truth = _pair(pred, truth)
    return float(skm.adjusted_rand_score(truth, pred))


def normalized_mutual_information(pred, truth):
    pred, truth = _pair(pred, truth)
    n_pred, n_truth = np.unique(pred).size, np.unique(truth).size
    if n_pred == 1 or n_truth == 1:
        # zero entropy on at least one side
        return 1. if n_pred == n_truth else 0.
    return float(skm.normalized_mutual_info_score(truth, pred, average_method='geometric'))


def silhouette(embedding, labels):
    "mean silhouette of the (d, N) embedding's columns under the given labels"
    embedding = as_matrix(embedding, 'embedding')
    labels = _as_labels(labels)
    if embedding.shape[1] != labels.size:
        raise InvalidShape(f'{labels.size} labels for {embedding.shape[1]} samples')
    n_clusters = np.unique(labels).size
    if n_clusters < 2:
        raise InvalidLabels(f'silhouette needs at least 2 clusters, got {n_clusters}')
    if n_clusters == labels.size:
        return 0.  # every sample a singleton
    return float(skm.silhouette_score(embedding.T.numpy(), labels, metric='euclidean'))


def evaluate(pred, truth=None, embedding=None):
    "MetricsReport with whatever can be computed from the given inputs (others stay NaN)"
    report = MetricsReport()
    if truth is not None:
        report.acc = accuracy(pred, truth)
        report.ari = adjusted_rand_index(pred, truth)
        report.nmi = normalized_mutual_information(pred, truth)
    if embedding is not None and np.unique(_as_labels(pred)).size >= 2:
        report.silhouette = silhouette(embedding, pred)
    return report
