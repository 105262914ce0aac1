"""CCA, pseudo-labels, a within-cluster permutation, CCA again, repeated for `rounds` stages.

Every stage reports the ARI of k-means on the canonical variates, the mean within-class
cross-view correlation of the permuted pairing, and (with true labels) the gap between the
canonical correlations and the LDA spectrum lambda / (1 + lambda) of each view, averaged over the
two views. The LDA alignment compares view-0 directions.
"""
import os
from functools import partial

import pandas as pd
import torch

from cluster.kmeans import kmeans
from linalg.errors import InvalidParameter, InvalidShape
from linalg.linalg import make_generator
from linear.cca import embed, fit_cca
from linear.lda import fit_lda, normalized_eigvals
from linear.permute import lda_alignment, permuted_cca, stacked_views, within_class_correlation
from metrics.metrics import evaluate

from .config import load_data, seed_list, threads
from .linear_bench import cca_pseudo_labels
from .report import ExperimentResult, Timer, run_tasks

LABEL_SOURCES = ('pseudo', 'true', 'random')


def stage_labels(source, ds, model, k, args, seed, stage):
    if source == 'true':
        return ds.true_labels
    if source == 'random':
        return torch.randint(k, (ds.n_samples,), generator=make_generator(seed, 3, stage))
    return cca_pseudo_labels(ds, model, k, args.lam, args.temperature, seed, args.restarts)


def run_seed(args, ds, k, dim, ldas, seed):
    rows, alignment = [], []
    model = fit_cca(ds.views[0], ds.views[1], dim, args.ridge)
    for stage in range(args.rounds + 1):
        if stage:
            labels = stage_labels(args.label_source, ds, model, k, args, seed, stage)
            model = permuted_cca(ds, labels, stage, dim, args.ridge, seed)
            X1, X2 = stacked_views(ds, labels, stage, seed)
            n = ds.n_samples
            # correlation left inside the classes once the pairing is shuffled
            permuted = ds.with_views([X1[:, -n:], X2[:, -n:]])
            within = within_class_correlation(permuted, ds.true_labels if ds.true_labels is not None else labels)
        else:
            within = within_class_correlation(ds, ds.true_labels) if ds.true_labels is not None else float('nan')

        emb = embed(model, *ds.views)
        result = kmeans(emb.T, k, restarts=args.restarts, seed=seed)
        row = {'seed': seed, 'stage': stage, **evaluate(result.labels, ds.true_labels, emb).as_dict(),
               'within_corr': within}
        if ldas:
            correlations = model.correlations[:dim]
            targets = [normalized_eigvals(lda)[:dim] for lda in ldas]
            row['eigen_gap'] = sum((correlations - t).abs().mean().item() for t in targets) / len(targets)
            row['lda_alignment'] = lda_alignment(model, ldas[0], ds.views[0], dim)
            alignment.extend({'seed': seed, 'stage': stage, 'view': v, 'component': i,
                              'correlation': correlations[i].item(), 'lda_target': t[i].item()}
                             for v, t in enumerate(targets) for i in range(dim))
        rows.append(row)
    return rows, alignment


def run(args):
    ds = load_data(args)
    if ds.n_views != 2:
        raise InvalidShape(f'the case study pairs two views, the dataset has {ds.n_views}')
    k = args.k or ds.k
    if not k or k < 2:
        raise InvalidParameter('the number of clusters is unknown; pass --k')
    if args.label_source not in LABEL_SOURCES:
        raise InvalidParameter(f'label_source must be one of {", ".join(LABEL_SOURCES)}')
    if args.label_source == 'true' and ds.true_labels is None:
        raise InvalidParameter('label_source=true needs a dataset with labels')
    if args.rounds < 0:
        raise InvalidParameter(f'rounds must be non-negative, got {args.rounds}')
    dim = min(args.dim or max(k - 1, 1), *ds.dims)
    ldas = [fit_lda(v, ds.true_labels, args.ridge) for v in ds.views] if ds.true_labels is not None else []

    with Timer() as timer:
        outputs = run_tasks(partial(run_seed, args, ds, k, dim, ldas), seed_list(args),
                            threads(), desc='seeds')
    rows = sorted((r for rows, _ in outputs for r in rows), key=lambda r: r['stage'])
    alignment = [a for _, rows in outputs for a in rows]
    value_keys = ['acc', 'ari', 'nmi', 'silhouette', 'within_corr', 'eigen_gap', 'lda_alignment']
    return ExperimentResult('casestudy', vars(args), rows, ['stage'], value_keys, timer.seconds), alignment


def main(args, as_json=False):
    result, alignment = run(args)
    result.write(args.out)
    if alignment:
        pd.DataFrame(alignment).to_csv(os.path.join(args.out, 'eigen_alignment.csv'), index=False)
    result.show(as_json)
    return 0
