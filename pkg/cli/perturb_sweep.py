"""Label noise and label coverage against the LDA spectrum of the latent data.

Datasets carrying generator latents are analyzed on those; otherwise view 0 stands in.
"""
from functools import partial

from linalg.errors import InvalidLabels
from perturb.perturb import bound_check, noisy_labels, subset_labels

from .config import load_data, parse_list, seed_list, threads
from .report import ExperimentResult, Timer, run_tasks

VALUES = ('max_gap', 'bound', 'bound_satisfied', 'norm_E1', 'norm_E2', 'norm_E3')


def run_seed(args, theta, truth, k, seed):
    rows = []
    for p in parse_list(args.noise_grid, float):
        report = bound_check(theta, truth, noisy_labels(truth, p, seed, k), args.ridge, args.tol, k, args.form)
        rows.append({'mode': 'noise', 'level': p, 'seed': seed, **report.as_row()})
    for fraction in parse_list(args.subset_grid, float):
        report = bound_check(theta, truth, subset_labels(truth, fraction, seed), args.ridge, args.tol, k,
                             args.form)
        rows.append({'mode': 'subset', 'level': fraction, 'seed': seed, **report.as_row()})
    return rows


def run(args):
    ds = load_data(args)
    if ds.true_labels is None:
        raise InvalidLabels('the perturbation sweep needs true labels')
    theta = ds.latent if ds.latent is not None else ds.views[0]
    k = args.k or ds.k

    with Timer() as timer:
        per_seed = run_tasks(partial(run_seed, args, theta, ds.true_labels, k),
                             seed_list(args), threads(), desc='seeds')
    rows = sorted((r for rows in per_seed for r in rows), key=lambda r: (r['mode'], r['level']))
    return ExperimentResult('perturb-sweep', vars(args), rows, ['mode', 'level'], list(VALUES), timer.seconds)


def main(args, as_json=False):
    result = run(args)
    result.write(args.out)
    result.show(as_json)
    return 0
