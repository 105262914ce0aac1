"""Single training runs, shared by train, ablate and tune."""
import os

import torch

from autoencoders.training import TrainConfig, save_checkpoint, train_coper, write_log
from metrics.metrics import evaluate

from .config import load_data, resolve
from .report import ExperimentResult, Timer

LOG_METRICS = ('acc', 'ari', 'nmi', 'silhouette')


def build_config(args, **overrides):
    "the JSON preset with command-line values on top"
    values = {'epochs': args.epochs or None, 'seed': args.seed, 'k': args.k or None,
              'wandb_project': args.wandb_project, 'demo_every': args.demo_every}
    values.update(overrides)
    return TrainConfig.from_json(resolve(args.model_config), **values)


def final_row(ds, result, **keys):
    "metrics of the final assignment plus the last logged silhouette"
    with torch.no_grad():
        H = result.model.encode([v.T for v in ds.views])
    mean_embedding = sum(H) / len(H)
    report = evaluate(result.assignment, ds.true_labels, mean_embedding.T)
    row = {**keys, **report.as_dict()}
    if ds.true_labels is None:
        for name in ('acc', 'ari', 'nmi'):
            row.pop(name)
    return row


def train_task(ds, task):
    "task = (keys, config); module-level so seed sweeps can run in worker processes"
    keys, config = task
    result = train_coper(ds, config)
    return final_row(ds, result, **keys)


def run(args):
    ds = load_data(args)
    config = build_config(args).for_variant(args.variant)
    with Timer() as timer:
        result = train_coper(ds, config, args)
    os.makedirs(args.out, exist_ok=True)
    save_checkpoint(os.path.join(args.out, 'checkpoint.json'), result.model, config)
    write_log(result.log, os.path.join(args.out, 'train_log.csv'))
    row = final_row(ds, result, variant=args.variant, seed=config.seed)
    value_keys = [m for m in LOG_METRICS if m in row]
    return ExperimentResult('train', vars(args), [row], ['variant'], value_keys, timer.seconds)


def main(args, as_json=False):
    result = run(args)
    result.write(args.out)
    result.show(as_json)
    return 0
