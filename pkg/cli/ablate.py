from functools import partial

from autoencoders.training import VARIANTS
from linalg.errors import ConfigError

from .config import load_data, parse_list, seed_list, threads
from .report import ExperimentResult, Timer, run_tasks
from .train import LOG_METRICS, build_config, train_task


def run(args):
    ds = load_data(args)
    variants = parse_list(args.variants)
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise ConfigError(f'unknown variants {", ".join(unknown)}; valid variants: {", ".join(VARIANTS)}')
    tasks = [({'variant': variant, 'seed': seed}, build_config(args, seed=seed).for_variant(variant))
             for variant in variants for seed in seed_list(args)]
    with Timer() as timer:
        rows = run_tasks(partial(train_task, ds), tasks, threads(), desc='runs')
    value_keys = [m for m in LOG_METRICS if m in rows[0]] if rows else []
    return ExperimentResult('ablate', vars(args), rows, ['variant'], value_keys, timer.seconds)


def main(args, as_json=False):
    result = run(args)
    result.write(args.out)
    result.show(as_json)
    return 0
