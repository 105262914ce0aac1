"""Grid search scored by the mean silhouette of the final fused embedding; labels are
never consulted for the choice."""
import itertools
import math
import json
from functools import partial

from linalg.errors import ConfigError

from .config import load_data, resolve, seed_list, threads
from .report import ExperimentResult, Timer, aggregate, run_tasks
from .train import LOG_METRICS, build_config, train_task


def read_grid(path):
    with open(resolve(path)) as f:
        try:
            grid = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f'{path}: invalid JSON ({e.msg}, line {e.lineno})') from e
    if not isinstance(grid, dict) or not all(isinstance(v, list) and v for v in grid.values()):
        raise ConfigError(f'{path}: the grid must map option names to non-empty lists')
    names = sorted(grid)
    return [dict(zip(names, values)) for values in itertools.product(*(grid[n] for n in names))]


def select_best(rows):
    "index of the configuration with the highest mean silhouette (first on ties)"
    summary = aggregate(rows, ['config'], ['silhouette'])
    score = lambda r: -math.inf if math.isnan(r['silhouette_mean']) else r['silhouette_mean']
    best = max(summary, key=lambda r: (score(r), -r['config']))
    return best['config']


def run(args):
    ds = load_data(args)
    combos = read_grid(args.grid)
    tasks = [({'config': i, **combo, 'seed': seed}, build_config(args, seed=seed, **combo))
             for i, combo in enumerate(combos) for seed in seed_list(args)]
    with Timer() as timer:
        rows = run_tasks(partial(train_task, ds), tasks, threads(), desc='runs')
    best = select_best(rows)
    config = {**vars(args), 'best': best, 'best_options': combos[best]}
    value_keys = [m for m in LOG_METRICS if m in rows[0]]
    return ExperimentResult('tune', config, rows, ['config'], value_keys, timer.seconds)


def main(args, as_json=False):
    result = run(args)
    result.write(args.out)
    result.show(as_json)
    if not as_json:
        print(f'best configuration: #{result.config["best"]} {result.config["best_options"]}')
    return 0
