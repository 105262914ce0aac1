"""Experiment results: per-seed rows, mean/std aggregates, JSON/CSV output and the
seed-parallel runner."""
import json
import os
import sys
import time
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import List

import numpy as np
import pandas as pd
import torch
from tqdm import tqdm

METRICS = ('acc', 'ari', 'nmi', 'silhouette')


def aggregate(rows, group_keys, value_keys=METRICS):
    "mean and population std of every value column per group, groups in first-seen order"
    frame = pd.DataFrame(rows)
    value_keys = [k for k in value_keys if k in frame.columns]
    if frame.empty or not value_keys:
        return []
    out = []
    groups = frame.groupby(list(group_keys), sort=False) if group_keys else [((), frame)]
    for key, group in groups:
        key = key if isinstance(key, tuple) else (key,)
        row = dict(zip(group_keys, key))
        for name in value_keys:
            values = group[name].to_numpy(dtype=float)
            values = values[~np.isnan(values)]
            row[f'{name}_mean'] = float(np.mean(values)) if values.size else float('nan')
            row[f'{name}_std'] = float(np.std(values)) if values.size else float('nan')
        out.append(row)
    return out


@dataclass
class ExperimentResult:
    command: str
    config: dict
    rows: List[dict]
    group_keys: List[str] = field(default_factory=list)
    value_keys: List[str] = field(default_factory=lambda: list(METRICS))
    runtime_s: float = 0.

    @property
    def aggregate(self):
        return aggregate(self.rows, self.group_keys, self.value_keys)

    def to_dict(self):
        return {'command': self.command, 'config': self.config, 'rows': self.rows,
                'aggregate': self.aggregate}

    def to_json(self):
        return json.dumps(_clean(self.to_dict()), indent=2, sort_keys=True)

    def table(self, precision=4):
        "human-readable aggregate table"
        frame = pd.DataFrame(self.aggregate)
        if frame.empty:
            return '(no results)'
        return frame.to_string(index=False, float_format=lambda v: f'{v:.{precision}f}')

    def write(self, out_dir):
        "result.json and result.csv carry seeded values only; the runtime goes to timing.json"
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, 'result.json'), 'w') as f:
            f.write(self.to_json() + '\n')
        pd.DataFrame(self.rows).to_csv(os.path.join(out_dir, 'result.csv'), index=False)
        with open(os.path.join(out_dir, 'timing.json'), 'w') as f:
            json.dump({'command': self.command, 'runtime_s': self.runtime_s}, f, indent=2)
            f.write('\n')

    def show(self, as_json=False):
        print(self.to_json() if as_json else self.table())


def _clean(value):
    "JSON-safe copy: NaN becomes null, numpy/torch scalars become Python numbers"
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, torch.Tensor):
        return _clean(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and np.isnan(value):
        return None
    return value


def _init_worker():
    torch.set_num_threads(1)


def run_tasks(fn, tasks, threads=1, desc=None):
    """fn over tasks, results in task order. With threads > 1 the tasks run in a process
    pool; fn must then be a picklable module-level callable."""
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tqdm(tasks, desc=desc, file=sys.stderr, disable=len(tasks) <= 1)]
    with Pool(min(threads, len(tasks)), initializer=_init_worker) as p:
        return list(tqdm(p.imap(fn, tasks), total=len(tasks), desc=desc, file=sys.stderr))


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start
