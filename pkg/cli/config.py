"""Per-verb defaults.

Every verb reads cli/configs/<verb>.ini through prefigure, so each key is also a
`--key value` flag. List-valued keys are quoted comma-separated strings ('10,10'); seed
lists also accept a range, '0:10'.
"""
import argparse
import ast
import configparser
import os

from prefigure.prefigure import get_all_args

from linalg.errors import ConfigError

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')
PACKAGE_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def defaults_file(verb):
    path = os.path.join(CONFIG_DIR, f'{verb.replace("-", "_")}.ini')
    if not os.path.exists(path):
        raise ConfigError(f'no defaults for command {verb!r}')
    return path


def _eval(value):
    if value.lower() in ('true', 'false'):
        return value.lower() == 'true'
    try:
        return ast.literal_eval(value)
    except (ValueError, SyntaxError):
        return value


def load_defaults(verb, **overrides):
    "the verb's ini defaults as a Namespace, without touching sys.argv"
    parser = configparser.ConfigParser()
    parser.read(defaults_file(verb))
    values = {key: _eval(value) for key, value in parser.items('DEFAULTS')}
    unknown = sorted(set(overrides) - set(values))
    if unknown:
        raise ConfigError(f'{verb}: unknown options {", ".join(unknown)}')
    values.update(overrides)
    return argparse.Namespace(**values)


def get_args(verb):
    "defaults overridden by the command line (sys.argv must hold only this verb's flags)"
    return get_all_args(defaults_file=defaults_file(verb))


def parse_list(value, cast=str):
    "'a,b,c' -> [a, b, c]; 'lo:hi' -> range(lo, hi) when cast is int"
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    if isinstance(value, (int, float)):
        return [cast(value)]
    value = str(value).strip()
    if not value:
        return []
    if cast is int and ':' in value:
        lo, hi = value.split(':', 1)
        return list(range(int(lo), int(hi)))
    try:
        return [cast(v.strip()) for v in value.split(',') if v.strip()]
    except ValueError as e:
        raise ConfigError(f'cannot parse {value!r} as a list: {e}') from e


def resolve(path):
    "paths in the shipped defaults are relative to the repository root"
    if not path or os.path.isabs(path) or os.path.exists(path):
        return path
    candidate = os.path.join(PACKAGE_ROOT, path)
    return candidate if os.path.exists(candidate) else path


def seed_list(args):
    "the --seeds list; a single --seed when the list is empty"
    return parse_list(getattr(args, 'seeds', ''), int) or [args.seed]


def threads():
    value = os.environ.get('COPER_THREADS', '1')
    try:
        n = int(value)
    except ValueError as e:
        raise ConfigError(f'COPER_THREADS must be an integer, got {value!r}') from e
    if n < 1:
        raise ConfigError(f'COPER_THREADS must be positive, got {n}')
    return n


def load_data(args):
    "the dataset named by --data (manifest file or directory), else the --benchmark preset"
    from dataset.dataset import load_manifest
    from dataset.synth import benchmark_dataset
    if getattr(args, 'data', ''):
        ds = load_manifest(args.data)
    else:
        ds = benchmark_dataset(args.benchmark, seed=args.data_seed, n_samples=args.n)
    if getattr(args, 'k', 0):
        ds.k = args.k
    return ds
