"""coper <command> [--json] [--key value ...]

Each command reads its defaults from cli/configs/<command>.ini; any key there can be
overridden on the command line.
"""
import argparse
import importlib
import sys

from linalg.errors import CoperError, exit_code_table

from .config import get_args

# exit codes outside the error hierarchy
USAGE_ERROR = 2
UNKNOWN_COMMAND = 3
IO_ERROR = 4

COMMANDS = {
    'gen': 'write a synthetic multi-view dataset',
    'linear-bench': 'linear baselines and permuted CCA across seeds',
    'casestudy': 'class structure captured by CCA as pseudo-labels improve',
    'perturb-sweep': 'perturbation bound under noisy and partial labels',
    'train': 'one deep training run',
    'tune': 'grid search scored by silhouette',
    'ablate': 'deep variants across seeds',
    'metrics': 'score saved predictions',
}


def usage():
    lines = [__doc__.strip(), '', 'commands:']
    lines += [f'  {name:<15}{text}' for name, text in COMMANDS.items()]
    codes = [('UsageError', USAGE_ERROR), ('UnknownCommand', UNKNOWN_COMMAND), ('OSError', IO_ERROR)]
    codes += exit_code_table()
    lines += ['', 'exit codes:'] + [f'  {code:>3}  {name}' for name, code in codes]
    lines += ['', 'COPER_THREADS=<n> runs independent seeds in n worker processes.']
    return '\n'.join(lines)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ('-h', '--help', 'help'):
        print(usage())
        return 0
    verb, rest = argv[0], argv[1:]
    if verb not in COMMANDS:
        print(f'unknown command {verb!r}\n\n{usage()}', file=sys.stderr)
        return UNKNOWN_COMMAND

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--json', action='store_true')
    flags, rest = pre.parse_known_args(rest)

    module = importlib.import_module(f'cli.{verb.replace("-", "_")}')
    sys.argv = [f'coper {verb}'] + rest
    try:
        args = get_args(verb)
        return module.main(args, as_json=flags.json)
    except SystemExit as e:
        # argparse exits with 0 after --help and 2 on a bad flag
        return USAGE_ERROR if e.code else 0
    except CoperError as e:
        print(f'{type(e).__name__}: {e}', file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f'{type(e).__name__}: {e}', file=sys.stderr)
        return IO_ERROR


if __name__ == '__main__':
    sys.exit(main())
