"""
Command-line front end: one subcommand per experiment.

    python cli.py quicksort --n 100 --trials 1000 --seed 7
    python cli.py binpack --n 1000 --algo both --out binpack.csv --plot binpack.svg

Exit codes: 0 success, 1 I/O error, 2 usage or configuration error,
3 a checked guarantee failed.
"""
import argparse
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv

from common import SEED_LIMIT, Rng, write_records
from graphs import (
    SUB_EXPERIMENTS,
    default_clique_size,
    gen_er,
    gen_planted_bisection,
    gen_planted_clique,
    write_edge_list,
)
from orchestrator import CRITICAL_STEPS, get_experiment, report_violation, run_experiment
from utils import (
    ConfigError,
    InvalidInputError,
    PropertyViolation,
    handle_error,
    load_defaults,
    set_log_level,
    setup_logging,
)

# Load environment variables
load_dotenv()

logger = setup_logging(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_VIOLATION = 3

FORMATS = ('csv', 'json')

# Used when config/defaults.json is missing or silent about a parameter
BUILTIN_DEFAULTS: Dict[str, Dict[str, Any]] = {
    'prophet': {'stages': 4, 'support_size': 4, 'trials': 1000},
    'quicksort': {'n': [100], 'trials': 1000},
    'probing': {'capacity': 65536, 'alphas': [0.5, 0.75, 0.9], 'trials': 10},
    'binpack': {'n': 1000, 'algo': 'both', 'trials': 20},
    'hull': {'n': [100, 1000, 10000], 'trials': 20},
    'tsp': {'n': [1024], 'oracle': False, 'trials': 10},
    'graphs': {'experiment': 'planted-bisection', 'n': 500, 'p': 0.5, 'q': 0.25, 'k': None, 'trials': 20},
}


@dataclass
class RunConfig:
    """
    A fully resolved run.

    Attributes:
        command: Subcommand name
        params: Experiment parameters
        seed: Master seed
        trials: Number of trials, at least 1
        out: Output path; None writes to stdout
        format: 'csv' or 'json'
        plot: Optional SVG plot path
        dump: Optional edge-list path (graphs only)
    """
    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    trials: int = 1
    out: Optional[str] = None
    format: str = 'csv'
    plot: Optional[str] = None
    dump: Optional[str] = None

    def embedded(self) -> Dict[str, Any]:
        """Flat key/value view written into output files."""
        config: Dict[str, Any] = {'command': self.command, 'seed': self.seed, 'trials': self.trials}
        for key, value in self.params.items():
            config[key] = ','.join(str(v) for v in value) if isinstance(value, list) else value
        config['format'] = self.format
        return config


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if not 0 <= value < SEED_LIMIT:
        raise argparse.ArgumentTypeError(f"must lie in [0, 2^64), got {value}")
    return value


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def _load_factor_list(text: str) -> List[float]:
    values = []
    for part in text.split(','):
        try:
            value = float(part)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
        if not 0.0 <= value < 1.0:
            raise argparse.ArgumentTypeError(f"load factors must lie in [0, 1), got {value}")
        values.append(value)
    return values


def _int_list(minimum: int):
    def parse(text: str) -> List[int]:
        values = []
        for part in text.split(','):
            try:
                value = int(part)
            except ValueError:
                raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
            if value < minimum:
                raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {value}")
            values.append(value)
        return values
    return parse


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--seed', type=_seed, default=None, help='master seed (default 0)')
    parser.add_argument('--trials', type=_positive_int, default=None, help='number of trials')
    parser.add_argument('--out', default=None, metavar='PATH', help='output file (default stdout)')
    parser.add_argument('--format', choices=FORMATS, default='csv', help='output format')
    parser.add_argument('--plot', default=None, metavar='PATH.svg', help='write an SVG plot')
    parser.add_argument('--log-level', default=None, help='logging level, e.g. DEBUG')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='avgcase',
        description='Seeded experiments on average-case algorithms.',
    )
    sub = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')

    prophet = sub.add_parser('prophet', help='threshold rules against the prophet')
    prophet.add_argument('--stages', type=_positive_int, default=None)
    prophet.add_argument('--support-size', dest='support_size', type=_positive_int, default=None)

    quicksort = sub.add_parser('quicksort', help='first-pivot QuickSort comparisons')
    quicksort.add_argument('--n', type=_int_list(1), default=None, help='array size(s), comma-separated')

    probing = sub.add_parser('probing', help='linear probing insertion cost')
    probing.add_argument('--capacity', type=_positive_int, default=None)
    probing.add_argument('--alphas', type=_load_factor_list, default=None, help='load factors, comma-separated')

    binpack = sub.add_parser('binpack', help='FFD and TM on uniform items')
    binpack.add_argument('--n', type=_positive_int, default=None)
    binpack.add_argument('--algo', choices=('ffd', 'tm', 'both'), default=None)

    hull = sub.add_parser('hull', help='convex hull size of uniform points')
    hull.add_argument('--n', type=_int_list(1), default=None, help='point count(s), comma-separated')

    tsp = sub.add_parser('tsp', help='Stitch tours of uniform points')
    tsp.add_argument('--n', type=_int_list(3), default=None, help='point count(s), comma-separated')
    tsp.add_argument('--oracle', action='store_true', default=None, help='compare with Held-Karp for n <= 14')

    graphs = sub.add_parser('graphs', help='random and planted graph experiments')
    graphs.add_argument('--experiment', choices=SUB_EXPERIMENTS, default=None)
    graphs.add_argument('--n', type=_positive_int, default=None)
    graphs.add_argument('--p', type=_probability, default=None)
    graphs.add_argument('--q', type=_probability, default=None)
    graphs.add_argument('--k', type=_positive_int, default=None)
    graphs.add_argument('--dump', default=None, metavar='PATH', help='write the first graph as an edge list')

    for subparser in sub.choices.values():
        _add_common_flags(subparser)
    return parser


def _resolve(command: str, flags: Dict[str, Any]) -> Dict[str, Any]:
    """Merge built-in defaults, the defaults file, then explicit flags."""
    builtin = BUILTIN_DEFAULTS[command]
    configured = load_defaults().get(command, {})
    if not isinstance(configured, dict):
        raise ConfigError(f"Defaults for {command} must be a JSON object")
    unknown = set(configured) - set(builtin)
    if unknown:
        raise ConfigError(f"Unknown parameters for {command} in defaults file: {sorted(unknown)}")

    merged = {**builtin, **configured}
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    # Sweep commands accept a bare number in the defaults file
    if isinstance(builtin.get('n'), list) and not isinstance(merged['n'], list):
        merged['n'] = [merged['n']]
    return merged


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    Parse a command line into a RunConfig.

    Raises:
        SystemExit: With status 2 on usage errors, after argparse prints the message
    """
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        parser.exit(EXIT_USAGE, f"{parser.prog}: error: a command is required\n")
    args = vars(parser.parse_args(argv))

    command = args.pop('command')
    log_level = args.pop('log_level')
    if log_level is not None:
        set_log_level(log_level)
    out, fmt, plot = args.pop('out'), args.pop('format'), args.pop('plot')
    dump = args.pop('dump', None)
    seed = args.pop('seed')

    merged = _resolve(command, args)
    trials = merged.pop('trials')
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"trials must be a positive integer, got {trials!r}")
    return RunConfig(
        command=command,
        params=merged,
        seed=0 if seed is None else seed,
        trials=trials,
        out=out,
        format=fmt,
        plot=plot,
        dump=dump,
    )


def dump_graph(config: RunConfig) -> None:
    """Write the first graph the graphs experiment samples, as an edge list."""
    p = config.params
    rng = Rng.for_trial(config.seed, 0)
    if p['experiment'] == 'planted-bisection':
        g = gen_planted_bisection(p['n'], p['p'], p['q'], rng)
    elif p['experiment'] == 'planted-clique':
        g = gen_planted_clique(p['n'], p['k'] or default_clique_size(p['n']), rng)
    else:
        g = gen_er(p['n'], 0.5 if p['experiment'] == 'greedy-clique' else p['p'], rng)
    with open(config.dump, 'w', encoding='utf-8') as f:
        write_edge_list(g, f)
    logger.info(f"Wrote edge list to {config.dump}")


def run(config: RunConfig) -> int:
    """
    Execute a resolved run and write its outputs.

    Returns:
        Process exit code
    """
    outcome = run_experiment(config.command, config.params, config.trials, config.seed)

    if config.out:
        with open(config.out, 'w', encoding='utf-8', newline='') as f:
            write_records(outcome.records, config.format, f, config.embedded())
        logger.info(f"Wrote {len(outcome.records)} records to {config.out}")
    else:
        write_records(outcome.records, config.format, sys.stdout, config.embedded())
        sys.stdout.flush()

    if config.plot:
        spec = get_experiment(config.command)
        try:
            from plotter import plot_records
            plot_records(outcome.records, spec.x_column, spec.y_column, config.plot, title=config.command)
        except Exception as e:
            report_violation(f"Plotting failed: {str(e)}", CRITICAL_STEPS['plot'])
            handle_error(e, logger)

    if config.dump:
        dump_graph(config)

    if outcome.violations:
        raise PropertyViolation(f"{len(outcome.violations)} property violations in {config.command}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point for the command line.
    """
    try:
        config = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except ConfigError as e:
        logger.error(f"Configuration error: {str(e)}")
        return EXIT_USAGE

    try:
        return run(config)
    except PropertyViolation as e:
        logger.error(str(e))
        return EXIT_VIOLATION
    except (ConfigError, InvalidInputError) as e:
        logger.error(f"Invalid parameters: {str(e)}")
        return EXIT_USAGE
    except OSError as e:
        handle_error(e, logger)
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
