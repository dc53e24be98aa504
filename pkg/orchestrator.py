import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

from dotenv import load_dotenv

from binpack import binpack_experiment, binpack_violations
from common import ExperimentRecord
from geometry import hull_size_experiment, hull_violations
from graphs import graphs_experiment, graphs_violations
from hashing import probing_experiment, probing_violations, scaling_ratio
from sorting import quicksort_experiment, quicksort_violations
from stopping import prophet_experiment, prophet_violations
from tsp import tsp_experiment, tsp_violations
from utils import InvalidInputError, get_thread_count, setup_logging

# Load environment variables
load_dotenv()

logger = setup_logging(__name__)

# Failing a critical step ends the run with the property-violation exit code
CRITICAL_STEPS = {
    'experiment': True,
    'property_check': True,
    'plot': False,
}


@dataclass(frozen=True)
class ExperimentSpec:
    """
    How to run and check one CLI subcommand.

    Attributes:
        name: Subcommand name
        runner: Function of (params, trials, seed, workers) returning records
        violations: Function returning one message per broken guarantee
        x_column: Swept parameter for plots
        y_column: Primary statistic for plots
    """
    name: str
    runner: Callable[[Dict[str, Any], int, int, int], List[ExperimentRecord]]
    violations: Callable[[Sequence[ExperimentRecord]], List[str]]
    x_column: str
    y_column: str


@dataclass
class ExperimentOutcome:
    records: List[ExperimentRecord]
    violations: List[str]
    elapsed: float


EXPERIMENTS: Dict[str, ExperimentSpec] = {
    'prophet': ExperimentSpec(
        'prophet',
        lambda p, trials, seed, workers: prophet_experiment(p['stages'], p['support_size'], trials, seed, workers),
        prophet_violations, 'instance', 'ratio'),
    'quicksort': ExperimentSpec(
        'quicksort',
        lambda p, trials, seed, workers: quicksort_experiment(p['n'], trials, seed, workers),
        quicksort_violations, 'n', 'trial_mean'),
    'probing': ExperimentSpec(
        'probing',
        lambda p, trials, seed, workers: probing_experiment(p['capacity'], p['alphas'], trials, seed, workers),
        probing_violations, 'alpha', 'mean_insert_probes'),
    'binpack': ExperimentSpec(
        'binpack',
        lambda p, trials, seed, workers: binpack_experiment(p['n'], trials, seed, p['algo'], workers),
        binpack_violations, 'trial', 'ratio'),
    'hull': ExperimentSpec(
        'hull',
        lambda p, trials, seed, workers: hull_size_experiment(p['n'], trials, seed, workers),
        hull_violations, 'n', 'mean_hull_size'),
    'tsp': ExperimentSpec(
        'tsp',
        lambda p, trials, seed, workers: tsp_experiment(p['n'], trials, seed, p['oracle'], workers),
        tsp_violations, 'n', 'length_over_sqrt_n'),
    'graphs': ExperimentSpec(
        'graphs',
        lambda p, trials, seed, workers: graphs_experiment(
            p['experiment'], p['n'], trials, seed, p['p'], p['q'], p.get('k'), workers),
        graphs_violations, 'n', 'success_rate'),
}


def get_experiment(name: str) -> ExperimentSpec:
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise InvalidInputError(f"Unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")


def report_violation(message: str, is_critical: bool = False) -> None:
    """
    Log a broken guarantee or a failed step.

    Args:
        message: What failed
        is_critical: Whether the run must end with a failure status
    """
    if is_critical:
        logger.error(message)
    else:
        logger.warning(message)


def check_properties(name: str, records: Sequence[ExperimentRecord]) -> List[str]:
    """Run the experiment's guarantee checks, reporting each violation."""
    problems = get_experiment(name).violations(records)
    for problem in problems:
        report_violation(f"{name}: {problem}", CRITICAL_STEPS['property_check'])
    return problems


def summarize(name: str, records: Sequence[ExperimentRecord]) -> str:
    """One log line with the primary statistic's range."""
    spec = get_experiment(name)
    values = [r.stats[spec.y_column] for r in records if spec.y_column in r.stats]
    if not values:
        return f"{name}: {len(records)} records"
    summary = f"{name}: {len(records)} records, {spec.y_column} in [{min(values):.6g}, {max(values):.6g}]"
    if name == 'probing':
        ratio = scaling_ratio(records)
        if ratio is not None:
            summary += f", probe ratio 0.75/0.5 = {ratio:.4g}"
    return summary


def run_experiment(name: str, params: Dict[str, Any], trials: int, seed: int,
                   workers: Optional[int] = None) -> ExperimentOutcome:
    """
    Run one experiment end to end: trials, then property checks.

    Args:
        name: Subcommand name
        params: Experiment parameters
        trials: Number of trials, at least 1
        seed: Master seed
        workers: Thread count; defaults to AVGCASE_THREADS

    Returns:
        ExperimentOutcome with records in deterministic order
    """
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    spec = get_experiment(name)
    if workers is None:
        workers = get_thread_count()

    logger.info(f"Starting {name} experiment: seed={seed}, trials={trials}, workers={workers}")
    started = time.perf_counter()
    try:
        records = spec.runner(params, trials, seed, workers)
    except Exception as e:
        report_violation(f"{name} experiment failed: {str(e)}", CRITICAL_STEPS['experiment'])
        raise
    violations = check_properties(name, records)
    elapsed = time.perf_counter() - started

    logger.info(summarize(name, records))
    if violations:
        logger.error(f"{name}: {len(violations)} property violations")
    logger.info(f"Finished {name} experiment in {elapsed:.2f}s")
    return ExperimentOutcome(records, violations, elapsed)
