"""
Optimal stopping over independent discrete prize distributions, and the
single-threshold rules that compete with a clairvoyant prophet.
"""
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from common import (
    AcceptMode,
    DiscreteDistribution,
    ExperimentRecord,
    Rng,
    expected_max,
    mean_and_stderr,
    random_distribution,
    run_trials,
    sample_array,
)
from utils import InvalidInputError, setup_logging

logger = setup_logging(__name__)

# Comparisons of q(t) against 1/2 absorb float error in the product of cdfs
HALF_TOLERANCE = 1e-12


@dataclass(frozen=True)
class StoppingInstance:
    """Prize distributions for stages 1..n, known in advance."""
    dists: Tuple[DiscreteDistribution, ...]

    def __post_init__(self):
        object.__setattr__(self, 'dists', tuple(self.dists))
        if not self.dists:
            raise InvalidInputError("A stopping instance needs at least one stage")
        if not all(dist.nonnegative for dist in self.dists):
            raise InvalidInputError("Prize distributions must have nonnegative support")

    @property
    def n(self) -> int:
        return len(self.dists)

    def support_union(self) -> List[float]:
        return sorted({v for dist in self.dists for v in dist.values})


@dataclass(frozen=True)
class Policy:
    """Per-stage thresholds; stage i accepts v_i when it passes thresholds[i] under modes[i]."""
    thresholds: Tuple[float, ...]
    modes: Tuple[AcceptMode, ...]

    def __post_init__(self):
        object.__setattr__(self, 'thresholds', tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, 'modes', tuple(AcceptMode(m) for m in self.modes))
        if len(self.thresholds) != len(self.modes):
            raise InvalidInputError("Policy needs one accept mode per threshold")


class ThresholdChoice(NamedTuple):
    t: float
    mode: AcceptMode


def threshold_policy(n: int, t: float, mode: AcceptMode = AcceptMode.AT_LEAST) -> Policy:
    """The same threshold t at every one of n stages."""
    return Policy((t,) * n, (mode,) * n)


def backward_induction_policy(inst: StoppingInstance) -> Tuple[Policy, float]:
    """
    Compute the optimal online policy by working backward from the last stage.

    Stage i accepts v_i iff v_i is at least the optimal continuation value
    V_{i+1}, where V_{n+1} = 0 and V_i = E[max(v_i, V_{i+1})].

    Args:
        inst: Stopping instance

    Returns:
        Tuple of (optimal policy, optimal expected value V_1)
    """
    thresholds = [0.0] * inst.n
    continuation = 0.0
    for i in range(inst.n - 1, -1, -1):
        thresholds[i] = continuation
        continuation = math.fsum(max(v, continuation) * p for v, p in inst.dists[i].support)
    policy = Policy(tuple(thresholds), (AcceptMode.AT_LEAST,) * inst.n)
    return policy, continuation


def policy_value(inst: StoppingInstance, policy: Policy) -> float:
    """
    Exact expected value of a per-stage threshold policy, by forward recursion.

    Args:
        inst: Stopping instance
        policy: Policy with one threshold per stage

    Returns:
        Expected accepted prize value (0 when nothing is accepted)
    """
    if len(policy.thresholds) != inst.n:
        raise InvalidInputError(f"Policy has {len(policy.thresholds)} stages, instance has {inst.n}")
    reach = 1.0
    terms = []
    for dist, t, mode in zip(inst.dists, policy.thresholds, policy.modes):
        terms.append(reach * dist.partial_expectation(t, mode))
        reach *= dist.fail_probability(t, mode)
    return math.fsum(terms)


def threshold_rule_value(inst: StoppingInstance, t: float, mode: AcceptMode = AcceptMode.AT_LEAST) -> float:
    """Exact expected value of accepting the first prize that passes t."""
    return policy_value(inst, threshold_policy(inst.n, t, mode))


def no_prize_probability(inst: StoppingInstance, t: float, mode: AcceptMode = AcceptMode.AT_LEAST) -> float:
    """
    q(t): probability that no prize passes the threshold.

    Factors are multiplied in sorted order so the result does not depend on
    stage order.
    """
    return math.prod(sorted(dist.fail_probability(t, mode) for dist in inst.dists))


def median_threshold(inst: StoppingInstance) -> ThresholdChoice:
    """
    Threshold at which the rule has a 50/50 chance of accepting some prize.

    If some t gives q(t) = 1/2 exactly, that t is returned with at-least
    mode. Otherwise point masses make q jump over 1/2 at a support value t*,
    and the better of "first prize >= t*" and "first prize > t*" is
    returned.

    Args:
        inst: Stopping instance

    Returns:
        ThresholdChoice of (t, accept mode)
    """
    support = inst.support_union()
    for index, value in enumerate(support):
        # q just above value under at-least mode equals P(all v <= value)
        at_most = no_prize_probability(inst, value, AcceptMode.STRICTLY_GREATER)
        if abs(at_most - 0.5) <= HALF_TOLERANCE and index + 1 < len(support):
            return ThresholdChoice(support[index + 1], AcceptMode.AT_LEAST)
        if at_most > 0.5:
            candidates = [
                ThresholdChoice(value, AcceptMode.AT_LEAST),
                ThresholdChoice(value, AcceptMode.STRICTLY_GREATER),
            ]
            values = [threshold_rule_value(inst, c.t, c.mode) for c in candidates]
            # Ties keep at-least mode
            return candidates[1] if values[1] > values[0] else candidates[0]
    # Unreachable for a valid instance: P(all v <= max support) = 1
    raise InvalidInputError("No crossing of 1/2 found in q(t)")


def prophet_upper_bound(inst: StoppingInstance, t: float) -> float:
    """t + sum_i E[(v_i - t)^+], an upper bound on E[max_i v_i] for any t."""
    return t + math.fsum(dist.excess(t) for dist in inst.dists)


def threshold_lower_bound(inst: StoppingInstance, t: float) -> float:
    """(1 - q(t)) t + q(t) sum_i E[(v_i - t)^+], a lower bound on the at-least rule's value."""
    q = no_prize_probability(inst, t)
    return (1.0 - q) * t + q * math.fsum(dist.excess(t) for dist in inst.dists)


def simulate_rule(inst: StoppingInstance, policy: Policy, trials: int, rng: Rng) -> Tuple[float, float]:
    """
    Monte Carlo estimate of a policy's expected value.

    Args:
        inst: Stopping instance
        policy: Policy to simulate
        trials: Number of simulated prize sequences
        rng: Random stream

    Returns:
        Tuple of (sample mean, standard error)
    """
    accepted = np.zeros(trials)
    active = np.ones(trials, dtype=bool)
    for dist, t, mode in zip(inst.dists, policy.thresholds, policy.modes):
        values = sample_array(dist, rng, trials)
        passes = values >= t if mode is AcceptMode.AT_LEAST else values > t
        taken = active & passes
        accepted[taken] = values[taken]
        active &= ~taken
    return mean_and_stderr(accepted)


def exercise2_instances(epsilon: float = 0.01) -> Tuple[StoppingInstance, StoppingInstance]:
    """
    Instances where the optimal online value is ~50% and exactly 100% of E[max].

    Args:
        epsilon: Probability of the large prize in the second stage

    Returns:
        Tuple of (low-ratio instance, ratio-one instance)
    """
    if not 0 < epsilon < 1:
        raise InvalidInputError(f"epsilon must lie in (0, 1), got {epsilon}")
    low = StoppingInstance((
        DiscreteDistribution.point_mass(1.0),
        DiscreteDistribution.from_pairs([(0.0, 1.0 - epsilon), (1.0 / epsilon, epsilon)]),
    ))
    high = StoppingInstance((DiscreteDistribution.point_mass(1.0), DiscreteDistribution.point_mass(1.0)))
    return low, high


def random_instance(stages: int, support_size: int, rng: Rng) -> StoppingInstance:
    if stages < 1:
        raise InvalidInputError(f"stages must be >= 1, got {stages}")
    return StoppingInstance(tuple(random_distribution(rng, support_size) for _ in range(stages)))


def prophet_trial(stages: int, support_size: int, seed: int, index: int, rng: Rng) -> ExperimentRecord:
    """Solve one random instance exactly and compare the rules with the prophet."""
    inst = random_instance(stages, support_size, rng)
    _, optimal = backward_induction_policy(inst)
    choice = median_threshold(inst)
    rule = threshold_rule_value(inst, choice.t, choice.mode)
    prophet = expected_max(list(inst.dists))
    ratio = rule / prophet if prophet > 0 else 1.0
    return ExperimentRecord(
        experiment='prophet',
        params={'stages': stages, 'support_size': support_size, 'instance': index},
        seed=seed,
        stats={
            'threshold': choice.t,
            'strict': 1.0 if choice.mode is AcceptMode.STRICTLY_GREATER else 0.0,
            'optimal_value': optimal,
            'threshold_value': rule,
            'expected_max': prophet,
            'ratio': ratio,
        },
    )


def prophet_experiment(stages: int, support_size: int, trials: int, seed: int, workers: int = 0) -> List[ExperimentRecord]:
    """
    One record per random instance.

    Args:
        stages: Number of stages per instance
        support_size: Maximum support points per distribution
        trials: Number of instances
        seed: Master seed
        workers: Thread count for trial fan-out

    Returns:
        Records in instance order
    """
    logger.info(f"Prophet experiment: {trials} instances, {stages} stages, support <= {support_size}")
    return run_trials(
        lambda index, rng: prophet_trial(stages, support_size, seed, index, rng),
        seed, trials, workers,
    )


def prophet_violations(records: Sequence[ExperimentRecord], tolerance: float = 1e-9) -> List[str]:
    """Instances breaking optimal >= threshold >= expected_max / 2."""
    problems = []
    for record in records:
        stats = record.stats
        if stats['threshold_value'] < 0.5 * stats['expected_max'] - tolerance:
            problems.append(f"instance {record.params['instance']}: threshold value "
                            f"{stats['threshold_value']} < half of E[max] {stats['expected_max']}")
        if stats['optimal_value'] < stats['threshold_value'] - tolerance:
            problems.append(f"instance {record.params['instance']}: optimal value "
                            f"{stats['optimal_value']} < threshold value {stats['threshold_value']}")
    return problems


if __name__ == '__main__':
    low, high = exercise2_instances(0.01)
    for name, inst in (('low', low), ('high', high)):
        _, value = backward_induction_policy(inst)
        print(f"{name}: optimal {value:.6f}, E[max] {expected_max(list(inst.dists)):.6f}")
