import io
import itertools
import json
import math

import numpy as np
import pytest

from common import (
    AcceptMode,
    DiscreteDistribution,
    ExperimentRecord,
    Rng,
    expected_max,
    format_number,
    mean_and_stderr,
    random_distribution,
    read_records,
    run_trials,
    sample,
    sample_array,
    write_records,
)
from utils import InvalidInputError


def test_same_seed_same_stream():
    a = Rng(7, 3).random(5)
    b = Rng(7, 3).random(5)
    assert np.array_equal(a, b)


def test_trial_streams_differ():
    assert not np.array_equal(Rng.for_trial(7, 0).random(5), Rng.for_trial(7, 1).random(5))
    assert not np.array_equal(Rng(7).spawn(1).random(5), Rng(7).spawn(2).random(5))


def test_seed_must_fit_64_bits():
    Rng(2 ** 64 - 1)
    with pytest.raises(InvalidInputError):
        Rng(2 ** 64)
    with pytest.raises(InvalidInputError):
        Rng(-1)


def test_rng_helpers(rng):
    assert sorted(rng.permutation(10)) == list(range(10))
    subset = rng.choice_subset(20, 5)
    assert subset == sorted(set(subset)) and len(subset) == 5
    assert all(0 <= rng.integers(3, 6) - 3 < 3 for _ in range(100))
    assert 0.0 <= rng.uniform() < 1.0


def test_distribution_validation():
    with pytest.raises(InvalidInputError):
        DiscreteDistribution((), ())
    with pytest.raises(InvalidInputError):
        DiscreteDistribution((1.0, 0.0), (0.5, 0.5))
    with pytest.raises(InvalidInputError):
        DiscreteDistribution((0.0, 1.0), (0.5, 0.4))
    with pytest.raises(InvalidInputError):
        DiscreteDistribution((0.0, 1.0), (1.0, 0.0))


def test_from_pairs_merges_and_sorts():
    dist = DiscreteDistribution.from_pairs([(2, 0.25), (1, 0.5), (2, 0.25), (3, 0.0)])
    assert dist.values == (1.0, 2.0)
    assert dist.probs == (0.5, 0.5)


def test_cdf_and_threshold_helpers():
    dist = DiscreteDistribution((0.0, 1.0, 4.0), (0.25, 0.25, 0.5))
    assert dist.cdf(1.0) == 0.5
    assert dist.below(1.0) == 0.25
    assert dist.fail_probability(1.0, AcceptMode.AT_LEAST) == 0.25
    assert dist.fail_probability(1.0, AcceptMode.STRICTLY_GREATER) == 0.5
    assert dist.partial_expectation(1.0, AcceptMode.AT_LEAST) == 2.25
    assert dist.excess(1.0) == 1.5
    assert dist.mean() == 2.25


def test_sample_point_mass(rng):
    dist = DiscreteDistribution.point_mass(5)
    assert {sample(dist, rng) for _ in range(100)} == {5.0}


def test_sample_stays_in_support(rng):
    dist = DiscreteDistribution((1.0, 2.0), (0.25, 0.75))
    assert {sample(dist, rng) for _ in range(1000)} <= {1.0, 2.0}


def test_sample_frequencies(rng):
    dist = DiscreteDistribution((0.0, 1.0), (0.5, 0.5))
    draws = sample_array(dist, rng, 10 ** 6)
    assert abs(draws.mean() - 0.5) < 0.005


@pytest.mark.parametrize('dists, expected', [
    ([DiscreteDistribution.point_mass(7)], 7.0),
    ([DiscreteDistribution((0.0, 1.0), (0.5, 0.5))] * 2, 0.75),
    ([DiscreteDistribution.point_mass(2)] * 3, 2.0),
])
def test_expected_max_examples(dists, expected):
    assert expected_max(dists) == pytest.approx(expected, abs=1e-12)


def test_expected_max_empty():
    with pytest.raises(InvalidInputError):
        expected_max([])


def test_expected_max_matches_enumeration():
    for index in range(50):
        rng = Rng(99, index)
        dists = [random_distribution(rng, 4) for _ in range(1 + index % 3)]
        total = 0.0
        for outcome in itertools.product(*(d.support for d in dists)):
            total += max(v for v, _ in outcome) * math.prod(p for _, p in outcome)
        exact = expected_max(dists)
        assert exact == pytest.approx(total, abs=1e-9)
        assert all(exact >= d.mean() - 1e-12 for d in dists)


def _records():
    return [
        ExperimentRecord('demo', {'n': 10, 'algo': 'ffd'}, 42, {'value': 0.1, 'count': 3.0, 'missing': math.nan}),
        ExperimentRecord('demo', {'n': 20, 'algo': 'tm'}, 42, {'value': 1 / 3, 'count': 4.0, 'missing': 2.5}),
    ]


def test_csv_header_only_for_no_records():
    sink = io.StringIO()
    write_records([], 'csv', sink)
    assert sink.getvalue() == 'experiment,seed\n'


def test_csv_contains_seed_and_round_trips():
    sink = io.StringIO()
    write_records(_records(), 'csv', sink, config={'command': 'demo', 'seed': 42})
    text = sink.getvalue()
    assert text.startswith('# command=demo\n# seed=42\n')
    assert 'experiment,n,algo,seed,value,count,missing\n' in text
    assert ',42,' in text
    parsed = read_records(text, 'csv')
    assert parsed[1] == _records()[1]
    assert parsed[0].params == {'n': 10, 'algo': 'ffd'}
    assert math.isnan(parsed[0].stats['missing'])


def test_json_round_trip():
    records = _records()[1:]
    sink = io.StringIO()
    write_records(records, 'json', sink)
    assert read_records(sink.getvalue(), 'json') == records
    assert isinstance(json.loads(sink.getvalue()), list)


def test_json_embeds_config():
    sink = io.StringIO()
    write_records(_records()[1:], 'json', sink, config={'command': 'demo', 'trials': 2})
    document = json.loads(sink.getvalue())
    assert document['config'] == {'command': 'demo', 'trials': 2}
    assert document['records'][0]['value'] == 1 / 3


def _reject_constant(token):
    raise ValueError(f"non-standard JSON token {token}")


def test_json_writes_null_for_none_and_nan():
    records = [ExperimentRecord('demo', {'n': 10, 'k': None}, 3,
                                {'missing': math.nan, 'bound': math.inf, 'value': 0.5})]
    sink = io.StringIO()
    write_records(records, 'json', sink, config={'command': 'demo', 'k': None})
    document = json.loads(sink.getvalue(), parse_constant=_reject_constant)
    assert document['records'][0]['k'] is None
    assert document['records'][0]['missing'] is None
    assert document['config']['k'] is None
    parsed = read_records(sink.getvalue(), 'json')[0]
    assert parsed.params == {'n': 10, 'k': None}
    assert math.isnan(parsed.stats['missing'])
    assert parsed.stats['bound'] == math.inf
    assert parsed.stats['value'] == 0.5


def test_csv_writes_null_for_none():
    records = [ExperimentRecord('demo', {'n': 10, 'k': None}, 3, {'value': 0.5})]
    sink = io.StringIO()
    write_records(records, 'csv', sink, config={'k': None})
    assert '# k=null\n' in sink.getvalue()
    assert read_records(sink.getvalue(), 'csv')[0].params == {'n': 10, 'k': None}


def test_heterogeneous_records_rejected():
    records = _records()
    records[1] = ExperimentRecord('demo', {'n': 20}, 42, {'value': 1.0})
    with pytest.raises(InvalidInputError):
        write_records(records, 'csv', io.StringIO())
    with pytest.raises(InvalidInputError):
        write_records([ExperimentRecord('a'), ExperimentRecord('b')], 'csv', io.StringIO())


def test_format_number():
    assert format_number(0.1) == '0.10000000000000001'
    assert format_number(2.0) == '2.0'
    assert format_number(3) == '3'
    assert format_number(math.inf) == 'Infinity'
    assert format_number(True) == 'true'
    assert format_number(None) == 'null'


def test_mean_and_stderr():
    assert mean_and_stderr([3.0]) == (3.0, 0.0)
    mean, stderr = mean_and_stderr([1.0, 3.0])
    assert mean == 2.0
    assert stderr == pytest.approx(1.0)


def test_run_trials_order_independent_of_workers():
    trial = lambda index, rng: (index, rng.uniform())
    serial = run_trials(trial, 5, 16, workers=0)
    threaded = run_trials(trial, 5, 16, workers=4)
    assert serial == threaded
    assert [index for index, _ in serial] == list(range(16))
    with pytest.raises(InvalidInputError):
        run_trials(trial, 5, 0)
