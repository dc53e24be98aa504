import dataclasses
import json

import pytest

import orchestrator
from cli import EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main, parse_args
from common import read_records


@pytest.fixture(autouse=True)
def builtin_defaults(monkeypatch, tmp_path):
    """Run every test against a missing defaults file, i.e. the built-in defaults."""
    monkeypatch.setenv('AVGCASE_CONFIG', str(tmp_path / 'absent.json'))
    monkeypatch.setenv('AVGCASE_THREADS', '0')


def test_parse_quicksort():
    config = parse_args(['quicksort', '--n', '100', '--trials', '1000', '--seed', '7'])
    assert config.command == 'quicksort'
    assert config.params == {'n': [100]}
    assert (config.trials, config.seed, config.format) == (1000, 7, 'csv')


def test_parse_uses_defaults():
    config = parse_args(['probing'])
    assert config.seed == 0
    assert config.trials == 10
    assert config.params == {'capacity': 65536, 'alphas': [0.5, 0.75, 0.9]}


def test_defaults_file_overrides_builtin(monkeypatch, tmp_path):
    path = tmp_path / 'defaults.json'
    path.write_text(json.dumps({'hull': {'n': 50, 'trials': 3}}))
    monkeypatch.setenv('AVGCASE_CONFIG', str(path))
    config = parse_args(['hull'])
    assert config.params == {'n': [50]}
    assert config.trials == 3
    assert parse_args(['hull', '--trials', '9']).trials == 9


def test_unknown_key_in_defaults_file(monkeypatch, tmp_path):
    path = tmp_path / 'defaults.json'
    path.write_text(json.dumps({'quicksort': {'m': 3}}))
    monkeypatch.setenv('AVGCASE_CONFIG', str(path))
    assert main(['quicksort']) == EXIT_USAGE


def test_negative_n_is_a_usage_error(capsys):
    assert main(['quicksort', '--n', '-5']) == EXIT_USAGE
    assert '--n' in capsys.readouterr().err


@pytest.mark.parametrize('argv', [
    ['binpack', '--algo', 'best'],
    ['graphs', '--p', '1.5'],
    ['probing', '--alphas', '0.5,1.0'],
    ['tsp', '--n', '2'],
    ['prophet', '--seed', str(2 ** 64)],
    ['sort'],
])
def test_invalid_flags(argv):
    assert main(argv) == EXIT_USAGE


def test_no_arguments_prints_usage(capsys):
    assert main([]) == EXIT_USAGE
    assert 'usage' in capsys.readouterr().err


def test_help_exits_cleanly():
    assert main(['--help']) == EXIT_OK


def test_prophet_run_writes_rows(tmp_path):
    out = tmp_path / 'prophet.csv'
    assert main(['prophet', '--trials', '10', '--seed', '3', '--out', str(out)]) == EXIT_OK
    records = read_records(out.read_text(), 'csv')
    assert len(records) == 10
    assert all(r.seed == 3 for r in records)
    assert all(r.stats['ratio'] >= 0.5 for r in records)


def test_csv_embeds_config(tmp_path):
    out = tmp_path / 'quicksort.csv'
    main(['quicksort', '--n', '10,20', '--trials', '5', '--seed', '7', '--out', str(out)])
    lines = out.read_text().splitlines()
    assert lines[0] == '# command=quicksort'
    assert '# seed=7' in lines
    assert '# n=10,20' in lines
    assert len(read_records(out.read_text(), 'csv')) == 2


def test_json_output(tmp_path):
    out = tmp_path / 'binpack.json'
    assert main(['binpack', '--n', '200', '--trials', '3', '--format', 'json', '--out', str(out)]) == EXIT_OK
    document = json.loads(out.read_text())
    assert document['config']['command'] == 'binpack'
    records = read_records(out.read_text(), 'json')
    assert len(records) == 3
    assert all(r.stats['tm_bins'] >= r.stats['ffd_bins'] for r in records)


def test_stdout_output(capsys):
    assert main(['quicksort', '--n', '10', '--trials', '5']) == EXIT_OK
    text = capsys.readouterr().out
    assert text.startswith('# command=quicksort')
    assert read_records(text, 'csv')[0].params == {'n': 10}


def test_same_seed_gives_identical_bytes(tmp_path, monkeypatch):
    paths = []
    for run, threads in enumerate(('0', '3')):
        monkeypatch.setenv('AVGCASE_THREADS', threads)
        path = tmp_path / f"run{run}.csv"
        main(['hull', '--n', '30,60', '--trials', '6', '--seed', '11', '--out', str(path)])
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_bad_thread_count(monkeypatch):
    monkeypatch.setenv('AVGCASE_THREADS', 'many')
    assert main(['quicksort', '--n', '10', '--trials', '2']) == EXIT_USAGE


def test_violations_exit_after_writing(tmp_path, monkeypatch):
    spec = orchestrator.EXPERIMENTS['prophet']
    monkeypatch.setitem(orchestrator.EXPERIMENTS, 'prophet',
                        dataclasses.replace(spec, violations=lambda records: ['forced failure']))
    out = tmp_path / 'prophet.csv'
    assert main(['prophet', '--trials', '2', '--out', str(out)]) == EXIT_VIOLATION
    assert len(read_records(out.read_text(), 'csv')) == 2


def test_unwritable_output(tmp_path):
    out = tmp_path / 'missing' / 'out.csv'
    assert main(['quicksort', '--n', '10', '--trials', '2', '--out', str(out)]) == EXIT_IO


def test_plot_failure_is_not_fatal(tmp_path):
    out = tmp_path / 'out.csv'
    plot = tmp_path / 'missing' / 'plot.svg'
    assert main(['quicksort', '--n', '10', '--trials', '2', '--out', str(out), '--plot', str(plot)]) == EXIT_OK
    assert out.exists()


def test_plot_written(tmp_path):
    pytest.importorskip('matplotlib')
    plot = tmp_path / 'hull.svg'
    assert main(['hull', '--n', '20,40', '--trials', '3', '--out', str(tmp_path / 'h.csv'),
                 '--plot', str(plot)]) == EXIT_OK
    assert '<svg' in plot.read_text()


def test_graph_dump(tmp_path):
    dump = tmp_path / 'graph.txt'
    args = ['graphs', '--experiment', 'planted-clique', '--n', '30', '--k', '5', '--trials', '2',
            '--out', str(tmp_path / 'g.csv'), '--dump', str(dump)]
    assert main(args) == EXIT_OK
    lines = dump.read_text().splitlines()
    n, m = (int(x) for x in lines[0].split())
    assert n == 30 and len(lines) == m + 1


def test_planted_clique_on_one_vertex_uses_k_one(tmp_path):
    out = tmp_path / 'clique.csv'
    args = ['graphs', '--experiment', 'planted-clique', '--n', '1', '--trials', '1', '--out', str(out)]
    assert main(args) == EXIT_OK
    assert read_records(out.read_text(), 'csv')[0].params['k'] == 1
