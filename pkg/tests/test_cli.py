import json

import pytest

import main
from config import Config
from foiwatch import fixtures
from foiwatch.models.reference import ReferenceRecord
from foiwatch.utils.io import iter_jsonl, write_jsonl

DIM = 128


@pytest.fixture(autouse=True)
def fresh_config():
    yield
    Config.reset()


@pytest.fixture
def fixture_dir(tmp_path):
    assert main.main(['fixtures', '--out-dir', str(tmp_path), '--dim', str(DIM), '--log-level', 'warning']) == 0
    return tmp_path


def rows(path):
    return [data for _, data in iter_jsonl(str(path))]


def test_track_and_eval_crane_fixture(fixture_dir):
    d = fixture_dir
    argv = ['track', '--config', str(d / 'crane_config.yml'), '--frames', str(d / 'crane_frames.jsonl'),
            '--store', str(d / 'fixture_store.jsonl'), '--out', str(d / 'events.jsonl'),
            '--reports', str(d / 'reports.jsonl'), '--diagnostics', str(d / 'diag.jsonl'),
            '--timings', str(d / 'timings.jsonl')]
    assert main.main(argv) == 0

    entered = [e for e in rows(d / 'events.jsonl') if e['kind'] == 'Entered']
    assert [(e['frame_index'], e['zone'], e['label']) for e in entered] == [(3, 'critical', 'crane vehicle')]
    [report] = rows(d / 'reports.jsonl')
    assert report['final_label'] == 'crane vehicle'
    assert len(rows(d / 'diag.jsonl')) == len(rows(d / 'timings.jsonl')) == 6

    argv = ['eval', '--pred', str(d / 'diag.jsonl'), '--gt', str(d / 'crane_frames.jsonl'),
            '--level', 'aggregate', '--out', str(d / 'summary.json')]
    assert main.main(argv) == 0
    summary = json.loads((d / 'summary.json').read_text())
    assert summary['f1'] == 1.0
    assert summary['id_switches'] == 0
    assert summary['per_label_ap'] == {'construction machinery': 1.0}


def test_track_is_deterministic(fixture_dir):
    d = fixture_dir
    outputs = []
    for run in range(2):
        argv = ['track', '--config', str(d / 'net_config.yml'), '--frames', str(d / 'net_frames.jsonl'),
                '--store', str(d / 'fixture_store.jsonl'), '--out', str(d / f'events{run}.jsonl'),
                '--diagnostics', str(d / f'diag{run}.jsonl')]
        assert main.main(argv) == 0
        outputs.append(((d / f'events{run}.jsonl').read_text(), (d / f'diag{run}.jsonl').read_text()))
    assert outputs[0] == outputs[1]
    assert outputs[0][0]


def test_query_with_k_from_file_and_flag(fixture_dir, tmp_path, capsys):
    embedding = fixtures.crane_trace(DIM).frames[0].detections[0].embedding
    query_path = tmp_path / 'query.json'
    query_path.write_text(json.dumps({'embedding': embedding.tolist()}))
    config_path = tmp_path / 'query.yml'
    config_path.write_text(f'dim: {DIM}\nk: 1\n')
    base = ['query', '--store', str(fixture_dir / 'fixture_store.jsonl'), '--embedding', str(query_path),
            '--config', str(config_path)]
    capsys.readouterr()

    assert main.main(base) == 0
    matches = json.loads(capsys.readouterr().out)
    assert [m['label'] for m in matches] == ['crane vehicle']

    assert main.main(base + ['--k', '3']) == 0
    matches = json.loads(capsys.readouterr().out)
    assert len(matches) == 3
    assert matches[0]['similarity'] >= matches[1]['similarity'] >= matches[2]['similarity']


def test_build_store_then_extend(tmp_path, capsys):
    first, second = tmp_path / 'a.jsonl', tmp_path / 'b.jsonl'
    write_jsonl([ReferenceRecord(label='excavator', embedding=[1.0, 0.0, 0.0]),
                 ReferenceRecord(label='bulldozer', embedding=[0.0, 1.0, 0.0])], first)
    write_jsonl([ReferenceRecord(label='kite', embedding=[0.0, 0.0, 1.0])], second)
    snapshot = tmp_path / 'store.jsonl'

    assert main.main(['build-store', '--input', str(first), '--out', str(snapshot), '--dim', '3']) == 0
    capsys.readouterr()
    assert main.main(['build-store', '--input', str(second), '--base', str(snapshot), '--out', str(snapshot),
                      '--dim', '3']) == 0
    summary = json.loads(capsys.readouterr().out)
    assert (summary['records'], summary['added']) == (3, 1)
    assert summary['unmapped_labels'] == ['kite']


def test_synth_and_bench(tmp_path):
    out_dir = tmp_path / 'scenario'
    assert main.main(['synth', '--out-dir', str(out_dir), '--n-frames', '10', '--dim', '32', '--seed', '4']) == 0
    assert len(rows(out_dir / 'frames.jsonl')) == 10
    assert len(rows(out_dir / 'gt.jsonl')) == 10

    bench_out = tmp_path / 'bench.json'
    argv = ['bench', '--store', str(out_dir / 'store.jsonl'), '--dim', '32', '--queries', '20',
            '--warmup', '0.1', '--out', str(bench_out)]
    assert main.main(argv) == 0
    report = json.loads(bench_out.read_text())
    assert (report['store_size'], report['query_count']) == (50, 18)


def test_unknown_flag_exits_1():
    with pytest.raises(SystemExit) as e:
        main.main(['track', '--frobnicate'])
    assert e.value.code == 1


def test_missing_input_exits_1(tmp_path):
    assert main.main(['query', '--embedding', str(tmp_path / 'q.json')]) == 1
    assert main.main(['track', '--frames', str(tmp_path / 'absent.jsonl'),
                      '--store', str(tmp_path / 'absent_store.jsonl')]) == 1


def test_unknown_config_key_exits_1(tmp_path):
    config_path = tmp_path / 'run.yml'
    config_path.write_text('queries: 5\n')
    # `queries` belongs to bench, not track
    assert main.main(['track', '--config', str(config_path)]) == 1


def test_contract_violation_exits_2(fixture_dir, tmp_path):
    query_path = tmp_path / 'short.json'
    query_path.write_text('[1.0, 0.0, 0.0]')
    argv = ['query', '--store', str(fixture_dir / 'fixture_store.jsonl'), '--embedding', str(query_path),
            '--dim', str(DIM)]
    assert main.main(argv) == 2


def test_synth_track_eval_is_byte_stable(tmp_path):
    outputs = []
    for run in range(2):
        d = tmp_path / f'run{run}'
        assert main.main(['synth', '--out-dir', str(d), '--n-frames', '30', '--dim', '32', '--seed', '9']) == 0
        assert main.main(['track', '--frames', str(d / 'frames.jsonl'), '--store', str(d / 'store.jsonl'),
                          '--dim', '32', '--zone', 'yard:0,0,400,720', '--out', str(d / 'events.jsonl'),
                          '--diagnostics', str(d / 'diag.jsonl'), '--reports', str(d / 'reports.jsonl')]) == 0
        assert main.main(['eval', '--pred', str(d / 'diag.jsonl'), '--gt', str(d / 'gt.jsonl'),
                          '--out', str(d / 'summary.json')]) == 0
        outputs.append([(d / name).read_bytes() for name in ('frames.jsonl', 'gt.jsonl', 'store.jsonl',
                                                             'events.jsonl', 'reports.jsonl', 'summary.json')])
    assert outputs[0] == outputs[1]
    summary = json.loads((tmp_path / 'run0' / 'summary.json').read_text())
    assert summary['id_switches'] == 0
