import json

import pytest

import main


def run(out_dir, *argv):
    return main.main(['--output-dir', str(out_dir), *argv])


def test_version_and_usage_errors(out_dir):
    assert main.main(['--version']) == main.EXIT_OK
    assert main.main(['no-such-command']) == main.EXIT_USAGE
    assert run(out_dir, 'classify', 'triangular') == main.EXIT_USAGE


def test_parse_complex():
    assert main.parse_complex('1.3i') == 1.3j
    assert main.parse_complex('0.5+1.2i') == 0.5 + 1.2j
    assert main.parse_complex(' 2 ') == 2
    with pytest.raises(Exception):
        main.parse_complex('tau')


def test_verify_theta(out_dir):
    assert run(out_dir, 'verify', 'theta', '--tau', '1.3i', '--samples', '12') == main.EXIT_OK
    report = json.loads((out_dir / 'verify_theta.json').read_text(encoding='utf-8'))
    assert report['passed'] is True


def test_verify_theta_rejects_lower_half_plane(out_dir):
    assert run(out_dir, 'verify', 'theta', '--tau', '0.5-1i') == main.EXIT_USAGE


def test_classify_single_triple(out_dir):
    assert run(out_dir, 'classify', 'triangular', '--s', '1,1,1') == main.EXIT_OK
    report = json.loads((out_dir / 'classify_triangular.json').read_text(encoding='utf-8'))
    assert report['class'] == 'S3'
    assert report['family'] == 'III'


def test_classify_rejects_non_positive(out_dir):
    assert run(out_dir, 'classify', 'triangular', '--s', '0,1,1') == main.EXIT_USAGE


def test_classify_boundary_exit_code(out_dir):
    assert run(out_dir, 'classify', 'triangular', '--s', '2,3,1') == main.EXIT_FAIL
    report = json.loads((out_dir / 'classify_triangular.json').read_text(encoding='utf-8'))
    assert report['class'] == 'boundary'
    assert run(out_dir, 'classify', 'triangular', '--s', '2,3,1', '--allow-boundary') == main.EXIT_OK


def test_classify_batch_and_sweep(out_dir, tmp_path):
    batch = tmp_path / 'batch.csv'
    batch.write_text('s1,s2,s3\n1,1,1\n0.5,0.6,0.7\n', encoding='utf-8')
    code = run(out_dir, 'classify', 'triangular', '--batch', str(batch),
               '--sweep', 'square', '--k-values', '0.3,0.6')
    assert code == main.EXIT_OK
    assert (out_dir / 'classify_batch.csv').exists()
    assert (out_dir / 'sweep_square.csv').read_text(encoding='utf-8').startswith('k,J')


def test_signs_from_frustration(out_dir):
    args = ['signs-from-frustration', '--graph', 'square', '--delta', 'all-minus']
    assert run(out_dir, *args, '--nx', '2', '--ny', '2') == main.EXIT_OK
    report = json.loads((out_dir / 'signs.json').read_text(encoding='utf-8'))
    assert report['delta'] == [-1] * 4
    assert len(report['eps']) == 8
    assert run(out_dir, *args) == main.EXIT_FAIL


def test_amoeba_resolution_must_be_positive(out_dir):
    code = run(out_dir, 'amoeba', '--family', 'I', '--k', '0.5', '--resolution', '0')
    assert code == main.EXIT_USAGE


def test_amoeba_outputs(out_dir):
    code = run(out_dir, 'amoeba', '--family', 'I', '--k', '0.5', '--seed', '3', '--sorted-angles',
               '--resolution', '12', '--points', '50')
    assert code == main.EXIT_OK
    for name in ('amoeba.csv', 'real_locus.csv', 'torus.csv'):
        assert (out_dir / name).read_text(encoding='utf-8').startswith('x,y,label')


def test_couplings_family_one(out_dir):
    code = run(out_dir, 'couplings', '--family', 'I', '--k', '0.5', '--seed', '3', '--sorted-angles')
    assert code == main.EXIT_OK
    report = json.loads((out_dir / 'couplings.json').read_text(encoding='utf-8'))
    assert report['couplings']['family'] == 'I'
    assert len(report['eps']) == 3


def test_free_energy_for_given_couplings(out_dir):
    code = run(out_dir, 'free-energy', '--graph', 'square', '--nx', '2', '--ny', '2',
               '--couplings', '0.3', '--grid', '16')
    assert code == main.EXIT_OK
    report = json.loads((out_dir / 'free_energy.json').read_text(encoding='utf-8'))
    assert report['graph'].startswith('square')
    assert report['free_energy']['grid_n'] == 16


def test_charpoly_json(out_dir):
    assert run(out_dir, 'charpoly', '--graph', 'hexagonal', '--couplings', '0.4', '--kind', 'dimer') == main.EXIT_OK
    report = json.loads((out_dir / 'charpoly_dimer.json').read_text(encoding='utf-8'))
    assert report['kind'] == 'dimer'
    assert report['newton_polygon']


@pytest.mark.parametrize("seed", range(6))
def test_verify_symmetry_reports_transform(out_dir, seed):
    assert run(out_dir, 'verify', 'symmetry', '--seed', str(seed)) == main.EXIT_OK
    report = json.loads((out_dir / 'verify_symmetry.json').read_text(encoding='utf-8'))
    assert report['passed'] is True
    assert set(report['transform']) >= {'twist', 'flip'}


@pytest.mark.parametrize("family", ['I', 'II', 'III'])
def test_verify_duality(out_dir, family):
    code = run(out_dir, 'verify', 'duality', '--family', family, '--k', '0.5', '--seed', '2', '--sorted-angles')
    assert code == main.EXIT_OK
    report = json.loads((out_dir / 'verify_duality.json').read_text(encoding='utf-8'))
    assert report['product_gap'] < 1e-10
    assert report['ratio_gap'] < 1e-10
