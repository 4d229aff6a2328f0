import json
import math

import numpy as np
import pandas as pd
import pytest

from classify import triangular_classify
from storage import FLOAT_FORMAT, OutputManager, to_serializable


def test_scalars_are_fixed_format_strings():
    assert to_serializable(1.0) == '1.000000000000e+00'
    assert to_serializable(np.float64(0.25)) == '2.500000000000e-01'
    assert to_serializable(math.inf) == 'inf'
    assert to_serializable(-math.inf) == '-inf'
    assert to_serializable(math.nan) == 'nan'
    assert to_serializable(1 - 2j) == {'re': '1.000000000000e+00', 'im': '-2.000000000000e+00'}


def test_ints_bools_and_containers():
    assert to_serializable(np.int64(3)) == 3
    assert to_serializable(np.bool_(True)) is True
    assert to_serializable({3, 1, 2}) == [1, 2, 3]
    assert to_serializable(np.array([1.0, 2.0])) == ['1.000000000000e+00', '2.000000000000e+00']
    assert to_serializable({1: (0.5, 'x')}) == {'1': ['5.000000000000e-01', 'x']}


def test_report_objects_use_to_dict():
    data = to_serializable(triangular_classify((1.0, 1.0, 1.0)))
    assert data['class'] == 'S3'
    assert data['family'] == 'III'
    assert set(data['thresholds']) == {'S', 'T'}


def test_json_is_deterministic(out_dir):
    out = OutputManager(out_dir)
    data = {'b': [1.5, 2j], 'a': {'z': math.inf, 'y': 1}}
    first = out.save_json(data, 'report.json').read_bytes()
    second = out.save_json(dict(reversed(list(data.items()))), 'report.json').read_bytes()
    assert first == second
    assert first.decode('utf-8').index('"a"') < first.decode('utf-8').index('"b"')

    loaded = out.load_json('report.json')
    assert loaded['a']['z'] == 'inf'
    assert loaded['b'][1] == {'re': '0.000000000000e+00', 'im': '2.000000000000e+00'}
    assert out.load_json('missing.json') is None


def test_nested_output_paths_are_created(out_dir):
    out = OutputManager(out_dir)
    path = out.save_json({'x': 1}, 'sub/dir/report.json')
    assert path.exists()
    assert json.loads(path.read_text(encoding='utf-8')) == {'x': 1}


def test_points_csv_column_order_and_format(out_dir):
    out = OutputManager(out_dir)
    frame = pd.DataFrame({'label': ['torus', 'real'], 'y': [0.5, -1.0], 'x': [1.0, 2.0]})
    path = out.save_points(frame, 'points.csv')
    lines = path.read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'x,y,label'
    assert lines[1] == f"{FLOAT_FORMAT % 1.0},{FLOAT_FORMAT % 0.5},torus"
    assert len(lines) == 3


def test_csv_fills_missing_columns(out_dir):
    out = OutputManager(out_dir)
    path = out.save_csv(pd.DataFrame({'k': [0.5]}), 'sweep.csv', columns=['k', 'J'])
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['k', 'J']
    assert frame['k'].iloc[0] == pytest.approx(0.5)
    assert frame['J'].isna().all()
