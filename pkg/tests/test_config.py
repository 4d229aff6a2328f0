import pytest

import config
from config import TOLERANCES, _apply_tolerance_override


@pytest.fixture(autouse=True)
def restore_tolerances(monkeypatch):
    for key, value in list(TOLERANCES.items()):
        monkeypatch.setitem(TOLERANCES, key, value)


def test_single_value_sets_gauge_tolerance():
    _apply_tolerance_override('1e-6')
    assert TOLERANCES['gauge'] == 1e-6


def test_key_value_pairs():
    before = TOLERANCES['identity']
    _apply_tolerance_override('kernel=1e-10, bogus=3, identity=abc, noequals')
    assert TOLERANCES['kernel'] == 1e-10
    assert TOLERANCES['identity'] == before
    assert 'bogus' not in TOLERANCES


@pytest.mark.parametrize("raw", [None, ''])
def test_empty_override_is_noop(raw):
    snapshot = dict(TOLERANCES)
    _apply_tolerance_override(raw)
    assert TOLERANCES == snapshot


def test_tolerance_layers_are_ordered():
    assert TOLERANCES['kernel'] <= TOLERANCES['identity'] <= TOLERANCES['face_weight'] <= TOLERANCES['gauge']
    assert config.VERSION.startswith('frustrix')
