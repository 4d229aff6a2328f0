import os
import sys

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from elliptic_kernel import TorusParams  # noqa: E402
from lattice import build_GQ, monotone_order, angle_map, triangular, FAMILY  # noqa: E402

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def tp_half():
    """k = 0.5"""
    return TorusParams.from_modulus(0.5)


@pytest.fixture
def tri_dg():
    return build_GQ(triangular())


def sorted_angles(dg, values, family, tp):
    """values 를 호몰로지 반시계 순서대로 트랙에 배정"""
    alphas = [0j] * len(values)
    for track, value in zip(monotone_order(dg), values):
        alphas[track] = complex(value)
    rho, _ = FAMILY[family]
    return angle_map(dg, alphas, rho, tp)


@pytest.fixture
def make_angles():
    return sorted_angles


@pytest.fixture
def isotropic_am(tri_dg, tp_half):
    """등방 삼각 격자 계열 III 각도 (0, 1/3, 2/3)"""
    return sorted_angles(tri_dg, (0.0, 1 / 3, 2 / 3), 'III', tp_half)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / 'output'
