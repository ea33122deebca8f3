import pytest
from pathlib import Path
from typing import Sequence, Tuple

from models.domain import (
    HandDesign,
    Joint,
    JointConfiguration,
    JointKind,
    MotorShaft,
    TendonRole,
    TendonRoute,
    TendonStop,
)
from services.hand_model import default_iss_hand

REPO_ROOT = Path(__file__).resolve().parent.parent
DESIGNS_DIR = REPO_ROOT / 'designs'


def build_design(
    joints: Sequence[Tuple[str, float, float, float, float]],
    tendons: Sequence[Tuple[str, str, int, Sequence[Tuple[str, float, int]]]],
    motor: Tuple[float, float, float, float] = (5.0, 0.0, 1.0, 84.0),
    name: str = 'toy',
) -> HandDesign:
    """
    Compact design builder for tests

    joints: (id, angle_min, angle_max, stiffness, preload)
    tendons: (id, role, winding_sign, [(joint id, arm, sign), ...])
    motor: (radius, angle_min, angle_max, stiction)
    """
    joint_objs = tuple(
        Joint(id=j, kind=JointKind.FLEXION, angle_min=lo, angle_max=hi, stiffness=k, preload=p)
        for j, lo, hi, k, p in joints
    )
    tendon_objs = tuple(
        TendonRoute(
            id=t,
            role=TendonRole(role),
            winding_sign=winding,
            stops=tuple(TendonStop(j, r, s) for j, r, s in stops),
        )
        for t, role, winding, stops in tendons
    )
    radius, lo, hi, stiction = motor
    return HandDesign(
        joints=joint_objs,
        tendons=tendon_objs,
        motor=MotorShaft(radius=radius, angle_min=lo, angle_max=hi, stiction=stiction),
        reference_pose=JointConfiguration(angles={j.id: 0.0 for j in joint_objs}, motor_angle=lo),
        name=name,
    )


@pytest.fixture
def iss_design() -> HandDesign:
    """The built-in three-finger hand"""
    return default_iss_hand()


@pytest.fixture
def single_joint_design() -> HandDesign:
    """One TA joint: k=1, preload=1, r=10, r_mot=5"""
    return build_design(
        joints=[('J', 0.0, 1.5, 1.0, 1.0)],
        tendons=[('J_flex', 'TA', 1, [('J', 10.0, 1)])],
        motor=(5.0, 0.0, 1.0, 84.0),
    )


@pytest.fixture
def two_joint_chain() -> HandDesign:
    """TA+MJT chain: proximal r=10, distal r=5, k=1, zero preload, r_mot=1"""
    return build_design(
        joints=[('P', 0.0, 1.5, 1.0, 0.0), ('D', 0.0, 1.5, 1.0, 0.0)],
        tendons=[('chain', 'TA', 1, [('P', 10.0, 1), ('D', 5.0, 1)])],
        motor=(1.0, 0.0, 2.0, 84.0),
    )


@pytest.fixture
def antagonist_pair() -> HandDesign:
    """One TA joint and one SA joint with equal arms; SA spring k=10, preload 1.2"""
    return build_design(
        joints=[('T', 0.0, 1.0, 10.0, 1.0), ('S', 0.0, 0.25, 10.0, 1.2)],
        tendons=[
            ('T_flex', 'TA', 1, [('T', 10.0, 1)]),
            ('S_abd', 'SA', -1, [('S', 10.0, -1)]),
        ],
        motor=(5.0, 0.0, 0.4, 84.0),
    )


@pytest.fixture
def designs_dir() -> Path:
    return DESIGNS_DIR


@pytest.fixture
def output_dir(tmp_path) -> Path:
    """Temporary directory for run artifacts"""
    directory = tmp_path / 'out'
    directory.mkdir()
    return directory
