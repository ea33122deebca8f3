"""
Tests for design-matrix classification, design validation and the built-in hand
"""

import math

import pytest

from conftest import build_design
from models.domain import Coupling, HandDesign, JointConfiguration, SpringDirection, TendonRole
from services.hand_model import (
    classify_paradigm,
    default_iss_hand,
    paradigm_properties,
    validate_design,
)
from services.quasistatic_solver import tendon_slack
from utils.exceptions import UnknownTendonError

pytestmark = pytest.mark.unit


def _rules(violations):
    return {(v.field, v.rule) for v in violations}


class TestClassifyParadigm:

    def test_flexion_tendons_are_ta_mjt(self, iss_design):
        for finger in ('T', 'F1', 'F2'):
            cell = classify_paradigm(iss_design, f"{finger}_flex")
            assert cell.agonist == TendonRole.TA
            assert cell.coupling == Coupling.MJT
            assert cell.coupled_joints == 2
            assert cell.label == 'TA+MJT'

    def test_adduction_tendons_are_sa_mts(self, iss_design):
        for finger in ('F1', 'F2'):
            cell = classify_paradigm(iss_design, f"{finger}_abd")
            assert cell.label == 'SA+MTS'
            assert cell.coupled_joints == 1

    def test_single_stop_ta_tendon_reports_mts(self, single_joint_design):
        cell = classify_paradigm(single_joint_design, 'J_flex')
        assert cell.label == 'TA+MTS'
        assert cell.coupled_joints == 1

    def test_unknown_tendon(self, iss_design):
        with pytest.raises(UnknownTendonError):
            classify_paradigm(iss_design, 'F3_flex')

    def test_unknown_tendon_is_a_key_error(self, iss_design):
        with pytest.raises(KeyError):
            classify_paradigm(iss_design, 'nope')


class TestParadigmProperties:

    def test_ta_mjt_regulates_motor_force(self, iss_design):
        traits = paradigm_properties(classify_paradigm(iss_design, 'F1_flex'))
        assert traits.motor_force_regulation is True
        assert traits.unpowered_pose_keeping is False
        assert 'breakaway' in traits.position_differential

    def test_sa_mts_keeps_pose_unpowered(self, iss_design):
        traits = paradigm_properties(classify_paradigm(iss_design, 'F1_abd'))
        assert traits.unpowered_pose_keeping is True
        assert traits.motor_force_regulation is False
        assert traits.position_coupling.startswith('precise')


class TestValidateDesign:

    def test_builtin_hand_is_valid(self, iss_design):
        assert validate_design(iss_design) == []

    def test_fixtures_are_valid(self, single_joint_design, two_joint_chain, antagonist_pair):
        for design in (single_joint_design, two_joint_chain, antagonist_pair):
            assert validate_design(design) == []

    def test_nonpositive_arm(self, iss_design):
        design = iss_design.with_stop_arm('F1_flex', 'F1P', -1.0)
        assert ('tendons.F1_flex.stops[0].arm', 'positive') in _rules(validate_design(design))

    def test_zero_stiffness_is_degenerate(self, iss_design):
        design = iss_design.with_joint('F2D', stiffness=0.0)
        assert ('joints.F2D.stiffness', 'degenerate') in _rules(validate_design(design))

    def test_negative_stiffness(self, iss_design):
        design = iss_design.with_joint('TP', stiffness=-1.0)
        assert ('joints.TP.stiffness', 'nonnegative') in _rules(validate_design(design))

    def test_sa_tendon_must_wind_opposite(self, iss_design):
        tendons = tuple(
            t if t.id != 'F1_abd' else type(t)(id=t.id, role=t.role, stops=t.stops, winding_sign=1)
            for t in iss_design.tendons
        )
        design = HandDesign(iss_design.joints, tendons, iss_design.motor, iss_design.reference_pose)
        assert ('tendons.F1_abd.winding_sign', 'opposite-winding') in _rules(validate_design(design))

    def test_driving_spring_must_not_go_slack(self, iss_design):
        design = iss_design.with_joint('F1A', preload=1.0)
        assert ('joints.F1A.preload', 'spring-never-slack') in _rules(validate_design(design))

    def test_restoring_spring_must_not_go_slack(self, iss_design):
        design = iss_design.with_joint('TD', angle_min=-0.5)
        assert ('joints.TD.preload', 'spring-never-slack') in _rules(validate_design(design))

    def test_joint_range_order(self, iss_design):
        design = iss_design.with_joint('F2P', angle_max=-0.1)
        assert ('joints.F2P.angle_min', 'ordered-range') in _rules(validate_design(design))

    def test_joint_claimed_by_two_tendons(self):
        design = build_design(
            joints=[('P', 0.0, 1.5, 1.0, 0.0), ('D', 0.0, 1.5, 1.0, 0.0)],
            tendons=[
                ('a', 'TA', 1, [('P', 10.0, 1), ('D', 5.0, 1)]),
                ('b', 'TA', 1, [('D', 5.0, 1)]),
            ],
        )
        assert ('tendons.b.stops[0].joint', 'one-tendon-per-joint') in _rules(validate_design(design))

    def test_stop_on_unknown_joint(self):
        design = build_design(
            joints=[('P', 0.0, 1.5, 1.0, 0.0)],
            tendons=[('a', 'TA', 1, [('P', 10.0, 1), ('X', 5.0, 1)])],
        )
        assert ('tendons.a.stops[1].joint', 'joint-exists') in _rules(validate_design(design))

    def test_reference_pose_outside_limits(self, iss_design):
        angles = dict(iss_design.reference_pose.angles, F1P=2.0)
        design = HandDesign(
            iss_design.joints, iss_design.tendons, iss_design.motor,
            JointConfiguration(angles=angles, motor_angle=0.0)
        )
        assert ('reference_pose.angles.F1P', 'within-limits') in _rules(validate_design(design))

    def test_violation_renders_field_and_rule(self, iss_design):
        design = iss_design.with_motor(radius=0.0)
        [violation] = validate_design(design)
        assert str(violation).startswith('motor.radius [positive]')


class TestDefaultHand:

    def test_layout(self, iss_design):
        assert iss_design.joint_ids == ('TP', 'TD', 'F1P', 'F1D', 'F2P', 'F2D', 'F1A', 'F2A')
        assert iss_design.tendon_ids == ('T_flex', 'F1_flex', 'F2_flex', 'F1_abd', 'F2_abd')
        assert iss_design.motor.stiction == 84.0
        assert iss_design.motor.travel == pytest.approx(2.0 * math.pi / 3.0)

    def test_spring_directions(self, iss_design):
        assert iss_design.spring_direction('F1P') == SpringDirection.RESTORING
        assert iss_design.spring_direction('F2A') == SpringDirection.DRIVING

    def test_adduction_springs(self, iss_design):
        joint = iss_design.joint('F1A')
        assert (joint.stiffness, joint.preload) == (20.0, 2.65)

    def test_reference_pose_is_slack_free(self, iss_design):
        for tendon_id in iss_design.tendon_ids:
            assert tendon_slack(iss_design, iss_design.reference_pose, tendon_id) == 0.0

    def test_fresh_instance_each_call(self):
        assert default_iss_hand() == default_iss_hand()
        assert default_iss_hand() is not default_iss_hand()


class TestDesignValue:

    def test_with_joint_leaves_original(self, iss_design):
        changed = iss_design.with_joint('TP', stiffness=99.0)
        assert iss_design.joint('TP').stiffness == 30.0
        assert changed.joint('TP').stiffness == 99.0
        assert changed != iss_design

    def test_dict_round_trip(self, iss_design):
        assert HandDesign.from_dict(iss_design.to_dict()) == iss_design

    def test_tendon_of(self, iss_design):
        assert iss_design.tendon_of('F2D').id == 'F2_flex'
        assert iss_design.tendon_of('missing') is None
