"""
Hand model services
Design-matrix classification, invariant checking and the built-in ISS hand
"""

import logging
from typing import Dict, List

from config.constants import ISSDefaults
from models.domain import (
    Coupling,
    HandDesign,
    Joint,
    JointConfiguration,
    JointKind,
    MotorShaft,
    ParadigmCell,
    ParadigmTraits,
    SpringDirection,
    TendonRole,
    TendonRoute,
    TendonStop,
    Violation,
)

logger = logging.getLogger(__name__)


_TRAITS: Dict[str, ParadigmTraits] = {
    'TA+MJT': ParadigmTraits(
        position_differential='breakaway: distal joints keep closing after a proximal block',
        position_coupling='soft: set by spring balance along the shared tendon',
        motor_force_regulation=True,
        unpowered_pose_keeping=False,
    ),
    'SA+MJT': ParadigmTraits(
        position_differential='breakaway via tendon slack',
        position_coupling='soft: set by spring balance along the shared tendon',
        motor_force_regulation=False,
        unpowered_pose_keeping=True,
    ),
    'TA+MTS': ParadigmTraits(
        position_differential='none: a blocked joint stops the motor',
        position_coupling='precise: fixed by pulley ratios',
        motor_force_regulation=True,
        unpowered_pose_keeping=False,
    ),
    'SA+MTS': ParadigmTraits(
        position_differential='via tendon slack on the blocked joint',
        position_coupling='precise: fixed by pulley ratios',
        motor_force_regulation=False,
        unpowered_pose_keeping=True,
    ),
}


def classify_paradigm(design: HandDesign, tendon_id: str) -> ParadigmCell:
    """
    Place one tendon in the TA/SA x MJT/MTS design matrix

    Args:
        design: Hand design
        tendon_id: Tendon to classify

    Returns:
        ParadigmCell; single-stop tendons report MTS with coupled_joints=1

    Raises:
        UnknownTendonError: tendon_id not in the design
    """
    tendon = design.tendon(tendon_id)
    coupling = Coupling.MJT if len(tendon.stops) >= 2 else Coupling.MTS
    return ParadigmCell(agonist=tendon.role, coupling=coupling, coupled_joints=len(tendon.stops))


def paradigm_properties(cell: ParadigmCell) -> ParadigmTraits:
    """Qualitative behavior of a design-matrix cell"""
    return _TRAITS[cell.label]


def validate_design(design: HandDesign) -> List[Violation]:
    """
    Check every design invariant

    Violations are data: an empty list means the design is valid.

    Args:
        design: Hand design to check

    Returns:
        List of violations, each naming the field path and the rule
    """
    violations: List[Violation] = []

    def flag(path: str, rule: str, message: str) -> None:
        violations.append(Violation(path, rule, message))

    # Motor
    motor = design.motor
    if not motor.radius > 0:
        flag('motor.radius', 'positive', f"motor radius must be > 0, got {motor.radius}")
    if not motor.angle_min < motor.angle_max:
        flag('motor.angle_min', 'ordered-range',
             f"angle_min {motor.angle_min} must be < angle_max {motor.angle_max}")
    if motor.stiction < 0:
        flag('motor.stiction', 'nonnegative', f"stiction must be >= 0, got {motor.stiction}")

    # Joints
    seen_joints = set()
    for joint in design.joints:
        path = f"joints.{joint.id}"
        if joint.id in seen_joints:
            flag(path, 'unique-id', f"duplicate joint id {joint.id!r}")
        seen_joints.add(joint.id)

        if not joint.angle_min < joint.angle_max:
            flag(f"{path}.angle_min", 'ordered-range',
                 f"angle_min {joint.angle_min} must be < angle_max {joint.angle_max}")
        if joint.stiffness < 0:
            flag(f"{path}.stiffness", 'nonnegative', f"stiffness must be >= 0, got {joint.stiffness}")
        elif joint.stiffness == 0:
            flag(f"{path}.stiffness", 'degenerate',
                 "zero stiffness leaves the equilibrium angle undetermined")
        if joint.preload < 0:
            flag(f"{path}.preload", 'nonnegative', f"preload must be >= 0, got {joint.preload}")

        if design.spring_direction(joint.id) == SpringDirection.DRIVING:
            if joint.angle_max > joint.preload:
                flag(f"{path}.preload", 'spring-never-slack',
                     f"driving spring goes slack above {joint.preload}; angle_max is {joint.angle_max}")
        elif joint.angle_min < -joint.preload:
            flag(f"{path}.preload", 'spring-never-slack',
                 f"restoring spring goes slack below {-joint.preload}; angle_min is {joint.angle_min}")

    # Tendons
    seen_tendons = set()
    claimed: Dict[str, str] = {}
    ta_windings = {t.winding_sign for t in design.tendons if t.role == TendonRole.TA}
    for tendon in design.tendons:
        path = f"tendons.{tendon.id}"
        if tendon.id in seen_tendons:
            flag(path, 'unique-id', f"duplicate tendon id {tendon.id!r}")
        seen_tendons.add(tendon.id)

        if tendon.winding_sign not in (1, -1):
            flag(f"{path}.winding_sign", 'unit-sign', f"winding_sign must be +1 or -1, got {tendon.winding_sign}")
        if tendon.role == TendonRole.SA and tendon.winding_sign in ta_windings:
            flag(f"{path}.winding_sign", 'opposite-winding',
                 "SA tendon must wind opposite to every TA tendon on the shaft")
        if not tendon.stops:
            flag(f"{path}.stops", 'nonempty', "tendon must pass at least one joint")

        for position, stop in enumerate(tendon.stops):
            stop_path = f"{path}.stops[{position}]"
            if not design.has_joint(stop.joint_id):
                flag(f"{stop_path}.joint", 'joint-exists', f"unknown joint {stop.joint_id!r}")
            if not stop.arm > 0:
                flag(f"{stop_path}.arm", 'positive', f"moment arm must be > 0, got {stop.arm}")
            if stop.sign not in (1, -1):
                flag(f"{stop_path}.sign", 'unit-sign', f"sign must be +1 or -1, got {stop.sign}")
            owner = claimed.get(stop.joint_id)
            if owner is not None:
                flag(f"{stop_path}.joint", 'one-tendon-per-joint',
                     f"joint {stop.joint_id!r} already routed by tendon {owner!r}")
            else:
                claimed[stop.joint_id] = tendon.id

    # Reference pose
    pose = design.reference_pose
    for joint in design.joints:
        path = f"reference_pose.angles.{joint.id}"
        if joint.id not in pose.angles:
            flag(path, 'complete-pose', f"reference pose is missing joint {joint.id!r}")
            continue
        angle = pose.angles[joint.id]
        if not joint.angle_min <= angle <= joint.angle_max:
            flag(path, 'within-limits',
                 f"{angle} outside [{joint.angle_min}, {joint.angle_max}]")
    for joint_id in pose.angles:
        if not design.has_joint(joint_id):
            flag(f"reference_pose.angles.{joint_id}", 'joint-exists', f"unknown joint {joint_id!r}")
    if not motor.angle_min <= pose.motor_angle <= motor.angle_max:
        flag('reference_pose.motor_angle', 'within-limits',
             f"{pose.motor_angle} outside [{motor.angle_min}, {motor.angle_max}]")

    if violations:
        logger.debug(f"Design {design.name!r}: {len(violations)} violation(s)")
    return violations


def _finger_flexion_tendon(finger: str) -> TendonRoute:
    # Idler at the proximal joint, anchored on the distal pulley
    return TendonRoute(
        id=f"{finger}_flex",
        role=TendonRole.TA,
        winding_sign=1,
        stops=(
            TendonStop(f"{finger}P", ISSDefaults.PROXIMAL_ARM, 1),
            TendonStop(f"{finger}D", ISSDefaults.DISTAL_ARM, 1),
        ),
    )


def default_iss_hand() -> HandDesign:
    """
    Built-in three-finger, eight-joint, single-motor hand

    Flexion uses TA+MJT (one tendon per finger through proximal and distal
    joints); abduction-adduction of fingers 1 and 2 uses SA+MTS tendons
    wound opposite to the flexion tendons on the same shaft. The adduction
    springs are the result of select_adduction_springs over the default
    catalog, frozen here.

    Returns:
        HandDesign with joints TP, TD, F1P, F1D, F2P, F2D, F1A, F2A
    """
    joints: List[Joint] = []
    tendons: List[TendonRoute] = []

    for finger in ISSDefaults.FINGERS:
        for segment in ('P', 'D'):
            joints.append(Joint(
                id=f"{finger}{segment}",
                kind=JointKind.FLEXION,
                angle_min=0.0,
                angle_max=ISSDefaults.FLEXION_MAX,
                stiffness=ISSDefaults.FLEXION_STIFFNESS,
                preload=ISSDefaults.FLEXION_PRELOAD,
            ))
        tendons.append(_finger_flexion_tendon(finger))

    for finger in ISSDefaults.ADDUCTING_FINGERS:
        joint_id = f"{finger}A"
        joints.append(Joint(
            id=joint_id,
            kind=JointKind.ABDUCTION,
            angle_min=0.0,
            angle_max=ISSDefaults.ADDUCTION_MAX,
            stiffness=ISSDefaults.ADDUCTION_STIFFNESS,
            preload=ISSDefaults.ADDUCTION_PRELOAD,
        ))
        tendons.append(TendonRoute(
            id=f"{finger}_abd",
            role=TendonRole.SA,
            winding_sign=-1,
            stops=(TendonStop(joint_id, ISSDefaults.ADDUCTION_ARM, -1),),
        ))

    motor = MotorShaft(
        radius=ISSDefaults.MOTOR_RADIUS,
        angle_min=ISSDefaults.MOTOR_MIN,
        angle_max=ISSDefaults.MOTOR_MAX,
        stiction=ISSDefaults.STICTION,
    )
    reference = JointConfiguration(
        angles={j.id: 0.0 for j in joints},
        motor_angle=ISSDefaults.MOTOR_MIN,
    )
    return HandDesign(
        joints=tuple(joints),
        tendons=tuple(tendons),
        motor=motor,
        reference_pose=reference,
        name='iss_hand',
    )
