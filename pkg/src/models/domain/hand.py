"""
Domain model for the parametric hand description
Joints, tendon routes, motor shaft and the design that ties them together
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple

from utils.exceptions import UnknownTendonError


class JointKind(str, Enum):
    FLEXION = 'flexion'
    ABDUCTION = 'abduction'


class TendonRole(str, Enum):
    """Which element acts as agonist on the tendon's joints"""
    TA = 'TA'  # tendon agonist, restoring spring
    SA = 'SA'  # spring agonist, tendon restrains it


class Coupling(str, Enum):
    MJT = 'MJT'  # multiple joints per tendon
    MTS = 'MTS'  # multiple tendons per motor shaft


class SpringDirection(str, Enum):
    RESTORING = 'restoring'  # pushes toward angle_min
    DRIVING = 'driving'  # pushes toward angle_max


@dataclass(frozen=True)
class Joint:
    """Revolute joint with a torsion spring; angles grow in the grasping direction"""

    id: str
    kind: JointKind
    angle_min: float
    angle_max: float
    stiffness: float  # N*mm/rad
    preload: float  # spring deflection at zero angle, rad


@dataclass(frozen=True)
class TendonStop:
    """One joint pulley a tendon passes; sign +1 when take-up flexes/adducts the joint"""

    joint_id: str
    arm: float  # mm
    sign: int = 1


@dataclass(frozen=True)
class TendonRoute:
    """Tendon from the motor shaft through an ordered list of joint pulleys"""

    id: str
    role: TendonRole
    stops: Tuple[TendonStop, ...]
    winding_sign: int = 1

    @property
    def lead(self) -> TendonStop:
        """Proximal (first) stop; shaft torque reflects the spring torque seen here"""
        return self.stops[0]

    @property
    def joint_ids(self) -> Tuple[str, ...]:
        return tuple(stop.joint_id for stop in self.stops)


@dataclass(frozen=True)
class MotorShaft:
    radius: float  # mm
    angle_min: float
    angle_max: float
    stiction: float  # N*mm

    @property
    def travel(self) -> float:
        return self.angle_max - self.angle_min


@dataclass(frozen=True)
class JointConfiguration:
    """Joint angles plus motor angle; the state all statics are evaluated on"""

    angles: Mapping[str, float]
    motor_angle: float

    def angle(self, joint_id: str) -> float:
        return self.angles[joint_id]

    def to_dict(self) -> Dict[str, Any]:
        return {'angles': dict(self.angles), 'motor_angle': self.motor_angle}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'JointConfiguration':
        return cls(
            angles={str(k): float(v) for k, v in data['angles'].items()},
            motor_angle=float(data['motor_angle'])
        )


@dataclass(frozen=True)
class ContactConstraint:
    """Object contact supplied as an upper cap on one joint angle"""

    joint_id: str
    blocked_at: float


@dataclass(frozen=True)
class Violation:
    """One broken design invariant"""

    field: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.field} [{self.rule}]: {self.message}"


@dataclass(frozen=True)
class ParadigmCell:
    """Design-matrix cell of one tendon"""

    agonist: TendonRole
    coupling: Coupling
    coupled_joints: int = 1

    @property
    def label(self) -> str:
        return f"{self.agonist.value}+{self.coupling.value}"


@dataclass(frozen=True)
class ParadigmTraits:
    """Qualitative behavior of a design-matrix cell"""

    position_differential: str
    position_coupling: str
    motor_force_regulation: bool
    unpowered_pose_keeping: bool


@dataclass(frozen=True)
class HandDesign:
    """Full parametric hand description; immutable once validated"""

    joints: Tuple[Joint, ...]
    tendons: Tuple[TendonRoute, ...]
    motor: MotorShaft
    reference_pose: JointConfiguration
    name: str = 'hand'
    _joint_index: Dict[str, int] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, '_joint_index', {j.id: i for i, j in enumerate(self.joints)})

    @property
    def joint_ids(self) -> Tuple[str, ...]:
        return tuple(j.id for j in self.joints)

    @property
    def tendon_ids(self) -> Tuple[str, ...]:
        return tuple(t.id for t in self.tendons)

    def has_joint(self, joint_id: str) -> bool:
        return joint_id in self._joint_index

    def joint_index(self, joint_id: str) -> int:
        return self._joint_index[joint_id]

    def joint(self, joint_id: str) -> Joint:
        return self.joints[self._joint_index[joint_id]]

    def tendon(self, tendon_id: str) -> TendonRoute:
        for tendon in self.tendons:
            if tendon.id == tendon_id:
                return tendon
        raise UnknownTendonError(f"Unknown tendon id: {tendon_id!r}")

    def tendon_of(self, joint_id: str) -> Optional[TendonRoute]:
        for tendon in self.tendons:
            if joint_id in tendon.joint_ids:
                return tendon
        return None

    def spring_direction(self, joint_id: str) -> SpringDirection:
        """Springs on joints held by an SA tendon are agonists and drive the joint"""
        tendon = self.tendon_of(joint_id)
        if tendon is not None and tendon.role == TendonRole.SA:
            return SpringDirection.DRIVING
        return SpringDirection.RESTORING

    def with_joint(self, joint_id: str, **changes: Any) -> 'HandDesign':
        joints = tuple(replace(j, **changes) if j.id == joint_id else j for j in self.joints)
        return replace(self, joints=joints)

    def with_stop_arm(self, tendon_id: str, joint_id: str, arm: float) -> 'HandDesign':
        tendons = []
        for tendon in self.tendons:
            if tendon.id == tendon_id:
                stops = tuple(
                    replace(s, arm=arm) if s.joint_id == joint_id else s for s in tendon.stops
                )
                tendon = replace(tendon, stops=stops)
            tendons.append(tendon)
        return replace(self, tendons=tuple(tendons))

    def with_motor(self, **changes: Any) -> 'HandDesign':
        return replace(self, motor=replace(self.motor, **changes))

    def to_dict(self) -> Dict[str, Any]:
        """Plain nested structure mirroring the design file one-to-one"""
        return {
            'name': self.name,
            'motor': {
                'radius': self.motor.radius,
                'angle_min': self.motor.angle_min,
                'angle_max': self.motor.angle_max,
                'stiction': self.motor.stiction,
            },
            'joints': [
                {
                    'id': j.id,
                    'kind': j.kind.value,
                    'angle_min': j.angle_min,
                    'angle_max': j.angle_max,
                    'stiffness': j.stiffness,
                    'preload': j.preload,
                }
                for j in self.joints
            ],
            'tendons': [
                {
                    'id': t.id,
                    'role': t.role.value,
                    'winding_sign': t.winding_sign,
                    'stops': [
                        {'joint': s.joint_id, 'arm': s.arm, 'sign': s.sign} for s in t.stops
                    ],
                }
                for t in self.tendons
            ],
            'reference_pose': self.reference_pose.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'HandDesign':
        """
        Build a design from its plain structure

        Field-level checking with path diagnostics lives in services.design_io;
        this constructor assumes well-typed input.
        """
        motor = data['motor']
        return cls(
            name=str(data.get('name', 'hand')),
            motor=MotorShaft(
                radius=float(motor['radius']),
                angle_min=float(motor['angle_min']),
                angle_max=float(motor['angle_max']),
                stiction=float(motor['stiction']),
            ),
            joints=tuple(
                Joint(
                    id=str(j['id']),
                    kind=JointKind(j['kind']),
                    angle_min=float(j['angle_min']),
                    angle_max=float(j['angle_max']),
                    stiffness=float(j['stiffness']),
                    preload=float(j['preload']),
                )
                for j in data['joints']
            ),
            tendons=tuple(
                TendonRoute(
                    id=str(t['id']),
                    role=TendonRole(t['role']),
                    winding_sign=int(t['winding_sign']),
                    stops=tuple(
                        TendonStop(joint_id=str(s['joint']), arm=float(s['arm']), sign=int(s['sign']))
                        for s in t['stops']
                    ),
                )
                for t in data['tendons']
            ),
            reference_pose=JointConfiguration.from_dict(data['reference_pose']),
        )
