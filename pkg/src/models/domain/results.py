"""
Domain models for solver, cancellation and synergy-fitting results
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .hand import HandDesign, JointConfiguration


@dataclass(frozen=True)
class TendonStatus:
    """Complementarity pair of one tendon: tension * slack == 0"""

    tendon_id: str
    tension: float  # N
    slack: float  # mm
    taut: bool


@dataclass(frozen=True)
class EquilibriumResult:
    """Quasi-static equilibrium at one motor angle"""

    configuration: JointConfiguration
    tendon_statuses: Tuple[TendonStatus, ...]
    contact_torques: Dict[str, float]  # reaction magnitude of active contacts, N*mm
    energy: float  # N*mm
    limit_torques: Dict[str, float] = field(default_factory=dict)  # signed, + pushes toward grasp

    def status(self, tendon_id: str) -> TendonStatus:
        for status in self.tendon_statuses:
            if status.tendon_id == tendon_id:
                return status
        raise KeyError(tendon_id)

    def angle(self, joint_id: str) -> float:
        return self.configuration.angles[joint_id]


@dataclass(frozen=True)
class FreeMotionTrajectory:
    """Vectorized no-contact equilibria over a motor-angle grid"""

    motor_angles: np.ndarray  # (n,)
    angles: np.ndarray  # (n, joints), design joint order
    tensions: np.ndarray  # (n, tendons), design tendon order
    slacks: np.ndarray  # (n, tendons)
    joint_ids: Tuple[str, ...]
    tendon_ids: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.motor_angles)

    def column(self, joint_id: str) -> np.ndarray:
        return self.angles[:, self.joint_ids.index(joint_id)]

    def configuration(self, index: int) -> JointConfiguration:
        return JointConfiguration(
            angles={jid: float(v) for jid, v in zip(self.joint_ids, self.angles[index])},
            motor_angle=float(self.motor_angles[index])
        )


class ClosingEventKind(str, Enum):
    TENDON_SLACK = 'tendon-went-slack'
    CONTACT = 'contact-activated'
    JOINT_LIMIT = 'joint-limit-hit'


@dataclass(frozen=True)
class ClosingEvent:
    motor_angle: float
    kind: ClosingEventKind
    subject_id: str
    sample_index: int


@dataclass
class ClosingTrace:
    """Ordered equilibria along a closing motion plus the events it raised"""

    samples: List[Tuple[float, EquilibriumResult]] = field(default_factory=list)
    events: List[ClosingEvent] = field(default_factory=list)

    @property
    def motor_angles(self) -> List[float]:
        return [angle for angle, _ in self.samples]

    def angles_of(self, joint_id: str) -> List[float]:
        return [result.angle(joint_id) for _, result in self.samples]

    def events_for(self, subject_id: str, kind: Optional[ClosingEventKind] = None) -> List[ClosingEvent]:
        return [
            e for e in self.events
            if e.subject_id == subject_id and (kind is None or e.kind == kind)
        ]


@dataclass(frozen=True, eq=False)
class TorqueProfile:
    """Agonist, antagonist and net spring torque reflected to the motor shaft"""

    motor_angles: np.ndarray
    agonist_torque: np.ndarray
    antagonist_torque: np.ndarray
    net_torque: np.ndarray
    stiction: float

    def __len__(self) -> int:
        return len(self.motor_angles)

    def with_stiction(self, stiction: float) -> 'TorqueProfile':
        return TorqueProfile(
            self.motor_angles, self.agonist_torque, self.antagonist_torque,
            self.net_torque, float(stiction)
        )


@dataclass(frozen=True)
class QualifiedZoneResult:
    passed: bool
    worst_violation: float  # max |net| - stiction, negative when passing
    worst_angle: float


@dataclass(frozen=True)
class SpringCatalogEntry:
    """Manufacturer spring: fixed stiffness, preload adjustable within a range"""

    stiffness: float  # N*mm/rad
    preload_min: float
    preload_max: float
    label: str = ''

    def preload_grid(self, resolution: float) -> List[float]:
        """Preloads from preload_min in steps of resolution, never past preload_max"""
        count = int(np.floor((self.preload_max - self.preload_min) / resolution + 1e-9)) + 1
        return [round(self.preload_min + i * resolution, 12) for i in range(count)]


@dataclass(frozen=True)
class SpringCandidate:
    entry_index: int
    stiffness: float
    preload: float
    max_abs_net: float

    @property
    def sort_key(self) -> Tuple[float, float, float, int]:
        return (self.max_abs_net, self.stiffness, self.preload, self.entry_index)


@dataclass(frozen=True)
class SpringSelection:
    """Chosen abduction springs and the design they produce"""

    stiffness: float
    preload: float
    per_joint: Dict[str, Tuple[float, float]]
    max_abs_net: float
    passed: bool
    design: HandDesign
    candidates: Tuple[SpringCandidate, ...]


@dataclass(frozen=True)
class ParameterBound:
    path: str
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class SynergyProblem:
    """Target grasps and the design parameters free to fit them"""

    base_design: HandDesign
    target_grasps: Tuple[Dict[str, float], ...]
    parameter_spec: Tuple[ParameterBound, ...]
    weights: Dict[str, float]
    budget: int
    seed: int
    restarts: int = 8
    inner_samples: int = 200


@dataclass(frozen=True)
class GraspResidual:
    distance: float
    motor_angle: float


@dataclass(frozen=True)
class RestartReport:
    restart: int
    evaluations: int
    best_objective: float


@dataclass(frozen=True)
class SynergyResult:
    design: HandDesign
    parameters: Dict[str, float]
    residuals: Tuple[GraspResidual, ...]
    objective: float
    history: Tuple[float, ...]
    evaluations: int
    restarts: Tuple[RestartReport, ...]
