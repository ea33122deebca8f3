"""
Spring force cancellation
Net spring torque reflected to the motor shaft, the stiction band check and
the adduction spring search
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.constants import CancellationConfig, ISSDefaults
from models.domain import (
    HandDesign,
    JointConfiguration,
    QualifiedZoneResult,
    SpringCandidate,
    SpringCatalogEntry,
    SpringDirection,
    SpringSelection,
    TendonRole,
    TorqueProfile,
)
from services.hand_model import validate_design
from services.quasistatic_solver import free_motion
from utils.error_handler import log_execution_time
from utils.exceptions import SolverError, SpringSelectionError
from utils.logger import get_logger

logger = get_logger(__name__)


def _lead_terms(design: HandDesign, role: TendonRole) -> List[Tuple[int, float, float, float, float]]:
    """(joint index, k, preload, direction, r_lead) of every lead stop on tendons of one role"""
    terms = []
    for tendon in design.tendons:
        if tendon.role != role or not tendon.stops:
            continue
        lead = tendon.lead
        joint = design.joint(lead.joint_id)
        direction = -1.0 if design.spring_direction(joint.id) == SpringDirection.DRIVING else 1.0
        terms.append((design.joint_index(joint.id), joint.stiffness, joint.preload, direction, lead.arm))
    return terms


def _reflected_torque(design: HandDesign, angles: np.ndarray, role: TendonRole) -> np.ndarray:
    """Sum of lead-joint spring torques of one tendon role, reflected through r_mot / r_lead"""
    angles = np.atleast_2d(angles)
    total = np.zeros(angles.shape[0])
    radius = design.motor.radius
    for index, stiffness, preload, direction, arm in _lead_terms(design, role):
        deflection = preload + direction * angles[:, index]
        total += stiffness * deflection * radius / arm
    return total


def net_motor_torque(design: HandDesign, config: JointConfiguration) -> Tuple[float, float, float]:
    """
    Spring torques on the motor shaft without contact forces

    Tension is counted once per tendon, at its proximal (lead) joint:
    agonist sums k * d * r_mot / r_lead over TA tendons, antagonist does the
    same over SA tendons, where d is the lead spring's deflection.

    Args:
        design: Validated hand design
        config: Configuration to evaluate

    Returns:
        (agonist, antagonist, net) in N*mm; net = agonist - antagonist
    """
    angles = np.array([config.angles[j] for j in design.joint_ids], dtype=float)
    agonist = float(_reflected_torque(design, angles, TendonRole.TA)[0])
    antagonist = float(_reflected_torque(design, angles, TendonRole.SA)[0])
    return agonist, antagonist, agonist - antagonist


@log_execution_time()
def torque_profile(
    design: HandDesign,
    n_samples: int = CancellationConfig.PROFILE_SAMPLES,
    stiction: Optional[float] = None
) -> TorqueProfile:
    """
    Free-motion torque curves over the full motor range

    Args:
        design: Validated hand design
        n_samples: Uniform samples over [angle_min, angle_max], at least 2
        stiction: Override for the design's motor stiction

    Returns:
        TorqueProfile

    Raises:
        SolverError: annotated with the failing sample index
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    motor = design.motor
    grid = np.linspace(motor.angle_min, motor.angle_max, n_samples)
    trajectory = free_motion(design, grid)

    agonist = _reflected_torque(design, trajectory.angles, TendonRole.TA)
    antagonist = _reflected_torque(design, trajectory.angles, TendonRole.SA)
    return TorqueProfile(
        motor_angles=grid,
        agonist_torque=agonist,
        antagonist_torque=antagonist,
        net_torque=agonist - antagonist,
        stiction=float(motor.stiction if stiction is None else stiction),
    )


def check_qualified_zone(profile: TorqueProfile) -> QualifiedZoneResult:
    """
    Whether |net| stays strictly inside the stiction band

    Returns:
        QualifiedZoneResult; worst_angle is the first sample attaining max |net|
    """
    if len(profile) == 0:
        raise ValueError("profile has no samples")
    magnitude = np.abs(profile.net_torque)
    worst = int(np.argmax(magnitude))
    peak = float(magnitude[worst])
    return QualifiedZoneResult(
        passed=bool(peak < profile.stiction),
        worst_violation=peak - profile.stiction,
        worst_angle=float(profile.motor_angles[worst]),
    )


def backdrive_margin(design: HandDesign, config: JointConfiguration) -> float:
    """
    External torque (reflected to the shaft) the unpowered hand resists

    Negative means the pose is not held with the motor off.
    """
    _, _, net = net_motor_torque(design, config)
    return design.motor.stiction - abs(net)


def backdrive_profile(profile: TorqueProfile) -> np.ndarray:
    """Per-sample backdrive margin, stiction - |net|"""
    return profile.stiction - np.abs(profile.net_torque)


def torque_reduction(profile: TorqueProfile) -> float:
    """
    Peak net torque as a fraction of the peak agonist torque

    Values below 1 quantify how much motor torque the antagonist springs save.
    """
    peak_agonist = float(np.max(np.abs(profile.agonist_torque)))
    if peak_agonist == 0.0:
        return 0.0
    return float(np.max(np.abs(profile.net_torque))) / peak_agonist


def default_spring_catalog() -> List[SpringCatalogEntry]:
    """Synthetic torsion spring catalog the built-in hand's adduction springs come from"""
    return [
        SpringCatalogEntry(stiffness=k, preload_min=lo, preload_max=hi, label=f"TS-{k:g}")
        for k, lo, hi in ISSDefaults.SPRING_CATALOG
    ]


def _adducting_joints(design: HandDesign) -> List[str]:
    joints: List[str] = []
    for tendon in design.tendons:
        if tendon.role == TendonRole.SA:
            joints.extend(tendon.joint_ids)
    return joints


def _with_springs(design: HandDesign, joint_ids: Sequence[str], stiffness: float, preload: float) -> HandDesign:
    for joint_id in joint_ids:
        design = design.with_joint(joint_id, stiffness=stiffness, preload=preload)
    return design


def select_adduction_springs(
    design: HandDesign,
    catalog: Sequence[SpringCatalogEntry],
    preload_grid: float = CancellationConfig.PRELOAD_GRID_RAD,
    n_samples: int = CancellationConfig.PROFILE_SAMPLES,
    stiction: Optional[float] = None,
    max_workers: int = CancellationConfig.MAX_WORKERS
) -> SpringSelection:
    """
    Exhaustive catalog x preload search for the SA joint springs

    Every candidate applies the same stiffness and preload to each SA joint.
    The winner minimizes max |net| over the free-motion profile; ties go to
    lower stiffness, then lower preload, then catalog order.

    Args:
        design: Design with at least one SA tendon
        catalog: Available springs
        preload_grid: Preload step within each entry's range, radians
        n_samples: Torque profile samples per candidate
        stiction: Override for the design's motor stiction
        max_workers: Thread pool size for candidate evaluation

    Returns:
        SpringSelection with the updated design and every evaluated candidate

    Raises:
        SpringSelectionError: empty catalog, no SA tendon, or every candidate infeasible
    """
    if not catalog:
        raise SpringSelectionError("spring catalog is empty")
    joint_ids = _adducting_joints(design)
    if not joint_ids:
        raise SpringSelectionError(f"design {design.name!r} has no SA tendon")

    band = design.motor.stiction if stiction is None else stiction
    grid = [
        (index, entry.stiffness, preload)
        for index, entry in enumerate(catalog)
        for preload in entry.preload_grid(preload_grid)
    ]

    def evaluate(item: Tuple[int, float, float]) -> Optional[SpringCandidate]:
        index, stiffness, preload = item
        candidate = _with_springs(design, joint_ids, stiffness, preload)
        if validate_design(candidate):
            return None
        try:
            profile = torque_profile(candidate, n_samples, band)
        except SolverError:
            return None
        peak = float(np.max(np.abs(profile.net_torque)))
        return SpringCandidate(entry_index=index, stiffness=stiffness, preload=preload, max_abs_net=peak)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            evaluated = list(executor.map(evaluate, grid))
    else:
        evaluated = [evaluate(item) for item in grid]

    candidates = tuple(c for c in evaluated if c is not None)
    if not candidates:
        raise SpringSelectionError(
            f"all {len(grid)} spring candidates are infeasible for design {design.name!r}"
        )

    best = min(candidates, key=lambda c: c.sort_key)
    chosen = _with_springs(design, joint_ids, best.stiffness, best.preload)
    passed = best.max_abs_net < band

    logger.info(
        "spring_selection_complete",
        design=design.name,
        candidates=len(candidates),
        rejected=len(grid) - len(candidates),
        stiffness=best.stiffness,
        preload=best.preload,
        max_abs_net=round(best.max_abs_net, 6),
        passed=passed,
    )
    return SpringSelection(
        stiffness=best.stiffness,
        preload=best.preload,
        per_joint={j: (best.stiffness, best.preload) for j in joint_ids},
        max_abs_net=best.max_abs_net,
        passed=passed,
        design=chosen,
        candidates=candidates,
    )
