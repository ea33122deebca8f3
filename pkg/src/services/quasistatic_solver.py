"""
Quasi-static solver
Equilibrium hand poses under spring potentials, inextensible unilateral tendons,
joint limits and joint-blocking contacts
"""

import itertools
import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config.constants import SolverConfig
from models.domain import (
    ClosingEvent,
    ClosingEventKind,
    ClosingTrace,
    ContactConstraint,
    EquilibriumResult,
    FreeMotionTrajectory,
    HandDesign,
    JointConfiguration,
    SpringDirection,
    TendonRoute,
    TendonStatus,
)
from utils.error_handler import ErrorContext
from utils.exceptions import (
    DegenerateDesignError,
    InfeasibleConfigurationError,
    InfeasibleConstraintError,
    SolverError,
)

logger = logging.getLogger(__name__)

ContactSchedule = Union[
    Mapping[float, Union[ContactConstraint, Iterable[ContactConstraint]]],
    Iterable[Tuple[float, ContactConstraint]],
]


class _DesignArrays:
    """Joint-ordered numeric view of a design"""

    def __init__(self, design: HandDesign):
        joints = design.joints
        self.design = design
        self.stiffness = np.array([j.stiffness for j in joints], dtype=float)
        self.preload = np.array([j.preload for j in joints], dtype=float)
        # +1 restoring (pushes toward angle_min), -1 driving
        self.direction = np.array([
            1.0 if design.spring_direction(j.id) == SpringDirection.RESTORING else -1.0
            for j in joints
        ])
        # Unconstrained spring equilibrium angle
        self.rest = -self.direction * self.preload
        self.lower = np.array([j.angle_min for j in joints], dtype=float)
        self.upper = np.array([j.angle_max for j in joints], dtype=float)
        self.reference = np.array(
            [design.reference_pose.angles[j.id] for j in joints], dtype=float
        )

        # arms[i, t] = sign * r of joint i on tendon t
        self.arms = np.zeros((len(joints), len(design.tendons)))
        for t, tendon in enumerate(design.tendons):
            for stop in tendon.stops:
                self.arms[design.joint_index(stop.joint_id), t] = stop.sign * stop.arm
        self.shaft = np.array(
            [t.winding_sign * design.motor.radius for t in design.tendons], dtype=float
        )
        self.motor_reference = design.reference_pose.motor_angle

    def required_length(self, motor_angles: np.ndarray) -> np.ndarray:
        """Tendon length the motor has taken up relative to the reference pose, (n, tendons)"""
        return np.outer(motor_angles - self.motor_reference, self.shaft)

    def energy(self, angles: np.ndarray) -> np.ndarray:
        deflection = self.preload + self.direction * angles
        return 0.5 * np.sum(self.stiffness * deflection ** 2, axis=-1)

    def reactions(self, angles: np.ndarray, tensions: np.ndarray) -> np.ndarray:
        """Bound reaction torque per joint, positive toward the grasp direction"""
        return self.stiffness * (angles - self.rest) - tensions @ self.arms.T


class _TendonChain:
    """
    One tendon and the joints it passes

    With diagonal stiffness and box bounds, each joint angle is a clipped
    affine function of the tendon tension, so the length the joints release
    is piecewise linear and nondecreasing in tension. Equilibrium tension is
    found by walking that function's breakpoints.
    """

    def __init__(self, arrays: _DesignArrays, tendon: TendonRoute, upper: np.ndarray, column: int):
        design = arrays.design
        self.tendon = tendon
        self.column = column
        self.index = np.array([design.joint_index(s.joint_id) for s in tendon.stops], dtype=int)
        self.arm = arrays.arms[self.index, column]
        self.stiffness = arrays.stiffness[self.index]
        self.rest = arrays.rest[self.index]
        self.lower = arrays.lower[self.index]
        self.upper = upper[self.index]
        self.reference = arrays.reference[self.index]
        self.compliance = self.arm / self.stiffness

        crossings = np.concatenate([
            (self.lower - self.rest) / self.compliance,
            (self.upper - self.rest) / self.compliance,
        ])
        self.tension_knots = np.unique(np.concatenate([[0.0], crossings[crossings > 0.0]]))
        self.length_knots = self.available_length(self.tension_knots)

    def angles_at(self, tension: np.ndarray) -> np.ndarray:
        return np.clip(self.rest + np.outer(tension, self.compliance), self.lower, self.upper)

    def available_length(self, tension: np.ndarray) -> np.ndarray:
        return (self.angles_at(tension) - self.reference) @ self.arm

    def solve(self, required: np.ndarray, tolerance: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Least tension that releases the required length

        Args:
            required: Length the motor demands from this tendon, shape (n,)
            tolerance: Slack tolerance, mm

        Returns:
            (angles (n, stops), tension (n,), slack (n,))
        """
        g = self.length_knots
        knots = self.tension_knots
        tension = np.zeros_like(required)

        short = required > g[-1] + tolerance
        if np.any(short):
            first = int(np.argmax(short))
            raise InfeasibleConfigurationError(
                f"tendon {self.tendon.id!r} would have to stretch by "
                f"{required[first] - g[-1]:.6g} mm",
                sample_index=first if len(required) > 1 else None
            )

        loaded = required > g[0]
        if np.any(loaded):
            demand = np.minimum(required[loaded], g[-1])
            upper = np.clip(np.searchsorted(g, demand, side='left'), 1, len(g) - 1)
            lower = upper - 1
            rise = g[upper] - g[lower]
            fraction = np.divide(
                demand - g[lower], rise, out=np.ones_like(demand), where=rise > 0.0
            )
            tension[loaded] = knots[lower] + fraction * (knots[upper] - knots[lower])

        angles = self.angles_at(tension)
        slack = (angles - self.reference) @ self.arm - required
        slack = np.where(slack < 0.0, 0.0, slack)
        return angles, tension, slack


def _contact_caps(design: HandDesign, contacts: Sequence[ContactConstraint]) -> Dict[str, float]:
    caps: Dict[str, float] = {}
    for contact in contacts:
        if not design.has_joint(contact.joint_id):
            raise InfeasibleConstraintError(f"contact references unknown joint {contact.joint_id!r}")
        joint = design.joint(contact.joint_id)
        if contact.blocked_at < joint.angle_min:
            raise InfeasibleConstraintError(
                f"contact on {joint.id} blocks at {contact.blocked_at}, "
                f"below the joint minimum {joint.angle_min}"
            )
        caps[joint.id] = min(caps.get(joint.id, np.inf), contact.blocked_at)
    return caps


def _check_stiffness(design: HandDesign) -> None:
    for joint in design.joints:
        if not joint.stiffness > 0.0:
            raise DegenerateDesignError(
                f"joint {joint.id} has stiffness {joint.stiffness}; equilibrium is not unique"
            )


def _check_motor_angles(design: HandDesign, motor_angles: np.ndarray) -> None:
    motor = design.motor
    slack = SolverConfig.LIMIT_TOLERANCE_RAD
    outside = (motor_angles < motor.angle_min - slack) | (motor_angles > motor.angle_max + slack)
    if np.any(outside):
        first = int(np.argmax(outside))
        raise InfeasibleConfigurationError(
            f"motor angle {motor_angles[first]} outside [{motor.angle_min}, {motor.angle_max}]",
            sample_index=first if len(motor_angles) > 1 else None
        )


class EquilibriumBatch:
    """
    Reusable equilibrium solver for one design under one contact set

    Builds the per-tendon breakpoint tables once; solve() then maps any
    array of motor angles to equilibria with a handful of vector operations.

    Usage:
        batch = EquilibriumBatch(design)
        angles, tensions, slacks = batch.solve(np.linspace(0.0, 2.0, 200))
    """

    def __init__(
        self,
        design: HandDesign,
        caps: Optional[Mapping[str, float]] = None,
        tolerance: float = SolverConfig.SLACK_TOLERANCE_MM
    ):
        _check_stiffness(design)
        self.design = design
        self.tolerance = tolerance
        self.arrays = _DesignArrays(design)
        self.upper = self.arrays.upper.copy()
        for joint_id, cap in (caps or {}).items():
            index = design.joint_index(joint_id)
            self.upper[index] = min(self.upper[index], cap)
        self.resting = np.clip(self.arrays.rest, self.arrays.lower, self.upper)
        self.chains = [
            _TendonChain(self.arrays, tendon, self.upper, column)
            for column, tendon in enumerate(design.tendons)
        ]

    def solve(self, motor_angles: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Equilibria at many motor angles

        Returns:
            (angles (n, joints), tensions (n, tendons), slacks (n, tendons))
        """
        motor_angles = np.asarray(motor_angles, dtype=float)
        _check_motor_angles(self.design, motor_angles)

        n = len(motor_angles)
        angles = np.tile(self.resting, (n, 1))
        tensions = np.zeros((n, len(self.chains)))
        slacks = np.zeros((n, len(self.chains)))
        required = self.arrays.required_length(motor_angles)

        for chain in self.chains:
            chain_angles, tension, slack = chain.solve(required[:, chain.column], self.tolerance)
            angles[:, chain.index] = chain_angles
            tensions[:, chain.column] = tension
            slacks[:, chain.column] = slack
        return angles, tensions, slacks

    def angles(self, motor_angles: np.ndarray) -> np.ndarray:
        return self.solve(motor_angles)[0]


def _assemble(
    design: HandDesign,
    arrays: _DesignArrays,
    motor_angle: float,
    angles: np.ndarray,
    tensions: np.ndarray,
    slacks: np.ndarray,
    caps: Mapping[str, float],
    tolerance: float = SolverConfig.SLACK_TOLERANCE_MM
) -> EquilibriumResult:
    reactions = arrays.reactions(angles, tensions)
    contact_torques: Dict[str, float] = {}
    limit_torques: Dict[str, float] = {}
    edge = SolverConfig.LIMIT_TOLERANCE_RAD

    for i, joint in enumerate(design.joints):
        angle = angles[i]
        cap = caps.get(joint.id)
        if cap is not None and cap <= joint.angle_max and abs(angle - cap) <= edge:
            contact_torques[joint.id] = max(0.0, float(-reactions[i]))
        elif abs(angle - joint.angle_min) <= edge or abs(angle - joint.angle_max) <= edge:
            limit_torques[joint.id] = float(reactions[i])

    statuses = tuple(
        TendonStatus(
            tendon_id=tendon.id,
            tension=float(tensions[t]),
            slack=float(slacks[t]),
            taut=bool(slacks[t] < tolerance),
        )
        for t, tendon in enumerate(design.tendons)
    )
    configuration = JointConfiguration(
        angles={j.id: float(a) for j, a in zip(design.joints, angles)},
        motor_angle=float(motor_angle)
    )
    return EquilibriumResult(
        configuration=configuration,
        tendon_statuses=statuses,
        contact_torques=contact_torques,
        energy=float(arrays.energy(angles)),
        limit_torques=limit_torques,
    )


def tendon_slack(
    design: HandDesign,
    config: JointConfiguration,
    tendon_id: str,
    tolerance: float = SolverConfig.SLACK_TOLERANCE_MM
) -> float:
    """
    Free tendon length at a configuration

    slack = sum(sign * r * (theta - theta_ref)) - winding * r_mot * (phi - phi_ref)

    Args:
        design: Validated hand design
        config: Configuration to evaluate
        tendon_id: Tendon id

    Returns:
        Nonnegative slack in mm

    Raises:
        InfeasibleConfigurationError: the tendon would have to stretch
    """
    tendon = design.tendon(tendon_id)
    reference = design.reference_pose
    released = sum(
        stop.sign * stop.arm * (config.angles[stop.joint_id] - reference.angles[stop.joint_id])
        for stop in tendon.stops
    )
    taken = tendon.winding_sign * design.motor.radius * (config.motor_angle - reference.motor_angle)
    raw = released - taken
    if raw < -tolerance:
        raise InfeasibleConfigurationError(
            f"tendon {tendon_id!r} stretched by {-raw:.6g} mm at this configuration"
        )
    return max(raw, 0.0)


def potential_energy(design: HandDesign, config: JointConfiguration) -> float:
    """
    Stored spring energy, sum of 1/2 k d^2 over joints

    d is the spring deflection: theta + preload for restoring springs and
    preload - theta for driving springs. Independent of motor angle.
    """
    total = 0.0
    for joint in design.joints:
        angle = config.angles[joint.id]
        if design.spring_direction(joint.id) == SpringDirection.DRIVING:
            deflection = joint.preload - angle
        else:
            deflection = joint.preload + angle
        total += 0.5 * joint.stiffness * deflection ** 2
    return total


def solve_pose(
    design: HandDesign,
    motor_angle: float,
    contacts: Sequence[ContactConstraint] = (),
    tolerance: float = SolverConfig.SLACK_TOLERANCE_MM
) -> EquilibriumResult:
    """
    Minimum-energy pose at one motor angle

    Minimizes potential_energy subject to nonnegative tendon slack, contact
    caps and joint limits. Tensions and contact torques are the multipliers
    of the active constraints.

    Args:
        design: Validated hand design
        motor_angle: Motor angle, radians
        contacts: Joint-blocking contacts (upper caps)

    Returns:
        EquilibriumResult

    Raises:
        InfeasibleConstraintError: contact below a joint minimum or on an unknown joint
        InfeasibleConfigurationError: a tendon would have to stretch
        DegenerateDesignError: a joint has zero stiffness
    """
    caps = _contact_caps(design, contacts)
    phi = np.array([float(motor_angle)])
    batch = EquilibriumBatch(design, caps, tolerance)
    angles, tensions, slacks = batch.solve(phi)
    return _assemble(design, batch.arrays, motor_angle, angles[0], tensions[0], slacks[0], caps, tolerance)


def free_motion(
    design: HandDesign,
    motor_angles: Sequence[float],
    tolerance: float = SolverConfig.SLACK_TOLERANCE_MM
) -> FreeMotionTrajectory:
    """
    Vectorized no-contact equilibria over a motor-angle grid

    Args:
        design: Validated hand design
        motor_angles: Motor angles, radians

    Returns:
        FreeMotionTrajectory with per-sample angles, tensions and slacks
    """
    phi = np.asarray(motor_angles, dtype=float)
    angles, tensions, slacks = EquilibriumBatch(design, tolerance=tolerance).solve(phi)
    return FreeMotionTrajectory(
        motor_angles=phi,
        angles=angles,
        tensions=tensions,
        slacks=slacks,
        joint_ids=design.joint_ids,
        tendon_ids=design.tendon_ids,
    )


def kkt_residuals(
    design: HandDesign,
    result: EquilibriumResult,
    contacts: Sequence[ContactConstraint] = ()
) -> Dict[str, float]:
    """
    Stationarity residual of every joint not held by a bound or contact

    residual = dV/dtheta - sum(tension * sign * r), N*mm
    """
    caps = _contact_caps(design, contacts)
    arrays = _DesignArrays(design)
    angles = np.array([result.angle(j) for j in design.joint_ids])
    tensions = np.array([s.tension for s in result.tendon_statuses])
    reactions = arrays.reactions(angles, tensions)
    edge = SolverConfig.LIMIT_TOLERANCE_RAD

    residuals: Dict[str, float] = {}
    for i, joint in enumerate(design.joints):
        bounds = [joint.angle_min, joint.angle_max]
        if joint.id in caps:
            bounds.append(caps[joint.id])
        if any(abs(angles[i] - b) <= edge for b in bounds):
            continue
        residuals[joint.id] = float(reactions[i])
    return residuals


def _oracle_constraints(
    arrays: _DesignArrays,
    upper: np.ndarray,
    motor_angle: float
) -> Tuple[np.ndarray, np.ndarray, List[Tuple[str, int]]]:
    """Rows c, rhs d of every constraint c . theta >= d, with (kind, index) labels"""
    n = len(arrays.lower)
    rows: List[np.ndarray] = []
    rhs: List[float] = []
    labels: List[Tuple[str, int]] = []

    required = arrays.required_length(np.array([motor_angle]))[0]
    for t in range(arrays.arms.shape[1]):
        column = arrays.arms[:, t]
        rows.append(column)
        rhs.append(required[t] + column @ arrays.reference)
        labels.append(('tendon', t))
    for i in range(n):
        unit = np.zeros(n)
        unit[i] = 1.0
        rows.append(unit)
        rhs.append(arrays.lower[i])
        labels.append(('lower', i))
        rows.append(-unit)
        rhs.append(-upper[i])
        labels.append(('upper', i))
    return np.array(rows), np.array(rhs), labels


def _oracle_faces(arrays: _DesignArrays) -> List[Tuple[Tuple[int, int], ...]]:
    """
    Every face the grid oracle searches, as (tendon column, solved joint) pairs

    The empty face (all tendons as inequalities) comes first so later faces
    start with a feasible reference energy.
    """
    options = []
    for column in range(arrays.arms.shape[1]):
        support = np.flatnonzero(arrays.arms[:, column])
        options.append([None] + [(column, int(joint)) for joint in support])
    return [
        tuple(pair for pair in combination if pair is not None)
        for combination in itertools.product(*options)
    ]


class _OracleFace:
    """
    One face of the feasible set, gridded by the oracle

    Each equality holds its tendon exactly taut and solves the named joint
    from the other joints on that tendon; all remaining joints are gridded.
    Tendons without an equality stay inequalities.
    """

    def __init__(
        self,
        arrays: _DesignArrays,
        upper: np.ndarray,
        rhs: np.ndarray,
        equalities: Tuple[Tuple[int, int], ...]
    ):
        self.arrays = arrays
        self.lower = arrays.lower
        self.upper = upper
        self.rhs = rhs
        self.equalities = equalities
        self.solved = [joint for _, joint in equalities]
        self.free = np.array([i for i in range(len(upper)) if i not in self.solved], dtype=int)

        # Energy Hessian in the gridded joints, N*mm/rad^2
        position = {int(joint): p for p, joint in enumerate(self.free)}
        hessian = np.diag(arrays.stiffness[self.free])
        for column, joint in equalities:
            arm = arrays.arms[:, column]
            others = [int(i) for i in np.flatnonzero(arm) if i != joint]
            if not others:
                continue
            slots = [position[i] for i in others]
            coupling = arrays.stiffness[joint] / arm[joint] ** 2
            hessian[np.ix_(slots, slots)] += coupling * np.outer(arm[others], arm[others])
        self.coupling = np.abs(hessian)

    def complete(self, nodes: np.ndarray) -> np.ndarray:
        """Full joint angles (m, joints) for gridded nodes (m, free)"""
        angles = np.empty((len(nodes), len(self.upper)))
        angles[:, self.free] = nodes
        for column, joint in self.equalities:
            arm = self.arrays.arms[:, column]
            others = np.flatnonzero(arm)
            others = others[others != joint]
            angles[:, joint] = (self.rhs[column] - angles[:, others] @ arm[others]) / arm[joint]
        return angles

    def violations(self, angles: np.ndarray) -> np.ndarray:
        """Violation of every tendon and of every solved joint's bounds, (m, checks)"""
        parts = [np.maximum(self.rhs - angles @ self.arrays.arms, 0.0)]
        if self.solved:
            solved = angles[:, self.solved]
            parts.append(
                np.maximum(self.lower[self.solved] - solved, 0.0)
                + np.maximum(solved - self.upper[self.solved], 0.0)
            )
        return np.hstack(parts)

    def rounding_margins(self, spacing: np.ndarray) -> np.ndarray:
        """Largest violation a one-step move per gridded joint can cause, per check"""
        step = np.zeros(len(self.upper))
        step[self.free] = spacing
        arms = self.arrays.arms
        margins = [np.abs(arms).T @ step]
        for column, joint in self.equalities:
            margins.append(np.array([np.abs(arms[:, column]) @ step / abs(arms[joint, column])]))
        return np.concatenate(margins)

    def rounding_bound(self, spacing: np.ndarray) -> float:
        """Energy excess of the node nearest this face's stationary point"""
        half = 0.5 * spacing
        return 0.5 * float(half @ self.coupling @ half)


def _grid_nodes(lo: np.ndarray, hi: np.ndarray, counts: np.ndarray) -> np.ndarray:
    if len(lo) == 0:
        return np.zeros((1, 0))
    axes = [np.linspace(a, b, int(c)) for a, b, c in zip(lo, hi, counts)]
    return np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, len(lo))


def _search_face(
    face: _OracleFace,
    target: float,
    reference_energy: float
) -> Tuple[float, Optional[np.ndarray]]:
    """
    Zoom a grid over one face until its rounding bound drops below target

    Each level keeps every node that could still be the one nearest the
    face's stationary point: within one grid step of feasibility and within
    twice the rounding bound of the best feasible energy seen so far. The
    next box is that band's bounding box widened by one step.

    Returns:
        (best feasible energy, its joint angles), or (inf, None)
    """
    free = face.free
    lo, hi = face.lower[free].copy(), face.upper[free].copy()
    best_energy, best_angles = np.inf, None
    tolerance = SolverConfig.ORACLE_FEASIBILITY_TOLERANCE

    for _ in range(SolverConfig.ORACLE_MAX_LEVELS):
        widths = hi - lo
        moving = widths > 0.0
        dimensions = max(1, int(np.count_nonzero(moving)))
        per_axis = max(3, int(SolverConfig.ORACLE_SAMPLES_PER_LEVEL ** (1.0 / dimensions)))
        counts = np.where(moving, per_axis, 1)
        spacing = np.where(moving, widths / np.maximum(counts - 1, 1), 0.0)

        nodes = _grid_nodes(lo, hi, counts)
        angles = face.complete(nodes)
        energies = face.arrays.energy(angles)
        violation = face.violations(angles)

        feasible = np.all(violation <= tolerance, axis=1)
        if np.any(feasible):
            candidates = np.flatnonzero(feasible)
            winner = candidates[int(np.argmin(energies[candidates]))]
            if energies[winner] < best_energy:
                best_energy, best_angles = float(energies[winner]), angles[winner].copy()

        bound = face.rounding_bound(spacing)
        if bound <= target or not np.any(moving):
            break

        band = np.all(violation <= face.rounding_margins(spacing) + tolerance, axis=1)
        reference = min(reference_energy, best_energy)
        if np.isfinite(reference):
            band &= energies <= reference + 2.0 * bound + SolverConfig.ORACLE_ENERGY_PAD
        if not np.any(band):
            break

        new_lo = np.maximum(face.lower[free], nodes[band].min(axis=0) - spacing)
        new_hi = np.minimum(face.upper[free], nodes[band].max(axis=0) + spacing)
        if np.all(new_hi - new_lo >= SolverConfig.ORACLE_STALL_RATIO * widths):
            break
        lo, hi = new_lo, new_hi

    return best_energy, best_angles


def _polish_active_set(
    arrays: _DesignArrays,
    upper: np.ndarray,
    motor_angle: float,
    angles: np.ndarray,
    resolution: float
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    Exact KKT point of the constraints a grid sample leaves nearly active

    A constraint counts as nearly active when one resolution step per joint
    could close its margin; of a joint's two bounds only the nearer one is
    taken. Returns None unless the point is feasible with nonnegative
    multipliers, so the caller keeps the grid sample.
    """
    rows, rhs, labels = _oracle_constraints(arrays, upper, motor_angle)
    n = len(angles)
    margin = rows @ angles - rhs
    near = margin <= np.abs(rows) @ np.full(n, resolution)

    tendons = len(rhs) - 2 * n
    for i in range(n):
        low, high = tendons + 2 * i, tendons + 2 * i + 1
        if near[low] and near[high]:
            near[high if margin[high] > margin[low] else low] = False

    active = np.flatnonzero(near)
    size = len(active)
    matrix = rows[active]
    if size and np.linalg.matrix_rank(matrix) < size:
        return None

    hessian = np.diag(arrays.stiffness)
    kkt = np.zeros((n + size, n + size))
    kkt[:n, :n] = hessian
    kkt[:n, n:] = -matrix.T
    kkt[n:, :n] = matrix
    try:
        solution = np.linalg.solve(kkt, np.concatenate([hessian @ arrays.rest, rhs[active]]))
    except np.linalg.LinAlgError:
        return None

    point, multipliers = solution[:n], solution[n:]
    if np.any(rows @ point - rhs < -SolverConfig.ORACLE_FEASIBILITY_TOLERANCE):
        return None
    if np.any(multipliers < -SolverConfig.KKT_TOLERANCE):
        return None
    if arrays.energy(point) > arrays.energy(angles) + SolverConfig.ENERGY_TOLERANCE:
        return None

    tensions = np.zeros(arrays.arms.shape[1])
    for position, constraint in enumerate(active):
        kind, index = labels[constraint]
        if kind == 'tendon':
            tensions[index] = max(0.0, float(multipliers[position]))
    return point, tensions


def grid_search_pose(
    design: HandDesign,
    motor_angle: float,
    contacts: Sequence[ContactConstraint] = (),
    resolution: float = SolverConfig.ORACLE_RESOLUTION_RAD,
    refine: bool = True,
    tolerance: float = SolverConfig.SLACK_TOLERANCE_MM
) -> EquilibriumResult:
    """
    Brute-force equilibrium oracle for designs with at most three joints

    Grids every face of the feasible set: all tendons as inequalities, and
    each tendon held taut with one of its joints solved from the others.
    Each face is zoomed until a node provably lies within the energy of the
    true minimizer that keeps every joint within resolution / 2 of it. The
    lowest-energy feasible node over all faces is returned.

    Args:
        design: Design with at most three joints
        motor_angle: Motor angle, radians
        contacts: Joint-blocking contacts
        resolution: Required joint-angle accuracy of the grid answer, radians
        refine: Polish the answer with the KKT solve of its nearly active
            constraints; tensions otherwise come from the free joints

    Returns:
        EquilibriumResult at the best point found

    Raises:
        SolverError: more than three joints
        InfeasibleConstraintError: no feasible sample
    """
    n = len(design.joints)
    if n > SolverConfig.ORACLE_MAX_JOINTS:
        raise SolverError(f"grid oracle supports at most {SolverConfig.ORACLE_MAX_JOINTS} joints, got {n}")
    caps = _contact_caps(design, contacts)
    _check_stiffness(design)
    _check_motor_angles(design, np.array([float(motor_angle)]))

    arrays = _DesignArrays(design)
    upper = arrays.upper.copy()
    for joint_id, cap in caps.items():
        index = design.joint_index(joint_id)
        upper[index] = min(upper[index], cap)

    required = arrays.required_length(np.array([float(motor_angle)]))[0]
    rhs = required + arrays.reference @ arrays.arms
    # Energy slack that keeps every joint within resolution / 2 of the minimizer
    target = float(np.min(arrays.stiffness)) * resolution ** 2 / 32.0

    best_energy, best_angles = np.inf, None
    for equalities in _oracle_faces(arrays):
        face = _OracleFace(arrays, upper, rhs, equalities)
        energy, angles = _search_face(face, target, best_energy)
        if angles is not None and energy < best_energy:
            best_energy, best_angles = energy, angles
    if best_angles is None:
        raise InfeasibleConstraintError(f"no feasible sample at motor angle {motor_angle}")

    tensions = _stationary_tensions(arrays, best_angles, upper)
    if refine:
        polished = _polish_active_set(arrays, upper, float(motor_angle), best_angles, resolution)
        if polished is not None:
            best_angles, tensions = polished
        else:
            logger.debug(f"active-set polish rejected at motor angle {motor_angle}; keeping grid sample")

    slacks = np.maximum((best_angles - arrays.reference) @ arrays.arms - required, 0.0)
    return _assemble(design, arrays, float(motor_angle), best_angles, tensions, slacks, caps, tolerance)


def _stationary_tensions(arrays: _DesignArrays, angles: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Tension estimate from joints strictly inside their bounds"""
    tensions = np.zeros(arrays.arms.shape[1])
    free = (angles > arrays.lower + 1e-9) & (angles < upper - 1e-9)
    spring = arrays.stiffness * (angles - arrays.rest)
    for t in range(len(tensions)):
        on_tendon = (arrays.arms[:, t] != 0.0) & free
        if np.any(on_tendon):
            tensions[t] = max(0.0, float(np.mean(spring[on_tendon] / arrays.arms[on_tendon, t])))
    return tensions


def _schedule_items(schedule: Optional[ContactSchedule]) -> List[Tuple[float, ContactConstraint]]:
    if not schedule:
        return []
    items: List[Tuple[float, ContactConstraint]] = []
    pairs = schedule.items() if isinstance(schedule, Mapping) else schedule
    for angle, value in pairs:
        if isinstance(value, ContactConstraint):
            items.append((float(angle), value))
        else:
            items.extend((float(angle), contact) for contact in value)
    items.sort(key=lambda item: item[0])
    return items


def simulate_closing(
    design: HandDesign,
    motor_angles: Sequence[float],
    contact_schedule: Optional[ContactSchedule] = None,
    tolerance: float = SolverConfig.SLACK_TOLERANCE_MM
) -> ClosingTrace:
    """
    Close the hand through increasing motor angles

    A scheduled contact activates at the first sample whose motor angle
    reaches its key and persists for the rest of the closing.

    Args:
        design: Validated hand design
        motor_angles: Strictly increasing motor angles
        contact_schedule: motor angle -> contact(s), or (angle, contact) pairs

    Returns:
        ClosingTrace with per-sample equilibria and the event log

    Raises:
        SolverError: non-increasing motor angles, or a solver failure
            annotated with its sample index
    """
    angles = [float(a) for a in motor_angles]
    if any(b <= a for a, b in zip(angles, angles[1:])):
        raise SolverError("motor angles must be strictly increasing")

    pending = _schedule_items(contact_schedule)
    active: List[ContactConstraint] = []
    trace = ClosingTrace()
    previous: Optional[EquilibriumResult] = None
    edge = SolverConfig.LIMIT_TOLERANCE_RAD

    for index, phi in enumerate(angles):
        while pending and pending[0][0] <= phi + edge:
            _, contact = pending.pop(0)
            active.append(contact)
            trace.events.append(ClosingEvent(phi, ClosingEventKind.CONTACT, contact.joint_id, index))

        with ErrorContext("simulate_closing", sample_index=index, motor_angle=phi):
            result = solve_pose(design, phi, active, tolerance)

        if previous is not None:
            for before, now in zip(previous.tendon_statuses, result.tendon_statuses):
                if before.taut and not now.taut:
                    trace.events.append(
                        ClosingEvent(phi, ClosingEventKind.TENDON_SLACK, now.tendon_id, index)
                    )
            for joint in design.joints:
                was, now_angle = previous.angle(joint.id), result.angle(joint.id)
                for limit in (joint.angle_min, joint.angle_max):
                    if abs(now_angle - limit) <= edge and abs(was - limit) > edge:
                        trace.events.append(
                            ClosingEvent(phi, ClosingEventKind.JOINT_LIMIT, joint.id, index)
                        )

        trace.samples.append((phi, result))
        previous = result

    logger.debug(f"Closing trace: {len(trace.samples)} samples, {len(trace.events)} events")
    return trace
