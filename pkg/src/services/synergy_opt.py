"""
Synergy fitting
Shape the single-motor posture manifold to pass close to target grasps
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import Bounds, minimize

from config.constants import SynergyConfig
from models.domain import (
    GraspResidual,
    HandDesign,
    JointConfiguration,
    ParameterBound,
    RestartReport,
    SpringDirection,
    SynergyProblem,
    SynergyResult,
    Violation,
)
from services.hand_model import validate_design
from services.quasistatic_solver import EquilibriumBatch, free_motion
from utils.error_handler import log_execution_time
from utils.exceptions import DesignValidationError, OptimizationError, SolverError
from utils.logger import get_logger

logger = get_logger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


# Parameter paths

def _split_path(path: str) -> List[str]:
    parts = path.split('.')
    valid = (
        (len(parts) == 3 and parts[0] == 'joint' and parts[2] in ('stiffness', 'preload'))
        or (len(parts) == 4 and parts[0] == 'tendon' and parts[3] == 'arm')
        or parts == ['motor', 'radius']
    )
    if not valid:
        raise KeyError(f"unrecognized parameter path {path!r}")
    return parts


def read_parameter(design: HandDesign, path: str) -> float:
    """
    Current value of a design parameter

    Paths: joint.<id>.stiffness, joint.<id>.preload,
    tendon.<id>.<joint id>.arm, motor.radius

    Raises:
        KeyError: malformed path or unknown joint/tendon/stop
    """
    parts = _split_path(path)
    if parts[0] == 'motor':
        return design.motor.radius
    if parts[0] == 'joint':
        if not design.has_joint(parts[1]):
            raise KeyError(f"unknown joint in {path!r}")
        return getattr(design.joint(parts[1]), parts[2])
    tendon = design.tendon(parts[1])
    for stop in tendon.stops:
        if stop.joint_id == parts[2]:
            return stop.arm
    raise KeyError(f"tendon {parts[1]!r} has no stop at {parts[2]!r}")


def apply_parameters(design: HandDesign, paths: Sequence[str], values: Sequence[float]) -> HandDesign:
    """Return a copy of design with each path set to its value"""
    for path, value in zip(paths, values):
        parts = _split_path(path)
        value = float(value)
        if parts[0] == 'motor':
            design = design.with_motor(radius=value)
        elif parts[0] == 'joint':
            design = design.with_joint(parts[1], **{parts[2]: value})
        else:
            design = design.with_stop_arm(parts[1], parts[2], value)
    return design


def validate_problem(problem: SynergyProblem) -> List[Violation]:
    """Problem-level rules on top of the base design's own invariants"""
    violations: List[Violation] = []
    design = problem.base_design

    for i, bound in enumerate(problem.parameter_spec):
        path = f"parameters[{i}]"
        try:
            read_parameter(design, bound.path)
        except KeyError as e:
            violations.append(Violation(f"{path}.path", 'known-parameter', str(e).strip("'\"")))
            continue
        if not (math.isfinite(bound.lower) and math.isfinite(bound.upper)):
            violations.append(Violation(path, 'finite-bounds', f"{bound.path} bounds must be finite"))
        elif not bound.lower < bound.upper:
            violations.append(Violation(path, 'ordered-range',
                                        f"lower {bound.lower} must be < upper {bound.upper}"))
        elif not bound.lower <= read_parameter(design, bound.path) <= bound.upper:
            violations.append(Violation(path, 'base-within-bounds',
                                        f"base value {read_parameter(design, bound.path)} of {bound.path} "
                                        f"outside [{bound.lower}, {bound.upper}]"))
        parts = bound.path.split('.')
        if parts[0] == 'joint' and design.spring_direction(parts[1]) == SpringDirection.DRIVING:
            violations.append(Violation(f"{path}.path", 'no-sa-springs',
                                        f"{bound.path}: SA springs do not shape the posture manifold"))

    for g, target in enumerate(problem.target_grasps):
        for joint in design.joints:
            where = f"targets[{g}].{joint.id}"
            if joint.id not in target:
                violations.append(Violation(where, 'complete-pose', f"target is missing joint {joint.id!r}"))
            elif not joint.angle_min <= target[joint.id] <= joint.angle_max:
                violations.append(Violation(where, 'within-limits',
                                            f"{target[joint.id]} outside [{joint.angle_min}, {joint.angle_max}]"))

    for joint_id, weight in problem.weights.items():
        if not design.has_joint(joint_id):
            violations.append(Violation(f"weights.{joint_id}", 'joint-exists', f"unknown joint {joint_id!r}"))
        elif weight < 0:
            violations.append(Violation(f"weights.{joint_id}", 'nonnegative', f"weight must be >= 0, got {weight}"))

    if problem.budget < 1:
        violations.append(Violation('budget', 'positive', f"budget must be >= 1, got {problem.budget}"))
    if problem.restarts < 1:
        violations.append(Violation('restarts', 'positive', f"restarts must be >= 1, got {problem.restarts}"))
    return violations


# Manifold sampling and distance

def trajectory_postures(design: HandDesign, n_samples: int) -> List[JointConfiguration]:
    """
    Free-motion postures at uniform motor-angle samples

    This is the hand's one-dimensional posture manifold parameterized by
    motor angle.
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    grid = np.linspace(design.motor.angle_min, design.motor.angle_max, n_samples)
    trajectory = free_motion(design, grid)
    return [trajectory.configuration(i) for i in range(len(trajectory))]


def _weight_vector(design: HandDesign, weights: Optional[Mapping[str, float]]) -> np.ndarray:
    weights = weights or {}
    return np.array([float(weights.get(j, 1.0)) for j in design.joint_ids])


def _target_matrix(design: HandDesign, targets: Sequence[Mapping[str, float]]) -> np.ndarray:
    return np.array([[float(t[j]) for j in design.joint_ids] for t in targets]).reshape(len(targets), -1)


def _golden_section(
    distance,
    lower: np.ndarray,
    upper: np.ndarray,
    tolerance: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Golden-section search run on every bracket at once

    Args:
        distance: f(motor_angles (G,)) -> (G,) distances, one per bracket
        lower, upper: Bracket ends per target
        tolerance: Final bracket width

    Returns:
        (best motor angle, distance) per bracket
    """
    a, b = lower.copy(), upper.copy()
    h = b - a
    widest = float(np.max(h)) if len(h) else 0.0
    if widest <= tolerance:
        middle = 0.5 * (a + b)
        return middle, distance(middle)

    # Required steps to achieve tolerance
    steps = int(math.ceil(math.log(tolerance / widest) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = distance(c)
    yd = distance(d)

    for _ in range(steps - 1):
        left = yc < yd
        # left: keep [a, d]; otherwise keep [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        h = INV_PHI * h
        new_c = np.where(left, a + INV_PHI_SQUARE * h, d)
        new_d = np.where(left, c, a + INV_PHI * h)
        trial = np.where(left, new_c, new_d)
        value = distance(trial)
        yc, yd = np.where(left, value, yd), np.where(left, yc, value)
        c, d = new_c, new_d

    best = np.where(yc < yd, c, d)
    return best, np.minimum(yc, yd)


def _grasp_residuals(
    batch: EquilibriumBatch,
    targets: np.ndarray,
    weights: np.ndarray,
    n_samples: int,
    tolerance: float
) -> List[GraspResidual]:
    design = batch.design
    if len(targets) == 0:
        return []
    grid = np.linspace(design.motor.angle_min, design.motor.angle_max, n_samples)
    postures = batch.angles(grid)

    # dense[g, s]: weighted distance of target g to posture s
    diff = (postures[None, :, :] - targets[:, None, :]) * weights
    dense = np.sqrt(np.sum(diff ** 2, axis=2))
    nearest = np.argmin(dense, axis=1)
    sampled = dense[np.arange(len(targets)), nearest]

    lower = grid[np.maximum(nearest - 1, 0)]
    upper = grid[np.minimum(nearest + 1, n_samples - 1)]

    def distance(motor_angles: np.ndarray) -> np.ndarray:
        angles = batch.angles(np.clip(motor_angles, design.motor.angle_min, design.motor.angle_max))
        return np.sqrt(np.sum(((angles - targets) * weights) ** 2, axis=1))

    refined_angle, refined = _golden_section(distance, lower, upper, tolerance)

    residuals = []
    for g in range(len(targets)):
        if refined[g] < sampled[g]:
            residuals.append(GraspResidual(float(refined[g]), float(refined_angle[g])))
        else:
            residuals.append(GraspResidual(float(sampled[g]), float(grid[nearest[g]])))
    return residuals


def grasp_residual(
    design: HandDesign,
    target: Mapping[str, float],
    weights: Optional[Mapping[str, float]] = None,
    n_samples: int = SynergyConfig.INNER_SAMPLES,
    tolerance: float = SynergyConfig.MOTOR_ANGLE_TOLERANCE_RAD
) -> GraspResidual:
    """
    Closest approach of the posture manifold to one target grasp

    Dense motor-angle sampling brackets the minimum, golden-section search
    refines it to the motor-angle tolerance.

    Args:
        design: Validated hand design
        target: Joint id -> angle, every joint present
        weights: Per-joint weights, default 1
        n_samples: Dense samples over the motor range

    Returns:
        GraspResidual(distance, motor_angle)
    """
    batch = EquilibriumBatch(design)
    return _grasp_residuals(
        batch, _target_matrix(design, [target]), _weight_vector(design, weights), n_samples, tolerance
    )[0]


# Direct search

@dataclass
class _RestartOutcome:
    restart: int
    point: np.ndarray
    objective: float
    residuals: Tuple[GraspResidual, ...]
    trace: List[float] = field(default_factory=list)  # objective of every evaluation, in order


class _Objective:
    """Sum of squared grasp residuals as a function of normalized parameters"""

    def __init__(self, problem: SynergyProblem):
        self.problem = problem
        self.paths = [b.path for b in problem.parameter_spec]
        self.lower = np.array([b.lower for b in problem.parameter_spec], dtype=float)
        self.width = np.array([b.width for b in problem.parameter_spec], dtype=float)
        self.targets = _target_matrix(problem.base_design, problem.target_grasps)
        self.weights = _weight_vector(problem.base_design, problem.weights)

    def design_at(self, point: np.ndarray) -> HandDesign:
        return apply_parameters(self.problem.base_design, self.paths, self.lower + point * self.width)

    def __call__(self, point: np.ndarray) -> Tuple[float, Tuple[GraspResidual, ...]]:
        design = self.design_at(point)
        if validate_design(design):
            return math.inf, ()
        try:
            batch = EquilibriumBatch(design)
            residuals = _grasp_residuals(
                batch, self.targets, self.weights,
                self.problem.inner_samples, SynergyConfig.MOTOR_ANGLE_TOLERANCE_RAD
            )
        except SolverError:
            return math.inf, ()
        return float(sum(r.distance ** 2 for r in residuals)), tuple(residuals)


class _StopRestart(Exception):
    """Raised from inside scipy's loop to end a restart (budget spent or progress stalled)"""


class _RestartTracker:
    """
    Objective wrapper for one restart

    Counts evaluations, keeps the best point, and ends the restart once the
    budget is spent or the last STALL_WINDOW accepted improvements together
    gained less than RELATIVE_IMPROVEMENT.
    """

    def __init__(self, objective: _Objective, restart: int, budget: int):
        self.objective = objective
        self.budget = budget
        self.outcome = _RestartOutcome(restart, np.empty(0), math.inf, ())
        self.accepted: List[float] = []

    def __call__(self, point: np.ndarray) -> float:
        if len(self.outcome.trace) >= self.budget:
            raise _StopRestart('budget')
        point = np.clip(point, 0.0, 1.0)
        value, residuals = self.objective(point)
        self.outcome.trace.append(value)
        if value < self.outcome.objective or self.outcome.point.size == 0:
            self.outcome.point, self.outcome.objective, self.outcome.residuals = point.copy(), value, residuals
            self.accepted.append(value)
            self._check_progress()
        # scipy's line searches need finite values
        return value if math.isfinite(value) else SynergyConfig.INVALID_PENALTY

    def _check_progress(self) -> None:
        window = SynergyConfig.STALL_WINDOW
        if len(self.accepted) <= window:
            return
        previous, latest = self.accepted[-1 - window], self.accepted[-1]
        if math.isfinite(previous) and previous - latest <= SynergyConfig.RELATIVE_IMPROVEMENT * abs(previous):
            raise _StopRestart('stalled')


def _powell_restart(objective: _Objective, start: np.ndarray, budget: int, restart: int) -> _RestartOutcome:
    """
    Bounded Powell search on the unit box, cut off after budget evaluations

    The start point is the first evaluation. The outcome is the best point
    evaluated, not scipy's final iterate.
    """
    tracker = _RestartTracker(objective, restart, budget)
    dims = len(start)
    try:
        minimize(
            tracker,
            np.clip(start, 0.0, 1.0),
            method='Powell',
            bounds=Bounds(np.zeros(dims), np.ones(dims)),
            options={'maxfev': budget, 'xtol': SynergyConfig.XTOL, 'ftol': SynergyConfig.FTOL},
        )
    except _StopRestart as stop:
        logger.debug("restart_stopped", restart=restart, reason=str(stop))
    return tracker.outcome


def _start_points(objective: _Objective, restarts: int, seed: int) -> List[np.ndarray]:
    """Restart 0 at the base design, the rest uniform in bounds from per-restart streams"""
    base = np.array([read_parameter(objective.problem.base_design, p) for p in objective.paths])
    points = [(base - objective.lower) / objective.width]
    streams = np.random.SeedSequence(seed).spawn(restarts)
    for i in range(1, restarts):
        rng = np.random.default_rng(streams[i])
        points.append(rng.uniform(0.0, 1.0, size=len(objective.paths)))
    return points


@log_execution_time()
def optimize_design(problem: SynergyProblem, max_workers: int = 1) -> SynergyResult:
    """
    Fit design parameters so the posture manifold spans the target grasps

    Minimizes the sum of squared grasp residuals by bounded Powell searches
    (scipy) from seeded restarts. Invalid candidates score +inf. Deterministic given the
    problem's seed, whatever max_workers is.

    Args:
        problem: Synergy problem
        max_workers: Threads running restarts concurrently

    Returns:
        SynergyResult

    Raises:
        DesignValidationError: invalid base design or problem
        OptimizationError: budget too small, or no valid candidate
    """
    violations = validate_design(problem.base_design) + validate_problem(problem)
    if violations:
        raise DesignValidationError(violations)

    dims = len(problem.parameter_spec)
    minimum = problem.restarts * (2 * dims + 1)
    if problem.budget < minimum:
        raise OptimizationError(
            f"budget {problem.budget} below {minimum} "
            f"({problem.restarts} restarts x {2 * dims + 1} evaluations)"
        )

    objective = _Objective(problem)
    starts = _start_points(objective, problem.restarts, problem.seed)
    per_restart = problem.budget // problem.restarts

    def run(restart: int) -> _RestartOutcome:
        outcome = _powell_restart(objective, starts[restart], per_restart, restart)
        logger.info(
            "restart_complete",
            restart=restart,
            evaluations=len(outcome.trace),
            objective=outcome.objective,
        )
        return outcome

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            outcomes = list(executor.map(run, range(problem.restarts)))
    else:
        outcomes = [run(i) for i in range(problem.restarts)]

    best = min(outcomes, key=lambda o: (o.objective, o.restart))
    if not math.isfinite(best.objective):
        raise OptimizationError("no valid candidate design found")

    history: List[float] = []
    running = math.inf
    for outcome in outcomes:
        for value in outcome.trace:
            running = min(running, value)
            history.append(running)

    values = objective.lower + best.point * objective.width
    design = objective.design_at(best.point)
    return SynergyResult(
        design=design,
        parameters={path: float(v) for path, v in zip(objective.paths, values)},
        residuals=best.residuals,
        objective=best.objective,
        history=tuple(history),
        evaluations=len(history),
        restarts=tuple(
            RestartReport(o.restart, len(o.trace), o.objective) for o in outcomes
        ),
    )


def planted_problem(
    design: HandDesign,
    parameter_paths: Sequence[str],
    n_targets: int = 5,
    perturbation: float = 0.2,
    seed: int = SynergyConfig.SEED,
    bound_scale: Tuple[float, float] = (0.5, 1.5),
    budget: int = SynergyConfig.BUDGET,
    restarts: int = SynergyConfig.RESTARTS
) -> SynergyProblem:
    """
    Recovery problem with a known zero-objective solution

    Targets are postures of the planted design at interior motor angles;
    the base design multiplies each parameter by 1 +- perturbation (random
    sign from the seed), and bounds span bound_scale times the planted value.
    """
    grid = np.linspace(design.motor.angle_min, design.motor.angle_max, n_targets + 2)[1:-1]
    trajectory = free_motion(design, grid)
    targets = tuple(dict(trajectory.configuration(i).angles) for i in range(len(trajectory)))

    rng = np.random.default_rng(seed)
    planted = [read_parameter(design, p) for p in parameter_paths]
    signs = rng.choice([-1.0, 1.0], size=len(planted))
    perturbed = [v * (1.0 + s * perturbation) for v, s in zip(planted, signs)]
    bounds = tuple(
        ParameterBound(p, v * bound_scale[0], v * bound_scale[1])
        for p, v in zip(parameter_paths, planted)
    )
    return SynergyProblem(
        base_design=apply_parameters(design, parameter_paths, perturbed),
        target_grasps=targets,
        parameter_spec=bounds,
        weights={},
        budget=budget,
        seed=seed,
        restarts=restarts,
    )
