"""
Application constants and configuration defaults
Centralizes tolerances, sampling densities and the built-in hand numbers
"""

import math
from typing import List


class SolverConfig:
    """Quasi-static solver tolerances"""
    SLACK_TOLERANCE_MM = 1e-6
    ENERGY_TOLERANCE = 1e-9
    KKT_TOLERANCE = 1e-6
    LIMIT_TOLERANCE_RAD = 1e-9

    # Brute-force oracle
    ORACLE_RESOLUTION_RAD = 1e-3
    ORACLE_MAX_JOINTS = 3
    ORACLE_SAMPLES_PER_LEVEL = 40000
    ORACLE_MAX_LEVELS = 60
    ORACLE_STALL_RATIO = 0.95  # stop zooming a face once no axis shrinks below this
    ORACLE_FEASIBILITY_TOLERANCE = 1e-10
    ORACLE_ENERGY_PAD = 1e-8  # N*mm, covers energy gained inside the feasibility tolerance


class CancellationConfig:
    """Spring force cancellation analysis defaults"""
    PROFILE_SAMPLES = 1000
    PRELOAD_GRID_RAD = 0.05
    MAX_WORKERS = 1


class SynergyConfig:
    """Synergy fitting defaults"""
    INNER_SAMPLES = 200
    MOTOR_ANGLE_TOLERANCE_RAD = 1e-4
    RESTARTS = 8
    BUDGET = 5000
    SEED = 0

    # Powell restarts on the unit parameter box
    XTOL = 1e-8
    FTOL = 1e-12
    INVALID_PENALTY = 1e30  # stands in for +inf inside scipy
    STALL_WINDOW = 20
    RELATIVE_IMPROVEMENT = 1e-6


class ISSDefaults:
    """Built-in three-finger, eight-joint, single-motor hand"""
    FLEXION_STIFFNESS = 30.0  # N*mm/rad
    FLEXION_PRELOAD = 0.3  # rad
    PROXIMAL_ARM = 8.0  # mm
    DISTAL_ARM = 6.0  # mm
    FLEXION_MAX = math.pi / 2

    ADDUCTION_ARM = 8.0  # mm
    ADDUCTION_MAX = 1.6
    # Frozen from select_adduction_springs over the default catalog
    ADDUCTION_STIFFNESS = 20.0
    ADDUCTION_PRELOAD = 2.65

    MOTOR_RADIUS = 6.0  # mm
    MOTOR_MIN = 0.0
    MOTOR_MAX = 2.0 * math.pi / 3.0
    STICTION = 84.0  # N*mm, measured on the prototype gearbox

    FINGERS: List[str] = ['T', 'F1', 'F2']
    ADDUCTING_FINGERS: List[str] = ['F1', 'F2']

    # (stiffness, preload_min, preload_max)
    SPRING_CATALOG = [
        (5.0, 1.6, 4.0),
        (10.0, 1.6, 2.7),
        (12.5, 1.6, 2.7),
        (15.0, 1.6, 2.7),
        (17.5, 1.6, 2.7),
        (20.0, 1.6, 2.7),
        (25.0, 1.6, 2.7),
        (30.0, 1.6, 2.7),
        (40.0, 1.6, 2.7),
        (60.0, 1.6, 2.7),
    ]


class ReportConfig:
    """Tabular output formatting"""
    SIGNIFICANT_DIGITS = 9
    TRACE_FILE = 'closing_trace.csv'
    EVENTS_FILE = 'closing_events.csv'
    PROFILE_FILE = 'torque_profile.csv'
    CLASSIFY_FILE = 'paradigms.csv'
    SPRINGS_FILE = 'spring_selection.csv'
    SPRINGS_DESIGN_FILE = 'design_with_springs.yaml'
    OPTIMIZED_DESIGN_FILE = 'optimized_design.yaml'
    RESIDUALS_FILE = 'grasp_residuals.csv'
    HISTORY_FILE = 'objective_history.csv'
    RUN_REPORT_FILE = 'run_report.csv'
    DEFAULT_DESIGN_FILE = 'iss_hand.yaml'


class LoggingConfig:
    """Logging configuration defaults"""
    DEFAULT_LEVEL = 'WARNING'
    DEFAULT_FILE_PATH = 'logs/handsyn.log'
    MAX_FILE_SIZE_MB = 10
    BACKUP_COUNT = 5
    NO_COLOR_ENV = 'NO_COLOR'


class ExitCodes:
    """Process exit status per error class"""
    OK = 0
    UNEXPECTED = 1
    USAGE = 2
    PARSE = 3
    VALIDATION = 4
    SOLVER = 5
    CHECK_FAILED = 6
    SPRING_SELECTION = 7
    OPTIMIZATION = 8


class ValidationLimits:
    """Input validation limits for run overrides"""
    MIN_SAMPLES = 2
    MAX_SAMPLES = 1_000_000

    MIN_BUDGET = 1
    MAX_BUDGET = 10_000_000

    MIN_RESTARTS = 1
    MAX_RESTARTS = 1000

    MIN_STICTION = 0.0
    MAX_STICTION = 1e6

    MIN_WORKERS = 1
    MAX_WORKERS = 64

    MIN_PRELOAD_GRID = 1e-4
    MAX_PRELOAD_GRID = 1.0
