"""
Exception hierarchy for handsyn
Every error class carries the process exit status the CLI maps it to
"""

from typing import Dict, List, Optional, Sequence, Tuple

from config.constants import ExitCodes


class HandSynError(Exception):
    """Base class for all domain errors"""
    exit_code = ExitCodes.UNEXPECTED


class DesignSyntaxError(HandSynError):
    """Design, catalog or problem file could not be parsed"""
    exit_code = ExitCodes.PARSE

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.path = path
        self.line = line
        self.column = column
        location = path or '<input>'
        if line is not None:
            location += f":{line}"
            if column is not None:
                location += f":{column}"
        super().__init__(f"{location}: {message}")
        self.message = message


class DesignValidationError(HandSynError):
    """Design breaks one or more invariants"""
    exit_code = ExitCodes.VALIDATION

    def __init__(self, violations: Sequence, path: Optional[str] = None,
                 locations: Optional[Dict[str, Tuple[int, int]]] = None):
        self.violations: List = list(violations)
        self.path = path
        self.locations = locations or {}
        prefix = f"{path}: " if path else ""
        lines = '; '.join(self._describe(v) for v in self.violations)
        super().__init__(f"{prefix}{len(self.violations)} violation(s): {lines}")

    def _describe(self, violation) -> str:
        location = self.locations.get(getattr(violation, 'field', None))
        if location is None:
            return str(violation)
        return f"{violation} (line {location[0]}, column {location[1]})"


class UnknownTendonError(HandSynError, KeyError):
    """Tendon id not present in the design"""
    exit_code = ExitCodes.VALIDATION

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else 'unknown tendon'


class SolverError(HandSynError):
    """Equilibrium could not be computed"""
    exit_code = ExitCodes.SOLVER

    def __init__(self, message: str, sample_index: Optional[int] = None):
        self.message = message
        self.sample_index = sample_index
        if sample_index is not None:
            message = f"sample {sample_index}: {message}"
        super().__init__(message)

    def at_sample(self, index: int) -> 'SolverError':
        """Return the same error annotated with a sample index"""
        return type(self)(self.message, sample_index=index)


class InfeasibleConfigurationError(SolverError):
    """Configuration would require a tendon to stretch"""


class InfeasibleConstraintError(SolverError):
    """Constraint set admits no configuration"""


class DegenerateDesignError(SolverError):
    """Equilibrium is not unique (zero-stiffness joint)"""


class SpringSelectionError(HandSynError):
    """No usable spring candidate"""
    exit_code = ExitCodes.SPRING_SELECTION


class OptimizationError(HandSynError):
    """Synergy fitting could not run or found no valid candidate"""
    exit_code = ExitCodes.OPTIMIZATION


class QualifiedZoneFailure(HandSynError):
    """Net motor torque leaves the stiction band"""
    exit_code = ExitCodes.CHECK_FAILED
