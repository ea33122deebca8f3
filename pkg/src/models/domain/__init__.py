"""
Domain models package
"""

from .hand import (
    ContactConstraint,
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
from .results import (
    ClosingEvent,
    ClosingEventKind,
    ClosingTrace,
    EquilibriumResult,
    FreeMotionTrajectory,
    GraspResidual,
    ParameterBound,
    QualifiedZoneResult,
    RestartReport,
    SpringCandidate,
    SpringCatalogEntry,
    SpringSelection,
    SynergyProblem,
    SynergyResult,
    TendonStatus,
    TorqueProfile,
)

__all__ = [
    'ContactConstraint', 'Coupling', 'HandDesign', 'Joint', 'JointConfiguration',
    'JointKind', 'MotorShaft', 'ParadigmCell', 'ParadigmTraits', 'SpringDirection',
    'TendonRole', 'TendonRoute', 'TendonStop', 'Violation',
    'ClosingEvent', 'ClosingEventKind', 'ClosingTrace', 'EquilibriumResult',
    'FreeMotionTrajectory', 'GraspResidual', 'ParameterBound', 'QualifiedZoneResult',
    'RestartReport', 'SpringCandidate', 'SpringCatalogEntry', 'SpringSelection',
    'SynergyProblem', 'SynergyResult', 'TendonStatus', 'TorqueProfile',
]
