"""
Tabular run artifacts
Deterministic CSV tables: stable column order, 9 significant digits
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import numpy as np

from config.constants import ReportConfig
from models.domain import (
    ClosingTrace,
    HandDesign,
    SpringSelection,
    SynergyResult,
    TorqueProfile,
)
from services.cancellation import backdrive_profile
from services.design_io import write_design_file
from services.hand_model import classify_paradigm, paradigm_properties

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_value(value) -> str:
    """Numbers at fixed significant digits; booleans lower-case; None empty"""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value == 0.0:
            value = 0.0  # no "-0"
        return format(value, f".{ReportConfig.SIGNIFICANT_DIGITS}g")
    return str(value)


def write_table(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """
    Write one CSV table

    Returns:
        Number of data rows written
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(target, 'w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.debug(f"Wrote {count} rows to {target}")
    return count


def write_closing_trace(design: HandDesign, trace: ClosingTrace, directory: PathLike) -> List[Path]:
    """One row per sample (angles, tensions, slacks) plus the event table"""
    directory = Path(directory)
    joints, tendons = design.joint_ids, design.tendon_ids
    header = (
        ['motor_angle']
        + [f"angle_{j}" for j in joints]
        + [f"tension_{t}" for t in tendons]
        + [f"slack_{t}" for t in tendons]
    )
    rows = []
    for motor_angle, result in trace.samples:
        rows.append(
            [motor_angle]
            + [result.angle(j) for j in joints]
            + [result.status(t).tension for t in tendons]
            + [result.status(t).slack for t in tendons]
        )
    trace_path = directory / ReportConfig.TRACE_FILE
    events_path = directory / ReportConfig.EVENTS_FILE
    write_table(trace_path, header, rows)
    write_table(
        events_path,
        ['motor_angle', 'event', 'subject', 'sample'],
        ([e.motor_angle, e.kind.value, e.subject_id, e.sample_index] for e in trace.events)
    )
    return [trace_path, events_path]


def write_torque_profile(profile: TorqueProfile, path: PathLike) -> Path:
    """Columns sufficient to redraw the net torque plot with its stiction band"""
    margin = backdrive_profile(profile)
    rows = (
        [phi, ago, ant, net, profile.stiction, -profile.stiction, m]
        for phi, ago, ant, net, m in zip(
            profile.motor_angles, profile.agonist_torque,
            profile.antagonist_torque, profile.net_torque, margin
        )
    )
    write_table(
        path,
        ['motor_angle', 'agonist', 'antagonist', 'net', 'upper_band', 'lower_band', 'backdrive_margin'],
        rows
    )
    return Path(path)


def write_paradigms(design: HandDesign, path: PathLike) -> Path:
    rows = []
    for tendon in design.tendons:
        cell = classify_paradigm(design, tendon.id)
        traits = paradigm_properties(cell)
        rows.append([
            tendon.id, cell.agonist.value, cell.coupling.value, cell.label, cell.coupled_joints,
            traits.position_differential, traits.position_coupling,
            traits.motor_force_regulation, traits.unpowered_pose_keeping,
        ])
    write_table(
        path,
        ['tendon', 'agonist', 'coupling', 'cell', 'coupled_joints', 'position_differential',
         'position_coupling', 'motor_force_regulation', 'unpowered_pose_keeping'],
        rows
    )
    return Path(path)


def write_spring_selection(selection: SpringSelection, directory: PathLike) -> List[Path]:
    """Chosen spring per SA joint plus the updated design file"""
    directory = Path(directory)
    report = directory / ReportConfig.SPRINGS_FILE
    write_table(
        report,
        ['joint', 'stiffness', 'preload', 'max_abs_net', 'passed'],
        (
            [joint_id, stiffness, preload, selection.max_abs_net, selection.passed]
            for joint_id, (stiffness, preload) in selection.per_joint.items()
        )
    )
    design_path = write_design_file(selection.design, directory / ReportConfig.SPRINGS_DESIGN_FILE)
    return [report, design_path]


def write_synergy_result(result: SynergyResult, directory: PathLike) -> List[Path]:
    """Optimized design, per-grasp residuals, objective history and run report"""
    directory = Path(directory)
    design_path = write_design_file(result.design, directory / ReportConfig.OPTIMIZED_DESIGN_FILE)

    residuals = directory / ReportConfig.RESIDUALS_FILE
    write_table(
        residuals,
        ['target', 'distance', 'motor_angle'],
        ([i, r.distance, r.motor_angle] for i, r in enumerate(result.residuals))
    )
    history = directory / ReportConfig.HISTORY_FILE
    write_table(
        history,
        ['evaluation', 'best_objective'],
        ([i + 1, value] for i, value in enumerate(result.history))
    )
    report = directory / ReportConfig.RUN_REPORT_FILE
    write_table(
        report,
        ['restart', 'evaluations', 'best_objective'],
        ([r.restart, r.evaluations, r.best_objective] for r in result.restarts)
    )
    return [design_path, residuals, history, report]
