#!/usr/bin/env python3
"""
handsyn - Tendon-driven hand design runner
Classify, simulate, check spring cancellation, select springs and fit synergies
"""

import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import click
import numpy as np
from pydantic import ValidationError

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from config.constants import ExitCodes, ReportConfig, SolverConfig
from config.settings import AppSettings, load_settings
from models.domain import ContactConstraint, HandDesign
from services.cancellation import (
    check_qualified_zone,
    default_spring_catalog,
    select_adduction_springs,
    torque_profile,
    torque_reduction,
)
from services.design_io import parse_catalog_file, parse_design_file, parse_problem_file, write_design_file
from services.hand_model import classify_paradigm, default_iss_hand, validate_design
from services.quasistatic_solver import kkt_residuals, simulate_closing, solve_pose
from services.reporting import (
    write_closing_trace,
    write_paradigms,
    write_spring_selection,
    write_synergy_result,
    write_torque_profile,
)
from services.synergy_opt import optimize_design
from utils.error_handler import handle_errors
from utils.exceptions import HandSynError, InfeasibleConstraintError, QualifiedZoneFailure, SolverError
from utils.logger import get_logger, setup_logger

DEFAULT_SETTINGS = os.path.join(os.path.dirname(__file__), 'config', 'config.yaml')
SIMULATE_SAMPLES = 100


@dataclass(frozen=True)
class ScheduledContact:
    """--contact JOINT:MOTOR_ANGLE[:BLOCKED_AT]; blocked_at defaults to the joint's angle then"""
    joint_id: str
    motor_angle: float
    blocked_at: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation"""
    subcommand: str
    design_path: Optional[str] = None
    catalog_path: Optional[str] = None
    problem_path: Optional[str] = None
    settings_path: Optional[str] = None
    output_dir: Optional[str] = None
    log_level: Optional[str] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    budget: Optional[int] = None
    restarts: Optional[int] = None
    stiction: Optional[float] = None
    workers: Optional[int] = None
    preload_grid: Optional[float] = None
    contacts: Tuple[ScheduledContact, ...] = ()
    check_kkt: bool = False


def _exit_code(error: Exception) -> int:
    click.echo(f"error: {error}", err=True)
    if isinstance(error, HandSynError):
        return error.exit_code
    return ExitCodes.UNEXPECTED


def _output_dir(config: RunConfig, settings: AppSettings) -> Path:
    directory = Path(config.output_dir or settings.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _design(config: RunConfig) -> HandDesign:
    if config.design_path is None:
        return default_iss_hand()
    return parse_design_file(config.design_path)


# Subcommands

def _run_classify(config: RunConfig, settings: AppSettings) -> int:
    design = _design(config)
    for tendon in design.tendons:
        cell = classify_paradigm(design, tendon.id)
        click.echo(f"{tendon.id}\t{cell.label}\t{cell.coupled_joints}")
    if config.output_dir:
        write_paradigms(design, _output_dir(config, settings) / ReportConfig.CLASSIFY_FILE)
    return ExitCodes.OK


def _run_validate(config: RunConfig, settings: AppSettings) -> int:
    design = parse_design_file(config.design_path, validate=False)
    violations = validate_design(design)
    if violations:
        for violation in violations:
            click.echo(str(violation))
        return ExitCodes.VALIDATION
    click.echo(f"{design.name}: OK ({len(design.joints)} joints, {len(design.tendons)} tendons)")
    return ExitCodes.OK


def _resolve_schedule(design: HandDesign, contacts: Tuple[ScheduledContact, ...]) -> List[Tuple[float, ContactConstraint]]:
    schedule: List[Tuple[float, ContactConstraint]] = []
    active: List[ContactConstraint] = []
    for item in sorted(contacts, key=lambda c: c.motor_angle):
        if not design.has_joint(item.joint_id):
            raise InfeasibleConstraintError(f"contact references unknown joint {item.joint_id!r}")
        blocked_at = item.blocked_at
        if blocked_at is None:
            blocked_at = solve_pose(design, item.motor_angle, active).angle(item.joint_id)
        contact = ContactConstraint(item.joint_id, blocked_at)
        active.append(contact)
        schedule.append((item.motor_angle, contact))
    return schedule


def _run_simulate(config: RunConfig, settings: AppSettings) -> int:
    design = _design(config)
    samples = settings.cancellation.samples if config.samples is not None else SIMULATE_SAMPLES
    grid = np.linspace(design.motor.angle_min, design.motor.angle_max, samples)
    schedule = _resolve_schedule(design, config.contacts)
    trace = simulate_closing(design, grid, schedule, settings.solver.slack_tolerance)

    if config.check_kkt:
        contacts: List[ContactConstraint] = []
        pending = list(schedule)
        for index, (phi, result) in enumerate(trace.samples):
            while pending and pending[0][0] <= phi + SolverConfig.LIMIT_TOLERANCE_RAD:
                contacts.append(pending.pop(0)[1])
            worst = max([abs(r) for r in kkt_residuals(design, result, contacts).values()] or [0.0])
            if worst > settings.solver.kkt_tolerance:
                raise SolverError(f"stationarity residual {worst:.3g} N*mm", sample_index=index)
            for status in result.tendon_statuses:
                if status.tension * status.slack > settings.solver.kkt_tolerance:
                    raise SolverError(f"tendon {status.tendon_id} violates complementarity", sample_index=index)

    paths = write_closing_trace(design, trace, _output_dir(config, settings))
    for event in trace.events:
        click.echo(f"{event.motor_angle:.6g}\t{event.kind.value}\t{event.subject_id}")
    click.echo(f"{len(trace.samples)} samples, {len(trace.events)} events -> {paths[0].parent}")
    return ExitCodes.OK


def _run_profile(config: RunConfig, settings: AppSettings) -> int:
    design = _design(config)
    profile = torque_profile(design, settings.cancellation.samples, settings.cancellation.stiction)
    path = write_torque_profile(profile, _output_dir(config, settings) / ReportConfig.PROFILE_FILE)
    peak = float(np.max(np.abs(profile.net_torque)))
    click.echo(f"max |net| = {peak:.6g} N*mm, torque reduction {torque_reduction(profile):.3f} -> {path}")
    return ExitCodes.OK


def _run_check(config: RunConfig, settings: AppSettings) -> int:
    design = _design(config)
    profile = torque_profile(design, settings.cancellation.samples, settings.cancellation.stiction)
    zone = check_qualified_zone(profile)
    band = f"{profile.stiction:g}"
    if zone.passed:
        click.echo(f"max |net| < {band} N·mm: PASS")
        click.echo(f"worst margin {-zone.worst_violation:.6g} N·mm at motor angle {zone.worst_angle:.6g}")
        return ExitCodes.OK
    click.echo(f"max |net| >= {band} N·mm: FAIL")
    raise QualifiedZoneFailure(
        f"worst violation {zone.worst_violation:.6g} N·mm at motor angle {zone.worst_angle:.6g}"
    )


def _run_select_springs(config: RunConfig, settings: AppSettings) -> int:
    design = _design(config)
    catalog = parse_catalog_file(config.catalog_path) if config.catalog_path else default_spring_catalog()
    selection = select_adduction_springs(
        design,
        catalog,
        preload_grid=settings.cancellation.preload_grid,
        n_samples=settings.cancellation.samples,
        stiction=settings.cancellation.stiction,
        max_workers=settings.cancellation.max_workers,
    )
    write_spring_selection(selection, _output_dir(config, settings))
    verdict = 'PASS' if selection.passed else 'FAIL'
    click.echo(
        f"k = {selection.stiffness:g} N·mm/rad, preload = {selection.preload:g} rad, "
        f"max |net| = {selection.max_abs_net:.6g} N·mm: {verdict}"
    )
    return ExitCodes.OK


def _run_optimize(config: RunConfig, settings: AppSettings) -> int:
    problem = parse_problem_file(
        config.problem_path,
        budget=settings.synergy.budget if config.budget is not None else None,
        seed=settings.synergy.seed if config.seed is not None else None,
        restarts=settings.synergy.restarts if config.restarts is not None else None,
    )
    result = optimize_design(problem, max_workers=settings.synergy.max_workers)
    write_synergy_result(result, _output_dir(config, settings))
    click.echo(f"objective {result.objective:.9g} after {result.evaluations} evaluations")
    for path, value in result.parameters.items():
        click.echo(f"{path}\t{value:.9g}")
    return ExitCodes.OK


def _run_export_default(config: RunConfig, settings: AppSettings) -> int:
    path = write_design_file(default_iss_hand(), _output_dir(config, settings) / ReportConfig.DEFAULT_DESIGN_FILE)
    click.echo(str(path))
    return ExitCodes.OK


HANDLERS: Dict[str, Callable[[RunConfig, AppSettings], int]] = {
    'classify': _run_classify,
    'validate': _run_validate,
    'simulate': _run_simulate,
    'profile': _run_profile,
    'check': _run_check,
    'select-springs': _run_select_springs,
    'optimize': _run_optimize,
    'export-default': _run_export_default,
}


@handle_errors(default_return=_exit_code)
def run(config: RunConfig) -> int:
    """
    Dispatch one subcommand

    Args:
        config: Parsed invocation

    Returns:
        Process exit status (ExitCodes)
    """
    settings_path = config.settings_path
    if settings_path is None and os.path.exists(DEFAULT_SETTINGS):
        settings_path = DEFAULT_SETTINGS
    try:
        settings = load_settings(settings_path).with_overrides(
            samples=config.samples,
            seed=config.seed,
            budget=config.budget,
            restarts=config.restarts,
            stiction=config.stiction,
            workers=config.workers,
            preload_grid=config.preload_grid,
        )
    except ValidationError as e:
        click.echo(f"error: invalid settings: {e}", err=True)
        return ExitCodes.USAGE

    log = settings.logging
    setup_logger(
        name="handsyn",
        level=config.log_level or log.level,
        file_path=log.file_path if log.file_enabled else None,
        max_bytes=log.max_file_size * 1024 * 1024,
        backup_count=log.backup_count,
        use_colors=True
    )
    get_logger(__name__).debug("run_start", subcommand=config.subcommand)
    return HANDLERS[config.subcommand](config, settings)


# Click surface

def _parse_contact(ctx, param, values) -> Tuple[ScheduledContact, ...]:
    contacts = []
    for value in values:
        parts = value.split(':')
        try:
            if len(parts) not in (2, 3):
                raise ValueError
            blocked = float(parts[2]) if len(parts) == 3 else None
            contacts.append(ScheduledContact(parts[0], float(parts[1]), blocked))
        except ValueError:
            raise click.BadParameter(f"expected JOINT:MOTOR_ANGLE[:BLOCKED_AT], got {value!r}")
    return tuple(contacts)


def _invoke(ctx: click.Context, subcommand: str, **fields) -> None:
    config = replace(ctx.obj, subcommand=subcommand, **fields)
    ctx.exit(run(config))


design_argument = click.argument('design', required=False, type=click.Path(dir_okay=False))
samples_option = click.option('--samples', '-n', type=int, default=None, help='Motor-angle samples.')
stiction_option = click.option('--stiction', type=float, default=None, help='Override motor stiction, N·mm.')


@click.group()
@click.option('--config', 'settings_path', type=click.Path(dir_okay=False), default=None,
              help='Settings YAML (default: config/config.yaml).')
@click.option('--output', '-o', 'output_dir', type=click.Path(file_okay=False), default=None,
              help='Directory for tables and design files.')
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              default=None)
@click.pass_context
def cli(ctx, settings_path, output_dir, log_level):
    """
    Tendon-driven underactuated hand design tool.

    DESIGN defaults to the built-in three-finger hand when omitted.
    """
    ctx.obj = RunConfig(subcommand='', settings_path=settings_path, output_dir=output_dir, log_level=log_level)


@cli.command()
@design_argument
@click.pass_context
def classify(ctx, design):
    """List each tendon's design-matrix cell."""
    _invoke(ctx, 'classify', design_path=design)


@cli.command()
@click.argument('design', type=click.Path(dir_okay=False))
@click.pass_context
def validate(ctx, design):
    """Check a design file against every invariant."""
    _invoke(ctx, 'validate', design_path=design)


@cli.command()
@design_argument
@samples_option
@click.option('--contact', 'contacts', multiple=True, callback=_parse_contact,
              help='JOINT:MOTOR_ANGLE[:BLOCKED_AT], repeatable.')
@click.option('--check-kkt', is_flag=True, help='Verify stationarity and complementarity per sample.')
@click.pass_context
def simulate(ctx, design, samples, contacts, check_kkt):
    """Close the hand and write the closing trace and events."""
    _invoke(ctx, 'simulate', design_path=design, samples=samples, contacts=contacts, check_kkt=check_kkt)


@cli.command()
@design_argument
@samples_option
@stiction_option
@click.pass_context
def profile(ctx, design, samples, stiction):
    """Write the motor-shaft torque profile."""
    _invoke(ctx, 'profile', design_path=design, samples=samples, stiction=stiction)


@cli.command()
@design_argument
@samples_option
@stiction_option
@click.pass_context
def check(ctx, design, samples, stiction):
    """Qualified-zone check; exits nonzero when |net| leaves the stiction band."""
    _invoke(ctx, 'check', design_path=design, samples=samples, stiction=stiction)


@cli.command('select-springs')
@design_argument
@click.option('--catalog', type=click.Path(dir_okay=False), default=None, help='Spring catalog YAML.')
@click.option('--preload-grid', type=float, default=None, help='Preload step, rad.')
@samples_option
@stiction_option
@click.option('--workers', type=int, default=None, help='Parallel candidate evaluations.')
@click.pass_context
def select_springs(ctx, design, catalog, preload_grid, samples, stiction, workers):
    """Choose SA joint springs from a catalog and write the updated design."""
    _invoke(ctx, 'select-springs', design_path=design, catalog_path=catalog, preload_grid=preload_grid,
            samples=samples, stiction=stiction, workers=workers)


@cli.command()
@click.argument('problem', type=click.Path(dir_okay=False))
@click.option('--seed', type=int, default=None)
@click.option('--budget', type=int, default=None, help='Objective evaluations.')
@click.option('--restarts', type=int, default=None)
@click.option('--workers', type=int, default=None, help='Parallel restarts.')
@click.pass_context
def optimize(ctx, problem, seed, budget, restarts, workers):
    """Fit design parameters to target grasps."""
    _invoke(ctx, 'optimize', problem_path=problem, seed=seed, budget=budget, restarts=restarts, workers=workers)


@cli.command('export-default')
@click.pass_context
def export_default(ctx):
    """Write the built-in hand as a design file."""
    _invoke(ctx, 'export-default')


def main():
    """Main entry point"""
    cli(prog_name='handsyn')


if __name__ == '__main__':
    main()
