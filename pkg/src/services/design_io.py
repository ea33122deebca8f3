"""
Design file I/O
YAML grammar for hand designs, spring catalogs and synergy problems, with
line/column diagnostics
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import yaml

from models.domain import (
    HandDesign,
    JointKind,
    ParameterBound,
    SpringCatalogEntry,
    SynergyProblem,
    TendonRole,
    Violation,
)
from config.constants import SynergyConfig
from services.hand_model import validate_design
from services.synergy_opt import validate_problem
from utils.exceptions import DesignSyntaxError, DesignValidationError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
KeyPath = Tuple[Union[str, int], ...]


class _Document:
    """Parsed YAML plus the source position of every node"""

    def __init__(self, text: str, source: Optional[str] = None):
        self.source = source
        self.marks: Dict[KeyPath, Tuple[int, int]] = {}
        try:
            loader = yaml.SafeLoader(text)
            try:
                node = loader.get_single_node()
                if node is None:
                    raise DesignSyntaxError("document is empty", source, 1, 1)
                self.data = loader.construct_document(node)
            finally:
                loader.dispose()
        except yaml.MarkedYAMLError as e:
            mark = e.problem_mark or e.context_mark
            line, column = (mark.line + 1, mark.column + 1) if mark else (None, None)
            raise DesignSyntaxError(e.problem or str(e), source, line, column) from e
        except yaml.YAMLError as e:
            raise DesignSyntaxError(str(e), source) from e
        self._index(node, ())

    def _index(self, node: yaml.Node, path: KeyPath) -> None:
        self.marks[path] = (node.start_mark.line + 1, node.start_mark.column + 1)
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                self._index(value_node, path + (key_node.value,))
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                self._index(item, path + (i,))

    def location(self, path: KeyPath) -> Tuple[Optional[int], Optional[int]]:
        """Position of path, or of its nearest existing ancestor"""
        while path not in self.marks and path:
            path = path[:-1]
        return self.marks.get(path, (None, None))

    def fail(self, path: KeyPath, message: str) -> DesignSyntaxError:
        where = '.'.join(str(p) for p in path) or '<root>'
        line, column = self.location(path)
        return DesignSyntaxError(f"{where}: {message}", self.source, line, column)

    # Typed accessors

    def mapping(self, value: Any, path: KeyPath) -> Dict[str, Any]:
        if not isinstance(value, dict):
            raise self.fail(path, "expected a mapping")
        return value

    def sequence(self, value: Any, path: KeyPath) -> List[Any]:
        if not isinstance(value, list):
            raise self.fail(path, "expected a list")
        return value

    def field(self, mapping: Dict[str, Any], key: str, path: KeyPath) -> Any:
        if key not in mapping:
            raise self.fail(path, f"missing required field {key!r}")
        return mapping[key]

    def number(self, mapping: Dict[str, Any], key: str, path: KeyPath) -> float:
        value = self.field(mapping, key, path)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(path + (key,), f"expected a number, got {value!r}")
        return float(value)

    def integer(self, mapping: Dict[str, Any], key: str, path: KeyPath) -> int:
        value = self.field(mapping, key, path)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(path + (key,), f"expected an integer, got {value!r}")
        return value

    def text(self, mapping: Dict[str, Any], key: str, path: KeyPath) -> str:
        value = self.field(mapping, key, path)
        if not isinstance(value, (str, int)) or isinstance(value, bool):
            raise self.fail(path + (key,), f"expected a name, got {value!r}")
        return str(value)

    def choice(self, mapping: Dict[str, Any], key: str, path: KeyPath, options: Sequence[str]) -> str:
        value = self.text(mapping, key, path)
        if value not in options:
            raise self.fail(path + (key,), f"expected one of {', '.join(options)}, got {value!r}")
        return value

    def unknown_keys(self, mapping: Dict[str, Any], allowed: Sequence[str], path: KeyPath) -> None:
        for key in mapping:
            if key not in allowed:
                raise self.fail(path + (key,), f"unknown field {key!r}")


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise DesignSyntaxError(f"cannot read file: {e.strerror or e}", str(path)) from e


# Hand designs

def _design_from_document(doc: _Document, data: Any, root: KeyPath = ()) -> Tuple[HandDesign, Dict[str, KeyPath]]:
    """Build a design; also returns violation-field -> document path"""
    top = doc.mapping(data, root)
    doc.unknown_keys(top, ('name', 'motor', 'joints', 'tendons', 'reference_pose'), root)
    fields: Dict[str, KeyPath] = {}

    motor_path = root + ('motor',)
    motor = doc.mapping(doc.field(top, 'motor', root), motor_path)
    doc.unknown_keys(motor, ('radius', 'angle_min', 'angle_max', 'stiction'), motor_path)
    motor_data = {k: doc.number(motor, k, motor_path) for k in ('radius', 'angle_min', 'angle_max', 'stiction')}
    for key in motor_data:
        fields[f"motor.{key}"] = motor_path + (key,)

    joints = []
    joints_path = root + ('joints',)
    for i, item in enumerate(doc.sequence(doc.field(top, 'joints', root), joints_path)):
        path = joints_path + (i,)
        entry = doc.mapping(item, path)
        doc.unknown_keys(entry, ('id', 'kind', 'angle_min', 'angle_max', 'stiffness', 'preload'), path)
        joint = {
            'id': doc.text(entry, 'id', path),
            'kind': doc.choice(entry, 'kind', path, [k.value for k in JointKind]),
        }
        for key in ('angle_min', 'angle_max', 'stiffness', 'preload'):
            joint[key] = doc.number(entry, key, path)
            fields.setdefault(f"joints.{joint['id']}.{key}", path + (key,))
        fields.setdefault(f"joints.{joint['id']}", path)
        joints.append(joint)

    tendons = []
    tendons_path = root + ('tendons',)
    for i, item in enumerate(doc.sequence(doc.field(top, 'tendons', root), tendons_path)):
        path = tendons_path + (i,)
        entry = doc.mapping(item, path)
        doc.unknown_keys(entry, ('id', 'role', 'winding_sign', 'stops'), path)
        tendon_id = doc.text(entry, 'id', path)
        stops = []
        stops_path = path + ('stops',)
        for k, raw in enumerate(doc.sequence(doc.field(entry, 'stops', path), stops_path)):
            stop_path = stops_path + (k,)
            stop = doc.mapping(raw, stop_path)
            doc.unknown_keys(stop, ('joint', 'arm', 'sign'), stop_path)
            stops.append({
                'joint': doc.text(stop, 'joint', stop_path),
                'arm': doc.number(stop, 'arm', stop_path),
                'sign': doc.integer(stop, 'sign', stop_path),
            })
            for key in ('joint', 'arm', 'sign'):
                fields.setdefault(f"tendons.{tendon_id}.stops[{k}].{key}", stop_path + (key,))
        fields.setdefault(f"tendons.{tendon_id}", path)
        fields.setdefault(f"tendons.{tendon_id}.winding_sign", path + ('winding_sign',))
        fields.setdefault(f"tendons.{tendon_id}.stops", stops_path)
        tendons.append({
            'id': tendon_id,
            'role': doc.choice(entry, 'role', path, [r.value for r in TendonRole]),
            'winding_sign': doc.integer(entry, 'winding_sign', path),
            'stops': stops,
        })

    pose_path = root + ('reference_pose',)
    pose = doc.mapping(doc.field(top, 'reference_pose', root), pose_path)
    doc.unknown_keys(pose, ('motor_angle', 'angles'), pose_path)
    angles_path = pose_path + ('angles',)
    angles = doc.mapping(doc.field(pose, 'angles', pose_path), angles_path)
    for joint_id in list(angles):
        doc.number(angles, joint_id, angles_path)
        fields[f"reference_pose.angles.{joint_id}"] = angles_path + (joint_id,)
    fields['reference_pose.motor_angle'] = pose_path + ('motor_angle',)

    name = doc.text(top, 'name', root) if 'name' in top else 'hand'
    design = HandDesign.from_dict({
        'name': name,
        'motor': motor_data,
        'joints': joints,
        'tendons': tendons,
        'reference_pose': {
            'motor_angle': doc.number(pose, 'motor_angle', pose_path),
            'angles': angles,
        },
    })
    return design, fields


def _locate(doc: _Document, violations: Sequence[Violation], fields: Dict[str, KeyPath]) -> Dict[str, Tuple[int, int]]:
    locations: Dict[str, Tuple[int, int]] = {}
    for violation in violations:
        name = violation.field
        # Fall back to the enclosing joint/tendon entry
        while name and name not in fields:
            name = name.rsplit('.', 1)[0] if '.' in name else ''
        if name:
            line, column = doc.location(fields[name])
            if line is not None:
                locations[violation.field] = (line, column)
    return locations


def parse_design_text(text: str, source: Optional[str] = None, validate: bool = True) -> HandDesign:
    """
    Parse a design document

    Args:
        text: YAML design text
        source: File name used in diagnostics
        validate: Apply every validate_design rule

    Returns:
        HandDesign

    Raises:
        DesignSyntaxError: malformed YAML or structure, with line and column
        DesignValidationError: design invariants broken, with field paths
    """
    doc = _Document(text, source)
    design, fields = _design_from_document(doc, doc.data)
    if validate:
        violations = validate_design(design)
        if violations:
            raise DesignValidationError(violations, source, _locate(doc, violations, fields))
    return design


def parse_design_file(path: PathLike, validate: bool = True) -> HandDesign:
    """Read and parse a design file; see parse_design_text"""
    logger.debug(f"Loading design from {path}")
    return parse_design_text(_read_text(path), str(path), validate)


def serialize_design(design: HandDesign) -> str:
    """Design as YAML text; floats are written at full precision"""
    return yaml.safe_dump(design.to_dict(), sort_keys=False, default_flow_style=None)


def write_design_file(design: HandDesign, path: PathLike) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(serialize_design(design), encoding='utf-8')
    return target


# Spring catalogs

def parse_catalog_text(text: str, source: Optional[str] = None) -> List[SpringCatalogEntry]:
    """
    Parse a spring catalog document

    Raises:
        DesignSyntaxError: malformed structure
        DesignValidationError: nonpositive stiffness or bad preload range
    """
    doc = _Document(text, source)
    top = doc.mapping(doc.data, ())
    doc.unknown_keys(top, ('springs',), ())
    entries: List[SpringCatalogEntry] = []
    violations: List[Violation] = []
    locations: Dict[str, Tuple[int, int]] = {}

    for i, item in enumerate(doc.sequence(doc.field(top, 'springs', ()), ('springs',))):
        path = ('springs', i)
        entry = doc.mapping(item, path)
        doc.unknown_keys(entry, ('stiffness', 'preload_min', 'preload_max', 'label'), path)
        spring = SpringCatalogEntry(
            stiffness=doc.number(entry, 'stiffness', path),
            preload_min=doc.number(entry, 'preload_min', path),
            preload_max=doc.number(entry, 'preload_max', path),
            label=doc.text(entry, 'label', path) if 'label' in entry else '',
        )
        where = f"springs[{i}]"
        if not spring.stiffness > 0:
            violations.append(Violation(f"{where}.stiffness", 'positive',
                                        f"stiffness must be > 0, got {spring.stiffness}"))
        if spring.preload_min < 0:
            violations.append(Violation(f"{where}.preload_min", 'nonnegative',
                                        f"preload_min must be >= 0, got {spring.preload_min}"))
        if spring.preload_min > spring.preload_max:
            violations.append(Violation(f"{where}.preload_max", 'nonempty-range',
                                        f"preload range [{spring.preload_min}, {spring.preload_max}] is empty"))
        for key in ('stiffness', 'preload_min', 'preload_max'):
            line, column = doc.location(path + (key,))
            if line is not None:
                locations[f"{where}.{key}"] = (line, column)
        entries.append(spring)

    if violations:
        raise DesignValidationError(violations, source, locations)
    return entries


def parse_catalog_file(path: PathLike) -> List[SpringCatalogEntry]:
    return parse_catalog_text(_read_text(path), str(path))


def serialize_catalog(catalog: Sequence[SpringCatalogEntry]) -> str:
    springs = [
        {'stiffness': s.stiffness, 'preload_min': s.preload_min, 'preload_max': s.preload_max, 'label': s.label}
        for s in catalog
    ]
    return yaml.safe_dump({'springs': springs}, sort_keys=False, default_flow_style=None)


# Synergy problems

def parse_problem_text(
    text: str,
    source: Optional[str] = None,
    base_dir: Optional[Path] = None,
    budget: Optional[int] = None,
    seed: Optional[int] = None,
    restarts: Optional[int] = None
) -> SynergyProblem:
    """
    Parse a synergy problem document

    The design is either inline or a path relative to the problem file.
    Targets are rows of joint angles ordered by `joints` (default: design
    joint order) or mappings of joint id to angle. budget, seed and restarts
    given here override the file.

    Raises:
        DesignSyntaxError: malformed structure
        DesignValidationError: base design or problem rules broken
    """
    doc = _Document(text, source)
    top = doc.mapping(doc.data, ())
    doc.unknown_keys(
        top,
        ('design', 'joints', 'targets', 'parameters', 'weights', 'budget', 'seed', 'restarts', 'inner_samples'),
        ()
    )

    raw_design = doc.field(top, 'design', ())
    if isinstance(raw_design, str):
        design_path = (base_dir or Path('.')) / raw_design
        design = parse_design_file(design_path)
    else:
        design, fields = _design_from_document(doc, raw_design, ('design',))
        violations = validate_design(design)
        if violations:
            raise DesignValidationError(violations, source, _locate(doc, violations, fields))

    order = list(design.joint_ids)
    if 'joints' in top:
        order = [str(j) for j in doc.sequence(top['joints'], ('joints',))]

    targets: List[Dict[str, float]] = []
    for g, row in enumerate(doc.sequence(doc.field(top, 'targets', ()), ('targets',))):
        path = ('targets', g)
        if isinstance(row, dict):
            targets.append({str(j): doc.number(row, j, path) for j in row})
            continue
        values = doc.sequence(row, path)
        if len(values) != len(order):
            raise doc.fail(path, f"expected {len(order)} angles, got {len(values)}")
        targets.append({j: doc.number(dict(enumerate(values)), k, path) for k, j in enumerate(order)})

    bounds: List[ParameterBound] = []
    for i, item in enumerate(doc.sequence(doc.field(top, 'parameters', ()), ('parameters',))):
        path = ('parameters', i)
        entry = doc.mapping(item, path)
        doc.unknown_keys(entry, ('path', 'lower', 'upper'), path)
        bounds.append(ParameterBound(
            path=doc.text(entry, 'path', path),
            lower=doc.number(entry, 'lower', path),
            upper=doc.number(entry, 'upper', path),
        ))

    weights: Dict[str, float] = {}
    if 'weights' in top:
        raw_weights = doc.mapping(top['weights'], ('weights',))
        weights = {str(j): doc.number(raw_weights, j, ('weights',)) for j in raw_weights}

    problem = SynergyProblem(
        base_design=design,
        target_grasps=tuple(targets),
        parameter_spec=tuple(bounds),
        weights=weights,
        budget=budget if budget is not None else (
            doc.integer(top, 'budget', ()) if 'budget' in top else SynergyConfig.BUDGET),
        seed=seed if seed is not None else (
            doc.integer(top, 'seed', ()) if 'seed' in top else SynergyConfig.SEED),
        restarts=restarts if restarts is not None else (
            doc.integer(top, 'restarts', ()) if 'restarts' in top else SynergyConfig.RESTARTS),
        inner_samples=doc.integer(top, 'inner_samples', ()) if 'inner_samples' in top
        else SynergyConfig.INNER_SAMPLES,
    )

    violations = validate_problem(problem)
    if violations:
        raise DesignValidationError(violations, source)
    return problem


def parse_problem_file(
    path: PathLike,
    budget: Optional[int] = None,
    seed: Optional[int] = None,
    restarts: Optional[int] = None
) -> SynergyProblem:
    problem_path = Path(path)
    return parse_problem_text(
        _read_text(problem_path), str(problem_path), problem_path.parent, budget, seed, restarts
    )
