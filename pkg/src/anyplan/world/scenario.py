"""
The anyplan.world.scenario module reads and writes scenario documents.

A scenario document is a UTF-8 JSON object validated against the packaged
JSON Schema (unknown keys are rejected), after which the domain invariants
are checked: dimensions agree, polygons are convex and counterclockwise, and
the start and every goal are in bounds and collision-free.
"""
import json
import logging
import os
from importlib import resources
from typing import Any, Dict, List, Optional

import jsonschema

from anyplan.space.domain import ContractViolation, SpaceBounds
from anyplan.world.domain import (
    Circle,
    Polygon,
    Scenario,
    WorldGeometry,
    WorldKind,
    is_valid,
    polygon_defect,
)

LOGGER = logging.getLogger(__name__)

SUITE_DIRECTORY = "suite"


class ScenarioError(ValueError):
    """
    Base class for errors raised while reading a scenario.
    """


class ScenarioParseError(ScenarioError):
    """
    Raised when a scenario document is not valid JSON or does not match the
    scenario schema.
    """

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        field: Optional[str] = None,
        source: Optional[str] = None,
    ):
        self.detail = message
        self.line = line
        self.column = column
        self.field = field
        self.source = source
        location = [source] if source is not None else []
        if line is not None:
            location.append(f"line {line} column {column}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = "".join(f"{part}: " for part in location)
        super().__init__(f"{prefix}{message}")


class ScenarioValidationError(ScenarioError):
    """
    Raised when a well-formed scenario breaks a domain invariant, such as a
    start configuration in collision.
    """

    def __init__(self, element: str, message: str):
        self.element = element
        self.detail = message
        super().__init__(f"{element}: {message}")


def _load_schema() -> Dict[str, Any]:
    text = (
        resources.files("anyplan.world")
        .joinpath("schemas/scenario.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)


_VALIDATOR = jsonschema.Draft7Validator(_load_schema())


def _field_path(error: jsonschema.ValidationError) -> str:
    path = ""
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else part)
    return path or "<document>"


def _parse(text: str) -> Dict[str, Any]:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(e.msg, line=e.lineno, column=e.colno) from e

    error = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(document))
    if error is not None:
        raise ScenarioParseError(error.message, field=_field_path(error))
    return document


def _obstacle(spec: Dict[str, Any]):
    if spec["type"] == "circle":
        return Circle(tuple(spec["center"]), spec["radius"])
    return Polygon(tuple(tuple(p) for p in spec["points"]))


def _check_dimension(element: str, values, dimension: int) -> None:
    if len(values) != dimension:
        raise ScenarioValidationError(
            element, f"expected {dimension} coordinates, got {len(values)}"
        )


def _validate(scenario: Scenario) -> None:
    world = scenario.world
    dimension = world.dimension
    _check_dimension("bounds.lower", scenario.space.lower, dimension)
    _check_dimension("bounds.upper", scenario.space.upper, dimension)

    for i, obstacle in enumerate(world.obstacles):
        if isinstance(obstacle, Polygon) and (defect := polygon_defect(obstacle)):
            raise ScenarioValidationError(f"obstacles[{i}]", f"polygon {defect}")

    checks = [("start", scenario.start_config)] + [
        (f"goals[{i}]", goal) for i, goal in enumerate(scenario.goal_configs)
    ]
    for element, config in checks:
        _check_dimension(element, config, dimension)
        if not scenario.space.contains(config):
            raise ScenarioValidationError(element, "configuration is out of bounds")
        if not is_valid(scenario, config):
            raise ScenarioValidationError(element, "configuration is in collision")


def load_scenario(text: str) -> Scenario:
    """
    Parse and validate a scenario document.

    :param text: scenario document
    :return: the validated Scenario
    :raises ScenarioParseError: on malformed JSON or schema violations
    :raises ScenarioValidationError: on broken domain invariants
    """
    document = _parse(text)
    kind = WorldKind(document["kind"])
    try:
        space = SpaceBounds(
            tuple(document["bounds"]["lower"]), tuple(document["bounds"]["upper"])
        )
    except ContractViolation as e:
        raise ScenarioValidationError("bounds", str(e)) from e

    world = WorldGeometry(
        kind=kind,
        obstacles=tuple(_obstacle(o) for o in document["obstacles"]),
        link_lengths=tuple(document.get("link_lengths", ())),
        base=tuple(document.get("base", (0.0, 0.0))),
    )
    scenario = Scenario(
        name=document["name"],
        space=space,
        world=world,
        start=tuple(document["start"]),
        goals=tuple(tuple(g) for g in document["goals"]),
        resolution=document["resolution"],
    )
    _validate(scenario)
    LOGGER.debug(
        "Loaded scenario %s: %s, %s obstacles, %s goals",
        scenario.name,
        kind.value,
        len(world.obstacles),
        len(scenario.goals),
    )
    return scenario


def dump_scenario(scenario: Scenario) -> str:
    """
    Serialise a scenario into the scenario document format.
    """
    obstacles = []
    for obstacle in scenario.world.obstacles:
        if isinstance(obstacle, Circle):
            obstacles.append(
                dict(type="circle", center=list(obstacle.center), radius=obstacle.radius)
            )
        else:
            obstacles.append(dict(type="polygon", points=[list(p) for p in obstacle.points]))

    document: Dict[str, Any] = dict(
        name=scenario.name,
        kind=scenario.world.kind.value,
        bounds=dict(lower=list(scenario.space.lower), upper=list(scenario.space.upper)),
        resolution=scenario.resolution,
        obstacles=obstacles,
        start=list(scenario.start),
        goals=[list(g) for g in scenario.goals],
    )
    if scenario.world.kind is WorldKind.PLANAR_ARM:
        document["link_lengths"] = list(scenario.world.link_lengths)
        document["base"] = list(scenario.world.base)
    return json.dumps(document, indent=2)


def read_scenario(path: str) -> Scenario:
    """
    Load a scenario from a file, naming the file in any error raised.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return load_scenario(text)
    except ScenarioError as e:
        raise _with_path(e, path) from e


def _with_path(error: ScenarioError, path: str) -> ScenarioError:
    if isinstance(error, ScenarioValidationError):
        return ScenarioValidationError(
            f"{os.path.basename(path)}:{error.element}", error.detail
        )
    return ScenarioParseError(
        error.detail,
        line=error.line,
        column=error.column,
        field=error.field,
        source=os.path.basename(path),
    )


def load_suite(directory: Optional[str] = None) -> List[Scenario]:
    """
    Load every *.json scenario in a directory, sorted by file name. The
    packaged suite is used when no directory is given.

    Every file is loaded before any is returned, so a broken file aborts the
    whole suite.
    """
    if directory is None:
        suite = resources.files("anyplan.world").joinpath(SUITE_DIRECTORY)
        entries = sorted(
            (e for e in suite.iterdir() if e.name.endswith(".json")),
            key=lambda e: e.name,
        )
        scenarios = []
        for entry in entries:
            try:
                scenarios.append(load_scenario(entry.read_text(encoding="utf-8")))
            except ScenarioError as e:
                raise _with_path(e, entry.name) from e
        return scenarios

    paths = sorted(
        os.path.join(directory, f) for f in os.listdir(directory) if f.endswith(".json")
    )
    if not paths:
        raise ScenarioValidationError(directory, "no *.json scenario files")
    return [read_scenario(p) for p in paths]
