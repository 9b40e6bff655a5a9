"""Scenario description: geometry, masses, task, and solver settings.

A scenario is a nested key/value YAML file; every omitted key falls back to
the built-in default experiment (a 54 kg dual-arm robot sliding a 12 kg bar
40 cm forward through two glovebox ports).  Unknown keys are hard errors so
typos cannot silently change an experiment.

Sections and keys (SI units throughout):

    robot:
      torso_mass            kg, default 40.0
      torso_position        [x, y, z] m, default [0, 0, 0.5]
      link_mass             kg per link (8 links), default 1.75
      arm_base_left         [x, y] m, default [-0.20, 0.0]
      arm_base_right        [x, y] m, default [0.20, 0.0]
      link_lengths          4 floats, m, default [0.30, 0.30, 0.30, 0.20]
      link_radius           m, default 0.04
    glovebox:
      plane_height          m, default 0.90
      port_edges_left       two [x, y] points, default [[-0.275, 0.30], [-0.525, 0.30]]
      port_edges_right      two [x, y] points, default [[0.275, 0.30], [0.525, 0.30]]
    object:
      mass                  kg, default 12.0
      bar_length            m, default 0.60
      initial_center        [x, y] m, default [0.0, 0.45]
      grasp_offsets         two floats, m along the bar, default [-0.30, 0.30]
    balance:
      sp_polygon            convex CCW vertices, default 0.40 x 0.32 rectangle
      sp_center             [x, y] m, default [0.0, 0.0]
      safe_radius           m, default 0.15
      object_radius         m, default 0.10
    task:
      path_direction        [x, y], default [0.0, 1.0] (normalized on load)
      path_length           m, default 0.40
      waypoint_count        int >= 1, default 9
      object_wrench         6 floats, default [0, 10, -117.72, 0, 0, 0]
                            (the load wrench the object transmits to the hands)
    weights:
      position              default 1.0e3
      displacement          default 1.0e2
      slack                 default 1.0e6
    contact:
      link_index            which link touches the ports, default 1
      support_force_scale   scale on the planar support force, default 1.0
    solver:
      tol_kkt, tol_con, max_iterations, armijo_c1, backtrack_ratio,
      fd_step, penalty_growth, slack_max  (see SolverSettings defaults)
    gravity:                m/s^2, default 9.81

The environment variable ``CONTACTPLAN_SCENARIO_DIR`` names a directory that
relative scenario paths are resolved against when they do not exist locally.
"""

import os
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np
import yaml

from .errors import ScenarioError
from .kinematics import NUM_LINKS, PlanarArm
from .sqp import SolverSettings
from .statics import RobotMassModel, RobotStaticsState, robot_center_of_mass

_DEFAULTS = {
    "robot": {
        "torso_mass": 40.0,
        "torso_position": [0.0, 0.0, 0.5],
        "link_mass": 1.75,
        "arm_base_left": [-0.20, 0.0],
        "arm_base_right": [0.20, 0.0],
        "link_lengths": [0.30, 0.30, 0.30, 0.20],
        "link_radius": 0.04,
    },
    "glovebox": {
        "plane_height": 0.90,
        "port_edges_left": [[-0.275, 0.30], [-0.525, 0.30]],
        "port_edges_right": [[0.275, 0.30], [0.525, 0.30]],
    },
    "object": {
        "mass": 12.0,
        "bar_length": 0.60,
        "initial_center": [0.0, 0.45],
        "grasp_offsets": None,  # defaults to +/- bar_length / 2
    },
    "balance": {
        "sp_polygon": [[-0.20, -0.16], [0.20, -0.16], [0.20, 0.16], [-0.20, 0.16]],
        "sp_center": [0.0, 0.0],
        "safe_radius": 0.15,
        "object_radius": 0.10,
    },
    "task": {
        "path_direction": [0.0, 1.0],
        "path_length": 0.40,
        "waypoint_count": 9,
        "object_wrench": [0.0, 10.0, -117.72, 0.0, 0.0, 0.0],
    },
    "weights": {
        "position": 1.0e3,
        "displacement": 1.0e2,
        "slack": 1.0e6,
    },
    "contact": {
        "link_index": 1,
        "support_force_scale": 1.0,
    },
    "solver": {
        "tol_kkt": 1e-6,
        "tol_con": 1e-6,
        "max_iterations": 200,
        "armijo_c1": 1e-4,
        "backtrack_ratio": 0.5,
        "fd_step": 1e-6,
        "penalty_growth": 2.0,
        "slack_max": 1e-4,
    },
    "gravity": 9.81,
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, immutable description of one experiment."""

    torso_mass: float
    torso_position: np.ndarray
    link_mass: float
    arm_bases: np.ndarray          # (2, 2): left, right
    link_lengths: np.ndarray       # (4,)
    link_radius: float
    plane_height: float
    port_edges: np.ndarray         # (2, 2, 2): per arm, two edge points
    object_mass: float
    bar_length: float
    initial_center: np.ndarray     # (2,)
    grasp_offsets: np.ndarray      # (2,) along the bar x-axis
    sp_polygon: np.ndarray
    sp_center: np.ndarray
    safe_radius: float
    object_radius: float
    path_direction: np.ndarray     # (2,), unit
    path_length: float
    waypoint_count: int
    object_wrench: np.ndarray      # (6,)
    weight_position: float
    weight_displacement: float
    weight_slack: float
    contact_link_index: int
    support_force_scale: float
    solver: SolverSettings
    gravity: float

    @property
    def grasp_separation(self) -> float:
        return float(self.grasp_offsets[1] - self.grasp_offsets[0])

    @property
    def mass_model(self) -> RobotMassModel:
        return RobotMassModel(torso_mass=self.torso_mass,
                              torso_position=self.torso_position,
                              link_mass=self.link_mass)

    @property
    def robot_mass(self) -> float:
        return self.mass_model.total_mass(2 * NUM_LINKS)

    def arm(self, arm_index: int, joint_angles) -> PlanarArm:
        return PlanarArm(base_position=self.arm_bases[arm_index],
                         link_lengths=self.link_lengths,
                         link_radius=self.link_radius,
                         joint_angles=joint_angles)

    def grasp_points(self, object_center) -> np.ndarray:
        """World positions of the two grasp points for a bar centre."""
        center = np.asarray(object_center, dtype=float)
        return np.array([center + [self.grasp_offsets[0], 0.0],
                         center + [self.grasp_offsets[1], 0.0]])

    def statics_state(self, arms) -> RobotStaticsState:
        """Balance state for a pair of arms at their current configuration."""
        com = robot_center_of_mass(self.mass_model, arms, self.plane_height)
        return RobotStaticsState(
            total_mass=self.robot_mass, com=com, sp_center=self.sp_center,
            sp_polygon=self.sp_polygon, safe_radius=self.safe_radius,
            gravity=np.array([0.0, 0.0, -self.gravity]))

    def waypoints(self) -> np.ndarray:
        """Equally spaced waypoints from the initial centre, inclusive."""
        if self.waypoint_count == 1:
            return self.initial_center[None, :].copy()
        steps = np.arange(self.waypoint_count) / (self.waypoint_count - 1)
        return self.initial_center + np.outer(steps * self.path_length,
                                              self.path_direction)

    def to_dict(self) -> dict:
        """Plain nested dict in the scenario-file schema (round-trips)."""
        solver = {f.name: getattr(self.solver, f.name)
                  for f in dataclass_fields(SolverSettings)}
        return {
            "robot": {
                "torso_mass": self.torso_mass,
                "torso_position": self.torso_position.tolist(),
                "link_mass": self.link_mass,
                "arm_base_left": self.arm_bases[0].tolist(),
                "arm_base_right": self.arm_bases[1].tolist(),
                "link_lengths": self.link_lengths.tolist(),
                "link_radius": self.link_radius,
            },
            "glovebox": {
                "plane_height": self.plane_height,
                "port_edges_left": self.port_edges[0].tolist(),
                "port_edges_right": self.port_edges[1].tolist(),
            },
            "object": {
                "mass": self.object_mass,
                "bar_length": self.bar_length,
                "initial_center": self.initial_center.tolist(),
                "grasp_offsets": self.grasp_offsets.tolist(),
            },
            "balance": {
                "sp_polygon": self.sp_polygon.tolist(),
                "sp_center": self.sp_center.tolist(),
                "safe_radius": self.safe_radius,
                "object_radius": self.object_radius,
            },
            "task": {
                "path_direction": self.path_direction.tolist(),
                "path_length": self.path_length,
                "waypoint_count": self.waypoint_count,
                "object_wrench": self.object_wrench.tolist(),
            },
            "weights": {
                "position": self.weight_position,
                "displacement": self.weight_displacement,
                "slack": self.weight_slack,
            },
            "contact": {
                "link_index": self.contact_link_index,
                "support_force_scale": self.support_force_scale,
            },
            "solver": solver,
            "gravity": self.gravity,
        }


def _merge(defaults: dict, overrides: dict, path: str = "") -> dict:
    merged = {}
    for key, default in defaults.items():
        full = f"{path}.{key}" if path else key
        if key in overrides:
            value = overrides[key]
            if isinstance(default, dict):
                if not isinstance(value, dict):
                    raise ScenarioError(f"{full} must be a mapping")
                merged[key] = _merge(default, value, full)
            else:
                merged[key] = value
        else:
            merged[key] = default if not isinstance(default, dict) \
                else _merge(default, {}, full)
    for key in overrides:
        if key not in defaults:
            full = f"{path}.{key}" if path else key
            raise ScenarioError(f"unknown key: {full}")
    return merged


def _vec(raw, n: int, key: str) -> np.ndarray:
    try:
        v = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{key} must be a list of {n} numbers") from exc
    if v.shape != (n,):
        raise ScenarioError(f"{key} must have {n} entries, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ScenarioError(f"{key} must be finite")
    return v


def _positive(raw, key: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{key} must be a number") from exc
    if not value > 0.0:
        raise ScenarioError(f"{key} must be > 0")
    return value


def _from_dict(data: dict) -> ScenarioConfig:
    robot = data["robot"]
    glovebox = data["glovebox"]
    obj = data["object"]
    balance = data["balance"]
    task = data["task"]
    weights = data["weights"]
    contact = data["contact"]

    bar_length = _positive(obj["bar_length"], "object.bar_length")
    grasp_offsets = obj["grasp_offsets"]
    if grasp_offsets is None:
        grasp_offsets = [-bar_length / 2.0, bar_length / 2.0]
    grasp_offsets = _vec(grasp_offsets, 2, "object.grasp_offsets")
    if not grasp_offsets[1] > grasp_offsets[0]:
        raise ScenarioError("object.grasp_offsets must be increasing")

    link_lengths = _vec(robot["link_lengths"], NUM_LINKS, "robot.link_lengths")
    if not np.all(link_lengths > 0.0):
        raise ScenarioError("robot.link_lengths must be > 0")

    port_edges = []
    for side in ("left", "right"):
        raw = glovebox[f"port_edges_{side}"]
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise ScenarioError(f"glovebox.port_edges_{side} must list two points")
        port_edges.append([_vec(p, 2, f"glovebox.port_edges_{side}[{i}]")
                           for i, p in enumerate(raw)])

    direction = _vec(task["path_direction"], 2, "task.path_direction")
    norm = float(np.linalg.norm(direction))
    if norm <= 0.0:
        raise ScenarioError("task.path_direction must be nonzero")

    waypoint_count = task["waypoint_count"]
    if not isinstance(waypoint_count, int) or waypoint_count < 1:
        raise ScenarioError("task.waypoint_count must be an integer >= 1")

    link_index = contact["link_index"]
    if not isinstance(link_index, int) or not 0 <= link_index < NUM_LINKS:
        raise ScenarioError(f"contact.link_index must be in 0..{NUM_LINKS - 1}")

    try:
        solver = SolverSettings(**data["solver"])
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"solver: {exc}") from exc

    config = ScenarioConfig(
        torso_mass=_positive(robot["torso_mass"], "robot.torso_mass"),
        torso_position=_vec(robot["torso_position"], 3, "robot.torso_position"),
        link_mass=_positive(robot["link_mass"], "robot.link_mass"),
        arm_bases=np.array([_vec(robot["arm_base_left"], 2, "robot.arm_base_left"),
                            _vec(robot["arm_base_right"], 2, "robot.arm_base_right")]),
        link_lengths=link_lengths,
        link_radius=_positive(robot["link_radius"], "robot.link_radius"),
        plane_height=_positive(glovebox["plane_height"], "glovebox.plane_height"),
        port_edges=np.array(port_edges),
        object_mass=_positive(obj["mass"], "object.mass"),
        bar_length=bar_length,
        initial_center=_vec(obj["initial_center"], 2, "object.initial_center"),
        grasp_offsets=grasp_offsets,
        sp_polygon=np.asarray(balance["sp_polygon"], dtype=float),
        sp_center=_vec(balance["sp_center"], 2, "balance.sp_center"),
        safe_radius=_positive(balance["safe_radius"], "balance.safe_radius"),
        object_radius=_positive(balance["object_radius"], "balance.object_radius"),
        path_direction=direction / norm,
        path_length=float(task["path_length"]),
        waypoint_count=waypoint_count,
        object_wrench=_vec(task["object_wrench"], 6, "task.object_wrench"),
        weight_position=_positive(weights["position"], "weights.position"),
        weight_displacement=_positive(weights["displacement"], "weights.displacement"),
        weight_slack=_positive(weights["slack"], "weights.slack"),
        contact_link_index=link_index,
        support_force_scale=float(contact["support_force_scale"]),
        solver=solver,
        gravity=_positive(data["gravity"], "gravity"),
    )
    _validate(config)
    return config


def _validate(config: ScenarioConfig) -> None:
    if config.path_length < 0.0:
        raise ScenarioError("task.path_length must be >= 0")
    # The statics state constructor checks the polygon and the safe circle.
    try:
        arms = [config.arm(i, np.zeros(NUM_LINKS)) for i in range(2)]
        config.statics_state(arms)
    except ValueError as exc:
        raise ScenarioError(f"balance: {exc}") from exc
    # Both grasp points must be reachable at every waypoint.
    reach = float(np.sum(config.link_lengths))
    for index, waypoint in enumerate(config.waypoints()):
        for arm_index in range(2):
            grasp = waypoint + np.array([config.grasp_offsets[arm_index], 0.0])
            dist = float(np.linalg.norm(grasp - config.arm_bases[arm_index]))
            if dist > reach:
                raise ScenarioError(
                    f"waypoint {index} grasp point is out of reach for arm "
                    f"{arm_index} ({dist:.3f} m > {reach:.3f} m)")


def default_scenario() -> ScenarioConfig:
    """The built-in experiment with all default constants."""
    return _from_dict(_merge(_DEFAULTS, {}))


def load_scenario(path: str) -> ScenarioConfig:
    """Load and validate a scenario file.

    An empty file yields the full default scenario.  Relative paths that do
    not exist are retried against ``$CONTACTPLAN_SCENARIO_DIR``.
    """
    resolved = path
    if not os.path.exists(resolved) and not os.path.isabs(resolved):
        base = os.environ.get("CONTACTPLAN_SCENARIO_DIR")
        if base:
            candidate = os.path.join(base, resolved)
            if os.path.exists(candidate):
                resolved = candidate
    try:
        with open(resolved, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse scenario file {path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ScenarioError(f"scenario file {path} must contain a mapping")
    return _from_dict(_merge(_DEFAULTS, raw))


def save_scenario(config: ScenarioConfig, path: str) -> None:
    """Serialize a config so that loading it back gives an identical config."""
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(config.to_dict(), handle, sort_keys=False)
