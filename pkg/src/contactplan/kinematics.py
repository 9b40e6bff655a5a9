"""Planar serial-chain kinematics and capsule distance queries.

The arms are 4-link revolute chains moving in a horizontal plane.  Links are
modelled as capsules (segments with a radius), so a point-versus-segment
distance gives a proper signed gap for the contact model.  Joint angles are
stored un-normalised; only their sines/cosines are consumed downstream.
"""

from dataclasses import dataclass, field

import numpy as np

NUM_LINKS = 4


def _as_vec(x, n: int) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"expected shape ({n},), got {v.shape}")
    return v


@dataclass(frozen=True)
class PlanarArm:
    """A planar 4-DOF serial arm with revolute joints.

    Attributes:
        base_position: (2,) base joint position in the work plane, metres.
        link_lengths: (4,) positive link lengths, metres.
        link_radius: capsule radius used for contact gaps, metres.
        joint_angles: (4,) joint angles, radians (unbounded).
    """

    base_position: np.ndarray
    link_lengths: np.ndarray
    link_radius: float
    joint_angles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base_position", _as_vec(self.base_position, 2))
        object.__setattr__(self, "link_lengths", _as_vec(self.link_lengths, NUM_LINKS))
        object.__setattr__(self, "joint_angles", _as_vec(self.joint_angles, NUM_LINKS))
        if not np.all(self.link_lengths > 0.0):
            raise ValueError("all link lengths must be positive")
        if not self.link_radius > 0.0:
            raise ValueError("link_radius must be positive")
        if not np.all(np.isfinite(self.joint_angles)):
            raise ValueError("joint angles must be finite")
        if not np.all(np.isfinite(self.base_position)):
            raise ValueError("base position must be finite")

    def with_angles(self, joint_angles) -> "PlanarArm":
        """Same arm at a different configuration."""
        return PlanarArm(self.base_position, self.link_lengths,
                         self.link_radius, joint_angles)

    @property
    def reach(self) -> float:
        """Total stretched-out length from the base."""
        return float(np.sum(self.link_lengths))


@dataclass(frozen=True)
class LinkFrame:
    """Pose of one link: proximal joint position and accumulated angle."""

    origin: np.ndarray
    cumulative_angle: float
    link_index: int


@dataclass(frozen=True)
class Segment:
    """A 2-D line segment from ``a`` to ``b``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _as_vec(self.a, 2))
        object.__setattr__(self, "b", _as_vec(self.b, 2))

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))


@dataclass(frozen=True)
class GapResult:
    """Signed distance from a capsule surface to a point.

    ``gap`` is negative when the point penetrates the capsule.
    ``normal_angle`` is the direction of the force the point applies on the
    link: from the point toward the closest point on the link axis.
    ``axis_param`` is the closest point's parameter along the segment.
    """

    gap: float
    closest_point: np.ndarray
    normal_angle: float
    axis_param: float = field(default=0.0)


def forward_kinematics(arm: PlanarArm) -> tuple[list[LinkFrame], np.ndarray]:
    """Chain the link frames and return them plus the end-effector position.

    Frame ``i`` sits at the proximal joint of link ``i``; the end effector is
    the distal end of the last link.
    """
    angles = np.cumsum(arm.joint_angles)
    frames = []
    origin = arm.base_position.copy()
    for i in range(NUM_LINKS):
        frames.append(LinkFrame(origin=origin.copy(), cumulative_angle=float(angles[i]),
                                link_index=i))
        origin = origin + arm.link_lengths[i] * np.array(
            [np.cos(angles[i]), np.sin(angles[i])])
    return frames, origin


def end_effector(arm: PlanarArm) -> np.ndarray:
    """End-effector position only."""
    return forward_kinematics(arm)[1]


def link_segment(arm: PlanarArm, link_index: int) -> Segment:
    """Axis segment of one link at the current configuration."""
    if not 0 <= link_index < NUM_LINKS:
        raise ValueError(f"link_index must be in 0..{NUM_LINKS - 1}, got {link_index}")
    frames, ee = forward_kinematics(arm)
    a = frames[link_index].origin
    if link_index + 1 < NUM_LINKS:
        b = frames[link_index + 1].origin
    else:
        b = ee
    return Segment(a, b)


def point_on_link(arm: PlanarArm, link_index: int, point_param: float) -> np.ndarray:
    """Material point at fractional position ``point_param`` along a link."""
    seg = link_segment(arm, link_index)
    return seg.a + point_param * (seg.b - seg.a)


def point_jacobian(arm: PlanarArm, link_index: int, point_param: float) -> np.ndarray:
    """Translational Jacobian (2x4) of a material point on a link.

    Column ``j`` is the perpendicular of the lever arm from joint ``j`` to the
    point for all joints at or proximal to the link; columns for joints distal
    to the point are zero.  With ``link_index=3, point_param=1`` this is the
    end-effector Jacobian.
    """
    if not 0 <= link_index < NUM_LINKS:
        raise ValueError(f"link_index must be in 0..{NUM_LINKS - 1}, got {link_index}")
    if not 0.0 <= point_param <= 1.0:
        raise ValueError(f"point_param must be in [0, 1], got {point_param}")
    frames, ee = forward_kinematics(arm)
    seg_b = frames[link_index + 1].origin if link_index + 1 < NUM_LINKS else ee
    point = frames[link_index].origin + point_param * (seg_b - frames[link_index].origin)
    jac = np.zeros((2, NUM_LINKS))
    for j in range(link_index + 1):
        lever = point - frames[j].origin
        jac[0, j] = -lever[1]
        jac[1, j] = lever[0]
    return jac


def signed_gap(point, segment: Segment, link_radius: float) -> GapResult:
    """Signed distance between a point and a link capsule.

    Returns the gap (point-to-axis distance minus the radius), the closest
    point on the axis, and the angle of the force the point would apply on
    the link.  Negative gap means penetration.
    """
    point = _as_vec(point, 2)
    edge = segment.b - segment.a
    length_sq = float(edge @ edge)
    if length_sq <= 0.0:
        raise ValueError("segment must have positive length")
    t = float(np.clip((point - segment.a) @ edge / length_sq, 0.0, 1.0))
    closest = segment.a + t * edge
    toward_axis = closest - point
    dist = float(np.linalg.norm(toward_axis))
    if dist > 0.0:
        normal_angle = float(np.arctan2(toward_axis[1], toward_axis[0]))
    else:
        # Point exactly on the axis: fall back to the left perpendicular of
        # the segment direction so the result stays deterministic.
        perp = np.array([-edge[1], edge[0]]) / np.sqrt(length_sq)
        normal_angle = float(np.arctan2(perp[1], perp[0]))
    return GapResult(gap=dist - link_radius, closest_point=closest,
                     normal_angle=normal_angle, axis_param=t)
