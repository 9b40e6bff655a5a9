"""Support-contact candidates and complementarity bookkeeping.

Candidate contacts pair a port-edge point with one arm link (the second link
by default).  A contact carries a gap, a force magnitude, and the normal
angle of the force the edge applies on the link.  Forces are admissible only
when gaps are closed, up to the configured slack: gap >= 0, force >= 0 and
force . gap <= slack.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import kinematics as kin


@dataclass(frozen=True)
class ContactCandidate:
    """A potential support contact: one port-edge point against one link."""

    arm_index: int
    edge_point: np.ndarray
    plane_height: float
    link_index: int = 1

    def __post_init__(self):
        point = np.asarray(self.edge_point, dtype=float)
        if point.shape != (2,):
            raise ValueError("edge_point must be a 2-vector")
        object.__setattr__(self, "edge_point", point)
        if self.arm_index not in (0, 1):
            raise ValueError("arm_index must be 0 or 1")
        if not 0 <= self.link_index < kin.NUM_LINKS:
            raise ValueError("link_index out of range")


@dataclass(frozen=True)
class ContactState:
    """Evaluated contact: geometry plus (optionally) a force magnitude."""

    candidate: ContactCandidate
    gap: float
    normal_angle: float
    contact_point: np.ndarray
    axis_param: float
    force_magnitude: float = 0.0

    def with_force(self, force_magnitude: float) -> "ContactState":
        return replace(self, force_magnitude=float(force_magnitude))


def evaluate_gaps(arms, candidates) -> list[ContactState]:
    """Gap and normal for every candidate at the arms' current configuration.

    ``contact_point`` is the point on the capsule surface closest to the edge
    point (equal to the edge point itself at zero gap).  Force magnitudes are
    left at zero.  The normal angle varies smoothly with the arm pose except
    when the closest point jumps between a link's interior and an endpoint.
    """
    states = []
    for cand in candidates:
        arm = arms[cand.arm_index]
        seg = kin.link_segment(arm, cand.link_index)
        res = kin.signed_gap(cand.edge_point, seg, arm.link_radius)
        toward_axis = res.closest_point - cand.edge_point
        dist = np.linalg.norm(toward_axis)
        if dist > 0.0:
            surface = res.closest_point - arm.link_radius * toward_axis / dist
        else:
            surface = res.closest_point
        states.append(ContactState(candidate=cand, gap=res.gap,
                                   normal_angle=res.normal_angle,
                                   contact_point=surface,
                                   axis_param=res.axis_param))
    return states


def select_active_candidates(arms, edge_points_per_arm, plane_height: float,
                             link_index: int = 1) -> list[ContactCandidate]:
    """Pick one active candidate per arm: the edge with the smaller gap.

    Ties break toward the edge with the smaller x-coordinate, which keeps
    re-planning deterministic.
    """
    active = []
    for arm_index, edges in enumerate(edge_points_per_arm):
        candidates = [ContactCandidate(arm_index=arm_index, edge_point=e,
                                       plane_height=plane_height,
                                       link_index=link_index)
                      for e in edges]
        states = evaluate_gaps(arms, candidates)
        best = min(range(len(states)),
                   key=lambda i: (states[i].gap, candidates[i].edge_point[0]))
        active.append(candidates[best])
    return active


def complementarity_residual(phi, gamma, slack: float,
                             tol_gap: float = 1e-6, tol_force: float = 1e-9,
                             tol_comp: float = 1e-9) -> tuple[bool, float]:
    """Check the relaxed complementarity conditions.

    Feasible iff gaps >= -tol_gap, forces >= -tol_force, slack >= -tol_force
    and slack - gamma . phi >= -tol_comp.  Returns (feasible, violation)
    where violation is the largest constraint shortfall (0 when feasible).
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    violation = 0.0
    feasible = True
    checks = [
        (float(np.min(phi, initial=0.0)), -tol_gap),
        (float(np.min(gamma, initial=0.0)), -tol_force),
        (float(slack), -tol_force),
        (float(slack - gamma @ phi), -tol_comp),
    ]
    for value, lower in checks:
        if value < lower:
            feasible = False
        violation = max(violation, -value if value < 0.0 else 0.0)
    return feasible, violation


def support_force_vector(force_magnitude: float, normal_angle: float,
                         scale: float = 1.0) -> np.ndarray:
    """Planar support force as a 3-vector (zero z-component).

    ``scale`` rescales the magnitude; the default of 1 makes the magnitude
    the full normal force, which keeps the force balance consistent.
    """
    if force_magnitude < 0.0:
        raise ValueError("force magnitude must be non-negative")
    return scale * force_magnitude * np.array(
        [np.cos(normal_angle), np.sin(normal_angle), 0.0])
