"""Prioritized joint torques: support forces first, object wrench second.

The support-force torques are computed from the contact-point Jacobians; the
torques for the desired object wrench are projected into the null space of
the stacked support Jacobian, so realizing the object wrench can never
disturb the planned support forces.  Everything here is planar: only the x
and y force components of each distributed contact wrench act on the 2x4
arm Jacobians, while z components are reacted by the elevated work plane.
"""

from dataclasses import dataclass

import numpy as np

from . import kinematics as kin
from .contact import support_force_vector
from .statics import GraspMap, distribute_object_wrench

NUM_JOINTS = 2 * kin.NUM_LINKS

# Contacts with a force magnitude below this carry no support priority.
ACTIVE_FORCE_TOL = 1e-6


@dataclass(frozen=True)
class TorqueCommand:
    """Combined torques plus the pieces they were assembled from."""

    torques: np.ndarray              # tau = support + projected object part
    support_torques: np.ndarray
    object_torques_projected: np.ndarray
    realized_support_forces: tuple   # per active contact, 3-vector


def pseudo_inverse(matrix, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values below ``tol`` times the largest are treated as zero.
    """
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix entries must be finite")
    u, sigma, vt = np.linalg.svd(matrix, full_matrices=False)
    cutoff = tol * (sigma[0] if sigma.size else 0.0)
    inv_sigma = np.array([1.0 / s if s > cutoff else 0.0 for s in sigma])
    return vt.T @ np.diag(inv_sigma) @ u.T


def object_wrench_torques(arms, grasp: GraspMap, h_o) -> np.ndarray:
    """Joint torques that generate the object wrench through the hands.

    The object wrench is distributed to the contacts by the grasp-map
    pseudo-inverse; each contact's planar force components load that arm's
    end-effector Jacobian.
    """
    h_c = distribute_object_wrench(grasp, h_o)
    torques = np.zeros(NUM_JOINTS)
    for arm_index, arm in enumerate(arms):
        force_xy = h_c[6 * arm_index:6 * arm_index + 2]
        jac = kin.point_jacobian(arm, kin.NUM_LINKS - 1, 1.0)
        torques[4 * arm_index:4 * arm_index + 4] = jac.T @ force_xy
    return torques


def _contact_jacobian(arms, contact) -> np.ndarray:
    """Jacobian (2x4) at a contact's material point on its link.

    Raises:
        ValueError: the stored contact point does not lie on the referenced
            link's capsule surface.
    """
    cand = contact.candidate
    arm = arms[cand.arm_index]
    seg = kin.link_segment(arm, cand.link_index)
    res = kin.signed_gap(contact.contact_point, seg, arm.link_radius)
    # A point on the capsule surface sits at zero signed gap.
    if abs(res.gap) > 1e-6:
        raise ValueError(
            f"contact point {contact.contact_point} is not on link "
            f"{cand.link_index} of arm {cand.arm_index} (gap {res.gap:.3g})")
    return kin.point_jacobian(arm, cand.link_index, res.axis_param)


def support_force_vectors(contacts, scale: float = 1.0) -> list[np.ndarray]:
    return [support_force_vector(c.force_magnitude, c.normal_angle, scale)
            for c in contacts]


def support_torques(arms, contacts, scale: float = 1.0) -> np.ndarray:
    """Joint torques generating the planar support forces at the contacts."""
    torques = np.zeros(NUM_JOINTS)
    for contact, force in zip(contacts, support_force_vectors(contacts, scale)):
        jac = _contact_jacobian(arms, contact)
        arm_index = contact.candidate.arm_index
        torques[4 * arm_index:4 * arm_index + 4] += jac.T @ force[:2]
    return torques


def stacked_support_jacobian(arms, contacts) -> np.ndarray:
    """Support Jacobian with one 2-row block per active contact (8 columns).

    Contacts whose force magnitude is below ``ACTIVE_FORCE_TOL`` do not
    constrain the torque null space.
    """
    blocks = []
    for contact in contacts:
        if contact.force_magnitude <= ACTIVE_FORCE_TOL:
            continue
        jac = _contact_jacobian(arms, contact)
        row = np.zeros((2, NUM_JOINTS))
        arm_index = contact.candidate.arm_index
        row[:, 4 * arm_index:4 * arm_index + 4] = jac
        blocks.append(row)
    if not blocks:
        return np.zeros((0, NUM_JOINTS))
    return np.vstack(blocks)


def nullspace_projector(j_support: np.ndarray) -> np.ndarray:
    """Projector onto torque directions that leave support forces untouched:
    I - J' (J')+."""
    j_support = np.atleast_2d(np.asarray(j_support, dtype=float))
    if j_support.shape[0] == 0 or not np.any(j_support):
        return np.eye(NUM_JOINTS)
    jt = j_support.T
    return np.eye(NUM_JOINTS) - jt @ pseudo_inverse(jt)


def combined_torques(arms, contacts, grasp: GraspMap, h_o,
                     scale: float = 1.0) -> TorqueCommand:
    """Support torques plus the null-space projected object-wrench torques.

    When the transposed support Jacobian has full column rank, recovering
    forces from the combined torques by its pseudo-inverse returns exactly
    the planned support forces: the projection cannot leak into them.
    """
    tau_support = support_torques(arms, contacts, scale)
    tau_object = object_wrench_torques(arms, grasp, h_o)
    j_support = stacked_support_jacobian(arms, contacts)
    projector = nullspace_projector(j_support)
    tau_object_projected = projector @ tau_object
    tau = tau_support + tau_object_projected

    realized = []
    if j_support.shape[0]:
        recovered = pseudo_inverse(j_support.T) @ tau
        for i in range(j_support.shape[0] // 2):
            realized.append(np.array([recovered[2 * i], recovered[2 * i + 1],
                                      0.0]))
    return TorqueCommand(torques=tau, support_torques=tau_support,
                         object_torques_projected=tau_object_projected,
                         realized_support_forces=tuple(realized))
