"""Per-waypoint planning: the relaxed complementarity NLP and the path loop.

Each waypoint is planned by one NLP over the decision vector

    x = [dtheta (8), gamma (2), s (1)]

where dtheta are joint displacements for both arms (left then right), gamma
are the support-force magnitudes of the two active contact candidates, and s
is the complementarity relaxation slack.  The cost weighs object-position
error, joint displacement, and the slack; the constraints keep the grasp
closed, the forces admissible (gamma, s >= 0, gamma . phi <= s, phi >= 0),
the ZMP inside the safe circle, and the object within its allowed deviation.
All constraints are evaluated at the post-step configuration theta + dtheta.

The object is a rigid bar held at both ends: the grasp equality fixes the
end-effector difference to the bar's span (orientation locked to the x-axis)
and the object position is the midpoint of the end effectors.  The load
wrench is distributed to the hands through the grasp map pseudo-inverse and
enters the balance at the end effectors; support forces enter at the port
edges.  Every constraint Jacobian is analytic (the ZMP row differentiates
the closed-form moment balance); ``gradient_check`` validates them against
central finite differences.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import contact as ct
from . import kinematics as kin
from . import statics as st
from .errors import PlanStepError, ReachabilityError
from .scenario import ScenarioConfig
from .sqp import NlpProblem, SolverSettings, finite_difference_jacobian, solve_sqp

NUM_JOINTS = 2 * kin.NUM_LINKS
NUM_CONTACTS = 2
DECISION_DIM = NUM_JOINTS + NUM_CONTACTS + 1

# Smoothing for norm-type constraint rows: keeps the gradient defined when a
# point sits exactly on its target while shifting values by less than 1e-12.
_NORM_EPS = 1e-12


@dataclass(frozen=True)
class PlanningProblem:
    """Weights and targets of one waypoint solve."""

    weight_position: float
    weight_displacement: float
    weight_slack: float
    safe_radius: float
    object_radius: float
    target_object_position: np.ndarray
    zmp_target: np.ndarray
    grasp_separation: float

    def __post_init__(self):
        for name in ("weight_position", "weight_displacement", "weight_slack",
                     "safe_radius", "object_radius"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "target_object_position",
                           np.asarray(self.target_object_position, dtype=float))
        object.__setattr__(self, "zmp_target",
                           np.asarray(self.zmp_target, dtype=float))


@dataclass(frozen=True)
class PlanDecision:
    """NLP decision variables plus solver diagnostics."""

    dtheta: np.ndarray
    gamma: np.ndarray
    slack: float
    cost: float = float("nan")
    kkt_residual: float = float("nan")
    iterations: int = 0
    converged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dtheta",
                           np.asarray(self.dtheta, dtype=float))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        if self.dtheta.shape != (NUM_JOINTS,):
            raise ValueError(f"dtheta must have shape ({NUM_JOINTS},)")
        if self.gamma.shape != (NUM_CONTACTS,):
            raise ValueError(f"gamma must have shape ({NUM_CONTACTS},)")

    @staticmethod
    def zeros() -> "PlanDecision":
        return PlanDecision(dtheta=np.zeros(NUM_JOINTS),
                            gamma=np.zeros(NUM_CONTACTS), slack=0.0)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.dtheta, self.gamma, [self.slack]])

    @staticmethod
    def from_vector(x, **diag) -> "PlanDecision":
        x = np.asarray(x, dtype=float)
        return PlanDecision(dtheta=x[:NUM_JOINTS],
                            gamma=x[NUM_JOINTS:NUM_JOINTS + NUM_CONTACTS],
                            slack=float(x[-1]), **diag)


@dataclass(frozen=True)
class StepContext:
    """Scenario state a single waypoint solve works against."""

    config: ScenarioConfig
    theta: np.ndarray                      # (8,) current joint angles
    candidates: tuple                      # one active ContactCandidate per arm

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        if self.theta.shape != (NUM_JOINTS,):
            raise ValueError(f"theta must have shape ({NUM_JOINTS},)")

    def arms_at(self, dtheta=None) -> tuple:
        theta = self.theta if dtheta is None else self.theta + dtheta
        return (self.config.arm(0, theta[:kin.NUM_LINKS]),
                self.config.arm(1, theta[kin.NUM_LINKS:]))


@dataclass(frozen=True)
class PlanStep:
    """Accepted result of one waypoint: new configuration and observables."""

    waypoint: np.ndarray
    decision: PlanDecision
    theta_after: np.ndarray
    object_position: np.ndarray
    contacts: tuple
    zmp: st.ZmpResult
    fzmp: st.ZmpResult


def build_context(config: ScenarioConfig, theta) -> StepContext:
    """Select the active port edges at ``theta`` and freeze them for a solve."""
    arms = (config.arm(0, np.asarray(theta)[:kin.NUM_LINKS]),
            config.arm(1, np.asarray(theta)[kin.NUM_LINKS:]))
    candidates = ct.select_active_candidates(
        arms, config.port_edges, config.plane_height,
        link_index=config.contact_link_index)
    return StepContext(config=config, theta=np.asarray(theta, dtype=float),
                       candidates=tuple(candidates))


def problem_for_waypoint(config: ScenarioConfig, waypoint) -> PlanningProblem:
    return PlanningProblem(
        weight_position=config.weight_position,
        weight_displacement=config.weight_displacement,
        weight_slack=config.weight_slack,
        safe_radius=config.safe_radius,
        object_radius=config.object_radius,
        target_object_position=waypoint,
        zmp_target=config.sp_center,
        grasp_separation=config.grasp_separation)


# ---------------------------------------------------------------------------
# Kinematic and statics chains with analytic derivatives
# ---------------------------------------------------------------------------

def _embed(jac: np.ndarray, arm_index: int) -> np.ndarray:
    """Lift a per-arm 2x4 Jacobian into the 8 joint columns."""
    out = np.zeros((jac.shape[0], NUM_JOINTS))
    cols = slice(0, kin.NUM_LINKS) if arm_index == 0 else \
        slice(kin.NUM_LINKS, NUM_JOINTS)
    out[:, cols] = jac
    return out


def _smooth_norm(v: np.ndarray) -> tuple[float, np.ndarray]:
    """sqrt(|v|^2 + eps^2) - eps and its gradient (zero at v = 0)."""
    root = float(np.sqrt(v @ v + _NORM_EPS * _NORM_EPS))
    return root - _NORM_EPS, v / root


def _end_effectors(arms) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    ee0 = kin.end_effector(arms[0])
    ee1 = kin.end_effector(arms[1])
    j0 = _embed(kin.point_jacobian(arms[0], kin.NUM_LINKS - 1, 1.0), 0)
    j1 = _embed(kin.point_jacobian(arms[1], kin.NUM_LINKS - 1, 1.0), 1)
    return ee0, ee1, j0, j1


def _contact_geometry(arm, candidate) -> dict:
    """Gap, normal angle, and their joint gradients for one candidate.

    The closest-point parameter along the link both moves the material point
    and slides along the axis; the sliding term vanishes from the gap
    gradient (the axis direction is orthogonal to the separation) but not
    from the normal-angle gradient.
    """
    link = candidate.link_index
    frames, ee = kin.forward_kinematics(arm)
    a = frames[link].origin
    b = frames[link + 1].origin if link + 1 < kin.NUM_LINKS else ee
    jac_a = kin.point_jacobian(arm, link, 0.0)
    jac_b = kin.point_jacobian(arm, link, 1.0)
    edge = candidate.edge_point
    seg = b - a
    len_sq = float(seg @ seg)
    t_raw = float((edge - a) @ seg) / len_sq
    t = min(max(t_raw, 0.0), 1.0)
    closest = a + t * seg
    d_closest = (1.0 - t) * jac_a + t * jac_b
    if 0.0 < t_raw < 1.0:
        dt = (-(seg @ jac_a) + (edge - a) @ (jac_b - jac_a)) / len_sq
        d_closest = d_closest + np.outer(seg, dt)
    v = closest - edge
    dist = float(np.linalg.norm(v))
    dist = max(dist, 1e-12)
    gap = dist - arm.link_radius
    d_gap = (v / dist) @ d_closest
    beta = float(np.arctan2(v[1], v[0]))
    d_beta = (v[0] * d_closest[1] - v[1] * d_closest[0]) / (dist * dist)
    return {"gap": gap, "beta": beta, "d_gap": d_gap, "d_beta": d_beta,
            "closest": closest, "t": t}


def _grasp_distribution(ctx: StepContext, ee0, ee1, j0, j1):
    """Per-hand load forces from the object wrench, with joint gradients.

    Returns forces (2, 3) and d_forces (2, 3, 8).  The pseudo-inverse of the
    grasp map is differentiated through W+ = W' (W W')^-1.
    """
    h_o = ctx.config.object_wrench
    plane = ctx.config.plane_height
    origin = 0.5 * (ee0 + ee1)
    p0 = np.array([ee0[0], ee0[1], plane])
    p1 = np.array([ee1[0], ee1[1], plane])
    o3 = np.array([origin[0], origin[1], plane])
    grasp = st.GraspMap(r_c1=o3 - p0, r_c2=o3 - p1)
    w = grasp.w_c
    s_mat = w @ w.T
    h_c = w.T @ np.linalg.solve(s_mat, h_o)

    dr0 = np.zeros((3, NUM_JOINTS))
    dr0[:2] = 0.5 * (j1 - j0)
    dr1 = -dr0

    forces = np.array([h_c[0:3], h_c[6:9]])
    d_forces = np.zeros((2, 3, NUM_JOINTS))
    s_inv_h = np.linalg.solve(s_mat, h_o)
    for j in range(NUM_JOINTS):
        dw = np.zeros((6, 12))
        dw[3:, 0:3] = -st.skew(dr0[:, j])
        dw[3:, 6:9] = -st.skew(dr1[:, j])
        ds = dw @ w.T + w @ dw.T
        dh = dw.T @ s_inv_h + w.T @ np.linalg.solve(s_mat, -(ds @ s_inv_h))
        d_forces[0, :, j] = dh[0:3]
        d_forces[1, :, j] = dh[6:9]
    return forces, d_forces


def _com_with_grads(ctx: StepContext, arms):
    """Centre of mass and its (3, 8) joint gradient (z fixed)."""
    model = ctx.config.mass_model
    total = ctx.config.robot_mass
    com = st.robot_center_of_mass(model, arms, ctx.config.plane_height)
    d_com = np.zeros((3, NUM_JOINTS))
    for arm_index, arm in enumerate(arms):
        for link in range(kin.NUM_LINKS):
            jac = _embed(kin.point_jacobian(arm, link, 0.5), arm_index)
            d_com[:2] += (model.link_mass / total) * jac
    return com, d_com


def _zmp_chain(ctx: StepContext, arms, gamma):
    """ZMP value and gradients w.r.t. joints (2, 8) and forces (2, 2).

    Mirrors ``statics.compute_zmp`` exactly: the value is obtained from the
    same wrench list; only the derivatives are assembled analytically here.
    Also returns the evaluated contact geometry and the wrench lists so
    callers can reuse them.
    """
    config = ctx.config
    plane = config.plane_height
    ee0, ee1, j0, j1 = _end_effectors(arms)
    forces, d_forces = _grasp_distribution(ctx, ee0, ee1, j0, j1)
    geoms = [_contact_geometry(arms[cand.arm_index], cand)
             for cand in ctx.candidates]

    object_wrenches = [
        st.AppliedWrench(position=np.array([ee[0], ee[1], plane]),
                         force=forces[i])
        for i, ee in enumerate((ee0, ee1))]
    # Built without the non-negativity guard of support_force_vector so that
    # intermediate iterates with small negative gamma stay differentiable.
    support_wrenches = [
        st.AppliedWrench(
            position=np.array([cand.edge_point[0], cand.edge_point[1], plane]),
            force=config.support_force_scale * float(g) * np.array(
                [np.cos(geom["beta"]), np.sin(geom["beta"]), 0.0]))
        for cand, geom, g in zip(ctx.candidates, geoms, gamma)]

    state = config.statics_state(arms)
    zmp_result = st.compute_zmp(state, object_wrenches + support_wrenches)
    fz = float(zmp_result.ground_force[2])

    _, d_com = _com_with_grads(ctx, arms)
    weight_z = -config.robot_mass * config.gravity

    # Horizontal moment (x, y) and vertical force gradients.
    d_moment = np.zeros((2, NUM_JOINTS))
    d_fz = np.zeros(NUM_JOINTS)
    d_moment_gamma = np.zeros((2, NUM_CONTACTS))

    # CoM term: cross(com, (0, 0, weight_z)) has horizontal part
    # (com_y * weight_z, -com_x * weight_z).
    d_moment[0] += weight_z * d_com[1]
    d_moment[1] += -weight_z * d_com[0]

    ee_jacs = (j0, j1)
    for i, wrench in enumerate(object_wrenches):
        pos, force = wrench.position, wrench.force
        d_pos = np.zeros((3, NUM_JOINTS))
        d_pos[:2] = ee_jacs[i]
        df = d_forces[i]
        # d cross(p, f) = cross(dp, f) + cross(p, df), horizontal rows.
        d_moment[0] += d_pos[1] * force[2] - pos[2] * df[1] + pos[1] * df[2] \
            - d_pos[2] * force[1]
        d_moment[1] += d_pos[2] * force[0] + pos[2] * df[0] - d_pos[0] * force[2] \
            - pos[0] * df[2]
        # ground_force = -(weight + sum f): d fz = -d sum f_z.
        d_fz += -df[2]

    scale = config.support_force_scale
    for i, (cand, geom, g) in enumerate(zip(ctx.candidates, geoms, gamma)):
        pos = np.array([cand.edge_point[0], cand.edge_point[1], plane])
        unit = np.array([np.cos(geom["beta"]), np.sin(geom["beta"]), 0.0])
        d_unit = np.outer(np.array([-unit[1], unit[0], 0.0]), geom["d_beta"])
        df_theta = scale * float(g) * d_unit          # (3, 4) in arm columns
        df_theta = _embed(df_theta[:2], cand.arm_index)  # planar rows only
        # cross(p, f) horizontal rows with p constant, f planar (f_z = 0).
        d_moment[0] += -pos[2] * df_theta[1]
        d_moment[1] += pos[2] * df_theta[0]
        d_moment_gamma[0, i] = -pos[2] * scale * unit[1]
        d_moment_gamma[1, i] = pos[2] * scale * unit[0]

    # zmp = (M_y / fz, -M_x / fz); invert to reuse the computed value.
    moment = np.array([-zmp_result.zmp[1] * fz, zmp_result.zmp[0] * fz])

    d_zmp_theta = np.zeros((2, NUM_JOINTS))
    d_zmp_theta[0] = (d_moment[1] * fz - moment[1] * d_fz) / (fz * fz)
    d_zmp_theta[1] = (-d_moment[0] * fz + moment[0] * d_fz) / (fz * fz)
    d_zmp_gamma = np.zeros((2, NUM_CONTACTS))
    d_zmp_gamma[0] = d_moment_gamma[1] / fz
    d_zmp_gamma[1] = -d_moment_gamma[0] / fz

    return {
        "zmp": zmp_result.zmp, "zmp_result": zmp_result,
        "d_zmp_theta": d_zmp_theta, "d_zmp_gamma": d_zmp_gamma,
        "geoms": geoms, "object_wrenches": object_wrenches,
        "support_wrenches": support_wrenches,
    }


# ---------------------------------------------------------------------------
# Cost, constraints, and their Jacobians over the decision vector
# ---------------------------------------------------------------------------

def _split(x: np.ndarray):
    return x[:NUM_JOINTS], x[NUM_JOINTS:NUM_JOINTS + NUM_CONTACTS], float(x[-1])


def _cost_value(problem: PlanningProblem, ctx: StepContext, x: np.ndarray) -> float:
    dtheta, _, slack = _split(x)
    arms = ctx.arms_at(dtheta)
    ee0, ee1, _, _ = _end_effectors(arms)
    p_obj = 0.5 * (ee0 + ee1)
    err = problem.target_object_position - p_obj
    return (problem.weight_position * float(err @ err)
            + problem.weight_displacement * float(dtheta @ dtheta)
            + problem.weight_slack * slack)


def _cost_gradient(problem: PlanningProblem, ctx: StepContext,
                   x: np.ndarray) -> np.ndarray:
    dtheta, _, _ = _split(x)
    arms = ctx.arms_at(dtheta)
    ee0, ee1, j0, j1 = _end_effectors(arms)
    p_obj = 0.5 * (ee0 + ee1)
    d_obj = 0.5 * (j0 + j1)
    err = problem.target_object_position - p_obj
    grad = np.zeros(DECISION_DIM)
    grad[:NUM_JOINTS] = (-2.0 * problem.weight_position * (err @ d_obj)
                         + 2.0 * problem.weight_displacement * dtheta)
    grad[-1] = problem.weight_slack
    return grad


def _equality_value(problem: PlanningProblem, ctx: StepContext,
                    x: np.ndarray) -> np.ndarray:
    dtheta, _, _ = _split(x)
    arms = ctx.arms_at(dtheta)
    ee0, ee1, _, _ = _end_effectors(arms)
    return ee0 - ee1 + np.array([problem.grasp_separation, 0.0])


def _equality_jacobian(problem: PlanningProblem, ctx: StepContext,
                       x: np.ndarray) -> np.ndarray:
    dtheta, _, _ = _split(x)
    arms = ctx.arms_at(dtheta)
    _, _, j0, j1 = _end_effectors(arms)
    jac = np.zeros((2, DECISION_DIM))
    jac[:, :NUM_JOINTS] = j0 - j1
    return jac


def _inequality_value(problem: PlanningProblem, ctx: StepContext,
                      x: np.ndarray) -> np.ndarray:
    """Rows: gamma (2), s, s - gamma.phi, safe circle, object deviation,
    phi (2)."""
    dtheta, gamma, slack = _split(x)
    arms = ctx.arms_at(dtheta)
    chain = _zmp_chain(ctx, arms, gamma)
    phi = np.array([g["gap"] for g in chain["geoms"]])
    ee0, ee1, _, _ = _end_effectors(arms)
    p_obj = 0.5 * (ee0 + ee1)
    safe_dist, _ = _smooth_norm(chain["zmp"] - problem.zmp_target)
    dev_dist, _ = _smooth_norm(p_obj - problem.target_object_position)
    rows = np.zeros(6 + NUM_CONTACTS)
    rows[0:2] = gamma
    rows[2] = slack
    rows[3] = slack - float(gamma @ phi)
    rows[4] = problem.safe_radius - safe_dist
    rows[5] = problem.object_radius - dev_dist
    rows[6:] = phi
    return rows


def _inequality_jacobian(problem: PlanningProblem, ctx: StepContext,
                         x: np.ndarray) -> np.ndarray:
    dtheta, gamma, _ = _split(x)
    arms = ctx.arms_at(dtheta)
    chain = _zmp_chain(ctx, arms, gamma)
    geoms = chain["geoms"]
    phi = np.array([g["gap"] for g in geoms])
    d_phi = np.zeros((NUM_CONTACTS, NUM_JOINTS))
    for i, (cand, geom) in enumerate(zip(ctx.candidates, geoms)):
        d_phi[i] = _embed(geom["d_gap"][None, :], cand.arm_index)[0]

    ee0, ee1, j0, j1 = _end_effectors(arms)
    p_obj = 0.5 * (ee0 + ee1)
    d_obj = 0.5 * (j0 + j1)

    jac = np.zeros((6 + NUM_CONTACTS, DECISION_DIM))
    jac[0, NUM_JOINTS] = 1.0
    jac[1, NUM_JOINTS + 1] = 1.0
    jac[2, -1] = 1.0
    jac[3, :NUM_JOINTS] = -(gamma @ d_phi)
    jac[3, NUM_JOINTS:NUM_JOINTS + NUM_CONTACTS] = -phi
    jac[3, -1] = 1.0
    _, safe_dir = _smooth_norm(chain["zmp"] - problem.zmp_target)
    jac[4, :NUM_JOINTS] = -(safe_dir @ chain["d_zmp_theta"])
    jac[4, NUM_JOINTS:NUM_JOINTS + NUM_CONTACTS] = -(safe_dir @ chain["d_zmp_gamma"])
    _, dev_dir = _smooth_norm(p_obj - problem.target_object_position)
    jac[5, :NUM_JOINTS] = -(dev_dir @ d_obj)
    jac[6:6 + NUM_CONTACTS, :NUM_JOINTS] = d_phi
    return jac


def evaluate_cost(problem: PlanningProblem, ctx: StepContext,
                  decision: PlanDecision) -> float:
    """Weighted sum of object error, joint displacement, and slack."""
    return _cost_value(problem, ctx, decision.to_vector())


def evaluate_constraints(problem: PlanningProblem, ctx: StepContext,
                         decision: PlanDecision) -> dict:
    """Grasp equality rows and the stacked inequality rows at the decision."""
    x = decision.to_vector()
    return {"equalities": _equality_value(problem, ctx, x),
            "inequalities": _inequality_value(problem, ctx, x)}


def build_step_nlp(problem: PlanningProblem, ctx: StepContext) -> NlpProblem:
    return NlpProblem(
        dim=DECISION_DIM,
        cost=lambda x: _cost_value(problem, ctx, x),
        cost_grad=lambda x: _cost_gradient(problem, ctx, x),
        equalities=lambda x: _equality_value(problem, ctx, x),
        equality_jac=lambda x: _equality_jacobian(problem, ctx, x),
        inequalities=lambda x: _inequality_value(problem, ctx, x),
        inequality_jac=lambda x: _inequality_jacobian(problem, ctx, x))


def gradient_check(problem: PlanningProblem, ctx: StepContext,
                   decision: PlanDecision, fd_step: float = 1e-6) -> float:
    """Largest relative error of the analytic derivatives vs central FD."""
    x = decision.to_vector()
    analytic = np.vstack([
        _cost_gradient(problem, ctx, x)[None, :],
        _equality_jacobian(problem, ctx, x),
        _inequality_jacobian(problem, ctx, x),
    ])

    def stacked(v: np.ndarray) -> np.ndarray:
        return np.concatenate([
            [_cost_value(problem, ctx, v)],
            _equality_value(problem, ctx, v),
            _inequality_value(problem, ctx, v),
        ])

    numeric = finite_difference_jacobian(stacked, x, step=fd_step)
    return relative_error(analytic, numeric)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Elementwise |a - n| / max(1, |n|), reduced to the maximum."""
    denom = np.maximum(1.0, np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


# ---------------------------------------------------------------------------
# Waypoint and path planning
# ---------------------------------------------------------------------------

def _seed_hessian(problem: PlanningProblem, ctx: StepContext,
                  x0: np.ndarray) -> np.ndarray:
    """Gauss-Newton matrix of the cost at the start of a solve.

    The force and slack variables enter the cost linearly (or not at all);
    their blocks get a small positive scale so the first QP steps stay
    constraint-limited rather than curvature-limited.
    """
    dtheta, _, _ = _split(x0)
    arms = ctx.arms_at(dtheta)
    _, _, j0, j1 = _end_effectors(arms)
    d_obj = 0.5 * (j0 + j1)
    hess = np.eye(DECISION_DIM) * 1e-2
    hess[:NUM_JOINTS, :NUM_JOINTS] = (
        2.0 * problem.weight_position * d_obj.T @ d_obj
        + 2.0 * problem.weight_displacement * np.eye(NUM_JOINTS))
    return hess


def solve_step(problem: PlanningProblem, ctx: StepContext,
               settings: SolverSettings,
               initial: PlanDecision | None = None) -> PlanDecision:
    """Solve one waypoint NLP; zero initial values unless given.

    The slack weight is driven to its configured value through a short
    continuation (1e2, 1e4, ..., target), each stage warm-starting the next.
    A mild first stage lets force appear at a still-open gap, after which
    the bilinear complementarity coupling steers the gap shut; solving at
    the full weight from a cold start routinely stalls instead.  The
    reported decision is the final stage's solution of the target problem.
    """
    initial = initial if initial is not None else PlanDecision.zeros()
    x = initial.to_vector()
    stages = [w for w in (1e2, 1e4) if w < problem.weight_slack]
    stages.append(problem.weight_slack)
    total_iterations = 0
    result = None
    for weight in stages:
        staged = replace(problem, weight_slack=weight)
        nlp = build_step_nlp(staged, ctx)
        result = solve_sqp(nlp, x, settings,
                           initial_hessian=_seed_hessian(staged, ctx, x))
        total_iterations += result.iterations
        x = result.x
    return PlanDecision.from_vector(
        result.x, cost=result.cost, kkt_residual=result.kkt_residual,
        iterations=total_iterations, converged=result.converged)


def _check_step(problem: PlanningProblem, config: ScenarioConfig,
                decision: PlanDecision, contacts, zmp: st.ZmpResult,
                object_position: np.ndarray) -> list[str]:
    tol = config.solver.tol_con
    failures = []
    if not decision.converged:
        failures.append("solver did not converge")
    deviation = float(np.linalg.norm(
        object_position - problem.target_object_position))
    if deviation > problem.object_radius + tol:
        failures.append(f"object deviation {deviation:.6f} m exceeds "
                        f"{problem.object_radius} m")
    zmp_dist = float(np.linalg.norm(zmp.zmp - problem.zmp_target))
    if zmp_dist > problem.safe_radius + tol:
        failures.append(f"ZMP {zmp_dist:.6f} m from target exceeds safe "
                        f"radius {problem.safe_radius} m")
    phi = np.array([c.gap for c in contacts])
    feasible, violation = ct.complementarity_residual(
        phi, decision.gamma, decision.slack, tol_gap=1e-6, tol_force=tol,
        tol_comp=tol)
    if not feasible:
        failures.append(f"complementarity violated by {violation:.3g}")
    if decision.slack > config.solver.slack_max + tol:
        failures.append(f"slack {decision.slack:.3g} exceeds "
                        f"{config.solver.slack_max:.3g}")
    return failures


def plan_waypoint(ctx: StepContext, waypoint, settings: SolverSettings,
                  initial: PlanDecision | None = None) -> PlanStep:
    """Plan one waypoint from the context's configuration.

    Raises:
        PlanStepError: solver non-convergence or a violated acceptance bound,
            with diagnostics attached.
    """
    config = ctx.config
    problem = problem_for_waypoint(config, waypoint)
    decision = solve_step(problem, ctx, settings, initial)

    # Clamp solver noise on the bound-constrained variables: a magnitude
    # within tolerance of zero is an exactly-zero force or slack.
    gamma = np.where((decision.gamma < 0.0) & (decision.gamma > -settings.tol_con),
                     0.0, decision.gamma)
    slack = 0.0 if -settings.tol_con < decision.slack < 0.0 else decision.slack
    decision = replace(decision, gamma=gamma, slack=float(slack))

    theta_after = ctx.theta + decision.dtheta
    arms_after = ctx.arms_at(decision.dtheta)
    contacts = [state.with_force(float(g)) for state, g in zip(
        ct.evaluate_gaps(arms_after, ctx.candidates), decision.gamma)]
    chain = _zmp_chain(ctx, arms_after, decision.gamma)
    state = config.statics_state(arms_after)
    zmp = chain["zmp_result"]
    fzmp = st.compute_fzmp(state, chain["object_wrenches"])
    ee0, ee1, _, _ = _end_effectors(arms_after)
    object_position = 0.5 * (ee0 + ee1)

    failures = _check_step(problem, config, decision, contacts, zmp,
                           object_position)
    if failures:
        raise PlanStepError(
            "waypoint rejected: " + "; ".join(failures),
            diagnostics={
                "waypoint": np.asarray(waypoint, dtype=float).tolist(),
                "failures": failures,
                "iterations": decision.iterations,
                "kkt_residual": decision.kkt_residual,
                "cost": decision.cost,
                "slack": decision.slack,
            })
    return PlanStep(waypoint=np.asarray(waypoint, dtype=float),
                    decision=decision, theta_after=theta_after,
                    object_position=object_position, contacts=tuple(contacts),
                    zmp=zmp, fzmp=fzmp)


def _two_segment_angles(config: ScenarioConfig, arm_index: int,
                        grasp: np.ndarray) -> np.ndarray:
    """Elbow-out bent-arm pose: links pair into shoulder and forearm
    segments."""
    base = config.arm_bases[arm_index]
    target = grasp - base
    dist = float(np.linalg.norm(target))
    upper = float(config.link_lengths[0] + config.link_lengths[1])
    fore = float(config.link_lengths[2] + config.link_lengths[3])
    if dist > upper + fore or dist < abs(upper - fore):
        raise ReachabilityError(
            f"initial grasp point {grasp} unreachable from base {base} "
            f"(distance {dist:.3f} m)")
    cos_elbow = (dist * dist - upper * upper - fore * fore) / (2 * upper * fore)
    cos_elbow = min(max(cos_elbow, -1.0), 1.0)
    sign = 1.0 if base[0] >= 0.0 else -1.0
    elbow = sign * float(np.arccos(cos_elbow))
    shoulder = float(np.arctan2(target[1], target[0])) - float(
        np.arctan2(fore * np.sin(elbow), upper + fore * np.cos(elbow)))
    angles = np.zeros(kin.NUM_LINKS)
    angles[0] = shoulder
    angles[2] = elbow
    return angles


def _settle_on_edge(config: ScenarioConfig, arm_index: int, grasp: np.ndarray,
                    start: np.ndarray) -> np.ndarray | None:
    """Refine one arm's pose so its contact link rests on the nearer edge.

    Minimizes the distance to the starting pose subject to the hand staying
    on the grasp point and the link capsule touching the edge (gap zero).
    Returns None when no touching pose is found.
    """
    arm0 = config.arm(arm_index, start)
    seg = kin.link_segment(arm0, config.contact_link_index)
    gaps = [kin.signed_gap(edge, seg, config.link_radius).gap
            for edge in config.port_edges[arm_index]]
    order = sorted(range(len(gaps)),
                   key=lambda i: (gaps[i], config.port_edges[arm_index][i][0]))
    edge = config.port_edges[arm_index][order[0]]
    candidate = ct.ContactCandidate(arm_index=arm_index, edge_point=edge,
                                    plane_height=config.plane_height,
                                    link_index=config.contact_link_index)

    def residuals(q: np.ndarray) -> np.ndarray:
        arm = config.arm(arm_index, q)
        ee = kin.end_effector(arm)
        geom = _contact_geometry(arm, candidate)
        return np.array([ee[0] - grasp[0], ee[1] - grasp[1], geom["gap"]])

    def residual_jac(q: np.ndarray) -> np.ndarray:
        arm = config.arm(arm_index, q)
        jac = np.zeros((3, kin.NUM_LINKS))
        jac[:2] = kin.point_jacobian(arm, kin.NUM_LINKS - 1, 1.0)
        jac[2] = _contact_geometry(arm, candidate)["d_gap"]
        return jac

    nlp = NlpProblem(
        dim=kin.NUM_LINKS,
        cost=lambda q: float((q - start) @ (q - start)),
        cost_grad=lambda q: 2.0 * (q - start),
        equalities=residuals, equality_jac=residual_jac)
    result = solve_sqp(nlp, start, SolverSettings())
    if result.converged and result.constraint_violation <= 1e-8:
        return result.x
    return None


def initial_joint_angles(config: ScenarioConfig) -> np.ndarray:
    """Starting configuration: hands on the bar, contact links on the ports.

    Each arm first takes an elbow-out bent pose reaching its grasp point,
    then is settled so the contact link rests against the nearer port edge
    (the natural entry state for arms inserted through the ports, and the
    posture from which support forces can build up symmetrically).  If no
    touching pose exists the bent pose is kept.

    Raises:
        ReachabilityError: a grasp point outside the arm's workspace.
    """
    theta = np.zeros(NUM_JOINTS)
    grasps = config.grasp_points(config.initial_center)
    for arm_index in range(2):
        offset = arm_index * kin.NUM_LINKS
        bent = _two_segment_angles(config, arm_index, grasps[arm_index])
        settled = _settle_on_edge(config, arm_index, grasps[arm_index], bent)
        theta[offset:offset + kin.NUM_LINKS] = bent if settled is None else settled
    return theta


def plan_path(config: ScenarioConfig, settings: SolverSettings | None = None,
              theta0=None) -> list[PlanStep]:
    """Plan the configured straight path, one step per waypoint.

    Each step is warm-started from the previous configuration with zero
    initial decision values.  The first failing step aborts the plan.

    Raises:
        ReachabilityError: a waypoint's grasp points exceed total arm reach.
        PlanStepError: a step failed; ``partial_steps`` holds the trace so
            far and ``waypoint_index`` names the step.
    """
    settings = settings if settings is not None else config.solver
    waypoints = config.waypoints()
    reach = float(np.sum(config.link_lengths))
    for index, waypoint in enumerate(waypoints):
        for arm_index, grasp in enumerate(config.grasp_points(waypoint)):
            dist = float(np.linalg.norm(grasp - config.arm_bases[arm_index]))
            if dist > reach:
                raise ReachabilityError(
                    f"waypoint {index} at {waypoint} is out of reach for arm "
                    f"{arm_index} ({dist:.3f} m > {reach:.3f} m)",
                    waypoint_index=index)

    theta = np.asarray(theta0, dtype=float) if theta0 is not None \
        else initial_joint_angles(config)
    steps: list[PlanStep] = []
    for index, waypoint in enumerate(waypoints):
        ctx = build_context(config, theta)
        try:
            step = plan_waypoint(ctx, waypoint, settings)
        except PlanStepError as exc:
            raise PlanStepError(
                f"step {index} failed: {exc}", waypoint_index=index,
                diagnostics=exc.diagnostics, partial_steps=steps) from exc
        steps.append(step)
        theta = step.theta_after
    return steps
