"""Self-contained SQP solver for small dense nonlinear programs.

Recipe: damped BFGS approximation of the Lagrangian Hessian, a primal
active-set solver for the convex QP subproblems, and a backtracking Armijo
line search on an l1 merit function whose penalty grows past the largest
multiplier seen.  QP subproblems carry a single elastic variable bounding
the worst linearized-inequality violation; a step is declared infeasible
only when even the elastic subproblem cannot close the violation.

Problems are supplied as callables over a flat decision vector:
cost/gradient, equality constraints (== 0), inequality constraints (>= 0),
and their Jacobians.  All operations are deterministic for identical inputs.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InfeasibleStepError


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and line-search parameters for the SQP loop.

    ``tol_kkt`` bounds the scaled stationarity/complementarity residual,
    ``tol_con`` the raw constraint violation (SI units).  ``slack_max`` is
    the largest complementarity slack a caller should accept in a plan step.
    """

    tol_kkt: float = 1e-6
    tol_con: float = 1e-6
    max_iterations: int = 200
    armijo_c1: float = 1e-4
    backtrack_ratio: float = 0.5
    fd_step: float = 1e-6
    penalty_growth: float = 2.0
    slack_max: float = 1e-4

    def __post_init__(self):
        if self.tol_kkt <= 0.0 or self.tol_con <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0.0 < self.armijo_c1 < 1.0 or not 0.0 < self.backtrack_ratio < 1.0:
            raise ValueError("line-search parameters must lie in (0, 1)")


@dataclass
class NlpProblem:
    """A dense NLP: minimize cost(x) s.t. equalities(x) == 0, inequalities(x) >= 0."""

    dim: int
    cost: Callable[[np.ndarray], float]
    cost_grad: Callable[[np.ndarray], np.ndarray]
    equalities: Optional[Callable[[np.ndarray], np.ndarray]] = None
    equality_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    inequalities: Optional[Callable[[np.ndarray], np.ndarray]] = None
    inequality_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def eq(self, x: np.ndarray) -> np.ndarray:
        if self.equalities is None:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(self.equalities(x), dtype=float))

    def eq_jac(self, x: np.ndarray) -> np.ndarray:
        if self.equality_jac is None:
            return np.zeros((0, self.dim))
        return np.atleast_2d(np.asarray(self.equality_jac(x), dtype=float))

    def ineq(self, x: np.ndarray) -> np.ndarray:
        if self.inequalities is None:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(self.inequalities(x), dtype=float))

    def ineq_jac(self, x: np.ndarray) -> np.ndarray:
        if self.inequality_jac is None:
            return np.zeros((0, self.dim))
        return np.atleast_2d(np.asarray(self.inequality_jac(x), dtype=float))


@dataclass
class QpSolution:
    x: np.ndarray
    lam_eq: np.ndarray
    lam_in: np.ndarray
    elastic: float


@dataclass
class SqpResult:
    """Solution plus diagnostics of one SQP run."""

    x: np.ndarray
    cost: float
    kkt_residual: float
    constraint_violation: float
    lam_eq: np.ndarray
    lam_in: np.ndarray
    iterations: int
    converged: bool
    status: str
    merit_history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# QP subproblem: primal active set with one elastic variable
# ---------------------------------------------------------------------------

_QP_TOL = 1e-10


def _solve_eqp(hess, grad_at_z, rows):
    """min 0.5 p'Hp + q'p s.t. rows @ p = 0; returns (p, multipliers).

    Solved through the KKT system with an SVD least-squares factorization so
    linearly dependent working sets yield the minimum-norm multipliers.  One
    iterative-refinement pass keeps the step noise well below the active-set
    tolerances even when the gradient spans many decades.
    """
    n = hess.shape[0]
    k = rows.shape[0]
    kkt = np.zeros((n + k, n + k))
    kkt[:n, :n] = hess
    if k:
        kkt[:n, n:] = -rows.T
        kkt[n:, :n] = rows
    rhs = np.concatenate([-grad_at_z, np.zeros(k)])
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    residual = rhs - kkt @ sol
    sol = sol + np.linalg.lstsq(kkt, residual, rcond=None)[0]
    return sol[:n], sol[n:]


def solve_qp(hess, grad, a_eq, b_eq, a_in, b_in,
             elastic_weight: float = 1e4) -> QpSolution:
    """Solve min 0.5 x'Hx + g'x s.t. a_eq x = b_eq, a_in x >= b_in.

    H must be symmetric positive definite.  Infeasible inequality systems are
    absorbed by an elastic variable t >= 0 relaxing every inequality row by t
    at cost ``elastic_weight * t``; the returned ``elastic`` is its optimum
    (zero whenever the original QP is feasible and the weight dominates the
    multipliers).  ``elastic_weight`` is interpreted in the units of the
    normalized objective, i.e. relative to max(1, |grad|, |hess|).

    Raises:
        InfeasibleStepError: inconsistent equality rows, or no progress in
            the active-set iteration.
    """
    hess = np.asarray(hess, dtype=float)
    grad = np.asarray(grad, dtype=float)
    n = grad.shape[0]
    a_eq = np.zeros((0, n)) if a_eq is None else np.atleast_2d(a_eq)
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(b_eq)
    a_in = np.zeros((0, n)) if a_in is None else np.atleast_2d(a_in)
    b_in = np.zeros(0) if b_in is None else np.atleast_1d(b_in)
    m_eq, m_in = a_eq.shape[0], a_in.shape[0]

    # Normalize the objective so all KKT data stays O(1): the minimizer is
    # unchanged and the multipliers scale back by sigma.  Without this, cost
    # weights of 1e6 push least-squares noise above the step tolerances.
    sigma = max(1.0, float(np.abs(grad).max(initial=0.0)),
                float(np.abs(hess).max(initial=0.0)))
    hess = hess / sigma
    grad = grad / sigma
    # Lift near-singular spectra so the KKT solves stay well conditioned;
    # well-conditioned problems pass through exactly.
    eigenvalues = np.linalg.eigvalsh(hess)
    floor = 1e-8 * max(eigenvalues[-1], 1e-8)
    if eigenvalues[0] < floor:
        hess = hess + (floor - eigenvalues[0]) * np.eye(n)

    if m_in == 0:
        if m_eq == 0:
            x = np.linalg.lstsq(hess, -grad, rcond=None)[0]
            return QpSolution(x=x, lam_eq=np.zeros(0), lam_in=np.zeros(0),
                              elastic=0.0)
        x0 = np.linalg.lstsq(a_eq, b_eq, rcond=None)[0]
        if np.abs(a_eq @ x0 - b_eq).max(initial=0.0) > 1e-8 * (1.0 + np.abs(b_eq).max()):
            raise InfeasibleStepError("inconsistent equality constraints in QP")
        p, lam = _solve_eqp(hess, hess @ x0 + grad, a_eq)
        return QpSolution(x=x0 + p, lam_eq=lam * sigma, lam_in=np.zeros(0),
                          elastic=0.0)

    # Elastic formulation over z = (x, t).
    nz = n + 1
    hz = np.zeros((nz, nz))
    hz[:n, :n] = hess
    hz[n, n] = max(1e-8 * elastic_weight, 1e-4)
    gz = np.concatenate([grad, [elastic_weight]])
    eq_rows = np.hstack([a_eq, np.zeros((m_eq, 1))]) if m_eq else np.zeros((0, nz))
    in_rows = np.vstack([
        np.hstack([a_in, np.ones((m_in, 1))]),
        np.concatenate([np.zeros(n), [1.0]])[None, :],
    ])
    in_rhs = np.concatenate([b_in, [0.0]])

    # Feasible start: least-squares equality solution, elastic covering the
    # worst inequality violation.
    if m_eq:
        x0 = np.linalg.lstsq(a_eq, b_eq, rcond=None)[0]
        if np.abs(a_eq @ x0 - b_eq).max(initial=0.0) > 1e-8 * (1.0 + np.abs(b_eq).max()):
            raise InfeasibleStepError("inconsistent equality constraints in QP")
    else:
        x0 = np.zeros(n)
    t0 = max(0.0, float(np.max(b_in - a_in @ x0, initial=0.0)))
    z = np.concatenate([x0, [t0]])

    n_rows = in_rows.shape[0]
    # Tolerances scale with constraint-space magnitudes, never with the
    # gradient (which the elastic weight inflates).
    geo_scale = 1.0 + float(np.abs(in_rhs).max(initial=0.0)) + float(np.abs(z).max())
    slack0 = in_rows @ z - in_rhs
    working = [i for i in range(n_rows) if slack0[i] <= _QP_TOL * geo_scale]

    max_qp_iters = 50 * (n_rows + nz)
    lam_work = np.zeros(0)
    for _ in range(max_qp_iters):
        rows = np.vstack([eq_rows, in_rows[working]]) if (m_eq or working) \
            else np.zeros((0, nz))
        q = hz @ z + gz
        p, lam = _solve_eqp(hz, q, rows)
        lam_work = lam[m_eq:]
        # Thresholds track the least-squares noise floor, which grows with
        # the gradient magnitude (the elastic weight dominates it).
        noise = 1e-12 * (1.0 + float(np.abs(q).max(initial=0.0)))
        if np.abs(p).max(initial=0.0) <= _QP_TOL * (1.0 + np.abs(z).max()) + 10 * noise:
            if lam_work.size == 0 or lam_work.min() >= -10 * noise:
                break
            drop = int(np.argmin(lam_work))
            working.pop(drop)
            continue
        # Step length limited by the nearest blocking inactive constraint.
        alpha = 1.0
        blocking = -1
        step_scale = 1.0 + float(np.abs(p).max())
        for i in range(n_rows):
            if i in working:
                continue
            denom = float(in_rows[i] @ p)
            if denom < -_QP_TOL * step_scale:
                bound = float(in_rhs[i] - in_rows[i] @ z) / denom
                if bound < alpha - 1e-15:
                    alpha = max(bound, 0.0)
                    blocking = i
        z = z + alpha * p
        if blocking >= 0:
            working.append(blocking)
    else:
        raise InfeasibleStepError("active-set QP iteration limit reached")

    lam_eq_out = lam[:m_eq] * sigma if m_eq else np.zeros(0)
    lam_in_out = np.zeros(m_in)
    for idx, row in enumerate(working):
        if row < m_in:
            lam_in_out[row] = max(lam_work[idx], 0.0) * sigma
    solution = QpSolution(x=z[:n], lam_eq=lam_eq_out, lam_in=lam_in_out,
                          elastic=float(z[n]))

    # Polish: once the elastic is inactive, re-solve on the identified active
    # set in the original variables.  This strips the elastic weight out of
    # the KKT system, which otherwise leaves its noise in the multipliers.
    if solution.elastic <= 1e-9 * (1.0 + np.abs(b_in).max(initial=0.0)):
        active = sorted(r for r in working if r < m_in)
        rows = np.vstack([a_eq, a_in[active]]) if (m_eq or active) \
            else np.zeros((0, n))
        rhs = np.concatenate([b_eq, b_in[active]])
        if rows.shape[0]:
            x0 = np.linalg.lstsq(rows, rhs, rcond=None)[0]
            if np.abs(rows @ x0 - rhs).max(initial=0.0) > 1e-8 * (1.0 + np.abs(rhs).max()):
                return solution
            p, lam_p = _solve_eqp(hess, hess @ x0 + grad, rows)
            x_p = x0 + p
        else:
            x_p = np.linalg.lstsq(hess, -grad, rcond=None)[0]
            lam_p = np.zeros(0)
        inactive = [i for i in range(m_in) if i not in active]
        feas_tol = 1e-9 * (1.0 + np.abs(b_in).max(initial=0.0) + np.abs(x_p).max())
        if inactive and np.min(a_in[inactive] @ x_p - b_in[inactive]) < -feas_tol:
            return solution
        lam_p_in = lam_p[m_eq:]
        if lam_p_in.size and lam_p_in.min() < -1e-7 * (1.0 + np.abs(lam_p_in).max()):
            return solution
        lam_in_out = np.zeros(m_in)
        for idx, row in enumerate(active):
            lam_in_out[row] = max(float(lam_p_in[idx]), 0.0) * sigma
        return QpSolution(x=x_p, lam_eq=(lam_p[:m_eq] * sigma if m_eq else np.zeros(0)),
                          lam_in=lam_in_out, elastic=solution.elastic)
    return solution


# ---------------------------------------------------------------------------
# SQP driver
# ---------------------------------------------------------------------------

def _l1_violation(ce: np.ndarray, ci: np.ndarray) -> float:
    return float(np.sum(np.abs(ce)) + np.sum(np.maximum(0.0, -ci)))


def _max_violation(ce: np.ndarray, ci: np.ndarray) -> float:
    v = 0.0
    if ce.size:
        v = float(np.abs(ce).max())
    if ci.size:
        v = max(v, float(np.maximum(0.0, -ci).max()))
    return v


def _certificate_multipliers(grad, a_eq, a_in, ci, act_tol):
    """Least-squares multipliers certifying first-order stationarity.

    Only near-active inequality rows may carry a multiplier; rows whose
    least-squares multiplier comes out negative are dropped and the fit is
    repeated.  This keeps the convergence test independent of the BFGS
    matrix baked into the QP's own multipliers.
    """
    m_eq = a_eq.shape[0]
    active = [i for i in range(a_in.shape[0]) if ci[i] <= act_tol]
    for _ in range(len(active) + 1):
        rows = np.vstack([a_eq, a_in[active]]) if (m_eq or active) else None
        if rows is None:
            return np.zeros(0), np.zeros(a_in.shape[0])
        lam = np.linalg.lstsq(rows.T, grad, rcond=None)[0]
        lam_act = lam[m_eq:]
        if lam_act.size == 0 or lam_act.min() >= 0.0:
            break
        active = [row for row, value in zip(active, lam_act) if value >= 0.0]
    lam_eq = lam[:m_eq]
    lam_in = np.zeros(a_in.shape[0])
    for row, value in zip(active, lam_act):
        lam_in[row] = value
    return lam_eq, lam_in


def _kkt_residual(grad, a_eq, a_in, ce, ci, act_tol) -> float:
    """Scaled stationarity + complementarity residual with certificate
    multipliers.

    The raw residual is divided by max(1, |lambda|_inf / 100) so that the
    convergence test stays meaningful when cost weights push multipliers to
    1e6, while still rejecting genuinely non-stationary points.
    """
    lam_eq, lam_in = _certificate_multipliers(grad, a_eq, a_in, ci, act_tol)
    r = grad.copy()
    if lam_eq.size:
        r -= a_eq.T @ lam_eq
    if lam_in.size:
        r -= a_in.T @ lam_in
    r_stat = float(np.abs(r).max(initial=0.0))
    r_comp = float(np.abs(lam_in * ci).max(initial=0.0)) if lam_in.size else 0.0
    lam_mag = max(np.abs(lam_eq).max(initial=0.0), np.abs(lam_in).max(initial=0.0))
    scale = max(1.0, lam_mag / 1000.0)
    return max(r_stat, r_comp) / scale


def solve_sqp(problem: NlpProblem, x0, settings: SolverSettings,
              initial_hessian=None) -> SqpResult:
    """Run the SQP loop from ``x0`` until the KKT test passes.

    ``initial_hessian`` seeds the damped-BFGS approximation (for example a
    Gauss-Newton matrix of the cost); without it the identity is rescaled
    after the first accepted step.  Deterministic for identical inputs.  A
    result with ``converged=False`` is returned when the iteration budget
    runs out or the line search stalls; the caller decides whether that is
    fatal.
    """
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 must have shape ({problem.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")

    if initial_hessian is not None:
        hess = 0.5 * (np.asarray(initial_hessian, dtype=float)
                      + np.asarray(initial_hessian, dtype=float).T)
        scaled_once = True
    else:
        hess = np.eye(problem.dim)
        scaled_once = False
    mu = 1.0
    act_tol = max(10.0 * settings.tol_con, 1e-10)
    lam_eq = np.zeros(problem.eq(x).shape[0])
    lam_in = np.zeros(problem.ineq(x).shape[0])
    merit_history: list[tuple[float, float, float]] = []
    status = "iteration limit reached"
    converged = False
    iterations = 0
    zero_steps = 0
    kkt = np.inf
    viol = np.inf

    for _ in range(settings.max_iterations):
        f = float(problem.cost(x))
        grad = np.asarray(problem.cost_grad(x), dtype=float)
        ce, ci = problem.eq(x), problem.ineq(x)
        a_eq, a_in = problem.eq_jac(x), problem.ineq_jac(x)
        viol = _max_violation(ce, ci)
        kkt = _kkt_residual(grad, a_eq, a_in, ce, ci, act_tol)
        if kkt <= settings.tol_kkt and viol <= settings.tol_con:
            converged = True
            status = "converged"
            break

        elastic_weight = 1e4
        qp = None
        for _ in range(4):
            qp = solve_qp(hess, grad, a_eq, -ce, a_in, -ci,
                          elastic_weight=elastic_weight)
            if qp.elastic <= 1e-8 * (1.0 + viol) or elastic_weight > 1e12:
                break
            elastic_weight *= 100.0
        # A small positive elastic value only means the linearization cannot
        # restore feasibility in one step; the merit still makes progress.
        # Give up only when the step cannot reduce the violation at all.
        if qp.elastic > 0.99 * viol + 10.0 * settings.tol_con:
            raise InfeasibleStepError(
                f"QP subproblem infeasible (residual {qp.elastic:.3g} vs "
                f"violation {viol:.3g} after elastic relaxation)")

        d = qp.x
        lam_eq_new, lam_in_new = qp.lam_eq, qp.lam_in
        lam_mag = max(np.abs(lam_eq_new).max(initial=0.0),
                      np.abs(lam_in_new).max(initial=0.0))
        mu = max(mu, settings.penalty_growth * lam_mag + 1.0)

        merit0 = f + mu * _l1_violation(ce, ci)
        descent = float(grad @ d) - mu * _l1_violation(ce, ci)
        if descent > -1e-16:
            # Not a descent direction for the merit: grow the penalty once;
            # if the direction itself is negligible we are done moving.
            mu *= 10.0
            merit0 = f + mu * _l1_violation(ce, ci)
            descent = float(grad @ d) - mu * _l1_violation(ce, ci)
        # The acceptance threshold must never allow a merit increase.
        descent = min(descent, -1e-16)
        if np.abs(d).max(initial=0.0) <= 1e-14 * (1.0 + np.abs(x).max()):
            lam_eq, lam_in = lam_eq_new, lam_in_new
            iterations += 1
            zero_steps += 1
            if zero_steps >= 3:
                # The QP keeps returning a zero step with the same
                # multipliers; the final KKT evaluation decides convergence.
                status = "stalled at zero step"
                kkt = _kkt_residual(grad, a_eq, a_in, ce, ci, act_tol)
                converged = kkt <= settings.tol_kkt and viol <= settings.tol_con
                if converged:
                    status = "converged"
                break
            continue
        zero_steps = 0

        def merit_of(x_t: np.ndarray) -> float:
            return float(problem.cost(x_t)) + mu * _l1_violation(
                problem.eq(x_t), problem.ineq(x_t))

        alpha = 1.0
        accepted = False
        x_trial = x + d
        merit_trial = merit_of(x_trial)
        if merit_trial <= merit0 + settings.armijo_c1 * alpha * descent:
            accepted = True
            # Expand while the merit keeps strictly improving: recovers fast
            # progress when a stale Hessian approximation shrinks the step.
            for _ in range(40):
                x_next = x + 2.0 * alpha * d
                merit_next = merit_of(x_next)
                if merit_next < merit_trial:
                    alpha *= 2.0
                    x_trial, merit_trial = x_next, merit_next
                else:
                    break
        if not accepted:
            # Second-order correction: curved active constraints reject full
            # steps under an l1 merit with a large penalty (Maratos effect).
            # Restore the active rows at the trial point and retest.
            rows = [a_eq[i] for i in range(ce.size)]
            rhs = list(-problem.eq(x + d))
            ci_trial = problem.ineq(x + d)
            for i in range(ci.size):
                if lam_in_new[i] > 1e-8 * (1.0 + lam_mag) and ci_trial[i] < 0.0:
                    rows.append(a_in[i])
                    rhs.append(-ci_trial[i])
            if rows:
                a_act = np.vstack(rows)
                correction = a_act.T @ np.linalg.lstsq(
                    a_act @ a_act.T, np.asarray(rhs), rcond=None)[0]
                x_soc = x + d + correction
                merit_soc = merit_of(x_soc)
                if merit_soc <= merit0 + settings.armijo_c1 * descent:
                    accepted = True
                    x_trial, merit_trial = x_soc, merit_soc
        if not accepted:
            while alpha >= 1e-12:
                alpha *= settings.backtrack_ratio
                x_trial = x + alpha * d
                merit_trial = merit_of(x_trial)
                if merit_trial <= merit0 + settings.armijo_c1 * alpha * descent:
                    accepted = True
                    break
        if not accepted:
            status = "line search stalled"
            lam_eq, lam_in = lam_eq_new, lam_in_new
            iterations += 1
            f = float(problem.cost(x))
            ce, ci = problem.eq(x), problem.ineq(x)
            viol = _max_violation(ce, ci)
            kkt = _kkt_residual(problem.cost_grad(x), problem.eq_jac(x),
                                problem.ineq_jac(x), ce, ci, act_tol)
            converged = kkt <= settings.tol_kkt and viol <= settings.tol_con
            if converged:
                status = "converged"
            break

        merit_history.append((mu, merit0, merit_trial))

        grad_l_old = grad.copy()
        if lam_eq_new.size:
            grad_l_old -= a_eq.T @ lam_eq_new
        if lam_in_new.size:
            grad_l_old -= a_in.T @ lam_in_new
        grad_new = np.asarray(problem.cost_grad(x_trial), dtype=float)
        grad_l_new = grad_new.copy()
        a_eq_new, a_in_new = problem.eq_jac(x_trial), problem.ineq_jac(x_trial)
        if lam_eq_new.size:
            grad_l_new -= a_eq_new.T @ lam_eq_new
        if lam_in_new.size:
            grad_l_new -= a_in_new.T @ lam_in_new

        step = x_trial - x
        y = grad_l_new - grad_l_old
        sy = float(step @ y)
        if not scaled_once and sy > 1e-12:
            factor = min(max(float(y @ y) / sy, 1e-4), 1e6)
            hess = factor * np.eye(problem.dim)
            scaled_once = True
        s_bs = float(step @ hess @ step)
        if s_bs > 1e-16:
            # Powell damping keeps the approximation positive definite.
            if sy < 0.2 * s_bs:
                theta = 0.8 * s_bs / (s_bs - sy)
                r = theta * y + (1.0 - theta) * (hess @ step)
            else:
                r = y
            sr = float(step @ r)
            # Skip updates whose rank-one term would inject absurd curvature
            # (tiny steps against 1e6-scale multiplier gradients otherwise
            # blow the approximation up and poison the QP conditioning).
            if sr > 1e-16 and float(r @ r) / sr <= 1e9:
                bs = hess @ step
                hess = hess - np.outer(bs, bs) / s_bs + np.outer(r, r) / sr
                hess = 0.5 * (hess + hess.T)

        x = x_trial
        lam_eq, lam_in = lam_eq_new, lam_in_new
        iterations += 1

    if converged and status != "converged":
        status = "converged"
    return SqpResult(x=x, cost=float(problem.cost(x)), kkt_residual=float(kkt),
                     constraint_violation=float(viol), lam_eq=lam_eq,
                     lam_in=lam_in, iterations=iterations, converged=converged,
                     status=status, merit_history=merit_history)


def finite_difference_jacobian(fn: Callable[[np.ndarray], np.ndarray], x,
                               step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of a vector-valued function."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(fn(x), dtype=float))
    jac = np.zeros((f0.shape[0], x.shape[0]))
    for j in range(x.shape[0]):
        dx = np.zeros_like(x)
        dx[j] = step
        f_plus = np.atleast_1d(np.asarray(fn(x + dx), dtype=float))
        f_minus = np.atleast_1d(np.asarray(fn(x - dx), dtype=float))
        jac[:, j] = (f_plus - f_minus) / (2.0 * step)
    return jac
