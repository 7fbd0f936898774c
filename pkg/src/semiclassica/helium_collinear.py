"""Collinear eZe helium with both electrons on the same side of the nucleus.

The inner electron's collisions with the nucleus are regularized with
r2 = Q^2, p2 = P/(2Q) and dt = r2 ds, so the section r2 = 0 is simply Q = 0.
On the section P = +-4 (Z = 2) whatever the energy.
"""

import logging
import math
from typing import List, Sequence, Tuple

import numpy as np

from .config import OdeSolver
from .errors import Escape, HyperbolicDetected, NonConvergent, NotConverged, TripleCollision, ValidationError
from .models import CollinearState, FrozenPlanetQN, SectionPoint
from .numkit import integrate_ode

logger = logging.getLogger(__name__)

Z = 2.0
COLLINEAR_SOLVER = OdeSolver(abs_tol=1e-12, rel_tol=1e-12)


def frozen_planet_energy(qn: FrozenPlanetQN) -> float:
    denominator = qn.s + 0.5 + 2.0 * (qn.k + 0.5) * qn.gamma1 + (qn.l + 0.5) * qn.gamma2
    return -qn.S_sc**2 / denominator**2


def hamiltonian(state: CollinearState) -> float:
    r1, r2, p1, p2 = state.r1, state.r2, state.p1, state.p2
    return 0.5 * (p1 * p1 + p2 * p2) - Z / r1 - Z / r2 + 1.0 / (r1 - r2)


def on_section(r1: float, p1: float, E: float) -> CollinearState:
    """Phase-space point with the inner electron at the nucleus; p2 is singular there."""
    return CollinearState(r1, 0.0, p1, math.inf, E)


def regularized_energy(y: Sequence[float], E: float) -> float:
    """K = r2 (H - E); zero along every physical trajectory."""
    r1, p1, Q, P = y[:4]
    q2 = Q * Q
    return q2 * (0.5 * p1 * p1 - Z / r1 + 1.0 / (r1 - q2) - E) + P * P / 8.0 - Z


def _rhs(E: float):
    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        r1, p1, Q, P, _ = y
        q2 = Q * Q
        gap = r1 - q2
        outer = 0.5 * p1 * p1 - Z / r1 + 1.0 / gap - E
        return np.array(
            [
                q2 * p1,
                -q2 * (Z / (r1 * r1) - 1.0 / (gap * gap)),
                0.25 * P,
                -(2.0 * Q * outer + 2.0 * q2 * Q / (gap * gap)),
                q2,
            ]
        )

    return rhs


def _initial_vector(s0: CollinearState) -> np.ndarray:
    if s0.E >= 0.0:
        raise ValidationError(f"collinear dynamics needs E < 0, got {s0.E}")
    if not s0.r1 > s0.r2 >= 0.0:
        raise ValidationError(f"need r1 > r2 >= 0, got r1={s0.r1}, r2={s0.r2}")
    if s0.r2 == 0.0:
        Q, P = 0.0, 2.0 * math.sqrt(2.0 * Z)
    else:
        Q = math.sqrt(s0.r2)
        P = 2.0 * Q * s0.p2
    return np.array([s0.r1, s0.p1, Q, P, 0.0])


def integrate_collinear(s0: CollinearState, n_crossings: int, solver: OdeSolver = COLLINEAR_SOLVER) -> List[SectionPoint]:
    """Section points (r1, p1) at the next ``n_crossings`` inner-electron collisions."""
    return _run(s0, n_crossings, solver)[0]


def energy_drift(s0: CollinearState, n_crossings: int, solver: OdeSolver = COLLINEAR_SOLVER) -> float:
    """|K| = |r2 (H - E)| after ``n_crossings`` collisions; K vanishes exactly on the flow."""
    return abs(regularized_energy(_run(s0, n_crossings, solver)[1], s0.E))


def _run(s0: CollinearState, n_crossings: int, solver: OdeSolver) -> Tuple[List[SectionPoint], np.ndarray]:
    if n_crossings < 1:
        raise ValidationError("n_crossings must be positive")
    E = s0.E
    y = _initial_vector(s0)
    rhs = _rhs(E)
    r_escape = 200.0 / abs(E)

    def section(s: float, y: np.ndarray) -> float:
        return y[2]

    def escaped(s: float, y: np.ndarray) -> float:
        return y[0] - r_escape

    def ordering(s: float, y: np.ndarray) -> float:
        return y[0] - y[2] ** 2 - 1e-9

    escaped.terminal = True
    ordering.terminal = True

    chunk = 4.0 * math.pi / math.sqrt(abs(E) / 2.0) * min(n_crossings, 50)
    s_now = 0.0
    points: List[SectionPoint] = []
    while len(points) < n_crossings:
        traj = integrate_ode(rhs, y, (s_now, s_now + chunk), events=[section, escaped, ordering], s=solver)
        for ev in traj.events:
            if ev.index == 0 and ev.t > s_now + 1e-12 and len(points) < n_crossings:
                points.append(SectionPoint(float(ev.y[0]), float(ev.y[1]), len(points) + 1, float(ev.y[4])))
            elif ev.index == 1:
                raise Escape(f"outer electron escaped beyond r1={r_escape:.3g}", crossings=len(points))
            elif ev.index == 2:
                if ev.y[0] < 1e-3:
                    raise TripleCollision("both electrons reached the nucleus", crossings=len(points))
                raise NonConvergent("electron ordering r1 > r2 was violated", crossings=len(points))
        y = traj.y[:, -1]
        s_now = float(traj.t[-1])
    logger.debug("%d crossings at E=%g, |K|=%.2e", len(points), E, abs(regularized_energy(y, E)))
    return points, y


def section_map(r1: float, p1: float, E: float, solver: OdeSolver = COLLINEAR_SOLVER) -> Tuple[float, float]:
    point = integrate_collinear(on_section(r1, p1, E), 1, solver)[0]
    return point.r1, point.p1


def jacobian(r1: float, p1: float, E: float, h: float = 1e-6, solver: OdeSolver = COLLINEAR_SOLVER) -> np.ndarray:
    """Central-difference monodromy of the section map."""
    M = np.empty((2, 2))
    for j, (dr, dp) in enumerate(((h, 0.0), (0.0, h))):
        plus = np.array(section_map(r1 + dr, p1 + dp, E, solver))
        minus = np.array(section_map(r1 - dr, p1 - dp, E, solver))
        M[:, j] = (plus - minus) / (2.0 * h)
    return M


def locate_fixed_point(
    E: float,
    guess: Sequence[float] = (7.0, 0.0),
    tol: float = 1e-8,
    max_iter: int = 30,
    solver: OdeSolver = COLLINEAR_SOLVER,
) -> Tuple[float, float]:
    """Period-one fixed point of the section map by damped Newton iteration.

    The frozen-planet fixed point records the outer electron at its outer
    turning point, r1 = 5.8004 at E = -1. Positions scale as 1/|E|, so the
    often quoted r1 ~ 7 is the same orbit at E ~ -0.83.
    """
    x = np.array(guess, dtype=float)
    residual = np.array(section_map(x[0], x[1], E, solver)) - x
    for iteration in range(max_iter):
        if np.linalg.norm(residual) < tol:
            break
        M = jacobian(x[0], x[1], E, solver=solver)
        step = np.linalg.solve(M - np.eye(2), -residual)
        damping = 1.0
        for _ in range(10):
            trial = x + damping * step
            try:
                trial_residual = np.array(section_map(trial[0], trial[1], E, solver)) - trial
            except (Escape, TripleCollision, NonConvergent):
                damping *= 0.5
                continue
            if np.linalg.norm(trial_residual) < np.linalg.norm(residual):
                break
            damping *= 0.5
        else:
            raise NotConverged(f"no Newton step reduces the residual near {x}")
        x, residual = trial, trial_residual
        logger.debug("fixed point %d: x=%s |res|=%.2e", iteration, x, np.linalg.norm(residual))
    if np.linalg.norm(residual) >= tol:
        raise NotConverged(f"|map(x) - x| = {np.linalg.norm(residual):.2e} after {max_iter} iterations")
    moduli = np.abs(np.linalg.eigvals(jacobian(x[0], x[1], E, solver=solver)))
    if np.max(np.abs(moduli - 1.0)) > 1e-4:
        raise HyperbolicDetected(f"eigenvalue moduli {moduli} are off the unit circle")
    return float(x[0]), float(x[1])
