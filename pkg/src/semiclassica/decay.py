"""Classical radiative decay of a hydrogen Kepler orbit.

The orbit-averaged Larmor losses are

    dE/dt = -(-2E)^{3/2} (3 + 2EL^2) / (3 c^3 L^5)
    dL/dt = -2 (-2E)^{3/2} / (3 c^3 L^2)

and the lifetime estimate is the time for L to drop by one unit with the
right-hand side frozen at E = -1/2n^2, L = l + 1/2.
"""

import logging
import math
from typing import Tuple

import numpy as np

from .config import UNITS, OdeSolver
from .errors import Collapse, InvalidQN, NonConvergent
from .models import DecayState
from .numkit import Trajectory, integrate_ode

logger = logging.getLogger(__name__)

C = UNITS.c_au
DECAY_SOLVER = OdeSolver(abs_tol=1e-13, rel_tol=1e-11)


def decay_rates(E: float, L: float, c: float = C) -> Tuple[float, float]:
    if E >= 0.0 or L <= 0.0:
        raise InvalidQN(f"need a bound orbit with E < 0 and L > 0, got E={E}, L={L}")
    drive = (-2.0 * E) ** 1.5 / (3.0 * c**3)
    return -drive * (3.0 + 2.0 * E * L * L) / L**5, -2.0 * drive / (L * L)


def lifetime_classical_au(n: int, l: int, c: float = C) -> float:
    if n < 2 or not 1 <= l <= n - 1:
        raise InvalidQN(f"need n >= 2 and 1 <= l <= n-1, got n={n}, l={l}")
    return 1.5 * c**3 * n**3 * (l + 0.5) ** 2


def lifetime_classical(n: int, l: int) -> float:
    """Leading-order classical lifetime in seconds."""
    return UNITS.time_to_s(lifetime_classical_au(n, l))


def integrate_decay(start: DecayState, delta_L: float = 1.0, solver: OdeSolver = DECAY_SOLVER) -> Tuple[float, Trajectory]:
    """Follow the radiative flow until L has dropped by ``delta_L``.

    Time is integrated in units of the frozen-coefficient estimate; the
    returned trajectory carries atomic-unit times in ``t`` and rows (E, L).
    """
    E0, L0 = float(start.E), float(start.L)
    _, dL0 = decay_rates(E0, L0)
    if delta_L >= L0:
        raise Collapse(f"L reaches zero before it can drop by {delta_L}", L0=L0)
    scale = delta_L / abs(dL0)
    target = L0 - delta_L

    def rhs(tau: float, y: np.ndarray) -> np.ndarray:
        dE, dL = decay_rates(y[0], y[1])
        return np.array([scale * dE, scale * dL])

    def reached(tau: float, y: np.ndarray) -> float:
        return y[1] - target

    def collapsed(tau: float, y: np.ndarray) -> float:
        return y[1] - 1e-3 * L0

    reached.terminal = True
    reached.direction = -1.0
    collapsed.terminal = True
    collapsed.direction = -1.0

    traj = integrate_ode(rhs, (E0, L0), (0.0, 1e3), events=[reached, collapsed], s=solver)
    if not traj.terminated:
        raise NonConvergent(f"L did not drop by {delta_L} within 1000 frozen lifetimes")
    last = traj.events[-1]
    if last.index == 1:
        raise Collapse(f"orbit collapsed before L decreased by {delta_L}", L0=L0)
    elapsed = last.t * scale
    logger.debug("E=%.6g L=%.4f: dL=%g after t=%.6g au", E0, L0, delta_L, elapsed)
    return elapsed, Trajectory(traj.t * scale, traj.y, traj.events, True, traj.sol)
