"""Quadratic Zeeman effect inside an {n, m} manifold.

Within the manifold the conserved quantity is Lambda = 4A^2 - 5A_z^2. Its
values follow from quantizing the libration of the Runge-Lenz vector in
the polar angle theta, either inside the double cone cot(theta0) = 2
(Lambda < 0) or outside it (Lambda > 0).
"""

import logging
import math
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .config import Quadrature
from .errors import BranchForbidden, InvalidQN, NoBarrier, NoRoot, NoSignChange
from .models import ManifoldState
from .numkit import find_root, integrate

logger = logging.getLogger(__name__)

THETA0 = math.atan(0.5)
SQRT5 = math.sqrt(5.0)
LIBRATION_QUADRATURE = Quadrature(abs_tol=1e-13, rel_tol=1e-13, max_subdivisions=400, endpoint_mode="inv_sqrt_both")

# Keeps the Lambda bracket off the separatrix at Lambda = 0.
_POLE_GAP = 1e-12


class Branch(str, Enum):
    INSIDE = "inside_cone"
    OUTSIDE = "outside_cone"


def lambda_invariant(A: Sequence[float], z_axis: Sequence[float] = (0.0, 0.0, 1.0)) -> float:
    A = np.asarray(A, dtype=float)
    Az = float(np.dot(A, np.asarray(z_axis, dtype=float)))
    return 4.0 * float(np.dot(A, A)) - 5.0 * Az * Az


def effective_potential(theta: float, Lambda: float, mu: float) -> float:
    """U_eff with L_perp = n * sqrt(1 - U_eff)."""
    s2 = math.sin(theta) ** 2
    return -Lambda / (1.0 - 5.0 * s2) + mu * mu / s2


def _perp_squared(theta: float, Lambda: float, mu: float) -> float:
    """(L_perp / n)^2."""
    s2 = math.sin(theta) ** 2
    return 1.0 + Lambda / (1.0 - 5.0 * s2) - (mu * mu / s2 if mu else 0.0)


def _roots_in_sin2(Lambda: float, mu: float) -> Optional[Tuple[float, float]]:
    """Roots of -5x^2 + (1 + Lambda + 5mu^2)x - mu^2 with x = sin^2(theta)."""
    b = 1.0 + Lambda + 5.0 * mu * mu
    disc = b * b - 20.0 * mu * mu
    if disc < 0.0:
        if disc > -1e-14:
            disc = 0.0
        else:
            return None
    root = math.sqrt(disc)
    return max((b - root) / 10.0, 0.0), (b + root) / 10.0


def lambda_range(mu: float, branch: Branch) -> Tuple[float, float]:
    if Branch(branch) is Branch.INSIDE:
        return -((1.0 - SQRT5 * abs(mu)) ** 2), 0.0
    return 0.0, 4.0 * (1.0 - mu * mu)


def turning_points(Lambda: float, mu: float) -> Tuple[float, ...]:
    """Ends of the classically allowed theta intervals.

    Inside the cone (Lambda < 0) this is (theta1, theta2, theta3, theta4) with
    theta3 = pi - theta2; outside (Lambda > 0) it is (theta5, theta6).
    """
    roots = _roots_in_sin2(Lambda, mu)
    if Lambda < 0.0:
        if roots is None or roots[1] >= 0.2 or abs(mu) * SQRT5 >= 1.0:
            raise NoRoot(f"no libration inside the cone for Lambda={Lambda}, mu={mu}")
        t1 = math.asin(math.sqrt(roots[0]))
        t2 = math.asin(math.sqrt(roots[1]))
        return t1, t2, math.pi - t2, math.pi - t1
    if Lambda > 0.0:
        if roots is None or roots[1] > 1.0 + 1e-14:
            raise NoRoot(f"no libration outside the cone for Lambda={Lambda}, mu={mu}")
        t5 = math.asin(math.sqrt(min(roots[1], 1.0)))
        return t5, math.pi - t5
    raise BranchForbidden("Lambda = 0 is the separatrix between the two branches")


def libration_action(Lambda: float, mu: float, branch: Branch, interval: str = "lower") -> float:
    """Integral of L_perp / n over one allowed interval.

    ``interval`` picks [theta1, theta2] ("lower") or [theta3, theta4]
    ("upper") inside the cone; it is ignored outside.
    """
    branch = Branch(branch)
    lo, hi = lambda_range(mu, branch)
    if Lambda <= lo or Lambda >= hi:
        return 0.0
    points = turning_points(Lambda, mu)
    if branch is Branch.INSIDE:
        a, b = points[:2] if interval == "lower" else points[2:]
    else:
        a, b = points[0], 0.5 * math.pi
    if not a < b:
        return 0.0
    integrand = lambda t: math.sqrt(max(_perp_squared(t, Lambda, mu), 0.0))  # noqa: E731
    action = integrate(integrand, a, b, LIBRATION_QUADRATURE)
    return 2.0 * action if branch is Branch.OUTSIDE else action


def _check(n: int, m: int, branch: Branch, index: int) -> Branch:
    if n < 1 or abs(m) >= n or index < 0:
        raise InvalidQN(f"need n >= 1, |m| < n and index >= 0, got n={n}, m={m}, index={index}")
    branch = Branch(branch)
    if branch is Branch.INSIDE and 5 * m * m >= n * n:
        raise BranchForbidden(f"states inside the cone need m < n/sqrt(5), got n={n}, m={m}")
    return branch


def scaled_shift(Lambda: float, mu: float) -> float:
    return 0.5 * (1.0 + mu * mu + Lambda)


def parity(state: ManifoldState) -> Optional[int]:
    """(-1)^k for states outside the cone; inside states come as degenerate pairs."""
    if Branch(state.branch) is Branch.OUTSIDE:
        return -1 if state.index % 2 else 1
    return None


def separatrix_action(mu: float, branch: Branch) -> float:
    """Libration action in the limit Lambda -> 0 on either side, where L_perp/n = sqrt(1 - mu^2/sin^2)."""
    branch = Branch(branch)
    edge = math.asin(min(abs(mu), 1.0))
    integrand = lambda t: math.sqrt(max(1.0 - (mu * mu / math.sin(t) ** 2 if mu else 0.0), 0.0))  # noqa: E731
    if branch is Branch.INSIDE:
        return integrate(integrand, edge, THETA0, LIBRATION_QUADRATURE) if edge < THETA0 else 0.0
    start = max(edge, THETA0)
    return 2.0 * integrate(integrand, start, 0.5 * math.pi, LIBRATION_QUADRATURE) if start < 0.5 * math.pi else 0.0


def _bracket(residual: Callable[[float], float], mu: float, branch: Branch, target: float) -> Tuple[float, float]:
    """Approach the separatrix geometrically until the residual turns positive."""
    if target >= separatrix_action(mu, branch):
        raise NoSignChange("target exceeds the separatrix action")
    lo, hi = lambda_range(mu, branch)
    width = hi - lo
    for k in range(1, 13):
        gap = max(width * 10.0**-k, _POLE_GAP)
        edge = hi - gap if branch is Branch.INSIDE else lo + gap
        if residual(edge) > 0.0:
            return (lo, edge) if branch is Branch.INSIDE else (edge, hi)
    raise NoSignChange("action stays below target up to the separatrix")


def quantize_lambda(n: int, m: int, branch: Branch, index: int, interval: str = "lower") -> ManifoldState:
    branch = _check(n, m, branch, index)
    mu = abs(m) / n
    target = math.pi * (index + 0.5) / n
    residual = lambda lam: libration_action(lam, mu, branch, interval) - target  # noqa: E731
    try:
        Lambda = find_root(residual, _bracket(residual, mu, branch, target), xtol=1e-15, rtol=1e-15)
    except NoSignChange as exc:
        raise NoRoot(f"index {index} is not supported on the {branch.value} branch for n={n}, m={m}") from exc
    state = ManifoldState(n, m, branch.value, index, Lambda, scaled_shift(Lambda, mu))
    state.parity = parity(state)
    logger.debug("n=%d m=%d %s index=%d Lambda=%.12g eps=%.8f", n, m, branch.value, index, Lambda, state.epsilon)
    return state


def harmonic_shift(n: int, m: int, branch: Branch, index: int) -> float:
    """Scaled shift with the effective potential replaced by its harmonic well."""
    branch = _check(n, m, branch, index)
    mu = abs(m) / n
    if branch is Branch.INSIDE:
        sigma = (2 * index + 1) / n
        return sigma * math.sqrt(5.0 + 25.0 * sigma**2) + SQRT5 * mu - 5.0 * sigma**2
    kappa = (2 * index + 1) / n
    return 2.5 - kappa * math.sqrt(5.0 + 25.0 * kappa**2 / 16.0 - mu * mu) + 1.25 * kappa**2 - 1.5 * mu * mu


SPLITTING_COEFFICIENT = math.log((SQRT5 + 2.0) * (SQRT5 + 1.0) / 2.0)


def splitting_estimate(n: int) -> Tuple[float, float]:
    """Coefficient c* and the bare exponential exp(-c* n); the prefactor is not modeled."""
    if n < 0:
        raise InvalidQN(f"n must be non-negative, got {n}")
    return SPLITTING_COEFFICIENT, math.exp(-SPLITTING_COEFFICIENT * n)


def underbarrier_action(Lambda: float, mu: float, interval: str) -> float:
    """Scaled imaginary action |L_perp|/n across the forbidden stretch next to the cone.

    "inner" runs from theta2 up to theta0 (Lambda < 0), "outer" from theta0
    up to theta5 (Lambda > 0).
    """
    if interval not in ("inner", "outer"):
        raise InvalidQN(f"interval must be 'inner' or 'outer', got {interval!r}")
    if Lambda == 0.0:
        return 0.0
    integrand = lambda t: math.sqrt(max(-_perp_squared(t, Lambda, mu), 0.0))  # noqa: E731
    if interval == "inner":
        lo, _ = lambda_range(mu, Branch.INSIDE)
        if Lambda > 0.0 or SQRT5 * abs(mu) >= 1.0 or Lambda < lo:
            raise NoBarrier(f"no barrier inside the cone for Lambda={Lambda}, mu={mu}")
        start = turning_points(Lambda, mu)[1]
        return integrate(integrand, start, THETA0, LIBRATION_QUADRATURE)
    _, hi = lambda_range(mu, Branch.OUTSIDE)
    if Lambda < 0.0 or Lambda > hi:
        raise NoBarrier(f"no barrier outside the cone for Lambda={Lambda}, mu={mu}")
    end = turning_points(Lambda, mu)[0]
    return integrate(integrand, THETA0, end, LIBRATION_QUADRATURE)
