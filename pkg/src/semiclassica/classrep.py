"""Classical representation of one-dimensional bound states.

A quantum density rho(x) in a symmetric well is written as an energy
distribution phi(eps) of microcanonical ensembles. The two are related by an
Abel transform pair, with the potential V taken as the integration variable.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import eval_genlaguerre, eval_laguerre

from .config import Quadrature
from .errors import DerivativeNoise, IntegrableSingularity, InvalidQN, NonConvergent, ValidationError
from .models import EnergyDistribution, FeynmanDrive
from .numkit import expand_bracket, find_root, gauss_legendre_nodes, integrate

logger = logging.getLogger(__name__)

TRANSFORM_QUADRATURE = Quadrature(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=400, endpoint_mode="inv_sqrt_left")
KERNEL_QUADRATURE = Quadrature(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=400, endpoint_mode="inv_sqrt_both")
PHASE_NODES = 64

Derivatives = Tuple[float, float, float]


@dataclass
class SymmetricWell:
    """V(x) = V(-x) with V(0) = 0, increasing on x > 0.

    The optional callables short-circuit root finding, quadrature and finite
    differences when closed forms exist.
    """

    potential: Callable[[float], float]
    mass: float = 1.0
    inverse: Optional[Callable[[float], float]] = None
    derivatives: Optional[Callable[[float], Derivatives]] = None
    period_fn: Optional[Callable[[float], float]] = None
    kernel_fn: Optional[Callable[[float, float], float]] = None

    def __post_init__(self) -> None:
        if self.mass <= 0.0:
            raise ValidationError(f"mass must be positive, got {self.mass}")

    def turning_point(self, eps: float) -> float:
        if eps < 0.0:
            raise ValidationError(f"energy below the well bottom: eps={eps}")
        if eps == 0.0:
            return 0.0
        if self.inverse is not None:
            return self.inverse(eps)
        gap = lambda x: self.potential(x) - eps  # noqa: E731
        return find_root(gap, expand_bracket(gap, 0.0, 1.0, lower_limit=0.0))

    def slopes(self, x: float) -> Derivatives:
        """V', V'' and V''' at x."""
        if self.derivatives is not None:
            return self.derivatives(x)
        h = 1e-3 * (1.0 + abs(x))
        V = self.potential
        f = [V(x + k * h) for k in (-2, -1, 0, 1, 2)]
        first = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h)
        second = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h)
        third = (-f[0] + 2.0 * f[1] - 2.0 * f[3] + f[4]) / (2.0 * h**3)
        return first, second, third

    def period(self, eps: float) -> float:
        if eps <= 0.0:
            raise ValidationError(f"period needs eps > 0, got {eps}")
        if self.period_fn is not None:
            return self.period_fn(eps)
        x_t = self.turning_point(eps)
        q = TRANSFORM_QUADRATURE.with_mode("inv_sqrt_right")
        return 2.0 * math.sqrt(2.0 * self.mass) * integrate(lambda x: 1.0 / math.sqrt(eps - self.potential(x)), 0.0, x_t, q)

    def kernel(self, mu: float, eps: float) -> float:
        if self.kernel_fn is not None:
            return self.kernel_fn(mu, eps)
        return balance_kernel(self, mu, eps)


def harmonic_well(omega: float = 1.0, mass: float = 1.0) -> SymmetricWell:
    if omega <= 0.0:
        raise ValidationError(f"omega must be positive, got {omega}")
    stiffness = mass * omega * omega
    return SymmetricWell(
        potential=lambda x: 0.5 * stiffness * x * x,
        mass=mass,
        inverse=lambda v: math.sqrt(2.0 * v / stiffness),
        derivatives=lambda x: (stiffness * x, stiffness, 0.0),
        period_fn=lambda eps: 2.0 * math.pi / omega,
        kernel_fn=lambda mu, eps: 0.25 * stiffness * (mu - 2.0 * eps),
    )


def microcanonical_density(well: SymmetricWell, E: float, x: float) -> float:
    """x-distribution q(E, x) of a single classical orbit; zero outside the turning points."""
    gap = E - well.potential(x)
    if gap <= 0.0:
        return 0.0
    return math.sqrt(2.0 * well.mass) / (well.period(E) * math.sqrt(gap))


def ho_distribution(n: int, omega: float = 1.0, hbar: float = 1.0, grid: Optional[np.ndarray] = None) -> EnergyDistribution:
    """Exact energy distribution of the oscillator eigenstate n.

    It changes sign n times, so it is a quasi-probability for n >= 1.
    """
    if n < 0:
        raise InvalidQN(f"oscillator level must be non-negative, got {n}")
    quantum = hbar * omega

    def density(eps: float) -> float:
        return 2.0 / quantum * math.exp(-2.0 * eps / quantum) * float(eval_laguerre(n, 4.0 * eps / quantum))

    if grid is None:
        grid = np.linspace(0.0, (30.0 + 4.0 * n) * quantum, 1201)
    phi = 2.0 / quantum * np.exp(-2.0 * grid / quantum) * eval_laguerre(n, 4.0 * grid / quantum)
    return EnergyDistribution(np.asarray(grid, dtype=float), phi, n, density)


def _distribution_callable(dist: EnergyDistribution) -> Tuple[Callable[[float], float], float]:
    if dist.density is not None:
        return dist.density, math.inf
    grid, phi = dist.grid, dist.phi
    return (lambda eps: float(np.interp(eps, grid, phi, left=0.0, right=0.0))), float(grid[-1])


def sum_rules(dist: EnergyDistribution) -> Tuple[float, float]:
    """Norm and mean energy of a distribution."""
    if dist.density is None:
        return float(trapezoid(dist.phi, dist.grid)), float(trapezoid(dist.grid * dist.phi, dist.grid))
    q = Quadrature(1e-12, 1e-10, 400)
    norm = integrate(dist.density, 0.0, math.inf, q)
    mean = integrate(lambda eps: eps * dist.density(eps), 0.0, math.inf, q)
    return norm, mean


def abel_forward(dist: EnergyDistribution, well: SymmetricWell, x: float) -> float:
    """rho(x) as the phi-weighted superposition of microcanonical densities."""
    phi, upper = _distribution_callable(dist)
    floor = well.potential(x)
    if floor >= upper:
        return 0.0
    scale = math.sqrt(2.0 * well.mass)

    def integrand(eps: float) -> float:
        if eps <= floor:
            return 0.0
        return scale / (well.period(eps) * math.sqrt(eps - floor)) * phi(eps)

    return integrate(integrand, floor, upper, TRANSFORM_QUADRATURE)


def _noisy_derivative(rho: Callable[[float], float], x: float, noise_tol: float) -> float:
    h = 1e-3 * (1.0 + abs(x))
    f = {k: rho(x + k * h) for k in (-4, -2, -1, 1, 2, 4)}
    fine = (8.0 * (f[1] - f[-1]) - (f[2] - f[-2])) / (12.0 * h)
    coarse = (8.0 * (f[2] - f[-2]) - (f[4] - f[-4])) / (24.0 * h)
    if abs(fine - coarse) > noise_tol:
        raise DerivativeNoise(f"finite differences disagree by {abs(fine - coarse):.3g} at x={x}", x=x)
    return fine


def abel_inverse(
    rho: Callable[[float], float],
    well: SymmetricWell,
    eps: float,
    drho: Optional[Callable[[float], float]] = None,
    noise_tol: float = 1e-6,
) -> float:
    """phi(eps) from a density decaying at large x.

    The V-integral is carried out in x, where dV (d rho / dV) = rho'(x) dx.
    Without ``drho`` the slope comes from two nested central-difference
    stencils, and DerivativeNoise is raised when they disagree.
    """
    if eps < 0.0:
        raise ValidationError(f"energy below the well bottom: eps={eps}")
    slope = drho if drho is not None else (lambda x: _noisy_derivative(rho, x, noise_tol))
    x_eps = well.turning_point(eps)

    def integrand(x: float) -> float:
        gap = well.potential(x) - eps
        if gap <= 0.0:
            return 0.0
        return slope(x) / math.sqrt(gap)

    value = integrate(integrand, x_eps, math.inf, TRANSFORM_QUADRATURE)
    T = well.period(max(eps, 1e-12))
    return -T / (math.pi * math.sqrt(2.0 * well.mass)) * value


def energy_distribution(
    rho: Callable[[float], float],
    well: SymmetricWell,
    grid: Iterable[float],
    n: int,
    drho: Optional[Callable[[float], float]] = None,
) -> EnergyDistribution:
    eps = np.asarray(list(grid), dtype=float)
    phi = np.array([abel_inverse(rho, well, e, drho) for e in eps])
    logger.debug("tabulated phi for n=%d on %d points", n, eps.size)
    return EnergyDistribution(eps, phi, n)


def balance_kernel(well: SymmetricWell, mu: float, eps: float) -> float:
    """Kernel Q(mu, eps) of the balance equation by quadrature between V = eps and V = mu."""
    if not 0.0 <= eps < mu:
        raise ValidationError(f"need 0 <= eps < mu, got eps={eps}, mu={mu}")
    x1, x2 = well.turning_point(eps), well.turning_point(mu)

    def integrand(x: float) -> float:
        V = well.potential(x)
        upper, lower = mu - V, V - eps
        if upper <= 0.0 or lower <= 0.0:
            return 0.0
        d1, d2, d3 = well.slopes(x)
        root = math.sqrt(upper)
        third = -15.0 / 8.0 * d1**3 / root + 45.0 / 4.0 * root * d1 * d2 - 2.5 * upper * root * d3
        return third / math.sqrt(lower)

    if x1 == 0.0:
        return integrate(integrand, x1, x2, KERNEL_QUADRATURE.with_mode("inv_sqrt_right")) / (15.0 * math.pi)
    return integrate(integrand, x1, x2, KERNEL_QUADRATURE) / (15.0 * math.pi)


def _third_derivative(f: Callable[[float], float], x: float, h: float) -> float:
    g = [f(x + k * h) for k in (-3, -2, -1, 1, 2, 3)]
    return (g[0] - 8.0 * g[1] + 13.0 * g[2] - 13.0 * g[3] + 8.0 * g[4] - g[5]) / (8.0 * h**3)


def balance_residual(
    phi_scaled: Callable[[float], float],
    E_n: float,
    well: SymmetricWell,
    grid: Iterable[float],
    hbar: float = 1.0,
    third: Optional[Callable[[float], float]] = None,
    step: float = 5e-3,
) -> float:
    """L1 norm over ``grid`` of (eps - E_n) phi~ - (hbar^2/m) int Q phi~''' d mu.

    ``phi_scaled`` is phi/T; it must stay finite a few ``step`` below the grid.
    """
    d3 = third if third is not None else (lambda mu: _third_derivative(phi_scaled, mu, step))
    q = Quadrature(1e-14, 1e-11, 400)
    eps = np.asarray(list(grid), dtype=float)
    residual = np.empty_like(eps)
    for i, e in enumerate(eps):
        coupling = integrate(lambda mu: well.kernel(mu, e) * d3(mu), e, math.inf, q)
        residual[i] = (e - E_n) * phi_scaled(e) - hbar**2 / well.mass * coupling
    return float(trapezoid(np.abs(residual), eps))


def feynman_transition(n: int, k: int, drive: FeynmanDrive) -> float:
    """Exact n -> k probability of the linearly driven oscillator.

    Written with the smaller index below so every factor stays non-negative.
    """
    if n < 0 or k < 0:
        raise InvalidQN(f"levels must be non-negative, got n={n}, k={k}")
    gamma = drive.gamma
    if gamma < 0.0:
        raise ValidationError(f"fluence must be non-negative, got {drive.fluence}")
    low, high = min(n, k), max(n, k)
    if gamma == 0.0:
        return 1.0 if n == k else 0.0
    log_ratio = math.lgamma(low + 1) - math.lgamma(high + 1) + (high - low) * math.log(gamma) - gamma
    return math.exp(log_ratio) * float(eval_genlaguerre(low, high - low, gamma)) ** 2


def feynman_transition_quadrature(n: int, k: int, drive: FeynmanDrive, nodes: int = PHASE_NODES) -> float:
    """Overlap of the driven level-n ensemble with the level-k distribution.

    The initial phase tau is uniform, so the final energy
    mu = eps + nu + 2 sqrt(eps nu) cos(tau) follows the arcsine law between
    mu_1 and mu_2. Averaging over tau removes its inverse square-root edges.
    The overlap equals (-1)**(n + k) * feynman_transition(n, k, drive), the
    product L_n^(k-n)(gamma) L_k^(n-k)(gamma) exp(-gamma).
    """
    if n < 0 or k < 0:
        raise InvalidQN(f"levels must be non-negative, got n={n}, k={k}")
    quantum = drive.hbar * drive.omega
    nu = drive.fluence
    if nu < 0.0:
        raise ValidationError(f"fluence must be non-negative, got {nu}")
    final = ho_distribution(k, drive.omega, drive.hbar).density
    t, w = gauss_legendre_nodes(nodes)
    tau = 0.5 * math.pi * (t + 1.0)
    cosines = np.cos(tau)
    weights = 0.5 * w

    def smeared(mu: float) -> float:
        eps = mu + nu + 2.0 * math.sqrt(mu * nu) * cosines
        x = 4.0 * eps / quantum
        values = 2.0 / quantum * np.exp(-2.0 * eps / quantum) * eval_laguerre(n, x)
        return float(np.dot(weights, values))

    try:
        value = integrate(lambda mu: final(mu) * smeared(mu), 0.0, math.inf, Quadrature(1e-14, 1e-11, 400))
    except NonConvergent as exc:
        raise IntegrableSingularity(f"ensemble overlap for {n} -> {k} did not converge", gamma=drive.gamma) from exc
    # phi_k phi_n integrates to delta_nk / (hbar omega) at zero drive
    return quantum * value


def transition_row(n: int, drive: FeynmanDrive, tol: float = 1e-14, k_max: int = 400) -> np.ndarray:
    """P_nk for k = 0, 1, ... until the tail beyond the mean drops below ``tol``."""
    row = []
    for k in range(k_max + 1):
        row.append(feynman_transition(n, k, drive))
        if k > n + drive.gamma and row[-1] < tol:
            break
    else:
        logger.warning("transition row for n=%d truncated at k=%d", n, k_max)
    return np.array(row)


def semiclassical_phase(well: SymmetricWell, E_n: float, eps: float) -> float:
    """W(eps) = 2 int_eps^E_n sqrt(2m(E_n - e)) / V'(x(e)) de, vanishing at E_n."""
    if not 0.0 <= eps <= E_n:
        raise ValidationError(f"need 0 <= eps <= E_n, got eps={eps}, E_n={E_n}")
    if eps == E_n:
        return 0.0

    def integrand(e: float) -> float:
        return math.sqrt(2.0 * well.mass * (E_n - e)) / well.slopes(well.turning_point(e))[0]

    return 2.0 * integrate(integrand, eps, E_n, TRANSFORM_QUADRATURE)


def _action_to_turning_point(well: SymmetricWell, E: float, x: float) -> float:
    x_t = well.turning_point(E)
    if abs(x) >= x_t:
        return 0.0
    return integrate(lambda s: math.sqrt(max(2.0 * well.mass * (E - well.potential(s)), 0.0)), abs(x), x_t)


def semiclassical_density(well: SymmetricWell, E_n: float, x: float, hbar: float = 1.0) -> float:
    """Leading stationary-phase density 2 q(E_n, x) cos^2(S(x)/hbar - pi/4).

    S(x) is the action from |x| to the turning point. At a quantized E_n
    the result has n nodes.
    """
    q = microcanonical_density(well, E_n, x)
    if q == 0.0:
        return 0.0
    phase = _action_to_turning_point(well, E_n, x) / hbar - 0.25 * math.pi
    return 2.0 * q * math.cos(phase) ** 2
