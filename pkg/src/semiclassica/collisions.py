"""Classical collision cross sections.

Detachment of a negative ion near threshold: the projectile follows the
Kapitsa-averaged Coulomb path, and the bound electron escapes only if its
oscillation axis lies inside the cone fixed at the distance of closest
approach.

Binary encounter: energy transfer to a bound electron is taken from the
two-body cross section averaged over the electron's microcanonical
distribution in its subshell.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from scipy.special import ellipe, ellipk

from .config import UNITS, OdeSolver, Quadrature
from .errors import BelowTransferable, InvalidQN, NoBoundRegion, NoBoundState, NoOverlap, NotBound, ValidationError
from .models import H_MINUS, CrossSectionCurve, NegativeIonModel
from .numkit import Trajectory, integrate, integrate_ode
from .wkb1d import CausticKind, RadialProblem, turning_points

logger = logging.getLogger(__name__)

ORBIT_QUADRATURE = Quadrature(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=400, endpoint_mode="inv_sqrt_both")
SIGMA_QUADRATURE = Quadrature(abs_tol=1e-13, rel_tol=1e-9, max_subdivisions=1000, endpoint_mode="inv_sqrt_both")
KAPITSA_SOLVER = OdeSolver(abs_tol=1e-12, rel_tol=1e-12)


# Detachment


def closest_approach(E: float, b: float) -> float:
    """Turning point of 1/2 R'^2 + E b^2/R^2 + 1/R = E."""
    if E <= 0.0 or b < 0.0:
        raise ValidationError(f"need E > 0 and b >= 0, got E={E}, b={b}")
    return (1.0 + math.sqrt(1.0 + 4.0 * E * E * b * b)) / (2.0 * E)


def escape_cone_cosine(R: float, model: NegativeIonModel = H_MINUS) -> float:
    """cos(theta_m) of the escape cone with the projectile at distance R; above 1 the cone is empty."""
    return model.binding * R * R / model.d


def detachment_probability(b: float, E: float, model: NegativeIonModel = H_MINUS) -> float:
    R0 = closest_approach(E, b)
    return min(max(1.0 - escape_cone_cosine(R0, model), 0.0), 1.0)


def max_impact_parameter(E: float, model: NegativeIonModel = H_MINUS) -> float:
    E_th = model.threshold
    if E <= E_th:
        return 0.0
    return math.sqrt(E * (E - E_th)) / (E_th * E)


def detachment_cross_section(E: float, model: NegativeIonModel = H_MINUS) -> float:
    if E <= 0.0:
        raise ValidationError(f"impact energy must be positive, got E={E}")
    E_th = model.threshold
    if E <= E_th:
        return 0.0
    return math.pi / (2.0 * E_th**2 * E**4) * (E - E_th) ** 2 * (E * E + 2.0 * E * E_th / 3.0 + E_th**2 / 3.0)


def kapitsa_trajectory(E: float, b: float, reach: float = 20.0, solver: OdeSolver = KAPITSA_SOLVER) -> Tuple[Trajectory, float]:
    """Smooth part R(t) of the projectile path from closest approach out to ``reach`` * R0.

    The incoming half is the time reverse of the returned one. The state
    vector is (R, dR/dt).
    """
    R0 = closest_approach(E, b)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        R, _ = y
        return np.array([y[1], 2.0 * E * b * b / R**3 + 1.0 / R**2])

    def far(t: float, y: np.ndarray) -> float:
        return y[0] - reach * R0

    far.terminal = True
    t_end = 10.0 * reach * R0 / math.sqrt(2.0 * E)
    traj = integrate_ode(rhs, (R0, 0.0), (0.0, t_end), events=[far], s=solver)
    logger.debug("Kapitsa path E=%g b=%g: R0=%.6g, %d steps", E, b, R0, traj.t.size)
    return traj, R0


def detachment_monte_carlo(
    E: float,
    model: NegativeIonModel = H_MINUS,
    samples: int = 200_000,
    seed: int = 0,
    b: Optional[float] = None,
) -> float:
    """Monte Carlo over oscillation axes on the half sphere.

    With ``b`` given this estimates W(b); otherwise b is drawn uniformly over
    the disc of radius b_m and the cross section is returned.
    """
    if samples < 1:
        raise ValidationError("samples must be positive")
    rng = np.random.default_rng(seed)
    if b is None:
        b_max = max_impact_parameter(E, model)
        if b_max == 0.0:
            return 0.0
        impact = b_max * np.sqrt(rng.random(samples))
    else:
        closest_approach(E, b)
        impact = np.full(samples, float(b))
    cos_axis = rng.random(samples)
    R0 = (1.0 + np.sqrt(1.0 + 4.0 * E * E * impact * impact)) / (2.0 * E)
    fraction = float(np.mean(cos_axis >= model.binding * R0 * R0 / model.d))
    return fraction if b is not None else math.pi * b_max**2 * fraction


def detachment_curve(energies_ev: Iterable[float], model: NegativeIonModel = H_MINUS) -> CrossSectionCurve:
    x = np.asarray(list(energies_ev), dtype=float)
    sigma = np.array([detachment_cross_section(UNITS.energy_from_ev(e), model) for e in x])
    return CrossSectionCurve("impact_energy_eV", x, sigma, "detachment", {"d": model.d, "binding": model.binding})


# Binary encounter


def _shape(v_p: float, v_e: float, eps: float) -> Tuple[float, float]:
    """Bracketed factor G of the averaged cross section and dG/deps."""
    s = v_p * v_p + v_e * v_e
    u = v_p * v_e
    delta = v_p * v_p - v_e * v_e
    transfer = delta - 4.0 * eps
    A = (v_p * v_p - 2.0 * eps) * (v_e * v_e + 2.0 * eps)
    if v_p * v_p >= v_e * v_e + 2.0 * eps:
        G = s / u * math.log((v_p + v_e) ** 2 / (v_p - v_e) ** 2) - 2.0 * transfer**2 / delta**2 - 2.0
        return G, 16.0 * transfer / delta**2
    # Only directions with cos^2 < A/u^2 transfer eps here.
    a = math.sqrt(A)
    G = s / u * math.log((s + 2.0 * a) / (s - 2.0 * a)) - 4.0 * a / u
    return G, 16.0 * a / (u * transfer)


def _check_velocities(v_p: float, v_e: float, eps: float) -> None:
    if v_p <= 0.0 or v_e <= 0.0 or eps <= 0.0:
        raise ValidationError(f"need v_p, v_e, eps > 0, got v_p={v_p}, v_e={v_e}, eps={eps}")


def bea_sigma_velocity(v_p: float, v_e: float, eps: float, strict: bool = False) -> float:
    """Cross section for transferring at least eps to an isotropic electron of speed v_e."""
    _check_velocities(v_p, v_e, eps)
    if v_p * v_p <= 2.0 * eps:
        if strict:
            raise BelowTransferable(f"a projectile with v_p={v_p} cannot transfer eps={eps}")
        return 0.0
    G, _ = _shape(v_p, v_e, eps)
    return max(math.pi / (8.0 * eps * eps) * G, 0.0)


def bea_sigma_derivative(v_p: float, v_e: float, eps: float) -> float:
    """d Sigma / d eps at fixed velocities."""
    _check_velocities(v_p, v_e, eps)
    if v_p * v_p <= 2.0 * eps:
        return 0.0
    G, dG = _shape(v_p, v_e, eps)
    if G <= 0.0:
        return 0.0
    return math.pi / 8.0 * (dG / eps**2 - 2.0 * G / eps**3)


def bea_monte_carlo(v_p: float, v_e: float, eps: float, samples: int = 1_000_000, seed: int = 0) -> float:
    """Isotropic average of the differential form by sampling cos(theta) uniformly."""
    _check_velocities(v_p, v_e, eps)
    if v_p * v_p <= 2.0 * eps:
        return 0.0
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.0, 1.0, samples)
    relative_sq = v_p * v_p + v_e * v_e - 2.0 * v_p * v_e * c
    A = (v_p * v_p - 2.0 * eps) * (v_e * v_e + 2.0 * eps)
    values = math.pi / (relative_sq**2 * eps * eps) * (A - (v_p * v_e * c) ** 2)
    return float(np.mean(np.clip(values, 0.0, None)))


def _allowed_interval(potential: Callable[[float], float], energy: float, L: float) -> Tuple[float, float]:
    problem = RadialProblem(lambda r: potential(r) + L * L / (2.0 * r * r), inner_caustic=CausticKind.TURNING_POINT)
    try:
        points = turning_points(problem, energy)
    except NoBoundState as exc:
        raise NoBoundRegion(f"no bounded radial motion at E={energy}, L={L}") from exc
    if points is None:
        raise NoBoundRegion(f"no classically allowed region at E={energy}, L={L}")
    return points


@dataclass
class BeaTarget:
    """Bound electron in a central potential; ``charge`` sets the hydrogenic final levels."""

    potential: Callable[[float], float]
    energy: float
    l: int
    n: int
    charge: float = 1.0

    @property
    def L(self) -> float:
        return self.l + 0.5

    def radial_momentum(self, r: float) -> float:
        return math.sqrt(max(2.0 * (self.energy - self.potential(r)) - self.L**2 / (r * r), 0.0))

    def speed(self, r: float) -> float:
        return math.sqrt(max(2.0 * (self.energy - self.potential(r)), 0.0))

    @cached_property
    def turning_points(self) -> Tuple[float, float]:
        return _allowed_interval(self.potential, self.energy, self.L)

    @cached_property
    def period(self) -> float:
        r1, r2 = self.turning_points
        return 2.0 * integrate(lambda r: 1.0 / self.radial_momentum(r), r1, r2, ORBIT_QUADRATURE)

    def orbit_average(self, f: Callable[[float], float], quadrature: Quadrature = ORBIT_QUADRATURE) -> float:
        """Average of f(r) over the microcanonical radial distribution 2 dr / (T p_r)."""
        r1, r2 = self.turning_points
        return 2.0 / self.period * integrate(lambda r: f(r) / self.radial_momentum(r), r1, r2, quadrature)

    @property
    def mean_potential(self) -> float:
        return self.orbit_average(self.potential)

    def final_level(self, n_prime: int) -> Tuple[float, float]:
        """Energy and radial period of the hydrogenic shell n'."""
        if n_prime < 1:
            raise NotBound(f"final shell must have n' >= 1, got {n_prime}")
        return -self.charge**2 / (2.0 * n_prime**2), 2.0 * math.pi * n_prime**3 / self.charge**2


def hydrogenic_target(n: int, l: int, charge: float = 1.0) -> BeaTarget:
    if n < 1 or not 0 <= l < n:
        raise InvalidQN(f"need n >= 1 and 0 <= l < n, got n={n}, l={l}")
    if charge <= 0.0:
        raise ValidationError(f"charge must be positive, got {charge}")
    return BeaTarget(lambda r: -charge / r, -charge**2 / (2.0 * n * n), l, n, charge)


def bea_cross_section(target: BeaTarget, v_p: float, eps: float, strict: bool = False) -> float:
    """Cross section for transferring at least eps; eps = |E_nl| gives ionization."""
    if eps <= 0.0:
        raise ValidationError(f"energy transfer must be positive, got eps={eps}")
    if v_p * v_p <= 2.0 * eps:
        if strict:
            raise BelowTransferable(f"a projectile with v_p={v_p} cannot transfer eps={eps}")
        return 0.0
    return target.orbit_average(lambda r: bea_sigma_velocity(v_p, target.speed(r), eps), SIGMA_QUADRATURE)


def bea_ionization(target: BeaTarget, v_p: float) -> float:
    return bea_cross_section(target, v_p, abs(target.energy))


def bea_asymptote(target: BeaTarget, v_p: float, eps: float, projectile_charge: float = 1.0) -> float:
    """Fast-collision limit; it carries no projectile mass."""
    kinetic = target.energy - target.mean_potential
    return 2.0 * math.pi * projectile_charge**2 / (3.0 * v_p**2 * eps**2) * (3.0 * eps + 2.0 * kinetic)


def _excitation_energy(target: BeaTarget, n_prime: int) -> Tuple[float, float, float]:
    if target.energy >= 0.0:
        raise NotBound(f"initial state with E={target.energy} is not bound")
    E_final, T_final = target.final_level(n_prime)
    eps = E_final - target.energy
    if eps <= 0.0:
        raise NotBound(f"shell n'={n_prime} lies below the initial state")
    return E_final, T_final, eps


def bea_excitation_n(target: BeaTarget, v_p: float, n_prime: int) -> float:
    """Excitation into the shell n' from the energy derivative of the transfer cross section."""
    _, T_final, eps = _excitation_energy(target, n_prime)
    if v_p * v_p <= 2.0 * eps:
        return 0.0
    slope = target.orbit_average(lambda r: bea_sigma_derivative(v_p, target.speed(r), eps), SIGMA_QUADRATURE)
    return 2.0 * math.pi / T_final * abs(slope)


def l_prime_distribution(L: float, r: float, dp_perp: float) -> Tuple[Callable[[float], float], Tuple[float, float]]:
    """Density of the final angular momentum L' for a kick dp_perp at radius r, with its support."""
    if L <= 0.0 or r <= 0.0 or dp_perp <= 0.0:
        raise ValidationError(f"need L, r, dp_perp > 0, got L={L}, r={r}, dp_perp={dp_perp}")

    def density(L_prime: float) -> float:
        mu1 = abs(L_prime - L) / r
        mu2 = (L_prime + L) / r
        product = (mu2 * mu2 - dp_perp * dp_perp) * (dp_perp * dp_perp - mu1 * mu1)
        if product <= 0.0:
            return 0.0
        return 2.0 * L_prime / (math.pi * r * r * math.sqrt(product))

    return density, (abs(L - r * dp_perp), L + r * dp_perp)


def _azimuthal_kernel(a: float, b: float) -> float:
    """Integral of (a - b cos x)^(-5/2) over a full turn, a > b >= 0."""
    m = 2.0 * b / (a + b)
    return 4.0 / 3.0 * (4.0 * a * ellipe(m) - (a - b) * ellipk(m)) / ((a - b) ** 2 * (a + b) ** 1.5)


def _common_region(target: BeaTarget, E_final: float, L_prime: float) -> Optional[Tuple[float, float]]:
    try:
        f1, f2 = _allowed_interval(target.potential, E_final, L_prime)
    except NoBoundRegion:
        return None
    r1, r2 = target.turning_points
    lo, hi = max(r1, f1), min(r2, f2)
    return (lo, hi) if lo < hi else None


def nl_density(target: BeaTarget, v_p: float, n_prime: int, L_prime: float, projectile_charge: float = 1.0) -> float:
    """Cross section per unit L' for nl -> n' in the impulse limit.

    The projectile kick has the isotropic density 2Z^2/(v_p^2 q^5) in the
    momentum transfer q. Final momenta on the shell n' are counted with
    their radial-momentum sign and the azimuth of p_perp around r, which
    reproduces the L' distribution at each radius. Zero when the initial
    and final classically allowed regions do not overlap.
    """
    if v_p <= 0.0 or L_prime <= 0.0:
        raise ValidationError(f"need v_p > 0 and L' > 0, got v_p={v_p}, L'={L_prime}")
    E_final, T_final, _ = _excitation_energy(target, n_prime)
    region = _common_region(target, E_final, L_prime)
    if region is None:
        return 0.0
    L = target.L

    def integrand(r: float) -> float:
        p_r = target.radial_momentum(r)
        q_r = math.sqrt(max(2.0 * (E_final - target.potential(r)) - L_prime**2 / (r * r), 0.0))
        transverse = (L * L + L_prime**2) / (r * r)
        coupling = 2.0 * L * L_prime / (r * r)
        kernel = sum(_azimuthal_kernel(dr * dr + transverse, coupling) for dr in (abs(q_r - p_r), q_r + p_r))
        return kernel * L_prime / (r * r * q_r * p_r)

    value = integrate(integrand, region[0], region[1], SIGMA_QUADRATURE)
    return 2.0 * math.pi / T_final * 2.0 / target.period * 2.0 * projectile_charge**2 / v_p**2 * value


def bea_excitation_nl(target: BeaTarget, v_p: float, n_prime: int, l_prime: int, projectile_charge: float = 1.0) -> float:
    if not 0 <= l_prime < n_prime:
        raise InvalidQN(f"need 0 <= l' < n', got n'={n_prime}, l'={l_prime}")
    E_final, _, _ = _excitation_energy(target, n_prime)
    if _common_region(target, E_final, l_prime + 0.5) is None:
        raise NoOverlap(f"nl=({target.n},{target.l}) and n'l'=({n_prime},{l_prime}) share no allowed region")
    return nl_density(target, v_p, n_prime, l_prime + 0.5, projectile_charge)


def bea_high_energy_nl(n: int, L: float, dn: int, dL: float, v_p: float, projectile_charge: float = 1.0) -> float:
    """Closed form for n, n' >> dn and L, L' >> dL at high impact velocity."""
    if not 0.0 <= L < n:
        raise InvalidQN(f"need 0 <= L < n, got n={n}, L={L}")
    form = n * dn * dn + n * dL * dL - 2.0 * L * dn * dL
    if form <= 0.0:
        raise ValidationError(f"no transition for dn={dn}, dL={dL}")
    return 32.0 * n**3 * (n * n - L * L) ** 1.5 * projectile_charge**2 / (9.0 * math.pi * v_p**2 * form**2)


def ionization_curve(target: BeaTarget, velocities: Iterable[float]) -> CrossSectionCurve:
    x = np.asarray(list(velocities), dtype=float)
    sigma = np.array([bea_ionization(target, v) for v in x])
    return CrossSectionCurve("velocity_au", x, sigma, "bea_ionization", {"n": target.n, "l": target.l, "E": target.energy})
