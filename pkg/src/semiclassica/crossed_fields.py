"""Hydrogen in weak uniform electric and magnetic fields.

Runge-Lenz vectors follow A = L x v + r/|r|, which points to aphelion. With
that sign the averaged equations split into two pseudo-spins
J1,2 = (L +- n A)/2 precessing about B +- 3cnF.
"""

import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .config import UNITS, OdeSolver
from .errors import FieldTooStrong, InvalidProjection, Ionized, NonConvergent, ValidationError
from .models import FieldConfig, KeplerElement, SwitchingRun
from .numkit import find_root, integrate_ode

logger = logging.getLogger(__name__)

C = UNITS.c_au
DEFAULT_RATE = 2.5e-5
SWITCHING_SOLVER = OdeSolver(abs_tol=1e-12, rel_tol=1e-11)
SECULAR_SOLVER = OdeSolver(abs_tol=1e-13, rel_tol=1e-13)


def _cross(a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


def _unit(v: np.ndarray, fallback: Sequence[float] = (0.0, 0.0, 1.0)) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.asarray(fallback, dtype=float)
    return np.asarray(v, dtype=float) / norm


def _perpendicular_basis(u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    trial = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = _unit(trial - np.dot(trial, u) * u)
    return e1, _cross(u, e1)


def effective_field(P: Sequence[float], B: Sequence[float], M: float) -> np.ndarray:
    """Motional field [P x B]/Mc left over after separating the centre of mass."""
    if M <= 0:
        raise ValidationError(f"total mass must be positive, got {M}")
    return _cross(np.asarray(P, dtype=float), np.asarray(B, dtype=float)) / (M * C)


def pseudo_spin_frequencies(cfg: FieldConfig) -> Tuple[float, float, np.ndarray, np.ndarray]:
    b1 = cfg.B + 3.0 * C * cfg.n * cfg.F
    b2 = cfg.B - 3.0 * C * cfg.n * cfg.F
    return float(np.linalg.norm(b1)) / (2.0 * C), float(np.linalg.norm(b2)) / (2.0 * C), b1, b2


def first_order_energy(cfg: FieldConfig) -> float:
    w1, w2, _, _ = pseudo_spin_frequencies(cfg)
    return w1 * cfg.n1 + w2 * cfg.n2


def validate_config(cfg: FieldConfig) -> None:
    j = cfg.j
    for label, proj in (("n1", cfg.n1), ("n2", cfg.n2)):
        steps = proj + j
        if abs(proj) > j + 1e-12 or abs(steps - round(steps)) > 1e-9:
            raise InvalidProjection(f"{label}={proj} is not in -j..j with j={j}")
    w1, w2, _, _ = pseudo_spin_frequencies(cfg)
    spread = 2.0 * (w1 + w2) * j
    gap = 0.5 / cfg.n**2 - 0.5 / (cfg.n + 1) ** 2
    if spread >= 0.5 * gap:
        raise FieldTooStrong(f"first-order spread {spread:.3g} overlaps neighbouring manifolds (gap {gap:.3g})")


def kepler_elements(r: Sequence[float], v: Sequence[float]) -> KeplerElement:
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    rn = float(np.linalg.norm(r))
    energy = 0.5 * float(np.dot(v, v)) - 1.0 / rn
    if energy >= 0:
        raise NonConvergent(f"orbit is unbound (E={energy})")
    n = 1.0 / math.sqrt(-2.0 * energy)
    a = n * n
    L = _cross(r, v)
    A = _cross(L, v) + r / rn
    e_cos = 1.0 - rn / a
    e_sin = float(np.dot(r, v)) / math.sqrt(a)
    xi = math.atan2(e_sin, e_cos)
    ecc = float(np.linalg.norm(A))
    tau = -(a**1.5) * (xi - ecc * math.sin(xi))
    return KeplerElement(L=L, A=A, n=n, kepler_anomaly=xi, perihelion_time=tau)


def kepler_state(element: KeplerElement) -> Tuple[np.ndarray, np.ndarray]:
    """Phase-space point on the ellipse at the element's eccentric anomaly."""
    a = element.semimajor_axis
    e = min(element.eccentricity, 1.0)
    perihelion = -_unit(element.A) if e > 0 else None
    l_hat = _unit(element.L) if np.linalg.norm(element.L) > 0 else None
    if perihelion is None and l_hat is None:
        raise InvalidProjection("element has neither orientation vector")
    if perihelion is None:
        perihelion, _ = _perpendicular_basis(l_hat)
    if l_hat is None:
        l_hat, _ = _perpendicular_basis(perihelion)
    q_hat = _cross(l_hat, perihelion)
    xi = element.kepler_anomaly
    root = math.sqrt(max(1.0 - e * e, 0.0))
    r = a * (math.cos(xi) - e) * perihelion + a * root * math.sin(xi) * q_hat
    xi_dot = 1.0 / (a**1.5 * (1.0 - e * math.cos(xi)))
    v = xi_dot * (-a * math.sin(xi) * perihelion + a * root * math.cos(xi) * q_hat)
    return r, v


def solve_kepler(mean_anomaly: float, e: float) -> float:
    """Eccentric anomaly for a mean anomaly in [0, 2pi)."""
    m = mean_anomaly % (2.0 * math.pi)
    return find_root(lambda xi: xi - e * math.sin(xi) - m, (0.0, 2.0 * math.pi))


def pseudo_spins(cfg: FieldConfig, phases: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    _, _, b1, b2 = pseudo_spin_frequencies(cfg)
    half = cfg.n / 2.0
    spins = []
    for axis_field, proj, phase in ((b1, cfg.n1, phases[0]), (b2, cfg.n2, phases[1])):
        u = _unit(axis_field)
        e1, e2 = _perpendicular_basis(u)
        perp = math.sqrt(max(half * half - proj * proj, 0.0))
        spins.append(proj * u + perp * (math.cos(phase) * e1 + math.sin(phase) * e2))
    return spins[0], spins[1]


def quantized_initial_conditions(
    cfg: FieldConfig, phase_seed: int = 0
) -> Tuple[KeplerElement, np.ndarray, np.ndarray]:
    """Kepler ellipse whose pseudo-spins carry the projections n1, n2.

    The two azimuths and the mean anomaly come from ``phase_seed``. For n = 1
    the pseudo-spins are taken antiparallel, which gives the L = 0 orbit.
    """
    validate_config(cfg)
    rng = np.random.default_rng(phase_seed)
    phi1, phi2, mean_anomaly = rng.uniform(0.0, 2.0 * math.pi, size=3)
    if cfg.j == 0:
        phi2 = phi1 + math.pi
    J1, J2 = pseudo_spins(cfg, (phi1, phi2))
    if cfg.j == 0:
        J2 = -J1
    L = J1 + J2
    A = (J1 - J2) / cfg.n
    e = min(float(np.linalg.norm(A)), 1.0)
    xi = solve_kepler(mean_anomaly, e)
    if e >= 1.0 - 1e-12 and abs(math.cos(xi) - 1.0) < 1e-6:
        xi = math.pi
    element = KeplerElement(L=L, A=A, n=float(cfg.n), kepler_anomaly=xi, perihelion_time=-cfg.n**3 * mean_anomaly)
    r, v = kepler_state(element)
    logger.debug("initial state n=%d n1=%g n2=%g |L|=%.6f e=%.6f", cfg.n, cfg.n1, cfg.n2, np.linalg.norm(L), e)
    return element, r, v


def secular_flow(
    cfg: FieldConfig, J1: Sequence[float], J2: Sequence[float], t_end: float, samples: int = 200
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate the period-averaged pseudo-spin equations dJ/dt = (B~ x J)/2c."""
    _, _, b1, b2 = pseudo_spin_frequencies(cfg)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return np.concatenate([_cross(b1, y[:3]), _cross(b2, y[3:])]) / (2.0 * C)

    t_eval = np.linspace(0.0, t_end, samples)
    traj = integrate_ode(rhs, np.concatenate([J1, J2]), (0.0, t_end), s=SECULAR_SOLVER, t_eval=t_eval)
    return traj.t, traj.y[:3].T, traj.y[3:].T


def rotation_frequency(times: np.ndarray, spins: np.ndarray, axis: Sequence[float]) -> float:
    """Mean angular velocity of the component of ``spins`` perpendicular to ``axis``."""
    u = _unit(np.asarray(axis, dtype=float))
    e1, e2 = _perpendicular_basis(u)
    angles = np.unwrap(np.arctan2(spins @ e2, spins @ e1))
    return float(abs(angles[-1] - angles[0]) / (times[-1] - times[0]))


def _ramp(kind: str, duration: float) -> Callable[[float], Tuple[float, float]]:
    if kind == "linear":

        def linear(t: float) -> Tuple[float, float]:
            if t <= 0.0:
                return 0.0, 1.0 / duration
            if t >= duration:
                return 1.0, 0.0
            return t / duration, 1.0 / duration

        return linear
    if kind == "smoothstep":

        def smooth(t: float) -> Tuple[float, float]:
            s = min(max(t / duration, 0.0), 1.0)
            return s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s) / duration

        return smooth
    raise ValidationError(f"unknown ramp {kind!r}")


def switching_energy(cfg: FieldConfig, r: np.ndarray, v: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Kinetic plus Coulomb plus lambda*F.r in the velocity.

    With p = v - A/c and A = lambda (B x r)/2 this equals p^2/2 + (lambda/2c) B.L +
    lambda^2 (B x r)^2/8c^2 - 1/r + lambda F.r, so the paramagnetic term is
    carried by v^2/2 and no separate magnetic term is added.
    """
    r = np.atleast_2d(r)
    v = np.atleast_2d(v)
    return 0.5 * np.sum(v * v, axis=1) - 1.0 / np.linalg.norm(r, axis=1) + np.asarray(lam) * (r @ cfg.F)


def energy_rate(cfg: FieldConfig, r: Sequence[float], v: Sequence[float], dlam: float, gauge_force: bool = True) -> float:
    """dE/dt along the switching flow: lambda' [F.r + B.L/2c] (the second term only with the induced force)."""
    r = np.asarray(r, dtype=float)
    rate = float(np.dot(cfg.F, r))
    if gauge_force:
        rate += float(np.dot(cfg.B, _cross(r, np.asarray(v, dtype=float)))) / (2.0 * C)
    return dlam * rate


def adiabatic_switch(
    cfg: FieldConfig,
    r0: Sequence[float],
    v0: Sequence[float],
    rate: float = DEFAULT_RATE,
    ramp: str = "linear",
    gauge_force: bool = True,
    r_ion: Optional[float] = None,
    strict: bool = False,
    solver: OdeSolver = SWITCHING_SOLVER,
) -> SwitchingRun:
    """Ramp lambda from 0 to 1 at ``rate`` while integrating the Lorentz dynamics.

    The induced force (lambda'/c) [B x r]/2 comes from the time-dependent vector
    potential. Near-nucleus passages use the time transform dt = r ds.
    """
    duration = 1.0 / rate
    profile = _ramp(ramp, duration)
    r_ion = 50.0 * cfg.n**2 if r_ion is None else r_ion
    F = cfg.F
    B = cfg.B

    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        x, y_, z, vx, vy, vz, t = y
        rn = math.sqrt(x * x + y_ * y_ + z * z)
        lam, dlam = profile(t)
        inv3 = 1.0 / rn**3
        ax = -x * inv3 - lam * (F[0] + (vy * B[2] - vz * B[1]) / C)
        ay = -y_ * inv3 - lam * (F[1] + (vz * B[0] - vx * B[2]) / C)
        az = -z * inv3 - lam * (F[2] + (vx * B[1] - vy * B[0]) / C)
        if gauge_force:
            k = dlam / (2.0 * C)
            ax += k * (B[1] * z - B[2] * y_)
            ay += k * (B[2] * x - B[0] * z)
            az += k * (B[0] * y_ - B[1] * x)
        return np.array([rn * vx, rn * vy, rn * vz, rn * ax, rn * ay, rn * az, rn])

    def finished(s: float, y: np.ndarray) -> float:
        return y[6] - duration

    def escaped(s: float, y: np.ndarray) -> float:
        return math.sqrt(y[0] ** 2 + y[1] ** 2 + y[2] ** 2) - r_ion

    finished.terminal = True
    finished.direction = 1.0
    escaped.terminal = True
    escaped.direction = 1.0

    y0 = np.concatenate([np.asarray(r0, dtype=float), np.asarray(v0, dtype=float), [0.0]])
    s_max = 100.0 * duration / max(float(np.linalg.norm(r0)), 1e-3) + 100.0 * duration
    traj = integrate_ode(rhs, y0, (0.0, s_max), events=[finished, escaped], s=solver)
    if not traj.terminated:
        raise NonConvergent("switching run did not reach the end of the ramp")

    times = traj.y[6]
    positions = traj.y[:3].T
    velocities = traj.y[3:6].T
    lambdas = np.array([profile(t)[0] for t in times])
    energies = switching_energy(cfg, positions, velocities, lambdas)
    ionized = any(ev.index == 1 for ev in traj.events)
    ion_lambda = float(lambdas[-1]) if ionized else None
    if ionized:
        logger.warning("electron ionized at lambda=%.4f", ion_lambda)
        if strict:
            raise Ionized(f"ionized at lambda={ion_lambda:.4f}", lam=ion_lambda)
    return SwitchingRun(
        rate=rate,
        ramp=ramp,
        times=times,
        positions=positions,
        velocities=velocities,
        lambdas=lambdas,
        energies=energies,
        gauge_force=gauge_force,
        ionized=ionized,
        ionization_lambda=ion_lambda,
    )


def stark_second_order(n: int, n1: float, n2: float, F: float, quantum: bool = False) -> float:
    """Quadratic Stark shift for pseudo-spin projections n1, n2 in a pure electric field.

    The classical secular value lacks the constant 19 of the quantum formula.
    """
    k = n1 + n2
    m = n1 - n2
    constant = 19.0 if quantum else 0.0
    return -(n**4) / 16.0 * (17.0 * n * n - 3.0 * k * k - 9.0 * m * m + constant) * F * F
