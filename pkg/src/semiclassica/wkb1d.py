"""Bohr-Sommerfeld quantization of separable problems with Morse-index bookkeeping."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .config import Quadrature
from .errors import BracketTooNarrow, InvalidQN, NoBoundState, NoSignChange
from .models import SpectrumEntry
from .numkit import find_root, integrate

logger = logging.getLogger(__name__)

ACTION_QUADRATURE = Quadrature(abs_tol=1e-13, rel_tol=1e-13, max_subdivisions=400, endpoint_mode="inv_sqrt_both")

# Radial scan used to bracket turning points.
_SCAN = np.logspace(-7.0, 8.0, 900)


class CausticKind(Enum):
    TURNING_POINT = "turning_point"
    COULOMB_SINGULARITY = "coulomb_singularity"
    ROTATION = "rotation"
    Z_AXIS_CAUSTIC = "z_axis_caustic"
    HARD_WALL = "hard_wall"

    @property
    def alpha(self) -> float:
        return _MORSE[self]


_MORSE = {
    CausticKind.TURNING_POINT: 0.25,
    CausticKind.COULOMB_SINGULARITY: -0.25,
    CausticKind.ROTATION: 0.0,
    CausticKind.Z_AXIS_CAUSTIC: 0.25,
    CausticKind.HARD_WALL: 0.5,
}


def has_coulomb_pole(potential: Callable[[float], float]) -> bool:
    """True when r V(r) tends to a negative constant as r -> 0."""
    near, far = 1e-6 * potential(1e-6), 1e-5 * potential(1e-5)
    return near < 0.0 and abs(near - far) <= 1e-3 * abs(near)


def default_inner_caustic(potential: Callable[[float], float], l: int) -> CausticKind:
    """s-waves reach the origin: a Coulomb pole there, otherwise a regular wall with u(0) = 0."""
    if l > 0:
        return CausticKind.TURNING_POINT
    return CausticKind.COULOMB_SINGULARITY if has_coulomb_pole(potential) else CausticKind.HARD_WALL


def angular_momentum_of(l: int, m: int = 0) -> float:
    """Langer-shifted angular momentum, with L = 0 kept for s-states."""
    if l < 0 or abs(m) > l:
        raise InvalidQN(f"need l >= |m| >= 0, got l={l}, m={m}")
    return 0.0 if l == 0 else l + 0.5


def polar_turning_points(l: int, m: int, hbar: float = 1.0) -> Tuple[float, float]:
    L = angular_momentum_of(l, m)
    if L == 0.0:
        return 0.0, math.pi
    theta1 = math.asin(abs(m) * hbar / L)
    return theta1, math.pi - theta1


def polar_action(l: int, m: int, hbar: float = 1.0) -> float:
    """Integral of sqrt(L^2 - m^2/sin^2) between the polar turning points."""
    L = angular_momentum_of(l, m)
    if L == 0.0:
        return 0.0
    mh = abs(m) * hbar

    def integrand(theta: float) -> float:
        return math.sqrt(max(L * L - mh * mh / math.sin(theta) ** 2, 0.0))

    t1, t2 = polar_turning_points(l, m, hbar)
    if mh == 0.0:
        return L * math.pi
    return integrate(integrand, t1, t2, ACTION_QUADRATURE)


def azimuthal_momentum(m: int, hbar: float = 1.0) -> float:
    return m * hbar


@dataclass
class RadialProblem:
    potential: Callable[[float], float]
    mass: float = 1.0
    l: int = 0
    m: int = 0
    inner_caustic: Optional[CausticKind] = None
    hbar: float = 1.0
    scan: Sequence[float] = field(default_factory=lambda: _SCAN)

    def __post_init__(self) -> None:
        if abs(self.m) > self.l:
            raise InvalidQN(f"|m| must not exceed l (l={self.l}, m={self.m})")
        if self.inner_caustic is None:
            self.inner_caustic = default_inner_caustic(self.potential, self.l)

    @property
    def L(self) -> float:
        return angular_momentum_of(self.l, self.m) * self.hbar

    @property
    def phase(self) -> float:
        return self.inner_caustic.alpha + CausticKind.TURNING_POINT.alpha

    def effective_potential(self, r: float) -> float:
        return self.potential(r) + self.L**2 / (2.0 * self.mass * r * r)

    def momentum(self, r: float, energy: float) -> float:
        return math.sqrt(max(2.0 * self.mass * (energy - self.effective_potential(r)), 0.0))


def turning_points(p: RadialProblem, energy: float) -> Optional[Tuple[float, float]]:
    """Classically allowed radial interval at ``energy``; None if there is none."""
    gap = lambda r: energy - p.effective_potential(r)  # noqa: E731
    values = np.array([gap(r) for r in p.scan])
    allowed = np.nonzero(values > 0)[0]
    if allowed.size == 0:
        return None
    first, last = allowed[0], allowed[-1]
    if last == len(values) - 1:
        raise NoBoundState(f"motion at E={energy} is unbounded within the radial scan")
    outer = find_root(gap, (p.scan[last], p.scan[last + 1]))
    if p.inner_caustic in (CausticKind.COULOMB_SINGULARITY, CausticKind.HARD_WALL) and p.L == 0.0:
        return 0.0, outer
    if first == 0:
        raise NoBoundState(f"no inner turning point for E={energy}")
    inner = find_root(gap, (p.scan[first - 1], p.scan[first]))
    return inner, outer


def radial_action(p: RadialProblem, energy: float) -> float:
    points = turning_points(p, energy)
    if points is None:
        return 0.0
    r1, r2 = points
    return integrate(lambda r: p.momentum(r, energy), r1, r2, ACTION_QUADRATURE)


def quantization_target(p: RadialProblem, n_r: int) -> float:
    return math.pi * p.hbar * (n_r + p.phase)


def radial_spectrum(p: RadialProblem, n_r_max: int, bracket: Sequence[float]) -> List[SpectrumEntry]:
    """Solve the radial quantization condition for n_r up to ``n_r_max``.

    When the caustic phases cancel (Coulomb singularity plus outer turning
    point) the sequence starts at n_r = 1.
    """
    e_lo, e_hi = float(bracket[0]), float(bracket[1])
    s_hi = radial_action(p, e_hi)
    if s_hi == 0.0:
        raise NoBoundState(f"no classically allowed region below E={e_hi}")
    start = 1 if p.phase <= 0 else 0
    entries: List[SpectrumEntry] = []
    for n_r in range(start, n_r_max + 1):
        target = quantization_target(p, n_r)
        residual = lambda e: radial_action(p, e) - target  # noqa: E731
        try:
            energy = find_root(residual, (e_lo, e_hi), xtol=1e-15, rtol=1e-15)
        except NoSignChange as exc:
            if not entries and s_hi < target:
                raise NoBoundState(f"n_r={n_r} not supported below E={e_hi}") from exc
            raise BracketTooNarrow(f"n_r={n_r} lies outside [{e_lo}, {e_hi}]") from exc
        entries.append(SpectrumEntry((n_r, p.l, p.m), energy, abs(residual(energy))))
        logger.debug("n_r=%d l=%d E=%.14g", n_r, p.l, energy)
    return entries
