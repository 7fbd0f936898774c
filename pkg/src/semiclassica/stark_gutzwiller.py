"""Broad Stark resonances of hydrogen from the pole condition of the Gutzwiller trace.

Above threshold the bounded parabolic coordinate u oscillates in
p_u^2 = 2Eu^2 + 4 - Fu^4, while v sits on a hyperbolic fixed point. The
action of the u-oscillation and the instability exponent of v enter

    2I(E) - (2n1 + 1 + |m|) pi + i (n2 + 1/2 + |m|/2) w(E) = 0,

whose roots lie at E - i Gamma/2.
"""

import cmath
import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BranchCut, NoSignChange, TurningPointNotFound, ValidationError, WrongSheet
from .models import ComplexResonance, StarkProblem
from .numkit import expand_bracket, find_root, find_root_complex, gauss_legendre_nodes

logger = logging.getLogger(__name__)

TABLE_ROWS: Tuple[Tuple[int, int, int], ...] = ((23, 0, 0), (23, 1, 0), (23, 0, 1), (24, 0, 0), (24, 1, 0), (24, 0, 1))
PANEL_NODES = 48
BRANCH_CLEARANCE = 1e-3


def _turning_points(E: complex, F: float) -> Tuple[complex, complex]:
    """u0 with positive real part and u1 = 2/(sqrt(F) u0); the quartic factors as F(u0^2 - u^2)(u^2 + u1^2)."""
    if F <= 0.0:
        raise ValidationError(f"field must be positive, got F={F}")
    u0_sq = (E + cmath.sqrt(E * E + 4.0 * F)) / F
    if u0_sq == 0 or not cmath.isfinite(u0_sq):
        raise TurningPointNotFound(f"no external turning point at E={E}")
    u0 = cmath.sqrt(u0_sq)
    if u0.real <= 0.0:
        raise TurningPointNotFound(f"turning point {u0} has no positive real part")
    return u0, 2.0 / (math.sqrt(F) * u0)


def _distance_to_segment(p: complex, end: complex) -> float:
    t = min(max((p * end.conjugate()).real / abs(end) ** 2, 0.0), 1.0)
    return abs(p - t * end)


def _graded_nodes(scale: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels on [0, pi/2], refined geometrically towards 0 down to ``scale``."""
    edges = [0.5 * math.pi]
    while edges[-1] > 4.0 * scale and len(edges) < 40:
        edges.append(edges[-1] * 0.25)
    edges.append(0.0)
    x, w = gauss_legendre_nodes(PANEL_NODES)
    nodes, weights = [], []
    for lo, hi in zip(edges[::-1][:-1], edges[::-1][1:]):
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (x + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _continuous_sqrt(z: np.ndarray, start: complex) -> np.ndarray:
    """Square root along an ordered path, following the branch that starts at ``start``."""
    roots = np.sqrt(z.astype(complex))
    previous = start
    for i, r in enumerate(roots):
        if (r * np.conj(previous)).real < 0.0:
            roots[i] = -r
        previous = roots[i]
    return roots


def _integrals(E: complex, F: float) -> Tuple[complex, complex, complex]:
    """I, J, K: the integrals of sqrt(q), 1/sqrt(q) and u^2/sqrt(q) from 0 to u0 along the straight path."""
    u0, u1 = _turning_points(complex(E), F)
    clearance = BRANCH_CLEARANCE * min(abs(u0), abs(u1))
    if min(_distance_to_segment(1j * u1, u0), _distance_to_segment(-1j * u1, u0)) < clearance:
        raise BranchCut(f"a root of the quartic lies on the integration path at E={E}")
    phi, weights = _graded_nodes(min(abs(u1 / u0), 1.0))
    s2 = np.sin(phi) ** 2
    root = _continuous_sqrt(u0 * u0 * s2 + u1 * u1, u1)
    sqrt_f = math.sqrt(F)
    I = sqrt_f * u0 * u0 * np.dot(weights, np.cos(phi) ** 2 * root)
    J = np.dot(weights, 1.0 / root) / sqrt_f
    K = u0 * u0 / sqrt_f * np.dot(weights, s2 / root)
    return complex(I), complex(J), complex(K)


def action_and_exponent(E: complex, F: float, m: int, hbar: float = 1.0) -> Tuple[complex, complex, complex]:
    """Return (S, w, dS/dE) for the u-oscillation at complex energy E.

    S carries the centrifugal corrections -|m| pi hbar + (i/2)|m| hbar w. The
    imaginary term is added, not subtracted; with w > 0 only that sign puts the
    pole at Im E < 0 with a positive width.
    The derivative is the analytic one of the m-independent part 2I.
    """
    I, J, K = _integrals(E, F)
    w = 4.0 * cmath.sqrt(2.0 * E) * J
    S = 2.0 * I - abs(m) * math.pi * hbar + 0.5j * abs(m) * hbar * w
    return S, w, 2.0 * K


def pole_condition(E: complex, p: StarkProblem, width_hbar: float = 1.0) -> complex:
    """Residual of the quantization condition; ``width_hbar`` scales only the imaginary terms.

    The imaginary part enters as +i (n2 + 1/2 + |m|/2) w, matching the sign in ``action_and_exponent``.
    """
    I, J, _ = _integrals(E, p.F)
    w = 4.0 * cmath.sqrt(2.0 * E) * J
    real_part = 2.0 * I - (2 * p.n1 + 1 + abs(p.m)) * math.pi
    return real_part + 1j * width_hbar * (p.n2 + 0.5 + 0.5 * abs(p.m)) * w


def initial_guess(p: StarkProblem, width_hbar: float = 1.0) -> complex:
    """Real-energy root of the action condition, shifted by the first-order width."""
    target = (2 * p.n1 + 1 + abs(p.m)) * math.pi
    real_residual = lambda e: 2.0 * _integrals(e, p.F)[0].real - target  # noqa: E731
    scale = 2.0 * math.sqrt(p.F)
    try:
        bracket = expand_bracket(real_residual, -scale, scale)
    except NoSignChange as exc:
        raise TurningPointNotFound(f"no real solution of the action condition for {p}") from exc
    e_real = find_root(real_residual, bracket)
    _, w, dS = action_and_exponent(e_real, p.F, 0)
    shift = width_hbar * (p.n2 + 0.5 + 0.5 * abs(p.m)) * w.real / dS.real
    return complex(e_real, -shift)


def solve_resonance(p: StarkProblem, guess: Optional[complex] = None, width_hbar: float = 1.0) -> ComplexResonance:
    if p.F <= 0.0 or min(p.n1, p.n2, p.m) < 0:
        raise ValidationError(f"invalid Stark problem {p}")
    start = initial_guess(p, width_hbar) if guess is None else complex(guess)
    f = lambda e: pole_condition(e, p, width_hbar)  # noqa: E731
    target = (2 * p.n1 + 1 + abs(p.m)) * math.pi
    result = find_root_complex(f, start, tol=1e-10 * target)
    E = result.root
    if E.imag > 0.0:
        raise WrongSheet(f"converged to the growing sheet at E={E}", E=E)
    S, w, _ = action_and_exponent(E, p.F, p.m)
    logger.info("(%d,%d,%d) E=%.6e Gamma=%.6e after %d steps", p.n1, p.n2, p.m, E.real, -2.0 * E.imag, result.iterations)
    return ComplexResonance(E, S, w, result.iterations, result.residual, (p.n1, p.n2, p.m))


def stark_table(F: float, rows: Iterable[Sequence[int]] = TABLE_ROWS) -> List[ComplexResonance]:
    return [solve_resonance(StarkProblem(F, m, n1, n2)) for n1, n2, m in rows]


def gutzwiller_response(E: complex, S: complex, w: complex, T: complex, lam: int = 2, n_max: int = 50, hbar: float = 1.0) -> complex:
    """Truncated repetition sum of the periodic-orbit trace."""
    if n_max < 1:
        raise ValidationError("n_max must be at least 1")
    n = np.arange(1, n_max + 1)
    terms = np.exp(1j * n * (S / hbar - lam * math.pi / 2.0)) / np.sinh(n * w / 2.0)
    return -0.5j * T / hbar * complex(np.sum(terms))


def resummed_response(E: complex, p: StarkProblem, lam: int = 2, k_max: int = 30, hbar: float = 1.0) -> complex:
    """The trace with 1/sinh expanded and every repetition series summed; poles are exact."""
    S, w, T = action_and_exponent(E, p.F, p.m, hbar)
    return resummed_from(S, w, T, lam, k_max, hbar)


def resummed_from(S: complex, w: complex, T: complex, lam: int = 2, k_max: int = 30, hbar: float = 1.0) -> complex:
    k = np.arange(k_max + 1)
    x = np.exp(1j * (S / hbar - lam * math.pi / 2.0) - (k + 0.5) * w)
    return -0.5j * T / hbar * complex(np.sum(2.0 * x / (1.0 - x)))


def hyperbolic_fixed_point(E: complex, m: int, hbar: float = 1.0) -> Tuple[complex, complex, complex]:
    """First-order location (v*, p_v*, beta*) of the unstable fixed point of the v-motion."""
    v = math.sqrt(abs(m) * hbar) * (2.0 * E) ** -0.25 * cmath.exp(0.25j * math.pi)
    beta = 1.0 + 1j * abs(m) * hbar * cmath.sqrt(E / 2.0)
    return v, 0j, beta


def v_hamiltonian(v: complex, p_v: complex, E: complex, F: float, m: int, hbar: float = 1.0) -> complex:
    return 0.5 * p_v * p_v + (m * hbar) ** 2 / (2.0 * v * v) - E * v * v - 0.5 * F * v**4


def v_force(v: complex, E: complex, F: float, m: int, hbar: float = 1.0) -> complex:
    """dH2/dv at fixed p_v."""
    return -((m * hbar) ** 2) / v**3 - 2.0 * E * v - 2.0 * F * v**3
