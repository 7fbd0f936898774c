"""Shared numerical kernels: quadrature, real/complex roots, ODE integration."""

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

from .config import UNITS, OdeSolver, Quadrature, Units
from .errors import Diverged, EventOverflow, MaxIterations, NoSignChange, NonConvergent, StepUnderflow

logger = logging.getLogger(__name__)

__all__ = [
    "UNITS",
    "Units",
    "Quadrature",
    "OdeSolver",
    "ComplexRoot",
    "EventRecord",
    "Trajectory",
    "integrate",
    "gauss_legendre",
    "gauss_legendre_nodes",
    "find_root",
    "expand_bracket",
    "find_root_complex",
    "integrate_ode",
]

DEFAULT_QUADRATURE = Quadrature()


@dataclass
class ComplexRoot:
    root: complex
    iterations: int
    residual: float


@dataclass
class EventRecord:
    index: int
    t: float
    y: np.ndarray


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    events: List[EventRecord] = field(default_factory=list)
    terminated: bool = False
    sol: Optional[Callable[[float], np.ndarray]] = None


def _checked(f: Callable[[float], float]) -> Callable[[float], float]:
    def wrapped(x: float) -> float:
        value = f(x)
        if not math.isfinite(value):
            raise NonConvergent(f"integrand returned {value!r} at x={x!r}")
        return value

    return wrapped


def _quad(g: Callable[[float], float], a: float, b: float, q: Quadrature) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", sp_integrate.IntegrationWarning)
        try:
            value, err = sp_integrate.quad(g, a, b, epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subdivisions)
        except sp_integrate.IntegrationWarning as exc:
            raise NonConvergent(str(exc).strip().splitlines()[0], a=a, b=b) from exc
    logger.debug("quad [%g, %g] -> %.16g (err %.2e)", a, b, value, err)
    return value


def integrate(f: Callable[[float], float], a: float, b: float, q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """Integrate f over (a, b).

    Endpoints flagged by ``q.endpoint_mode`` are treated as C/sqrt(x - a)
    singularities and removed with x = a + u**2 (or b - u**2).
    """
    if not a < b:
        raise NonConvergent(f"empty interval [{a}, {b}]")
    g = _checked(f)
    mode = q.endpoint_mode
    if mode == "regular":
        return _quad(g, a, b, q)
    if mode == "inv_sqrt_both":
        if math.isinf(a) or math.isinf(b):
            raise NonConvergent("singular endpoints must be finite")
        mid = 0.5 * (a + b)
        return integrate(f, a, mid, q.with_mode("inv_sqrt_left")) + integrate(f, mid, b, q.with_mode("inv_sqrt_right"))
    if mode == "inv_sqrt_left":
        if math.isinf(a):
            raise NonConvergent("singular endpoint must be finite")
        upper = math.sqrt(b - a) if math.isfinite(b) else math.inf
        return _quad(lambda u: 2.0 * u * g(a + u * u), 0.0, upper, q)
    if math.isinf(b):
        raise NonConvergent("singular endpoint must be finite")
    lower = math.sqrt(b - a) if math.isfinite(a) else math.inf
    return _quad(lambda u: 2.0 * u * g(b - u * u), 0.0, lower, q)


@lru_cache(maxsize=32)
def gauss_legendre_nodes(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a: complex, b: complex, n: int = 64):
    """Fixed-order Gauss-Legendre rule for a vectorized integrand; a and b may be complex."""
    x, w = gauss_legendre_nodes(n)
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    return half * np.dot(w, f(nodes))


def find_root(
    f: Callable[[float], float],
    bracket: Sequence[float],
    xtol: float = 1e-14,
    rtol: float = 4 * np.finfo(float).eps,
    maxiter: int = 200,
) -> float:
    """Brent's method on a sign-changing bracket."""
    lo, hi = float(bracket[0]), float(bracket[1])
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or f_lo * f_hi > 0:
        raise NoSignChange(f"f({lo})={f_lo:.6g} and f({hi})={f_hi:.6g} do not bracket a root", bracket=(lo, hi))
    try:
        root, info = optimize.brentq(f, lo, hi, xtol=xtol, rtol=rtol, maxiter=maxiter, full_output=True)
    except RuntimeError as exc:
        raise NonConvergent(str(exc)) from exc
    logger.debug("brentq root %.16g after %d iterations", root, info.iterations)
    return root


def expand_bracket(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    factor: float = 1.6,
    max_steps: int = 60,
    lower_limit: float = -math.inf,
    upper_limit: float = math.inf,
) -> Tuple[float, float]:
    """Grow [lo, hi] geometrically until f changes sign, staying inside the limits."""
    f_lo, f_hi = f(lo), f(hi)
    for _ in range(max_steps):
        if f_lo * f_hi <= 0:
            return lo, hi
        width = hi - lo
        if abs(f_lo) < abs(f_hi) and lo > lower_limit:
            lo = max(lower_limit, lo - factor * width)
            f_lo = f(lo)
        elif hi < upper_limit:
            hi = min(upper_limit, hi + factor * width)
            f_hi = f(hi)
        else:
            lo = max(lower_limit, lo - factor * width)
            f_lo = f(lo)
    raise NoSignChange(f"no sign change found after expanding to [{lo}, {hi}]")


def find_root_complex(
    f: Callable[[complex], complex],
    guess: complex,
    tol: float = 1e-12,
    max_iter: int = 50,
    max_step: Optional[float] = None,
) -> ComplexRoot:
    """Damped Newton iteration with a central-difference derivative.

    The difference step is 1e-7 * (1 + |z|). A step larger than ``max_step``
    (default 1e6 * (1 + |guess|)) or a non-finite step raises Diverged.
    """
    z = complex(guess)
    limit = max_step if max_step is not None else 1e6 * (1.0 + abs(z))
    fz = complex(f(z))
    for iteration in range(1, max_iter + 1):
        if abs(fz) < tol:
            return ComplexRoot(z, iteration - 1, abs(fz))
        h = 1e-7 * (1.0 + abs(z))
        dfz = (complex(f(z + h)) - complex(f(z - h))) / (2.0 * h)
        if dfz == 0 or not np.isfinite(dfz):
            raise Diverged("vanishing or non-finite derivative", z=z)
        step = fz / dfz
        if not np.isfinite(step) or abs(step) > limit:
            raise Diverged(f"Newton step {abs(step):.3g} exceeds limit", z=z)
        damping = 1.0
        for _ in range(12):
            trial = z - damping * step
            f_trial = complex(f(trial))
            if np.isfinite(f_trial) and abs(f_trial) < abs(fz):
                break
            damping *= 0.5
        z, fz = trial, f_trial
        logger.debug("newton %d: z=%r |f|=%.3e damping=%g", iteration, z, abs(fz), damping)
    if abs(fz) < tol:
        return ComplexRoot(z, max_iter, abs(fz))
    raise MaxIterations(f"|f|={abs(fz):.3e} after {max_iter} iterations", z=z)


def _refine_event(g: Callable[[float, np.ndarray], float], t: float, sol: Callable[[float], np.ndarray], tol: float) -> float:
    """Re-locate an event time on the dense interpolant to within ``tol``."""
    width = max(tol, 16.0 * np.finfo(float).eps * max(1.0, abs(t)))
    try:
        return find_root(lambda tau: float(g(tau, sol(tau))), (t - width, t + width), xtol=tol)
    except NoSignChange:
        logger.debug("event at t=%.16g does not change sign within %.1e; kept as located", t, width)
        return t


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[float],
    t_span: Sequence[float],
    events: Sequence[Callable[[float, np.ndarray], float]] = (),
    s: OdeSolver = OdeSolver(),
    max_events: int = 100000,
    dense_output: bool = False,
    t_eval: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Adaptive DOP853 integration with located events.

    Event callables may carry ``terminal`` and ``direction`` attributes, as
    for scipy's solve_ivp. Event times are refined on the dense interpolant
    to ``s.event_tol``.
    """
    for ev in events:
        if not hasattr(ev, "terminal"):
            ev.terminal = False
    sol = sp_integrate.solve_ivp(
        rhs,
        (float(t_span[0]), float(t_span[1])),
        np.asarray(y0, dtype=float),
        method="DOP853",
        rtol=s.rel_tol,
        atol=s.abs_tol,
        max_step=s.max_step,
        events=list(events) or None,
        dense_output=dense_output or bool(events),
        t_eval=t_eval,
    )
    if sol.status == -1:
        raise StepUnderflow(sol.message, t=float(sol.t[-1]) if sol.t.size else None)
    records: List[EventRecord] = []
    if events:
        for index, times in enumerate(sol.t_events):
            for t in times:
                records.append(EventRecord(index, float(t), np.empty(0)))
        if len(records) > max_events:
            raise EventOverflow(f"{len(records)} events exceed the limit of {max_events}")
        for record in records:
            record.t = _refine_event(events[record.index], record.t, sol.sol, s.event_tol)
            record.y = np.asarray(sol.sol(record.t))
        records.sort(key=lambda r: r.t)
    return Trajectory(sol.t, sol.y, records, sol.status == 1, sol.sol if dense_output else None)
