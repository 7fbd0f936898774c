"""First-order secular theory for two equivalent electrons with zero total angular momentum.

Both electrons share the Kepler period, so in first order the
electron-electron repulsion is replaced by its double time average over
the two ellipses. In scaled units (a = 1) the ellipses are

    rho(xi) = (cos xi - e) A + nu sin xi B,    e = sqrt(1 - nu^2),

with the second electron's angular momentum reversed and its perihelion
turned by theta. The average scales as (Z/n^2) v(nu, theta); the level
sets of v in (chi, nu), chi = (pi - theta)/2, are quantized like the
m = 0 Zeeman problem.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad_vec
from scipy.interpolate import RectBivariateSpline

from .config import Quadrature
from .errors import EmptyContour, InvalidQN, NonConvergent, NoRoot, NoSignChange, OrbitCollision, ValidationError
from .models import EffectiveHamiltonianGrid, EquivalentPair
from .numkit import find_root, gauss_legendre_nodes, integrate

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
PAIR_QUADRATURE = Quadrature(abs_tol=1e-10, rel_tol=1e-9, max_subdivisions=4000)
PAIR_ERROR_CEILING = 1e-6
CONTOUR_QUADRATURE = Quadrature(abs_tol=1e-10, rel_tol=1e-8, max_subdivisions=200)
DEFAULT_NU_RANGE = (0.02, 0.98)
DEFAULT_CHI_RANGE = (0.0, 0.5 * math.pi - 0.02)
GRID_FORMAT = 1

PANEL_NODES = 16
GRADING = 0.25
GRADING_LEVELS = 8


def _eccentric_anomaly(true_anomaly: float, e: float) -> float:
    xi = 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(0.5 * true_anomaly), math.sqrt(1.0 + e) * math.cos(0.5 * true_anomaly))
    return xi % TWO_PI


def crossing_anomalies(nu: float, theta: float) -> Tuple[float, float]:
    """Eccentric anomalies at which the two ellipses intersect.

    Confocal ellipses of equal size and shape meet where the polar angle is
    theta/2 or theta/2 + pi; by symmetry both electrons pass there at the
    same anomaly.
    """
    e = math.sqrt(1.0 - nu * nu)
    first = _eccentric_anomaly(0.5 * theta, e)
    second = _eccentric_anomaly(0.5 * theta + math.pi, e)
    return tuple(sorted((first, second)))


def _graded_panels(singular: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on [0, 2pi] refined geometrically towards each singular anomaly."""
    x, w = gauss_legendre_nodes(PANEL_NODES)
    edges = sorted({0.0, TWO_PI, *singular})
    nodes: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        cuts = {lo, mid, hi}
        if lo in singular:
            cuts.update(lo + (mid - lo) * GRADING**k for k in range(1, GRADING_LEVELS + 1))
        if hi in singular:
            cuts.update(hi - (hi - mid) * GRADING**k for k in range(1, GRADING_LEVELS + 1))
        cuts = sorted(cuts)
        for a, b in zip(cuts[:-1], cuts[1:]):
            half = 0.5 * (b - a)
            nodes.append(a + half * (x + 1.0))
            weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _fold_angle(theta: float) -> float:
    """Map theta onto [0, pi]; the pair of orbits is mirror symmetric under theta -> -theta."""
    return abs(math.remainder(theta, TWO_PI))


def scaled_interaction(nu: float, theta: float, quadrature: Quadrature = PAIR_QUADRATURE) -> float:
    """v(nu, theta): the double time average of 1/|rho1 - rho2| for orbits with a = 1."""
    if not 0.0 < nu <= 1.0:
        raise ValidationError(f"scaled angular momentum must lie in (0, 1], got nu={nu}")
    theta = _fold_angle(theta)
    if nu == 1.0 or theta < 1e-12:
        raise OrbitCollision(f"the two orbits coincide at nu={nu}, theta={theta}", nu=nu, theta=theta)
    e = math.sqrt(1.0 - nu * nu)
    crossings = crossing_anomalies(nu, theta)

    xi1, w1 = _graded_panels(crossings)
    x1 = np.cos(xi1) - e
    y1 = nu * np.sin(xi1)
    outer_weight = w1 * (1.0 - e * np.cos(xi1))

    cos_t, sin_t = math.cos(theta), math.sin(theta)

    def inner(xi2: float) -> float:
        along = math.cos(xi2) - e
        across = -nu * math.sin(xi2)
        x2 = along * cos_t - across * sin_t
        y2 = along * sin_t + across * cos_t
        return (1.0 - e * math.cos(xi2)) * float(np.dot(outer_weight, 1.0 / np.hypot(x1 - x2, y1 - y2)))

    # quad_vec targets the outer-weighted sum, so its error bound is the error of v itself.
    scale = 4.0 * math.pi**2
    value, error, info = quad_vec(
        inner,
        0.0,
        TWO_PI,
        epsabs=quadrature.abs_tol * scale,
        epsrel=quadrature.rel_tol,
        limit=quadrature.max_subdivisions,
        points=list(crossings),
        full_output=True,
    )
    if info.status == 2 or not math.isfinite(value):
        raise OrbitCollision(f"interaction pole hit at nu={nu}, theta={theta}", nu=nu, theta=theta)
    value, error = float(value) / scale, float(error) / scale
    if info.status == 1:
        if error > PAIR_ERROR_CEILING:
            raise NonConvergent(f"inner average did not converge at nu={nu}, theta={theta} (err {error:.2e})")
        logger.debug("accepted v(%.4f, %.4f) at subdivision limit, err %.2e", nu, theta, error)
    return value


def double_average(pair: EquivalentPair, quadrature: Quadrature = PAIR_QUADRATURE) -> float:
    """Averaged electron-electron repulsion in atomic units, (Z/n^2) v(nu, theta)."""
    if pair.Z <= 0.0 or pair.n < 1:
        raise ValidationError(f"need Z > 0 and n >= 1, got Z={pair.Z}, n={pair.n}")
    return pair.Z / pair.n**2 * scaled_interaction(pair.nu, pair.theta, quadrature)


def _cache_key(nu: np.ndarray, chi: np.ndarray, quadrature: Quadrature) -> str:
    spec = {
        "format": GRID_FORMAT,
        "nu": [float(nu[0]), float(nu[-1]), len(nu)],
        "chi": [float(chi[0]), float(chi[-1]), len(chi)],
        "quadrature": [quadrature.abs_tol, quadrature.rel_tol, quadrature.max_subdivisions],
        "panels": [PANEL_NODES, GRADING, GRADING_LEVELS],
    }
    return hashlib.sha256(json.dumps(spec, sort_keys=True).encode("utf-8")).hexdigest()[:16]


def effective_hamiltonian_grid(
    n_nu: int = 60,
    n_chi: int = 60,
    nu_range: Tuple[float, float] = DEFAULT_NU_RANGE,
    chi_range: Tuple[float, float] = DEFAULT_CHI_RANGE,
    quadrature: Quadrature = PAIR_QUADRATURE,
    cache_dir: Optional[str] = None,
) -> EffectiveHamiltonianGrid:
    """Tabulate v(nu, chi), reusing an .npz file under ``cache_dir`` when one matches."""
    if min(n_nu, n_chi) < 4:
        raise ValidationError("cubic interpolation needs at least 4 points per axis")
    if not 0.0 < nu_range[0] < nu_range[1] < 1.0:
        raise ValidationError(f"nu range must lie inside (0, 1), got {nu_range}")
    if not 0.0 <= chi_range[0] < chi_range[1] < 0.5 * math.pi:
        raise ValidationError(f"chi range must lie inside [0, pi/2), got {chi_range}")
    nu = np.linspace(nu_range[0], nu_range[1], n_nu)
    chi = np.linspace(chi_range[0], chi_range[1], n_chi)
    key = _cache_key(nu, chi, quadrature)

    path = Path(cache_dir) / f"helium-v-{key}.npz" if cache_dir else None
    if path is not None and path.exists():
        with np.load(path) as data:
            if str(data["key"]) == key:
                logger.info("loaded effective Hamiltonian grid from %s", path)
                return EffectiveHamiltonianGrid(data["nu"], data["chi"], data["values"], key)
        logger.warning("ignoring stale grid cache %s", path)

    values = np.empty((n_nu, n_chi))
    for i, nu_i in enumerate(nu):
        for j, chi_j in enumerate(chi):
            values[i, j] = scaled_interaction(nu_i, math.pi - 2.0 * chi_j, quadrature)
        logger.debug("grid row %d/%d (nu=%.4f) done", i + 1, n_nu, nu_i)

    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, nu=nu, chi=chi, values=values, key=np.array(key))
        logger.info("cached effective Hamiltonian grid at %s", path)
    return EffectiveHamiltonianGrid(nu, chi, values, key)


def interpolator(grid: EffectiveHamiltonianGrid) -> RectBivariateSpline:
    return RectBivariateSpline(grid.nu, grid.chi, grid.values, kx=3, ky=3, s=0)


def evaluate(spline: RectBivariateSpline, nu: float, chi: float) -> float:
    """v at (nu, chi), using the chi -> -chi symmetry for negative chi."""
    return float(spline.ev(nu, abs(chi)))


def level_bounds(grid: EffectiveHamiltonianGrid, spline: Optional[RectBivariateSpline] = None) -> Tuple[float, float]:
    """Levels w whose contour closes inside the grid.

    The lower end is v at the corner (nu_min, 0); above the upper end the
    region v < w leaks through the nu_max or chi_max edge.
    """
    spline = spline or interpolator(grid)
    nu_lo, nu_hi = grid.nu[0], grid.nu[-1]
    chi_hi = grid.chi[-1]
    nus = np.linspace(nu_lo, nu_hi, 4 * len(grid.nu))
    chis = np.linspace(grid.chi[0], chi_hi, 4 * len(grid.chi))
    top = np.min(spline.ev(np.full_like(chis, nu_hi), chis))
    right = np.min(spline.ev(nus, np.full_like(nus, chi_hi)))
    return evaluate(spline, nu_lo, grid.chi[0]), float(min(top, right))


@dataclass(frozen=True)
class Contour:
    """The level set v(nu, chi) = w as nu(chi) on [chi_min, chi_m]."""

    w: float
    chi_m: float
    spline: RectBivariateSpline
    nu_samples: np.ndarray
    chi_min: float

    def __call__(self, chi: float) -> float:
        nus = self.nu_samples
        residual = self.spline.ev(nus, np.full_like(nus, abs(chi))) - self.w
        if residual[0] >= 0.0:
            if abs(chi) <= self.chi_m:
                return float(nus[0])
            raise EmptyContour(f"no contour point at chi={chi} beyond the turning point {self.chi_m}")
        above = np.flatnonzero(residual >= 0.0)
        if above.size == 0:
            raise EmptyContour(f"contour w={self.w} leaves the grid through nu={nus[-1]} at chi={chi}")
        i = int(above[0])
        f = lambda nu: evaluate(self.spline, nu, chi) - self.w  # noqa: E731
        return find_root(f, (nus[i - 1], nus[i]), xtol=1e-13)

    def area(self, quadrature: Quadrature = CONTOUR_QUADRATURE) -> float:
        """Integral of nu(chi) from chi_min to the turning point."""
        return integrate(self, self.chi_min, self.chi_m, quadrature)


def contour_nu_of_chi(w: float, grid: EffectiveHamiltonianGrid, spline: Optional[RectBivariateSpline] = None) -> Contour:
    spline = spline or interpolator(grid)
    lo, hi = level_bounds(grid, spline)
    if not lo < w < hi:
        raise EmptyContour(f"level w={w} has no closed contour on the grid; need {lo:.6g} < w < {hi:.6g}")
    nu_lo = grid.nu[0]
    chis = np.linspace(grid.chi[0], grid.chi[-1], 8 * len(grid.chi))
    bottom = spline.ev(np.full_like(chis, nu_lo), chis) - w
    above = np.flatnonzero(bottom >= 0.0)
    if above.size == 0:
        raise EmptyContour(f"contour w={w} reaches the excluded strip near chi = pi/2")
    i = int(above[0])
    if i == 0:
        raise EmptyContour(f"level w={w} lies below the grid minimum")
    chi_m = find_root(lambda c: evaluate(spline, nu_lo, c) - w, (chis[i - 1], chis[i]), xtol=1e-13)
    samples = np.linspace(nu_lo, grid.nu[-1], 4 * len(grid.nu))
    return Contour(w, chi_m, spline, samples, float(grid.chi[0]))


def quantization_parameter(n: int, k: int) -> float:
    if n < 1 or not 0 <= k <= n - 1:
        raise InvalidQN(f"need n >= 1 and 0 <= k <= n - 1, got n={n}, k={k}")
    return (2 * k + 1) / (2.0 * n)


def quantize_w(n: int, k: int, grid: EffectiveHamiltonianGrid) -> Tuple[float, float]:
    """Level w whose contour encloses the area (pi/2) q with q = (2k + 1)/2n."""
    q = quantization_parameter(n, k)
    spline = interpolator(grid)
    lo, hi = level_bounds(grid, spline)
    gap = 1e-9 * (hi - lo)
    target = 0.5 * math.pi * q
    residual = lambda w: contour_nu_of_chi(w, grid, spline).area() - target  # noqa: E731
    try:
        w = find_root(residual, (lo + gap, hi - gap), xtol=1e-12, rtol=1e-12)
    except NoSignChange as exc:
        raise NoRoot(f"q={q:.4f} is outside the range the grid supports; q -> 1 needs the modified condition") from exc
    logger.debug("n=%d k=%d q=%.4f w=%.8f", n, k, q, w)
    return q, w


def first_order_energy(Z: float, n: int, k: int, grid: EffectiveHamiltonianGrid) -> float:
    """E1 = (Z/n^2) w(q) in atomic units."""
    if Z <= 0.0:
        raise ValidationError(f"nuclear charge must be positive, got Z={Z}")
    _, w = quantize_w(n, k, grid)
    return Z / n**2 * w
