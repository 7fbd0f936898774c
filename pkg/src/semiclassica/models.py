from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .config import UNITS


@dataclass
class SpectrumEntry:
    quantum_numbers: Tuple[int, int, int]
    energy: float
    action_residual: float


@dataclass
class FieldConfig:
    F: np.ndarray
    B: np.ndarray
    n: int
    n1: float
    n2: float

    def __post_init__(self) -> None:
        self.F = np.asarray(self.F, dtype=float)
        self.B = np.asarray(self.B, dtype=float)

    @property
    def j(self) -> float:
        return (self.n - 1) / 2.0


@dataclass
class KeplerElement:
    L: np.ndarray
    A: np.ndarray
    n: float
    kepler_anomaly: float = 0.0
    perihelion_time: float = 0.0

    @property
    def semimajor_axis(self) -> float:
        return self.n**2

    @property
    def eccentricity(self) -> float:
        return float(np.linalg.norm(self.A))

    @property
    def energy(self) -> float:
        return -0.5 / self.n**2


@dataclass
class SwitchingRun:
    rate: float
    ramp: str
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    lambdas: np.ndarray
    energies: np.ndarray
    gauge_force: bool = True
    ionized: bool = False
    ionization_lambda: Optional[float] = None

    @property
    def final_energy(self) -> float:
        return float(self.energies[-1])


@dataclass
class ManifoldState:
    n: int
    m: int
    branch: str
    index: int
    Lambda: float
    epsilon: float
    parity: Optional[int] = None


@dataclass
class EquivalentPair:
    Z: float
    n: int
    nu: float
    theta: float

    @property
    def chi(self) -> float:
        return (np.pi - self.theta) / 2.0

    @property
    def unperturbed_energy(self) -> float:
        return -self.Z**2 / (2.0 * self.n**2)


@dataclass
class EffectiveHamiltonianGrid:
    """Scaled pair interaction v(nu, chi) sampled on a rectangular grid; values[i, j] = v(nu[i], chi[j])."""

    nu: np.ndarray
    chi: np.ndarray
    values: np.ndarray
    cache_key: Optional[str] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


@dataclass
class CollinearState:
    r1: float
    r2: float
    p1: float
    p2: float
    E: float


@dataclass
class SectionPoint:
    r1: float
    p1: float
    crossing_index: int
    t: float


@dataclass
class FrozenPlanetQN:
    s: int
    k: int
    l: int
    S_sc: float = 1.4915
    gamma1: float = 0.46164
    gamma2: float = 0.06765


@dataclass
class DecayState:
    E: float
    L: float

    @classmethod
    def from_quantum_numbers(cls, n: int, l: int) -> "DecayState":
        return cls(-0.5 / n**2, l + 0.5)


@dataclass
class StarkProblem:
    F: float
    m: int
    n1: int
    n2: int


@dataclass
class ComplexResonance:
    E: complex
    S: complex
    w: complex
    iterations: int
    residual: float
    quantum_numbers: Tuple[int, int, int] = (0, 0, 0)

    @property
    def gamma(self) -> float:
        return -2.0 * self.E.imag


@dataclass(frozen=True)
class NegativeIonModel:
    """Zero-range negative ion: a bound electron oscillating along a diameter of amplitude d."""

    d: float
    binding: float

    @property
    def threshold(self) -> float:
        """Classical detachment threshold sqrt(binding / d) in hartree."""
        return (self.binding / self.d) ** 0.5


H_MINUS = NegativeIonModel(d=2.7, binding=0.0278)


@dataclass
class CrossSectionCurve:
    abscissa_kind: str
    x: np.ndarray
    sigma_au: np.ndarray
    model: str
    parameters: dict = field(default_factory=dict)

    @property
    def sigma_cm2(self) -> np.ndarray:
        return np.asarray(self.sigma_au) * UNITS.area_au_cm2


@dataclass
class EnergyDistribution:
    grid: np.ndarray
    phi: np.ndarray
    n: int
    density: Optional[Callable[[float], float]] = None


@dataclass
class FeynmanDrive:
    omega: float
    fluence: float
    hbar: float = 1.0

    @property
    def gamma(self) -> float:
        return self.fluence / (self.hbar * self.omega)


@dataclass
class PowerLawCase:
    """Zero-energy particle in V = -alpha^2 x^(2 nu) / 2m, evaluated at x.

    nu may be a Fraction (or a string such as "-2/3") so that truncating
    families are represented exactly.
    """

    alpha: float
    nu: Union[float, Fraction, str]
    x: float
    precision: int = 50


@dataclass
class CriticalIndex:
    index: int
    prediction: float
    terms: list


@dataclass
class LateTermTable:
    S: float
    n: List[int]
    phi: list
    levels: List[list] = field(default_factory=list)
    report: dict = field(default_factory=dict)


@dataclass
class RunSpec:
    subcommand: str
    params: Dict[str, object] = field(default_factory=dict)
    output: Optional[str] = None
    format: str = "csv"
    seed: int = 0
    jobs: int = 1


@dataclass
class ResultTable:
    columns: List[str]
    rows: List[tuple]
    parameters: dict
    tolerances: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


@dataclass
class GoldenReport:
    passed: List[str] = field(default_factory=list)
    failed: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failed
