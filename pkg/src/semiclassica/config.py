import os
from dataclasses import dataclass
from typing import Optional

from .errors import ValidationError


ENDPOINT_MODES = ("regular", "inv_sqrt_left", "inv_sqrt_right", "inv_sqrt_both")


@dataclass(frozen=True)
class Units:
    """Hartree atomic units and the handful of conversions used at the CLI boundary."""

    c_au: float = 137.035999
    field_au_per_V_per_cm: float = 1.0 / 5.14220675e9
    hartree_eV: float = 27.211386
    time_au_s: float = 2.4188843e-17
    bohr_cm: float = 5.2917721e-9
    tesla_per_au: float = 2.3505e5

    @property
    def area_au_cm2(self) -> float:
        return self.bohr_cm**2

    def field_from_kv_per_cm(self, kv_cm: float) -> float:
        return kv_cm * 1.0e3 * self.field_au_per_V_per_cm

    def field_to_kv_per_cm(self, f_au: float) -> float:
        return f_au / self.field_au_per_V_per_cm / 1.0e3

    def energy_from_ev(self, ev: float) -> float:
        return ev / self.hartree_eV

    def energy_to_ev(self, e_au: float) -> float:
        return e_au * self.hartree_eV

    def time_to_s(self, t_au: float) -> float:
        return t_au * self.time_au_s

    def time_from_s(self, t_s: float) -> float:
        return t_s / self.time_au_s

    def area_to_cm2(self, a_au: float) -> float:
        return a_au * self.area_au_cm2

    def area_from_cm2(self, a_cm2: float) -> float:
        return a_cm2 / self.area_au_cm2

    def b_from_tesla(self, tesla: float) -> float:
        return tesla / self.tesla_per_au

    def b_to_tesla(self, b_au: float) -> float:
        return b_au * self.tesla_per_au


UNITS = Units()


@dataclass(frozen=True)
class Quadrature:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_subdivisions: int = 200
    endpoint_mode: str = "regular"

    def __post_init__(self) -> None:
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValidationError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValidationError("max_subdivisions must be at least 1")
        if self.endpoint_mode not in ENDPOINT_MODES:
            raise ValidationError(f"unknown endpoint mode {self.endpoint_mode!r}")

    def with_mode(self, mode: str) -> "Quadrature":
        return Quadrature(self.abs_tol, self.rel_tol, self.max_subdivisions, mode)


@dataclass(frozen=True)
class OdeSolver:
    abs_tol: float = 1e-11
    rel_tol: float = 1e-11
    max_step: float = float("inf")
    event_tol: float = 1e-12

    def __post_init__(self) -> None:
        if min(self.abs_tol, self.rel_tol, self.event_tol) <= 0:
            raise ValidationError("ODE tolerances must be positive")

    def tightened(self, factor: float = 0.5) -> "OdeSolver":
        return OdeSolver(self.abs_tol * factor, self.rel_tol * factor, self.max_step, self.event_tol)


@dataclass(frozen=True)
class Settings:
    precision: int = 50
    log_level: str = "WARNING"
    cache_dir: Optional[str] = None

    @classmethod
    def from_env(cls) -> "Settings":
        raw = os.environ.get("SEMICLASSICA_PRECISION", "").strip()
        precision = cls.precision
        if raw:
            try:
                precision = int(raw)
            except ValueError as exc:
                raise ValidationError(f"SEMICLASSICA_PRECISION must be an integer, got {raw!r}") from exc
        if precision < 30:
            raise ValidationError("milne precision must be at least 30 digits")
        return cls(
            precision=precision,
            log_level=os.environ.get("SEMICLASSICA_LOG_LEVEL", cls.log_level).upper(),
            cache_dir=os.environ.get("SEMICLASSICA_CACHE_DIR") or None,
        )
