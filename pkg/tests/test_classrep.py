import math
import unittest

import numpy as np

from src.semiclassica.classrep import (
    SymmetricWell,
    abel_forward,
    abel_inverse,
    balance_kernel,
    balance_residual,
    energy_distribution,
    feynman_transition,
    feynman_transition_quadrature,
    harmonic_well,
    ho_distribution,
    microcanonical_density,
    semiclassical_density,
    semiclassical_phase,
    sum_rules,
    transition_row,
)
from src.semiclassica.config import Quadrature
from src.semiclassica.errors import DerivativeNoise, InvalidQN, ValidationError
from src.semiclassica.models import FeynmanDrive
from src.semiclassica.numkit import integrate

WIDE = Quadrature(1e-12, 1e-9, 400)


def hermite_functions(n: int, x: float) -> list:
    """Oscillator eigenfunctions psi_0..psi_{n+1} for m = omega = hbar = 1."""
    psi = [math.pi**-0.25 * math.exp(-0.5 * x * x)]
    psi.append(math.sqrt(2.0) * x * psi[0])
    for k in range(1, n + 1):
        psi.append(math.sqrt(2.0 / (k + 1)) * x * psi[k] - math.sqrt(k / (k + 1)) * psi[k - 1])
    return psi


def quantum_density(n: int):
    return lambda x: hermite_functions(n, x)[n] ** 2


def quantum_slope(n: int):
    def slope(x: float) -> float:
        psi = hermite_functions(n, x)
        lower = psi[n - 1] if n > 0 else 0.0
        derivative = (math.sqrt(n) * lower - math.sqrt(n + 1) * psi[n + 1]) / math.sqrt(2.0)
        return 2.0 * psi[n] * derivative

    return slope


class WellTests(unittest.TestCase):
    def test_harmonic_period_and_turning_point(self) -> None:
        well = harmonic_well(omega=2.0, mass=0.5)
        self.assertAlmostEqual(well.period(3.0), math.pi, delta=1e-15)
        self.assertAlmostEqual(well.turning_point(1.0), 1.0, delta=1e-14)

    def test_quartic_well_by_quadrature(self) -> None:
        well = SymmetricWell(lambda x: x**4)
        # int_0^1 du / sqrt(1 - u^4)
        lemniscate = 1.3110287771460599
        self.assertAlmostEqual(well.turning_point(16.0), 2.0, delta=1e-12)
        self.assertAlmostEqual(well.period(16.0), 2.0 * math.sqrt(2.0) * lemniscate / 2.0, delta=1e-9)
        total = integrate(lambda x: microcanonical_density(well, 16.0, x), -2.0, 2.0, Quadrature(1e-13, 1e-10, 400, "inv_sqrt_both"))
        self.assertAlmostEqual(total, 1.0, delta=1e-8)
        self.assertEqual(microcanonical_density(well, 16.0, 2.5), 0.0)

    def test_invalid_wells(self) -> None:
        with self.assertRaises(ValidationError):
            harmonic_well(omega=0.0)
        with self.assertRaises(ValidationError):
            SymmetricWell(lambda x: x * x, mass=-1.0)
        with self.assertRaises(ValidationError):
            harmonic_well().period(0.0)


class OscillatorDistributionTests(unittest.TestCase):
    def test_sum_rules(self) -> None:
        for n in range(6):
            norm, mean = sum_rules(ho_distribution(n, omega=1.5))
            self.assertAlmostEqual(norm, 1.0, delta=1e-8)
            self.assertAlmostEqual(mean, 1.5 * (n + 0.5), delta=1e-8)

    def test_tabulated_sum_rules(self) -> None:
        norm, mean = sum_rules(ho_distribution(2, grid=np.linspace(0.0, 40.0, 40001)))
        self.assertAlmostEqual(norm, 1.0, delta=1e-5)
        self.assertAlmostEqual(mean, 2.5, delta=1e-5)

    def test_sign_changes_follow_laguerre_roots(self) -> None:
        for n in range(5):
            phi = ho_distribution(n).phi
            changes = int(np.sum(np.signbit(phi[1:]) != np.signbit(phi[:-1])))
            self.assertEqual(changes, n)

    def test_negative_level(self) -> None:
        with self.assertRaises(InvalidQN):
            ho_distribution(-1)


class AbelTransformTests(unittest.TestCase):
    def setUp(self) -> None:
        self.well = harmonic_well()

    def test_microcanonical_density(self) -> None:
        expected = math.sqrt(2.0) / (2.0 * math.pi * math.sqrt(0.875))
        self.assertAlmostEqual(microcanonical_density(self.well, 1.0, 0.5), expected, delta=1e-15)
        self.assertEqual(microcanonical_density(self.well, 1.0, -1.5), 0.0)

    def test_ground_state_density_at_origin(self) -> None:
        rho0 = abel_forward(ho_distribution(0), self.well, 0.0)
        self.assertAlmostEqual(rho0, 1.0 / math.sqrt(math.pi), delta=1e-9)

    def test_forward_reproduces_quantum_densities(self) -> None:
        for n in range(3):
            dist = ho_distribution(n)
            for x in (0.3, 1.1, 2.0):
                self.assertAlmostEqual(abel_forward(dist, self.well, x), quantum_density(n)(x), delta=1e-8)

    def test_forward_density_is_normalized(self) -> None:
        for n in range(3):
            dist = ho_distribution(n)
            total = 2.0 * integrate(lambda x: abel_forward(dist, self.well, x), 0.0, math.inf, WIDE)
            self.assertAlmostEqual(total, 1.0, delta=1e-6)

    def test_inverse_of_quantum_density(self) -> None:
        exact = ho_distribution(1).density
        for eps in (0.1, 0.25, 0.7, 2.0):
            phi = abel_inverse(quantum_density(1), self.well, eps, drho=quantum_slope(1))
            self.assertAlmostEqual(phi, exact(eps), delta=1e-8)
        # L_1 changes sign at 4 eps = 1
        self.assertGreater(abel_inverse(quantum_density(1), self.well, 0.2, drho=quantum_slope(1)), 0.0)
        self.assertLess(abel_inverse(quantum_density(1), self.well, 0.3, drho=quantum_slope(1)), 0.0)

    def test_inverse_sum_rules(self) -> None:
        for n in range(6):
            phi = lambda eps: abel_inverse(quantum_density(n), self.well, eps, drho=quantum_slope(n))  # noqa: E731
            norm = integrate(phi, 0.0, 30.0 + 4.0 * n, WIDE)
            mean = integrate(lambda eps: eps * phi(eps), 0.0, 30.0 + 4.0 * n, WIDE)
            self.assertAlmostEqual(norm, 1.0, delta=1e-6)
            self.assertAlmostEqual(mean, n + 0.5, delta=1e-6)

    def test_round_trip_with_finite_differences(self) -> None:
        for n in (0, 1):
            dist = ho_distribution(n)
            rho = lambda x: abel_forward(dist, self.well, x)  # noqa: E731
            for eps in (0.2, 1.3):
                self.assertAlmostEqual(abel_inverse(rho, self.well, eps), dist.density(eps), delta=1e-6)

    def test_tabulated_distribution(self) -> None:
        dist = energy_distribution(quantum_density(0), self.well, [0.5, 1.0], 0, drho=quantum_slope(0))
        np.testing.assert_allclose(dist.phi, 2.0 * np.exp(-2.0 * dist.grid), atol=1e-8)
        self.assertEqual(dist.n, 0)

    def test_noisy_density_is_flagged(self) -> None:
        base = quantum_density(0)
        noisy = lambda x: base(x) + 1e-6 * math.sin(1e5 * x)  # noqa: E731
        with self.assertRaises(DerivativeNoise):
            abel_inverse(noisy, self.well, 0.5)


class BalanceEquationTests(unittest.TestCase):
    def test_kernel_quadrature_matches_closed_form(self) -> None:
        well = harmonic_well(omega=1.3, mass=0.7)
        rng = np.random.default_rng(5)
        for _ in range(5):
            eps, mu = np.sort(rng.uniform(0.05, 4.0, 2))
            expected = 0.25 * 0.7 * 1.3**2 * (mu - 2.0 * eps)
            self.assertAlmostEqual(balance_kernel(well, mu, eps), expected, delta=1e-8)
        with self.assertRaises(ValidationError):
            balance_kernel(well, 1.0, 2.0)

    def test_eigenstates_solve_the_balance_equation(self) -> None:
        well = harmonic_well()
        grid = np.linspace(0.0, 10.0, 41)
        ground = lambda eps: math.exp(-2.0 * eps) / math.pi  # noqa: E731
        first = lambda eps: math.exp(-2.0 * eps) * (1.0 - 4.0 * eps) / math.pi  # noqa: E731
        self.assertLess(balance_residual(ground, 0.5, well, grid), 1e-6)
        self.assertLess(balance_residual(first, 1.5, well, grid), 1e-6)

    def test_wrong_energy_leaves_a_residual(self) -> None:
        well = harmonic_well()
        ground = lambda eps: math.exp(-2.0 * eps) / math.pi  # noqa: E731
        self.assertGreater(balance_residual(ground, 0.6, well, np.linspace(0.0, 10.0, 41)), 1e-2)


class FeynmanModelTests(unittest.TestCase):
    def test_no_drive_keeps_the_state(self) -> None:
        drive = FeynmanDrive(omega=1.0, fluence=0.0)
        self.assertEqual(feynman_transition(2, 2, drive), 1.0)
        self.assertEqual(feynman_transition(2, 3, drive), 0.0)
        self.assertAlmostEqual(feynman_transition_quadrature(2, 2, drive), 1.0, delta=1e-8)
        self.assertAlmostEqual(feynman_transition_quadrature(1, 3, drive), 0.0, delta=1e-8)

    def test_ground_state_survival(self) -> None:
        for omega, fluence in ((1.0, 0.7), (2.0, 1.2)):
            drive = FeynmanDrive(omega=omega, fluence=fluence)
            self.assertAlmostEqual(feynman_transition(0, 0, drive), math.exp(-drive.gamma), delta=1e-14)
            self.assertAlmostEqual(feynman_transition_quadrature(0, 0, drive), math.exp(-drive.gamma), delta=1e-9)
        drive = FeynmanDrive(omega=1.0, fluence=0.7)
        self.assertAlmostEqual(feynman_transition(0, 1, drive), 0.7 * math.exp(-0.7), delta=1e-14)
        self.assertAlmostEqual(feynman_transition_quadrature(0, 1, drive), -0.7 * math.exp(-0.7), delta=1e-9)

    def test_ensembles_reproduce_the_quantum_result(self) -> None:
        for gamma in (0.1, 0.5, 1.0, 2.0):
            drive = FeynmanDrive(omega=1.0, fluence=gamma)
            for n in range(5):
                for k in range(5):
                    exact = (-1) ** (n + k) * feynman_transition(n, k, drive)
                    self.assertAlmostEqual(feynman_transition_quadrature(n, k, drive), exact, delta=1e-6)

    def test_symmetry_and_unitarity(self) -> None:
        drive = FeynmanDrive(omega=1.0, fluence=1.7)
        for n in range(3):
            self.assertAlmostEqual(float(np.sum(transition_row(n, drive))), 1.0, delta=1e-6)
            for k in range(5):
                self.assertAlmostEqual(feynman_transition(n, k, drive), feynman_transition(k, n, drive), delta=1e-10)

    def test_invalid_levels(self) -> None:
        with self.assertRaises(InvalidQN):
            feynman_transition(-1, 0, FeynmanDrive(1.0, 0.5))
        with self.assertRaises(ValidationError):
            feynman_transition(0, 1, FeynmanDrive(1.0, -0.5))


class SemiclassicalTests(unittest.TestCase):
    def setUp(self) -> None:
        self.well = harmonic_well()

    def test_phase_closed_form(self) -> None:
        E = 2.5
        for eps in (0.01, 0.4, 1.7):
            theta = math.asin(math.sqrt(eps / E))
            expected = 2.0 * E * (0.5 * math.pi - theta - math.sin(theta) * math.cos(theta))
            self.assertAlmostEqual(semiclassical_phase(self.well, E, eps), expected, delta=1e-8)
        self.assertEqual(semiclassical_phase(self.well, E, E), 0.0)
        with self.assertRaises(ValidationError):
            semiclassical_phase(self.well, E, 3.0)

    def test_density_has_n_nodes(self) -> None:
        for n in range(4):
            E = n + 0.5
            x_t = math.sqrt(2.0 * E)
            xs = np.linspace(-0.98 * x_t, 0.98 * x_t, 1601)
            fringe = np.array(
                [semiclassical_density(self.well, E, x) / (2.0 * microcanonical_density(self.well, E, x)) for x in xs]
            )
            minima = [
                i for i in range(1, len(xs) - 1)
                if fringe[i] < fringe[i - 1] and fringe[i] <= fringe[i + 1] and fringe[i] < 1e-2
            ]
            self.assertEqual(len(minima), n)

    def test_vanishes_outside_the_orbit(self) -> None:
        self.assertEqual(semiclassical_density(self.well, 0.5, 1.5), 0.0)


if __name__ == "__main__":
    unittest.main()
