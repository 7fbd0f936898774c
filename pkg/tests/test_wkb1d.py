import math
import unittest

from src.semiclassica.errors import BracketTooNarrow, InvalidQN
from src.semiclassica.wkb1d import (
    CausticKind,
    RadialProblem,
    angular_momentum_of,
    azimuthal_momentum,
    polar_action,
    polar_turning_points,
    radial_action,
    radial_spectrum,
)


def coulomb(r: float) -> float:
    return -1.0 / r


def oscillator(r: float) -> float:
    return 0.5 * r * r


class AngularTests(unittest.TestCase):
    def test_langer_value_and_polar_integral(self) -> None:
        self.assertEqual(angular_momentum_of(1, 0), 1.5)
        self.assertAlmostEqual(polar_action(1, 0), 1.5 * math.pi, delta=1e-12)
        self.assertAlmostEqual(polar_action(3, 2), math.pi * (3.5 - 2.0), delta=1e-9)

    def test_s_state(self) -> None:
        self.assertEqual(angular_momentum_of(0, 0), 0.0)

    def test_turning_point_angle(self) -> None:
        t1, t2 = polar_turning_points(3, 2)
        self.assertAlmostEqual(t1, 0.60826, delta=1e-5)
        self.assertAlmostEqual(t1 + t2, math.pi, delta=1e-15)

    def test_azimuthal_passthrough(self) -> None:
        self.assertEqual(azimuthal_momentum(-3), -3)

    def test_invalid_projection(self) -> None:
        with self.assertRaises(InvalidQN):
            angular_momentum_of(1, 2)

    def test_morse_indices(self) -> None:
        self.assertEqual(CausticKind.TURNING_POINT.alpha, 0.25)
        self.assertEqual(CausticKind.COULOMB_SINGULARITY.alpha, -0.25)
        self.assertEqual(CausticKind.ROTATION.alpha, 0.0)
        self.assertEqual(CausticKind.Z_AXIS_CAUSTIC.alpha, 0.25)
        self.assertEqual(CausticKind.HARD_WALL.alpha, 0.5)


class RadialSpectrumTests(unittest.TestCase):
    def test_coulomb_p_states(self) -> None:
        levels = radial_spectrum(RadialProblem(coulomb, l=1), 5, (-1.0, -0.001))
        for entry in levels:
            n_r = entry.quantum_numbers[0]
            self.assertAlmostEqual(entry.energy, -0.5 / (n_r + 2) ** 2, delta=1e-8)
        self.assertAlmostEqual(levels[0].energy, -0.125, delta=1e-10)

    def test_coulomb_s_states_start_at_one(self) -> None:
        levels = radial_spectrum(RadialProblem(coulomb, l=0), 5, (-1.0, -0.001))
        self.assertEqual(levels[0].quantum_numbers[0], 1)
        for entry in levels:
            n_r = entry.quantum_numbers[0]
            self.assertAlmostEqual(entry.energy, -0.5 / n_r**2, delta=1e-8)

    def test_coulomb_closed_form_grid(self) -> None:
        for l in (2, 4):
            for entry in radial_spectrum(RadialProblem(coulomb, l=l), 5, (-1.0, -0.001)):
                n = entry.quantum_numbers[0] + l + 1
                self.assertAlmostEqual(entry.energy, -0.5 / n**2, delta=1e-8)

    def test_isotropic_oscillator(self) -> None:
        for l in (1, 2, 4):
            levels = radial_spectrum(RadialProblem(oscillator, l=l), 5, (0.0, 30.0))
            energies = [entry.energy for entry in levels]
            for entry in levels:
                self.assertAlmostEqual(entry.energy, 2 * entry.quantum_numbers[0] + l + 1.5, delta=1e-8)
            self.assertEqual(energies, sorted(energies))
        first = radial_spectrum(RadialProblem(oscillator, l=1), 0, (0.0, 10.0))[0]
        self.assertAlmostEqual(first.energy, 2.5, delta=1e-9)

    def test_isotropic_oscillator_s_states(self) -> None:
        problem = RadialProblem(oscillator, l=0)
        self.assertIs(problem.inner_caustic, CausticKind.HARD_WALL)
        levels = radial_spectrum(problem, 5, (0.0, 30.0))
        self.assertEqual(levels[0].quantum_numbers[0], 0)
        for entry in levels:
            self.assertAlmostEqual(entry.energy, 2 * entry.quantum_numbers[0] + 1.5, delta=1e-8)

    def test_inner_caustic_defaults_from_the_potential(self) -> None:
        self.assertIs(RadialProblem(coulomb, l=0).inner_caustic, CausticKind.COULOMB_SINGULARITY)
        self.assertIs(RadialProblem(lambda r: -math.exp(-r) / r, l=0).inner_caustic, CausticKind.COULOMB_SINGULARITY)
        self.assertIs(RadialProblem(lambda r: -1.0 / (1.0 + r), l=0).inner_caustic, CausticKind.HARD_WALL)
        self.assertIs(RadialProblem(oscillator, l=2).inner_caustic, CausticKind.TURNING_POINT)
        explicit = RadialProblem(oscillator, l=0, inner_caustic=CausticKind.TURNING_POINT)
        self.assertIs(explicit.inner_caustic, CausticKind.TURNING_POINT)

    def test_action_increases_with_energy(self) -> None:
        p = RadialProblem(coulomb, l=2)
        actions = [radial_action(p, e) for e in (-0.05, -0.04, -0.03, -0.02)]
        self.assertTrue(all(b > a for a, b in zip(actions, actions[1:])))

    def test_bracket_too_narrow(self) -> None:
        with self.assertRaises(BracketTooNarrow):
            radial_spectrum(RadialProblem(coulomb, l=1), 5, (-1.0, -0.05))


if __name__ == "__main__":
    unittest.main()
