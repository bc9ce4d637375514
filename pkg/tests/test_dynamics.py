"""
Dynamics - Test Suite
Benchmark systems, decompositions, dataset generation and storage
"""

import math
import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from phsysid.core.errors import ConfigError, DimensionError, UnknownBenchmarkError
from phsysid.dynamics import (
    BENCHMARKS,
    Trajectory,
    eval_rhs,
    generate_dataset,
    incidence_matrix,
    load_dataset,
    make_benchmark,
    rhs_polynomial_terms,
    save_dataset,
    to_state_vector,
    two_point_noise_std,
)


class TestBenchmarks(unittest.TestCase):
    """Exact right-hand sides and Hamiltonians"""

    def test_henon_heiles_hamiltonian(self):
        """H(0) = 0 and H(1, 0, 0, 0) = 0.5"""
        system = make_benchmark("henon-heiles")
        self.assertEqual(system.dimension, 4)
        self.assertAlmostEqual(float(system.hamiltonian(np.zeros(4))), 0.0)
        self.assertAlmostEqual(float(system.hamiltonian(np.array([1.0, 0.0, 0.0, 0.0]))), 0.5)

    def test_henon_heiles_rhs(self):
        """q' = p and p1' = -q1 - 2 q1 q2"""
        system = make_benchmark("henon_heiles")
        out = eval_rhs(system, [0.5, 0.2, 0.3, -0.4])
        np.testing.assert_allclose(out, [0.3, -0.4, -0.5 - 0.2, -0.2 - 0.25 + 0.04])

    def test_nls_term_count(self):
        """The coupled NLS Hamiltonian has eleven quartic monomials"""
        system = make_benchmark("nls")
        self.assertEqual(len(system.hamiltonian_terms), 11)
        self.assertTrue(all(sum(e) == 4 for e in system.hamiltonian_terms))

    def test_mass_spring_rhs(self):
        """Unforced at t=0, full drive 2 sin(pi/2) at t=pi"""
        system = make_benchmark("mass_spring")
        np.testing.assert_allclose(eval_rhs(system, [1.0, 0.0], 0.0), [0.0, -1.0], atol=1e-15)
        np.testing.assert_allclose(eval_rhs(system, [0.0, 0.0], math.pi), [0.0, 2.0], atol=1e-15)
        self.assertEqual(system.force_params, {"alpha": 2.0, "omega": 0.5})
        np.testing.assert_allclose(system.damping_truth, [0.0, 0.3])

    def test_tanks_hamiltonian_terms(self):
        """Pipe terms 1/(2J) = 25, tank terms g rho/(2A) = 4.905"""
        system = make_benchmark("tanks")
        self.assertEqual(system.dimension, 9)
        self.assertAlmostEqual(system.hamiltonian_terms[(2, 0, 0, 0, 0, 0, 0, 0, 0)], 25.0)
        self.assertAlmostEqual(system.hamiltonian_terms[(0, 0, 0, 0, 0, 2, 0, 0, 0)], 4.905)
        self.assertEqual(system.force_components, (8,))
        self.assertIsNone(system.separable_split)

    def test_tanks_leak_clamped(self):
        """The leak on the last tank saturates at level 0.3"""
        system = make_benchmark("tanks")
        low, high = np.zeros(9), np.zeros(9)
        high[8] = 5.0
        self.assertAlmostEqual(float(system.force_truth(low)[8]), 0.0)
        self.assertAlmostEqual(float(system.force_truth(high)[8]), -3.0)

    def test_oscillator_undamped(self):
        """The oscillator has no force and zero damping"""
        system = make_benchmark("oscillator")
        self.assertIsNone(system.force_truth)
        np.testing.assert_array_equal(system.damping_truth, np.zeros(2))
        np.testing.assert_allclose(eval_rhs(system, [0.3, -0.1]), [-0.1, -0.3])

    def test_unknown_benchmark(self):
        with self.assertRaises(UnknownBenchmarkError):
            make_benchmark("pendulum")

    def test_unknown_parameter(self):
        with self.assertRaises(ConfigError):
            make_benchmark("mass_spring", {"gamma": 1.0})

    def test_tank_friction_arity(self):
        """r_p needs exactly one coefficient per pipe"""
        with self.assertRaises(ConfigError):
            make_benchmark("tanks", {"r_p": [0.1, 0.2]})

    def test_invalid_pipe(self):
        with self.assertRaises(ConfigError):
            incidence_matrix([(0, 0)], 2)

    def test_state_dimension_checked(self):
        system = make_benchmark("oscillator")
        with self.assertRaises(DimensionError):
            eval_rhs(system, [1.0, 2.0, 3.0])
        with self.assertRaises(DimensionError):
            to_state_vector([1.0, float("nan")], 2)


class TestDecomposition(unittest.TestCase):
    """(S - diag r) grad H + F reproduces the right-hand side"""

    def test_decomposition_matches_rhs(self):
        rng = np.random.default_rng(3)
        for name in BENCHMARKS:
            system = make_benchmark(name)
            x = rng.uniform(-1.0, 1.0, (50, system.dimension))
            for t in (0.0, 1.3):
                with self.subTest(system=name, t=t):
                    np.testing.assert_allclose(system.decomposed_rhs(x, t), system.rhs(x, t), atol=1e-12)

    def test_hamiltonian_terms_match_hamiltonian(self):
        rng = np.random.default_rng(4)
        for name in BENCHMARKS:
            system = make_benchmark(name)
            x = rng.uniform(-1.0, 1.0, (20, system.dimension))
            value = np.zeros(20)
            for exponents, coeff in system.hamiltonian_terms.items():
                value += coeff * np.prod(x ** np.asarray(exponents), axis=-1)
            with self.subTest(system=name):
                np.testing.assert_allclose(value, system.hamiltonian(x), atol=1e-12)

    def test_polynomial_terms_of_oscillator(self):
        """x1' = x2 and x2' = -x1"""
        terms = rhs_polynomial_terms(make_benchmark("oscillator"))
        self.assertEqual(terms[0], {(0, 1): 1.0})
        self.assertEqual(terms[1], {(1, 0): -1.0})


class TestDatasets(unittest.TestCase):
    """Seeded generation, noise and CSV storage"""

    def setUp(self):
        self.system = make_benchmark("mass_spring")

    def test_shapes(self):
        data = generate_dataset(self.system, 50, 10.0, 0.1, sigma=0.2, seed=0, substeps=10)
        self.assertEqual(len(data.trajectories), 50)
        self.assertEqual(data.trajectories[0].states.shape, (101, 2))
        self.assertEqual(data.n_samples, 50 * 100)
        x_n, x_np1, t_n = data.pairs()
        self.assertEqual(x_n.shape, (5000, 2))
        np.testing.assert_array_equal(x_n[1], x_np1[0])
        self.assertEqual(t_n.shape, (5000,))

    def test_deterministic(self):
        a = generate_dataset(self.system, 5, 1.0, 0.1, sigma=0.1, seed=7, substeps=10)
        b = generate_dataset(self.system, 5, 1.0, 0.1, sigma=0.1, seed=7, substeps=10)
        for ta, tb in zip(a.trajectories, b.trajectories):
            np.testing.assert_array_equal(ta.states, tb.states)

    def test_prefix_independent_of_count(self):
        """Trajectory i is the same whether 3 or 8 are generated"""
        small = generate_dataset(self.system, 3, 1.0, 0.1, sigma=0.1, seed=2, substeps=10)
        large = generate_dataset(self.system, 8, 1.0, 0.1, sigma=0.1, seed=2, substeps=10)
        for ta, tb in zip(small.trajectories, large.trajectories):
            np.testing.assert_array_equal(ta.states, tb.states)

    def test_noise_free_equals_clean(self):
        data = generate_dataset(self.system, 4, 2.0, 0.1, sigma=0.0, seed=1, substeps=10)
        for noisy, clean in zip(data.trajectories, data.clean_copy.trajectories):
            np.testing.assert_array_equal(noisy.states, clean.states)

    def test_noise_level(self):
        """Sample std of noisy - clean is within 5% of sigma"""
        data = generate_dataset(self.system, 50, 10.0, 0.1, sigma=0.2, seed=0, substeps=10)
        residual = np.concatenate([
            noisy.states - clean.states for noisy, clean in zip(data.trajectories, data.clean_copy.trajectories)
        ])
        self.assertLess(abs(np.std(residual) - 0.2), 0.01)

    def test_two_point_noise_std(self):
        self.assertAlmostEqual(two_point_noise_std(0.2), 0.2 / math.sqrt(2.0))
        with self.assertRaises(ConfigError):
            two_point_noise_std(-1.0)

    def test_invalid_arguments(self):
        with self.assertRaises(ConfigError):
            generate_dataset(self.system, 0, 1.0, 0.1)
        with self.assertRaises(ConfigError):
            generate_dataset(self.system, 2, 1.0, 0.1, init_low=1.0, init_high=-1.0)
        with self.assertRaises(ConfigError):
            generate_dataset(self.system, 2, 1.0, 0.1, sigma=-0.1)

    def test_uneven_spacing_rejected(self):
        with self.assertRaises(DimensionError):
            Trajectory(times=np.array([0.0, 0.1, 0.3]), states=np.zeros((3, 2)), dt=0.1)

    def test_csv_round_trip(self):
        data = generate_dataset(self.system, 3, 1.0, 0.1, sigma=0.05, seed=5, substeps=10)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "data.csv")
            save_dataset(data, path)
            loaded = load_dataset(path)
        self.assertEqual(loaded.system_name, "mass_spring")
        self.assertEqual(loaded.seed, 5)
        self.assertAlmostEqual(loaded.noise_sigma, 0.05)
        self.assertEqual(len(loaded.trajectories), 3)
        for ta, tb in zip(data.trajectories, loaded.trajectories):
            np.testing.assert_array_equal(ta.states, tb.states)
        for ta, tb in zip(data.clean_copy.trajectories, loaded.clean_copy.trajectories):
            np.testing.assert_array_equal(ta.states, tb.states)

    def test_missing_dataset(self):
        with self.assertRaises(ConfigError):
            load_dataset("/nonexistent/data.csv")


if __name__ == '__main__':
    unittest.main()
