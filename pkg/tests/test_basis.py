"""
Basis Libraries - Test Suite
Library sizes, ordering, evaluation, gradients and rendering
"""

import os
import sys
import unittest
from math import comb

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from phsysid.autodiff import finite_diff_check
from phsysid.basis import (
    BasisLibrary,
    build_library,
    build_polynomial_library,
    bsi_library_size,
    eval_library,
    eval_library_gradient,
    polynomial_library_size,
    term_label,
    term_to_string,
)
from phsysid.core.errors import ConfigError, DimensionError


class TestLibrarySizes(unittest.TestCase):
    """Monomial counts"""

    def test_polynomial_sizes(self):
        for d, n in ((2, 2), (4, 3), (4, 4), (9, 2)):
            with self.subTest(d=d, n=n):
                lib = build_polynomial_library(d, n)
                self.assertEqual(len(lib), comb(d + n, n) - 1)
                self.assertEqual(polynomial_library_size(d, n), len(lib))

    def test_known_values(self):
        self.assertEqual(polynomial_library_size(4, 3), 34)
        self.assertEqual(bsi_library_size(4, 3), 60)
        self.assertEqual(polynomial_library_size(4, 4), 69)
        self.assertEqual(bsi_library_size(4, 4), 140)

    def test_bsi_size_matches_baseline_library(self):
        """d copies of a degree n-1 library with constant"""
        lib = build_polynomial_library(4, 2, include_constant=True)
        self.assertEqual(4 * len(lib), bsi_library_size(4, 3))

    def test_invalid_degree(self):
        with self.assertRaises(ConfigError):
            build_polynomial_library(2, 0)
        with self.assertRaises(ConfigError):
            bsi_library_size(0, 2)


class TestOrdering(unittest.TestCase):
    """Graded-lexicographic order with trig terms last"""

    def test_graded_lex(self):
        lib = build_polynomial_library(2, 2, include_constant=True)
        self.assertEqual([tuple(row) for row in lib.exponents], [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)])
        self.assertEqual(lib.index_of((1, 1)), 4)
        with self.assertRaises(KeyError):
            lib.index_of((3, 0))

    def test_trig_layout(self):
        lib = build_library(1, 0, trig_sin=True, trig_cos=True)
        self.assertEqual(lib.n_monomials, 0)
        self.assertEqual(lib.n_params, 4)
        self.assertEqual(lib.frequency_slots(), [1, 3])
        self.assertEqual(lib.param_offsets(), [0, 2])

    def test_spec_round_trip(self):
        lib = build_library(3, 2, include_constant=True, trig_sin=True, variable_names=("a", "b", "c"), components=(0, 2, 4))
        self.assertEqual(BasisLibrary.from_spec(lib.to_spec()), lib)


class TestEvaluation(unittest.TestCase):
    """Values and state gradients"""

    def test_values(self):
        lib = build_polynomial_library(2, 2, include_constant=True)
        coeffs = np.array([1.0, 2.0, 0.0, 0.5, -1.0, 0.0])
        x = np.array([[1.0, 2.0], [0.0, 0.0]])
        np.testing.assert_allclose(eval_library(lib, coeffs, x), [1.0 + 2.0 + 0.5 - 2.0, 1.0])

    def test_trig_value(self):
        lib = build_library(2, 0, trig_sin=True)
        out = eval_library(lib, np.array([2.0, 0.5]), np.zeros((3, 2)), t=np.array([0.0, np.pi, 2 * np.pi]))
        np.testing.assert_allclose(out, [0.0, 2.0, 0.0], atol=1e-15)

    def test_components(self):
        """A component library reads only its selected state entries"""
        lib = build_polynomial_library(1, 1, components=(2,))
        out = eval_library(lib, np.array([3.0]), np.array([[5.0, 7.0, 2.0]]))
        np.testing.assert_allclose(out, [6.0])

    def test_gradient_matches_differences(self):
        rng = np.random.default_rng(0)
        lib = build_polynomial_library(3, 3)
        coeffs = rng.normal(size=lib.n_params)
        x = rng.uniform(-1.0, 1.0, (5, 3))
        g = eval_library_gradient(lib, coeffs, x)
        h = 1e-6
        for k in range(3):
            step = np.zeros(3)
            step[k] = h
            fd = (eval_library(lib, coeffs, x + step) - eval_library(lib, coeffs, x - step)) / (2 * h)
            np.testing.assert_allclose(g[:, k], fd, atol=1e-7)

    def test_coefficient_gradient(self):
        """Reverse mode through a mixed polynomial and trig library"""
        lib = build_library(2, 2, include_constant=True, trig_sin=True)
        x = np.random.default_rng(1).uniform(-1.0, 1.0, (8, 2))
        t = np.linspace(0.0, 3.0, 8)

        def loss(p):
            return (eval_library(lib, p, x, t) ** 2).sum()

        params = np.linspace(-0.5, 0.8, lib.n_params)
        self.assertLess(finite_diff_check(loss, params), 1e-5)

    def test_wrong_coefficient_count(self):
        lib = build_polynomial_library(2, 1)
        with self.assertRaises(DimensionError):
            eval_library(lib, np.ones(3), np.zeros(2))


class TestRendering(unittest.TestCase):
    """Term strings"""

    def test_monomial_strings(self):
        lib = build_polynomial_library(2, 3, variable_names=("q", "p"))
        term = lib.terms[lib.index_of((2, 1))]
        self.assertEqual(term_label(term, lib.variable_names), "q^2·p")
        self.assertEqual(term_to_string(term, 0.5, lib.variable_names), "0.5·q^2·p")

    def test_constant_and_trig(self):
        lib = build_library(1, 0, include_constant=True, trig_sin=True)
        self.assertEqual(term_label(lib.terms[0]), "1")
        self.assertEqual(term_to_string(lib.terms[1], (2.0, 0.5)), "2·sin(0.5·t)")


if __name__ == '__main__':
    unittest.main()
