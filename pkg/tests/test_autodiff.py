"""
Autodiff - Test Suite
Reverse-mode gradients checked against closed forms and central differences
"""

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from phsysid.autodiff import Tape, evaluate, finite_diff_check, grad, ops
from phsysid.core.errors import AutodiffError


class TestGradients(unittest.TestCase):
    """Closed-form gradient examples"""

    def test_square(self):
        """d/dtheta sum(theta^2) = 2 theta"""
        theta = np.array([0.5, -1.5, 2.0])
        value, g = grad(lambda p: (p ** 2).sum(), theta)
        self.assertAlmostEqual(value, 0.25 + 2.25 + 4.0)
        np.testing.assert_allclose(g, 2 * theta)

    def test_sin(self):
        theta = np.array([0.1, 1.0])
        _, g = grad(lambda p: ops.sum_(ops.sin(p)), theta)
        np.testing.assert_allclose(g, np.cos(theta))

    def test_least_squares(self):
        """Gradient of ||X theta - y||^2 is 2 X^T (X theta - y)"""
        rng = np.random.default_rng(0)
        X, y = rng.normal(size=(7, 3)), rng.normal(size=7)
        theta = rng.normal(size=3)
        _, g = grad(lambda p: ((ops.matmul(X, p) - y) ** 2).sum(), theta)
        np.testing.assert_allclose(g, 2 * X.T @ (X @ theta - y), rtol=1e-12)

    def test_getitem_accumulates(self):
        """Reusing a slot sums its contributions"""
        _, g = grad(lambda p: p[0] * p[0] + 3.0 * p[1] + p[0], np.array([2.0, 5.0]))
        np.testing.assert_allclose(g, [5.0, 3.0])

    def test_fancy_index_repeats_accumulate(self):
        """Repeated entries of an integer-array index each contribute"""
        params = np.arange(6.0)
        _, g = grad(lambda p: (p.reshape(2, 3)[[0, 0, 1], [2, 2, 0]] * np.array([1.0, 2.0, 3.0])).sum(), params)
        np.testing.assert_allclose(g, [0.0, 0.0, 3.0, 3.0, 0.0, 0.0])

    def test_index_with_new_axis_and_repeats(self):
        _, g = grad(lambda p: p[None, [1, 1, 2]].sum(), np.array([4.0, 5.0, 6.0]))
        np.testing.assert_allclose(g, [0.0, 2.0, 1.0])

    def test_minimum_tie_picks_first(self):
        _, g = grad(lambda p: ops.minimum(p[0], p[1]), np.array([1.0, 1.0]))
        np.testing.assert_allclose(g, [1.0, 0.0])

    def test_abs_at_zero(self):
        _, g = grad(lambda p: ops.abs_(p).sum(), np.array([0.0, -2.0, 3.0]))
        np.testing.assert_allclose(g, [0.0, -1.0, 1.0])

    def test_unused_parameters(self):
        """A loss that ignores the parameters has zero gradient"""
        value, g = grad(lambda p: 3.0, np.array([1.0, 2.0]))
        self.assertEqual(value, 3.0)
        np.testing.assert_array_equal(g, [0.0, 0.0])

    def test_evaluate_matches_grad_value(self):
        def loss(p):
            return ops.mean(ops.relu(p) * 2.0 - p)

        theta = np.array([-1.0, 0.5, 2.0])
        self.assertAlmostEqual(evaluate(loss, theta), grad(loss, theta)[0])


class TestFiniteDifferences(unittest.TestCase):
    """Reverse mode agrees with central differences"""

    def test_monomial_basis(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-1.0, 1.0, (20, 3))
        exponents = np.array([[1, 0, 0], [0, 2, 1], [3, 0, 1], [1, 1, 1]])

        def loss(p):
            state = p.tape.state(x) * p[0]
            return ops.mean(ops.matmul(ops.monomials(state, exponents), p[1:]) ** 2)

        self.assertLess(finite_diff_check(loss, np.array([0.9, 0.3, -0.5, 1.2, 0.7])), 1e-5)

    def test_stacked_network(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(10, 2))

        def loss(p):
            W = ops.reshape(p[:6], (2, 3))
            hidden = ops.relu(ops.matmul(x, W) + p[6:9])
            out = ops.stack([ops.sum_(hidden, axis=1), ops.sum_(ops.cos(hidden), axis=1)], axis=-1)
            return ops.mean(out ** 2)

        self.assertLess(finite_diff_check(loss, rng.normal(size=9)), 1e-5)


class TestTapeErrors(unittest.TestCase):
    """Tape misuse is reported as AutodiffError"""

    def test_nan_reports_node(self):
        tape = Tape()
        theta = tape.parameter([-1.0])
        with np.errstate(invalid="ignore"):
            with self.assertRaises(AutodiffError) as ctx:
                theta ** 0.5
        self.assertEqual(ctx.exception.node, 1)

    def test_backward_needs_scalar(self):
        tape = Tape()
        theta = tape.parameter([1.0, 2.0])
        with self.assertRaises(AutodiffError):
            tape.backward(theta * 2.0)

    def test_mixed_tapes(self):
        a = Tape().parameter([1.0])
        b = Tape().parameter([2.0])
        with self.assertRaises(AutodiffError):
            a + b

    def test_division_by_variable(self):
        theta = Tape().parameter([1.0])
        with self.assertRaises(AutodiffError):
            theta / theta


if __name__ == '__main__':
    unittest.main()
