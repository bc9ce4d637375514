"""
Training - Test Suite
Scheme loss, penalties, Adam, pruning and the training loop
"""

import json
import os
import sys
import tempfile
import unittest

import numpy as np
from pydantic import ValidationError

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from phsysid.autodiff import finite_diff_check
from phsysid.basis import build_library
from phsysid.core.errors import SchemeUnavailableError
from phsysid.dynamics import generate_dataset, make_benchmark
from phsysid.models import build_baseline_model, build_phsi_model
from phsysid.training import (
    AdamState,
    Hyperparams,
    TrainHistory,
    adam_step,
    epoch_permutation,
    loss,
    loss_terms,
    penalty,
    prune,
    train,
)


def oscillator_model(params=None):
    model = build_phsi_model(make_benchmark("oscillator"), 2, damping=False)
    if params is not None:
        model.params = np.asarray(params, dtype=float)
    return model


class TestObjective(unittest.TestCase):
    """Scheme residual and L1 penalties"""

    def test_zero_model_loss(self):
        """With g = 0 the residual is the finite difference itself"""
        model = oscillator_model(np.zeros(5))
        batch = (np.array([[0.0, 0.0]]), np.array([[0.1, 0.2]]), np.array([0.0]))
        for integrator in ("euler", "midpoint", "rk4", "srk4", "prk4"):
            with self.subTest(integrator=integrator):
                self.assertAlmostEqual(float(loss(model, batch, 0.1, integrator)), 5.0, places=12)

    def test_batch_mean(self):
        model = oscillator_model(np.zeros(5))
        batch = (np.zeros((2, 2)), np.array([[0.1, 0.0], [0.0, 0.3]]), np.zeros(2))
        self.assertAlmostEqual(float(loss(model, batch, 0.1, "euler")), (1.0 + 9.0) / 2, places=12)

    def test_penalty(self):
        """lam_h weighs the absolute H coefficients"""
        params = np.zeros(5)
        params[2], params[4] = 0.5, -0.5
        model = oscillator_model(params)
        batch = (np.zeros((1, 2)), np.zeros((1, 2)), np.zeros(1))
        self.assertAlmostEqual(float(penalty(model, batch, 0.1, 0.0, 0.0)), 0.1)
        total, data, extra = loss_terms(model, batch, 0.1, "euler", lam_h=0.1, reg_active=False)
        self.assertEqual(extra, 0.0)
        self.assertAlmostEqual(float(total), float(data))

    def test_force_and_damping_penalties(self):
        system = make_benchmark("mass_spring")
        model = build_phsi_model(system, 2, force_kind="symbolic")
        batch = (np.zeros((1, 2)), np.zeros((1, 2)), np.zeros(1))
        # Frequencies are not penalized: only the force amplitude counts
        self.assertAlmostEqual(float(penalty(model, batch, 0.0, 1.0, 0.0)), 1.0)
        self.assertAlmostEqual(float(penalty(model, batch, 0.0, 0.0, 1.0)), 0.2)
        self.assertAlmostEqual(float(penalty(model, batch, 1.0, 0.0, 0.0)), 5 * 0.2)

    def test_true_model_small_residual(self):
        """The exact Hamiltonian leaves an O(dt^4) srk4 residual on exact data"""
        system = make_benchmark("oscillator")
        params = np.zeros(5)
        params[2], params[4] = 0.5, 0.5
        model = oscillator_model(params)
        data = generate_dataset(system, 4, 1.0, 0.1, seed=0, substeps=100)
        self.assertLess(float(loss(model, data.pairs(), 0.1, "srk4")), 1e-8)
        self.assertGreater(float(loss(model, data.pairs(), 0.1, "euler")), 1e-4)

    def test_loss_gradient(self):
        system = make_benchmark("mass_spring")
        model = build_phsi_model(system, 2, force_kind="symbolic")
        data = generate_dataset(system, 2, 0.5, 0.1, sigma=0.01, seed=1, substeps=10)
        batch = data.pairs()
        for integrator in ("midpoint", "srk4", "prk4"):
            def builder(theta):
                return loss(model, batch, 0.1, integrator, lam_h=0.01, lam_f=0.01, lam_r=0.01, theta=theta)

            with self.subTest(integrator=integrator):
                self.assertLess(finite_diff_check(builder, model.params), 1e-5)

    def random_points(self, n_params, count=20, seed=0):
        """Parameter vectors with magnitudes in [0.1, 0.5], away from the kink of |.|"""
        rng = np.random.default_rng(seed)
        return rng.uniform(0.1, 0.5, (count, n_params)) * rng.choice([-1.0, 1.0], (count, n_params))

    def test_loss_gradient_trig_force(self):
        """srk4 loss with a constant, sine and cosine drive on p"""
        system = make_benchmark("mass_spring")
        library = build_library(2, 0, include_constant=True, trig_sin=True, trig_cos=True, variable_names=("q", "p"))
        model = build_phsi_model(system, 3, force_kind="symbolic", force_library=library)
        batch = generate_dataset(system, 2, 0.5, 0.1, sigma=0.01, seed=2, substeps=10).pairs()

        def builder(theta):
            return loss(model, batch, 0.1, "srk4", lam_h=0.1, lam_f=0.01, lam_r=0.01, theta=theta)

        for i, point in enumerate(self.random_points(model.n_params)):
            with self.subTest(point=i):
                self.assertLess(finite_diff_check(builder, point), 1e-5)

    def test_loss_gradient_network_force(self):
        """srk4 loss of a hybrid tank model, gradient flowing through the force network"""
        system = make_benchmark("tanks")
        model = build_phsi_model(system, 2, force_kind="mlp", mlp_hidden=(6,))
        batch = generate_dataset(system, 2, 0.05, 0.01, sigma=0.005, seed=3, substeps=2).pairs()

        def builder(theta):
            return loss(model, batch, 0.01, "srk4", lam_h=0.5, lam_f=0.001, lam_r=0.01, theta=theta)

        for i, point in enumerate(self.random_points(model.n_params, seed=1)):
            with self.subTest(point=i):
                self.assertLess(finite_diff_check(builder, point), 1e-5)


class TestAdam(unittest.TestCase):
    """Bias-corrected first step and masking"""

    def test_first_step_is_signed_learning_rate(self):
        params, state = adam_step(AdamState.zeros(2), np.array([1.0, -1.0]), np.array([2.0, -3.0]), 0.1)
        np.testing.assert_allclose(params, [0.9, -0.9], rtol=1e-6)
        self.assertEqual(state.step, 1)

    def test_decoupled_weight_decay(self):
        params, _ = adam_step(AdamState.zeros(2), np.array([1.0, -1.0]), np.array([2.0, -3.0]), 0.1, weight_decay=0.1)
        np.testing.assert_allclose(params, [0.89, -0.89], rtol=1e-6)

    def test_inactive_slots_frozen(self):
        state = AdamState.zeros(2)
        params, state = adam_step(state, np.array([1.0, 0.0]), np.array([1.0, 5.0]), 0.1, active=np.array([True, False]))
        self.assertEqual(params[1], 0.0)
        self.assertEqual(state.m[1], 0.0)


class TestPruning(unittest.TestCase):
    """Magnitude pruning over a history window"""

    def test_window(self):
        history = [np.array([0.01, 0.01, 0.5]), np.array([0.02, 0.2, 0.5]), np.array([0.03, 0.04, 0.5])]
        params, active, newly = prune(history[-1], np.ones(3, dtype=bool), history, 0.05, window=3)
        self.assertEqual(newly, [0])
        np.testing.assert_array_equal(active, [False, True, True])
        np.testing.assert_array_equal(params, [0.0, 0.04, 0.5])
        _, _, newly = prune(history[-1], np.ones(3, dtype=bool), history, 0.05, window=1)
        self.assertEqual(newly, [0, 1])

    def test_threshold_is_strict(self):
        history = [np.array([0.05])]
        _, _, newly = prune(history[-1], np.ones(1, dtype=bool), history, 0.05)
        self.assertEqual(newly, [])

    def test_short_history(self):
        history = [np.array([0.0])]
        _, _, newly = prune(history[-1], np.ones(1, dtype=bool), history, 0.05, window=2)
        self.assertEqual(newly, [])

    def test_prunable_and_partners(self):
        """An amplitude takes its frequency with it; ineligible slots survive"""
        current = np.array([0.01, 3.0, 0.01])
        _, active, newly = prune(
            current, np.ones(3, dtype=bool), [current], 0.05,
            prunable=np.array([True, False, False]), partners={0: 1},
        )
        self.assertEqual(newly, [0, 1])
        np.testing.assert_array_equal(active, [False, False, True])


class TestHyperparams(unittest.TestCase):

    def test_defaults(self):
        hyper = Hyperparams()
        self.assertEqual(hyper.batch_size, 32)
        self.assertEqual(hyper.integrator, "srk4")

    def test_rejects_bad_values(self):
        with self.assertRaises(ValidationError):
            Hyperparams(epochs=5, prune_interval=10)
        with self.assertRaises(ValidationError) as ctx:
            Hyperparams(integrator="leapfrog")
        self.assertIn("leapfrog", str(ctx.exception))
        with self.assertRaises(ValidationError):
            Hyperparams(learning_rate=0.0)


class TestTrainingLoop(unittest.TestCase):
    """End-to-end runs on the oscillator"""

    @classmethod
    def setUpClass(cls):
        cls.system = make_benchmark("oscillator")
        cls.data = generate_dataset(cls.system, 4, 2.0, 0.1, seed=0, substeps=10)

    def hyper(self, **overrides):
        settings = dict(epochs=6, learning_rate=5e-3, lam_h=0.01, prune_interval=2, prune_threshold=0.05, seed=3)
        settings.update(overrides)
        return Hyperparams(**settings)

    def test_epoch_permutation(self):
        a = epoch_permutation(7, 1, 50)
        np.testing.assert_array_equal(a, epoch_permutation(7, 1, 50))
        self.assertFalse(np.array_equal(a, epoch_permutation(7, 2, 50)))
        self.assertEqual(sorted(a.tolist()), list(range(50)))

    def test_deterministic(self):
        model = build_phsi_model(self.system, 2, damping=False)
        first, h1 = train(model, self.data, self.hyper())
        second, h2 = train(model, self.data, self.hyper())
        np.testing.assert_array_equal(first.params, second.params)
        self.assertEqual(h1.losses, h2.losses)

    def test_input_model_unchanged(self):
        model = build_phsi_model(self.system, 2, damping=False)
        before = model.params.copy()
        train(model, self.data, self.hyper())
        np.testing.assert_array_equal(model.params, before)

    def test_loss_decreases(self):
        model = build_phsi_model(self.system, 2, damping=False)
        _, history = train(model, self.data, self.hyper(epochs=20, learning_rate=1e-2, prune_interval=0))
        self.assertLess(history.data_losses[-1], history.data_losses[0])

    def test_pruning_is_monotone(self):
        model = build_phsi_model(self.system, 2, damping=False)
        trained, history = train(model, self.data, self.hyper(epochs=20, learning_rate=2e-2, prune_interval=5))
        self.assertTrue(all(a >= b for a, b in zip(history.active_terms, history.active_terms[1:])))
        self.assertTrue(all(epoch % 5 == 0 for epoch, _ in history.pruning_events))
        self.assertTrue(np.all(trained.params[~trained.active] == 0.0))
        self.assertEqual(history.final_active, trained.active.tolist())

    def test_regularization_dropped_after_half(self):
        model = build_phsi_model(self.system, 2, damping=False)
        _, history = train(model, self.data, self.hyper(epochs=4, prune_interval=0, lam_h=0.1))
        self.assertTrue(all(p > 0 for p in history.penalties[:2]))
        self.assertEqual(history.penalties[2:], [0.0, 0.0])

    def test_baseline_training(self):
        model = build_baseline_model(self.system, 1, include_constant=True)
        trained, history = train(model, self.data, self.hyper(integrator="rk4"))
        self.assertEqual(len(history.losses), 6)
        self.assertEqual(trained.n_params, model.n_params)

    def test_unavailable_schemes(self):
        model = build_phsi_model(self.system, 2, damping=False)
        with self.assertRaises(SchemeUnavailableError):
            train(model, self.data, self.hyper(integrator="srk6"))
        tanks = make_benchmark("tanks")
        tank_data = generate_dataset(tanks, 1, 0.02, 0.01, seed=0, substeps=2)
        with self.assertRaises(SchemeUnavailableError):
            train(build_phsi_model(tanks, 2), tank_data, self.hyper(integrator="prk4"))

    def test_history_round_trip(self):
        model = build_phsi_model(self.system, 2, damping=False)
        _, history = train(model, self.data, self.hyper())
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "history.json")
            history.save(path)
            with open(path) as f:
                loaded = TrainHistory.from_dict(json.load(f))
        self.assertEqual(loaded, history)


if __name__ == '__main__':
    unittest.main()
