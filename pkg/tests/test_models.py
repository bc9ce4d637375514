"""
Models - Test Suite
Pseudo-Hamiltonian models, the force network, baselines and persistence
"""

import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from phsysid.autodiff import finite_diff_check, ops
from phsysid.basis import build_polynomial_library
from phsysid.core.errors import ConfigError, DimensionError
from phsysid.dynamics import generate_dataset, make_benchmark
from phsysid.models import (
    PseudoHamiltonianModel,
    baseline_equations,
    baseline_rhs,
    baseline_truth,
    build_baseline_model,
    build_mlp_force,
    build_phsi_model,
    extract_equations,
    load_model,
    mlp_forward,
    model_from_dict,
    phsi_rhs,
    remove_external_force,
    save_model,
    sindy_fit,
)


def oscillator_truth_model():
    system = make_benchmark("oscillator")
    model = build_phsi_model(system, 2, damping=False)
    params = np.zeros(model.n_params)
    params[model.h_library.index_of((2, 0))] = 0.5
    params[model.h_library.index_of((0, 2))] = 0.5
    model.params = params
    return system, model


def mass_spring_truth_model():
    system = make_benchmark("mass_spring")
    model = build_phsi_model(system, 2, force_kind="symbolic")
    params = np.zeros(model.n_params)
    params[model.h_library.index_of((2, 0))] = 0.5
    params[model.h_library.index_of((0, 2))] = 0.5
    params[model.damping_slice] = 0.3
    block = model.force_block(0)
    params[block] = [2.0, 0.5]
    model.params = params
    return system, model


class TestPseudoHamiltonianModel(unittest.TestCase):
    """Right-hand side and its structure"""

    def test_layout(self):
        system = make_benchmark("mass_spring")
        model = build_phsi_model(system, 2, force_kind="symbolic")
        self.assertEqual(model.h_library.n_params, 5)
        self.assertEqual(model.damping_support, (1,))
        self.assertEqual(model.force_components, (1,))
        self.assertEqual(model.n_params, 5 + 1 + 2)
        self.assertEqual(model.frequency_partners(), {6: 7})
        np.testing.assert_array_equal(model.prunable_slots(), [0, 1, 2, 3, 4, 6])
        np.testing.assert_array_equal(model.prunable_slots(prune_damping=True), [0, 1, 2, 3, 4, 5, 6])

    def test_initial_values(self):
        _, model = mass_spring_truth_model()
        fresh = build_phsi_model(make_benchmark("mass_spring"), 2, force_kind="symbolic")
        np.testing.assert_allclose(fresh.params, [0.2] * 5 + [0.2] + [1.0, 1.0])
        self.assertEqual(model.n_params, fresh.n_params)

    def test_true_parameters_reproduce_oscillator(self):
        system, model = oscillator_truth_model()
        x = np.random.default_rng(0).uniform(-2.0, 2.0, (30, 2))
        np.testing.assert_allclose(phsi_rhs(model, x), system.rhs(x), atol=1e-14)

    def test_true_parameters_reproduce_mass_spring(self):
        system, model = mass_spring_truth_model()
        rng = np.random.default_rng(1)
        x = rng.uniform(-2.0, 2.0, (30, 2))
        t = rng.uniform(0.0, 10.0, 30)
        np.testing.assert_allclose(model.rhs(x, t), system.rhs(x, t), atol=1e-13)

    def test_conservative_model_preserves_energy(self):
        """grad H . rhs = 0 at 1000 random states for random coefficients"""
        system = make_benchmark("henon_heiles")
        model = build_phsi_model(system, 3, damping=False)
        rng = np.random.default_rng(2)
        model.params = rng.normal(size=model.n_params)
        x = rng.uniform(-1.0, 1.0, (1000, 4))
        grad = model.grad_hamiltonian(x)
        power = np.sum(grad * model.rhs(x), axis=-1)
        self.assertLess(np.max(np.abs(power) / (1.0 + np.sum(grad ** 2, axis=-1))), 1e-12)

    def test_damping_dissipates(self):
        """With nonnegative damping and no force, H never increases"""
        system = make_benchmark("mass_spring")
        model = build_phsi_model(system, 2)
        rng = np.random.default_rng(3)
        model.params = np.abs(rng.normal(size=model.n_params))
        x = rng.uniform(-1.0, 1.0, (200, 2))
        power = np.sum(model.grad_hamiltonian(x) * model.rhs(x), axis=-1)
        self.assertTrue(np.all(power <= 1e-12))

    def test_pruned_slots_are_zero(self):
        system = make_benchmark("oscillator")
        model = build_phsi_model(system, 2, damping=False)
        active = np.ones(model.n_params, dtype=bool)
        active[0] = False
        pruned = PseudoHamiltonianModel(
            structure=model.structure, h_library=model.h_library, params=np.ones(model.n_params), active=active
        )
        self.assertEqual(pruned.params[0], 0.0)

    def test_state_dimension_checked(self):
        _, model = oscillator_truth_model()
        with self.assertRaises(DimensionError):
            model.rhs(np.zeros((3, 4)))

    def test_rejects_non_antisymmetric_structure(self):
        with self.assertRaises(ConfigError):
            PseudoHamiltonianModel(structure=np.eye(2), h_library=build_polynomial_library(2, 2))

    def test_parameter_gradient(self):
        """Reverse mode through the full model agrees with central differences"""
        _, model = mass_spring_truth_model()
        rng = np.random.default_rng(4)
        x = rng.uniform(-1.0, 1.0, (12, 2))
        t = rng.uniform(0.0, 5.0, 12)
        target = rng.normal(size=(12, 2))

        def loss(p):
            return ops.mean((model.rhs(x, t, theta=p) - target) ** 2)

        self.assertLess(finite_diff_check(loss, model.params + 0.1), 1e-5)


class TestForces(unittest.TestCase):
    """Network force and force removal"""

    def test_mlp_size_and_shape(self):
        net = build_mlp_force(9, (8,), hidden=(5, 5))
        self.assertEqual(net.n_params, 10 * 5 + 6 * 5 + 6 * 1)
        params = net.init_params(np.random.default_rng(0))
        self.assertTrue(np.all(np.abs(params[:45]) <= 1.0 / 3.0))
        out = mlp_forward(net, np.zeros((7, 9)), params)
        self.assertEqual(out.shape, (7, 1))
        with self.assertRaises(DimensionError):
            mlp_forward(net, np.zeros((7, 8)), params)

    def test_mlp_force_drives_only_its_component(self):
        system = make_benchmark("tanks")
        model = build_phsi_model(system, 2, force_kind="mlp", mlp_hidden=(4,), seed=3)
        self.assertEqual(model.force_components, (8,))
        x = np.random.default_rng(5).uniform(-1.0, 1.0, (6, 9))
        force = model.force(x)
        np.testing.assert_array_equal(force[:, :8], np.zeros((6, 8)))
        self.assertTrue(np.any(force[:, 8] != 0.0))

    def test_mlp_init_depends_on_seed(self):
        system = make_benchmark("tanks")
        a = build_phsi_model(system, 2, force_kind="mlp", mlp_hidden=(4,), seed=1)
        b = build_phsi_model(system, 2, force_kind="mlp", mlp_hidden=(4,), seed=1)
        c = build_phsi_model(system, 2, force_kind="mlp", mlp_hidden=(4,), seed=2)
        np.testing.assert_array_equal(a.params, b.params)
        self.assertFalse(np.array_equal(a.params, c.params))

    def test_remove_external_force(self):
        system, model = mass_spring_truth_model()
        internal = remove_external_force(model)
        self.assertEqual(internal.force_kind, "none")
        self.assertEqual(internal.n_params, model.force_slice.start)
        x = np.random.default_rng(6).uniform(-1.0, 1.0, (10, 2))
        np.testing.assert_allclose(internal.rhs(x, 1.0), model.rhs(x, 1.0) - model.force(x, 1.0), atol=1e-14)


class TestEquations(unittest.TestCase):
    """Rendering of learned terms"""

    def test_oscillator_equations(self):
        _, model = oscillator_truth_model()
        report = extract_equations(model)
        self.assertEqual([e.label for e in report.part("H")], ["q^2", "p^2"])
        self.assertEqual(str(report), "H = 0.5·q^2 + 0.5·p^2")

    def test_mass_spring_equations(self):
        _, model = mass_spring_truth_model()
        report = extract_equations(model)
        self.assertEqual(len(report.part("R")), 1)
        force = report.part("F")
        self.assertEqual(len(force), 1)
        self.assertEqual(force[0].component, "p")
        self.assertEqual(force[0].value, (2.0, 0.5))
        self.assertIn("F[p] = 2·sin(0.5·t)", str(report))

    def test_mlp_entry(self):
        model = build_phsi_model(make_benchmark("tanks"), 2, force_kind="mlp", mlp_hidden=(4,))
        force = extract_equations(model).part("F")
        self.assertEqual([(e.component, e.label) for e in force], [("mu4", "mlp")])


class TestBaselines(unittest.TestCase):
    """Direct regression of g"""

    def test_sindy_recovers_linear_oscillator(self):
        system = make_benchmark("oscillator")
        data = generate_dataset(system, 10, 1.0, 0.01, seed=0, substeps=10)
        lib = build_polynomial_library(2, 2, variable_names=("q", "p"))
        model = sindy_fit(data, lib, threshold=0.05)
        C = model.coefficient_matrix
        self.assertAlmostEqual(C[0, lib.index_of((0, 1))], 1.0, delta=1e-2)
        self.assertAlmostEqual(C[1, lib.index_of((1, 0))], -1.0, delta=1e-2)
        self.assertEqual(int(np.count_nonzero(C)), 2)
        self.assertEqual(int(np.count_nonzero(model.active)), 2)
        self.assertEqual(len(baseline_equations(model).entries), 2)

    def test_sindy_rejects_trig_library(self):
        system = make_benchmark("oscillator")
        data = generate_dataset(system, 2, 0.5, 0.1, seed=0, substeps=10)
        model = build_baseline_model(system, 1, trig_sin=True)
        with self.assertRaises(ConfigError):
            sindy_fit(data, model.library)

    def test_time_augmented_truth(self):
        """Truth parameters in the (q, p, t) library reproduce the forced system"""
        system = make_benchmark("mass_spring")
        model = build_baseline_model(system, 1, include_constant=True, trig_sin=True, time_augmented=True)
        truth = baseline_truth(model, system)
        self.assertIsNotNone(truth)
        model.params = truth
        rng = np.random.default_rng(7)
        x = rng.uniform(-1.0, 1.0, (15, 2))
        t = rng.uniform(0.0, 10.0, 15)
        np.testing.assert_allclose(model.state_rhs(x, t), system.rhs(x, t), atol=1e-13)
        augmented = model.rhs(model.to_model_state(x, t))
        np.testing.assert_array_equal(augmented[:, -1], np.ones(15))

    def test_baseline_rhs_at_truth(self):
        system = make_benchmark("oscillator")
        model = build_baseline_model(system, 1, include_constant=True)
        model.params = baseline_truth(model, system)
        x = np.random.default_rng(3).uniform(-1.0, 1.0, (6, 2))
        np.testing.assert_allclose(baseline_rhs(model, x), system.rhs(x, 0.0), atol=1e-14)

    def test_truth_unavailable_for_unknown_force(self):
        system = make_benchmark("tanks")
        model = build_baseline_model(system, 1)
        self.assertIsNone(baseline_truth(model, system))


class TestPersistence(unittest.TestCase):
    """JSON model documents"""

    def test_round_trip(self):
        models = [
            mass_spring_truth_model()[1],
            build_phsi_model(make_benchmark("tanks"), 2, force_kind="mlp", mlp_hidden=(3,)),
            build_baseline_model(make_benchmark("mass_spring"), 1, trig_sin=True, time_augmented=True),
        ]
        x = np.random.default_rng(8).uniform(-1.0, 1.0, (4, 1))
        with tempfile.TemporaryDirectory() as tmp:
            for i, model in enumerate(models):
                path = os.path.join(tmp, f"model{i}.json")
                save_model(model, path)
                loaded = load_model(path)
                with self.subTest(model=i):
                    self.assertIs(type(loaded), type(model))
                    np.testing.assert_array_equal(loaded.params, model.params)
                    np.testing.assert_array_equal(loaded.active, model.active)
                    states = np.repeat(x, model.dimension, axis=1)
                    np.testing.assert_array_equal(loaded.state_rhs(states, 0.5), model.state_rhs(states, 0.5))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_model("/nonexistent/model.json")

    def test_unknown_kind(self):
        with self.assertRaises(ConfigError):
            model_from_dict({"kind": "transformer"})


if __name__ == '__main__':
    unittest.main()
