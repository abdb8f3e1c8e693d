"""Unit tests for dense states, branch ensembles and reduced densities."""

import unittest
import warnings

import numpy as np

import PyMBQC as mb
from PyMBQC.StateVector import (DENSE_QUBIT_CAP, _pauli_table, check_density,
                                measure_branches, pauli_expectations,
                                reduced_density, reduced_two_qubit_density,
                                uz, x_eta)


class TestStateVector(unittest.TestCase):
    """Gates, Pauli action and expectation values."""

    def test_qubit_zero_is_most_significant(self):
        psi = mb.StateVector.zeros(3).apply_gate("X", 0)
        self.assertAlmostEqual(abs(psi.amplitudes[4]), 1.0)

    def test_pauli_action_matches_matrix(self):
        rng = np.random.default_rng(2)
        amplitudes = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi = mb.StateVector(amplitudes / np.linalg.norm(amplitudes))
        for label in ("XYZ", "-iYIX", "ZZY", "+iIYI"):
            p = mb.PauliString.from_label(label)
            np.testing.assert_allclose(psi.apply_pauli(p).amplitudes,
                                       p.to_matrix() @ psi.amplitudes, atol=1e-12)

    def test_rotation_conventions(self):
        theta = 0.37
        np.testing.assert_allclose(uz(theta) @ np.array([[0, 1], [1, 0]]) @ uz(-theta),
                                   x_eta(theta), atol=1e-12)
        psi = mb.StateVector.plus_state(1).apply_gate("UZ", 0, angle=theta)
        self.assertAlmostEqual(psi.expectation_pauli(mb.PauliString.from_label("X")).real, np.cos(theta))
        self.assertAlmostEqual(psi.expectation_pauli(mb.PauliString.from_label("Y")).real, np.sin(theta))

    def test_non_unitary_matrix_rejected(self):
        with self.assertRaises(ValueError):
            mb.StateVector.zeros(1).apply_gate(np.array([[1, 0], [0, 2]]), 0)

    def test_bad_length(self):
        with self.assertRaises(mb.DimensionError):
            mb.StateVector(np.ones(3))

    def test_size_cap(self):
        with self.assertRaises(mb.DenseSizeError):
            mb.StateVector.zeros(DENSE_QUBIT_CAP + 1)

    def test_large_state_warns(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            mb.StateVector.zeros(17)
        self.assertTrue(any(issubclass(w.category, UserWarning) for w in caught))


class TestMeasurement(unittest.TestCase):
    """Projective single-qubit branches."""

    def test_born_probabilities(self):
        psi = mb.StateVector.zeros(1).apply_gate("UX", 0, angle=0.8)
        plus, minus = measure_branches(psi, "Z", 0)
        self.assertAlmostEqual(plus.probability, np.cos(0.4) ** 2)
        self.assertAlmostEqual(minus.probability, np.sin(0.4) ** 2)
        self.assertAlmostEqual(plus.state.norm(), 1.0)

    def test_zero_probability_branch(self):
        plus, minus = measure_branches(mb.StateVector.zeros(2), "Z", 1)
        self.assertAlmostEqual(plus.probability, 1.0)
        self.assertIsNone(minus.state)

    def test_xeta_needs_angle(self):
        with self.assertRaises(ValueError):
            measure_branches(mb.StateVector.zeros(1), "XEta", 0)


class TestEnsembles(unittest.TestCase):
    """Mixed states, expectation values and partial traces."""

    def test_weights_must_sum_to_one(self):
        psi = mb.StateVector.zeros(1)
        with self.assertRaises(mb.NumericalConsistencyError):
            mb.BranchEnsemble([(0.5, psi)])

    def test_maximally_mixed(self):
        rho = mb.BranchEnsemble.maximally_mixed(2)
        self.assertAlmostEqual(mb.expectation(rho, mb.PauliString.from_label("ZI")), 0.0)
        np.testing.assert_allclose(reduced_density(rho, [1]), np.eye(2) / 2, atol=1e-12)

    def test_batched_pauli_expectations(self):
        rng = np.random.default_rng(5)
        states = []
        for _ in range(3):
            amplitudes = rng.normal(size=16) + 1j * rng.normal(size=16)
            states.append(mb.StateVector(amplitudes / np.linalg.norm(amplitudes)))
        ensemble = mb.BranchEnsemble([(0.5, states[0]), (0.3, states[1]), (0.2, states[2])])
        paulis = [mb.PauliString.from_label(label) for label in ("XYZI", "-ZZII", "IYYX", "IIII", "YXXY")]
        values = pauli_expectations(ensemble, paulis)
        for p, value in zip(paulis, values):
            expected = sum(w * psi.expectation_pauli(p) for w, psi in ensemble)
            self.assertAlmostEqual(value, expected, places=12)
        with self.assertRaises(mb.DimensionError):
            pauli_expectations(ensemble, [mb.PauliString.from_label("XY")])

    def test_pauli_tables_are_cached(self):
        p = mb.PauliString.from_label("XZY")
        first = _pauli_table(p.n, p.x, p.z, int(p.phase))
        self.assertIs(_pauli_table(p.n, p.x, p.z, int(p.phase)), first)
        source, factor = first
        self.assertFalse(source.flags.writeable)
        self.assertFalse(factor.flags.writeable)
        psi = mb.StateVector.plus_state(3)
        psi.apply_pauli(p).amplitudes[0] = 0
        np.testing.assert_allclose(psi.apply_pauli(p).amplitudes, p.to_matrix() @ psi.amplitudes, atol=1e-12)

    def test_non_hermitian_expectation(self):
        expr = mb.OperatorExpression(1, [(1j, mb.PauliString.from_label("Z"))])
        with self.assertRaises(mb.NonHermitianError):
            mb.expectation(mb.StateVector.zeros(1), expr)

    def test_bell_reduced_density(self):
        psi = mb.StateVector.zeros(3).apply_gate("H", 0).apply_gate("CX", (0, 2))
        rho = reduced_two_qubit_density(psi, (0, 2))
        expected = np.zeros((4, 4))
        expected[np.ix_([0, 3], [0, 3])] = 0.5
        np.testing.assert_allclose(rho, expected, atol=1e-12)
        np.testing.assert_allclose(reduced_density(psi, [0]), np.eye(2) / 2, atol=1e-12)

    def test_reduced_density_order(self):
        psi = mb.StateVector.zeros(2).apply_gate("X", 1)
        rho = reduced_density(psi, [1, 0])
        self.assertAlmostEqual(rho[2, 2].real, 1.0)

    def test_check_density_rejects_bad_trace(self):
        with self.assertRaises(mb.NumericalConsistencyError):
            check_density(np.eye(2))


class TestPerturbations(unittest.TestCase):
    """Noise models applied to cluster states."""

    def setUp(self):
        self.g = mb.chain(3)
        self.psi = mb.build_cluster(self.g)

    def test_local_z_rotation_damps_stabilizer(self):
        beta = 0.3
        rotated = mb.perturb(self.psi, "local_z_rotation", beta)
        K1 = mb.PauliString.from_sparse("Z0 X1 Z2", 3)
        self.assertAlmostEqual(mb.expectation(rotated, K1), np.cos(beta))

    def test_depolarizing(self):
        p = 0.2
        rho = mb.perturb(self.psi, "depolarizing", p, qubits=[1])
        self.assertEqual(len(rho), 4)
        K1 = mb.PauliString.from_sparse("Z0 X1 Z2", 3)
        self.assertAlmostEqual(mb.expectation(rho, K1), 1 - p)

    def test_random_rotation_is_seeded(self):
        a = mb.perturb(self.psi, "random_local_rotation", 0.4, seed=9)
        b = mb.perturb(self.psi, "random_local_rotation", 0.4, seed=9)
        np.testing.assert_allclose(a.amplitudes, b.amplitudes)

    def test_invalid_inputs(self):
        with self.assertRaises(ValueError):
            mb.perturb(self.psi, "dephasing", 0.1)
        with self.assertRaises(ValueError):
            mb.perturb(self.psi, "depolarizing", 1.5)
        with self.assertRaises(mb.UnsupportedBackendError):
            mb.perturb(mb.build_cluster(self.g, "tableau"), "local_z_rotation", 0.1)


if __name__ == "__main__":
    unittest.main()
