"""Unit tests for the stabilizer tableau."""

import unittest

import numpy as np

import PyMBQC as mb
from PyMBQC.Tableau import symplectic_rank


def bell_tableau():
    t = mb.Tableau(2)
    t = t.apply_clifford("H", 0)
    return t.apply_clifford("CX", (0, 1))


class TestTableauState(unittest.TestCase):
    """Preparation and expectation values."""

    def test_default_is_all_zero(self):
        t = mb.Tableau(3)
        self.assertEqual(t.expectation_pauli(mb.PauliString.from_sparse("Z0 Z2", 3)), 1)
        self.assertEqual(t.expectation_pauli(mb.PauliString.from_sparse("X1", 3)), 0)
        self.assertTrue(t.validate())

    def test_bell_correlations(self):
        t = bell_tableau()
        P = lambda s: mb.PauliString.from_sparse(s, 2)
        self.assertEqual(t.expectation_pauli(P("X0 X1")), 1)
        self.assertEqual(t.expectation_pauli(P("Z0 Z1")), 1)
        self.assertEqual(t.expectation_pauli(P("Y0 Y1")), -1)
        self.assertEqual(t.expectation_pauli(P("Z0")), 0)

    def test_apply_clifford_is_functional(self):
        t = mb.Tableau(1)
        t.apply_clifford("H", 0)
        self.assertEqual(t.stabilizers[0], mb.PauliString.from_label("Z"))
        t.apply_clifford("H", 0, inplace=True)
        self.assertEqual(t.stabilizers[0], mb.PauliString.from_label("X"))

    def test_non_hermitian_observable(self):
        with self.assertRaises(ValueError):
            mb.Tableau(1).expectation_pauli(mb.PauliString.from_label("+iZ"))

    def test_dimension_mismatch(self):
        with self.assertRaises(mb.DimensionError):
            mb.Tableau(2).expectation_pauli(mb.PauliString.from_label("Z"))

    def test_matches_dense_cluster(self):
        g = mb.square(3, 2)
        t = mb.build_cluster(g, "tableau")
        psi = mb.build_cluster(g, "dense")
        rng = np.random.default_rng(11)
        for _ in range(40):
            p = mb.PauliString(g.n, int(rng.integers(2 ** g.n)), int(rng.integers(2 ** g.n)),
                               2 * int(rng.integers(2)))
            self.assertAlmostEqual(t.expectation_pauli(p), psi.expectation_pauli(p).real, places=12)


class TestTableauMeasurement(unittest.TestCase):
    """Projective Pauli measurements."""

    def test_random_then_deterministic(self):
        t = bell_tableau()
        Z0 = mb.PauliString.from_sparse("Z0", 2)
        Z1 = mb.PauliString.from_sparse("Z1", 2)
        outcome, post, deterministic = t.measure_pauli(Z0, rng=np.random.default_rng(5))
        self.assertFalse(deterministic)
        self.assertIn(outcome, (1, -1))
        second, _, deterministic = post.measure_pauli(Z1)
        self.assertTrue(deterministic)
        self.assertEqual(second, outcome)
        self.assertTrue(post.validate())

    def test_forced_outcome(self):
        t = bell_tableau()
        outcome, post, _ = t.measure_pauli(mb.PauliString.from_sparse("X0", 2), outcome=-1)
        self.assertEqual(outcome, -1)
        self.assertEqual(post.expectation_pauli(mb.PauliString.from_sparse("X1", 2)), -1)

    def test_contradiction(self):
        with self.assertRaises(mb.ContradictionError):
            bell_tableau().measure_pauli(mb.PauliString.from_sparse("Z0 Z1", 2), outcome=-1)

    def test_random_outcome_needs_rng(self):
        with self.assertRaises(ValueError):
            bell_tableau().measure_pauli(mb.PauliString.from_sparse("Z0", 2))

    def test_original_untouched(self):
        t = bell_tableau()
        t.measure_pauli(mb.PauliString.from_sparse("Z0", 2), outcome=1)
        self.assertEqual(t.expectation_pauli(mb.PauliString.from_sparse("Z0", 2)), 0)


class TestTableauText(unittest.TestCase):
    """Text serialization and rank."""

    def test_dumps_loads(self):
        t = mb.build_cluster(mb.chain(4), "tableau")
        text = t.dumps()
        self.assertTrue(text.startswith("[stabilizers]\n"))
        restored = mb.Tableau.loads(text)
        self.assertEqual(restored.stabilizers, t.stabilizers)
        self.assertEqual(restored.destabilizers, t.destabilizers)

    def test_loads_rejects_unsectioned_text(self):
        with self.assertRaises(ValueError):
            mb.Tableau.loads("XZ\n")

    def test_symplectic_rank(self):
        P = lambda s: mb.PauliString.from_sparse(s, 3)
        self.assertEqual(symplectic_rank([P("X0"), P("X1"), P("X0 X1")]), 2)
        self.assertEqual(symplectic_rank([P("X0 Z1"), P("Z0 X1 Z2"), P("Z1 X2")]), 3)


if __name__ == "__main__":
    unittest.main()
