"""Tests of post- versus pre-measurement correlators, stabilizer forms and fidelity."""

import unittest

import numpy as np

import PyMBQC as mb
from PyMBQC.Correlator import (corrected_branches, derive_target_expression,
                               post_measurement_expectations, resource_density,
                               target_value)
from PyMBQC.Experiment import pauli_pairs
from PyMBQC.StateVector import reduced_density


def sparse(plan, text):
    return mb.PauliString.from_sparse(text, plan.n)


def assertExpressionsClose(test, first, second, tol=1e-12):
    keys = {(p.x, p.z) for p in first.paulis} | {(p.x, p.z) for p in second.paulis}
    for x, z in keys:
        p = mb.PauliString(first.n, x, z)
        test.assertLess(abs(first.coefficient(p) - second.coefficient(p)), tol)


class TestIdentityWire(unittest.TestCase):
    """Closed-form correlators of the short identity wire under local Z rotations."""

    def setUp(self):
        self.plan = mb.identity_plan(mb.chain(5), k=1, l=1)
        self.beta = 0.35
        self.rho0 = mb.perturb(mb.build_cluster(self.plan.graph), "local_z_rotation", self.beta)

    def check(self, a, b, expected):
        A, B = sparse(self.plan, a), sparse(self.plan, b)
        post = mb.post_measurement_expectation(self.rho0, self.plan, A, B)
        pre = mb.pre_measurement_expectation(self.rho0, mb.derive_pre_measurement_expression(self.plan, A, B))
        self.assertAlmostEqual(post, expected, places=10)
        self.assertAlmostEqual(pre, expected, places=10)

    def test_xx(self):
        self.check("X1", "X3", np.cos(self.beta) ** 2)

    def test_zz(self):
        self.check("Z1", "Z3", np.cos(self.beta))

    def test_yy(self):
        self.check("Y1", "Y3", -np.cos(self.beta) ** 3)

    def test_pre_measurement_expression(self):
        expr = mb.derive_pre_measurement_expression(self.plan, sparse(self.plan, "Y1"), sparse(self.plan, "Y3"))
        # K1 K2 K3 = -Z0 Y1 X2 Y3 Z4, hence <YY> = -1 on the cluster
        self.assertEqual(expr, sparse(self.plan, "Z0 Y1 X2 Y3 Z4"))


class TestIdealTargets(unittest.TestCase):
    """Every plan reproduces its ideal stabilizers on the unperturbed cluster."""

    def test_all_plans(self):
        plans = [
            mb.identity_plan(k=1, l=2),
            mb.hadamard_plan(),
            mb.pi2_plan(),
            mb.zrot_plan(theta=0.7),
            mb.diag_identity_plan_2d(n=3),
            mb.csign_plan(),
            mb.concatenate(mb.hadamard_plan(), mb.hadamard_plan()),
        ]
        for plan in plans:
            cluster = mb.build_cluster(plan.graph)
            for target in plan.targets:
                self.assertAlmostEqual(target_value(cluster, plan, target), 1.0, places=10,
                                       msg=f"{plan.name} {target!r}")


class TestEquivalence(unittest.TestCase):
    """Post-measurement and pre-measurement correlators agree on perturbed inputs."""

    def assertEquivalent(self, plan, rho0):
        pairs = pauli_pairs(plan)
        post = post_measurement_expectations(rho0, plan, pairs)
        for (A, B), value in zip(pairs, post):
            pre = mb.pre_measurement_expectation(rho0, mb.derive_pre_measurement_expression(plan, A, B))
            self.assertLess(abs(value - pre), 1e-9, msg=f"{plan.name} {A} {B}")

    def test_random_rotations(self):
        rng = np.random.default_rng(7)
        for plan in (mb.hadamard_plan(), mb.pi2_plan(), mb.zrot_plan(theta=1.1), mb.identity_plan()):
            cluster = mb.build_cluster(plan.graph)
            for _ in range(3):
                rho0 = mb.perturb(cluster, "random_local_rotation", rng.uniform(0, 0.6),
                                  seed=int(rng.integers(1 << 30)))
                self.assertEquivalent(plan, rho0)

    def test_adaptive_rotation_on_perturbed_input(self):
        plan = mb.zrot_plan(theta=0.6)
        rho0 = mb.perturb(mb.build_cluster(plan.graph), "random_local_rotation", 0.4, seed=3)
        self.assertEqual(len(mb.enumerate_branches(rho0, plan)), 32)
        A, B = sparse(plan, "X1"), sparse(plan, "X5")
        post = mb.post_measurement_expectation(rho0, plan, A, B)
        pre = mb.pre_measurement_expectation(rho0, mb.derive_pre_measurement_expression(plan, A, B))
        self.assertLess(abs(post - pre), 1e-10)
        self.assertEquivalent(plan, rho0)

    def test_fifty_perturbed_inputs_per_plan(self):
        rng = np.random.default_rng(50)
        plans = (mb.identity_plan(k=1, l=2), mb.hadamard_plan(), mb.pi2_plan(), mb.zrot_plan(theta=0.7),
                 mb.diag_identity_plan_2d(n=3), mb.csign_plan())
        for plan in plans:
            pairs = pauli_pairs(plan)
            expressions = [mb.derive_pre_measurement_expression(plan, A, B) for A, B in pairs]
            cluster = mb.build_cluster(plan.graph)
            for _ in range(50):
                rho0 = mb.perturb(cluster, "random_local_rotation", rng.uniform(0, 0.6),
                                  seed=int(rng.integers(1 << 30)))
                post = post_measurement_expectations(rho0, plan, pairs)
                pre = [mb.pre_measurement_expectation(rho0, expr) for expr in expressions]
                np.testing.assert_allclose(post, pre, rtol=0, atol=1e-9, err_msg=plan.name)

    def test_depolarized_input(self):
        plan = mb.zrot_plan(theta=0.4)
        rho0 = mb.perturb(mb.build_cluster(plan.graph), "depolarizing", 0.1, qubits=[1, 3, 5])
        self.assertEquivalent(plan, rho0)

    def test_csign(self):
        plan = mb.csign_plan()
        rho0 = mb.perturb(mb.build_cluster(plan.graph), "random_local_rotation", 0.3, seed=4)
        self.assertEquivalent(plan, rho0)

    def test_concatenated_rotation(self):
        plan = mb.concatenate(mb.zrot_plan(theta=0.5), mb.pi2_plan())
        rho0 = mb.perturb(mb.build_cluster(plan.graph), "local_x_rotation", 0.2)
        self.assertEquivalent(plan, rho0)

    def test_tableau_matches_dense(self):
        plan = mb.pi2_plan()
        pairs = pauli_pairs(plan)
        dense = post_measurement_expectations(mb.build_cluster(plan.graph, "dense"), plan, pairs)
        tableau = post_measurement_expectations(mb.build_cluster(plan.graph, "tableau"), plan, pairs)
        np.testing.assert_allclose(tableau, dense, atol=1e-12)

    def test_tableau_rejects_rotations(self):
        plan = mb.zrot_plan(theta=0.2)
        with self.assertRaises(mb.UnsupportedBackendError):
            mb.enumerate_branches(mb.build_cluster(plan.graph, "tableau"), plan)

    def test_operator_placement(self):
        plan = mb.hadamard_plan()
        with self.assertRaises(mb.PlanError):
            mb.derive_pre_measurement_expression(plan, sparse(plan, "X5"), sparse(plan, "X1"))
        with self.assertRaises(mb.PlanError):
            mb.post_measurement_expectation(mb.build_cluster(plan.graph), plan,
                                            sparse(plan, "X2"), sparse(plan, "X5"))


class TestGateRelations(unittest.TestCase):
    """Plans implementing the same gate give the same resource correlations."""

    def correlations(self, plan, rho0):
        return post_measurement_expectations(rho0, plan, pauli_pairs(plan))

    def test_rotation_by_half_pi_is_phase_gate(self):
        zrot, pi2 = mb.zrot_plan(theta=np.pi / 2), mb.pi2_plan()
        np.testing.assert_allclose(self.correlations(zrot, mb.build_cluster(zrot.graph)),
                                   self.correlations(pi2, mb.build_cluster(pi2.graph)), atol=1e-10)

    def test_hadamard_twice_is_identity(self):
        twice, identity = mb.concatenate(mb.hadamard_plan(), mb.hadamard_plan()), mb.identity_plan()
        np.testing.assert_allclose(self.correlations(twice, mb.build_cluster(twice.graph)),
                                   self.correlations(identity, mb.build_cluster(identity.graph)), atol=1e-9)

    def test_hadamard_twice_on_perturbed_input(self):
        twice, identity = mb.concatenate(mb.hadamard_plan(), mb.hadamard_plan()), mb.identity_plan()
        states = [mb.perturb(mb.build_cluster(plan.graph), "random_local_rotation", 0.5,
                             qubits=plan.inputs, seed=21) for plan in (twice, identity)]
        np.testing.assert_allclose(self.correlations(twice, states[0]),
                                   self.correlations(identity, states[1]), atol=1e-9)

    def test_identity_twice_is_longer_identity(self):
        twice, longer = mb.concatenate(mb.identity_plan(), mb.identity_plan()), mb.identity_plan(k=1, l=2)
        self.assertEqual(twice.steps, longer.steps)
        self.assertEqual((twice.inputs, twice.outputs), (longer.inputs, longer.outputs))
        cluster = mb.build_cluster(longer.graph)
        for rho0 in (cluster, mb.perturb(cluster, "random_local_rotation", 0.4, seed=8)):
            np.testing.assert_allclose(self.correlations(twice, rho0),
                                       self.correlations(longer, rho0), rtol=0, atol=1e-12)

    def test_concatenation_is_associative(self):
        h, s = mb.hadamard_plan(), mb.pi2_plan()
        left = mb.concatenate(mb.concatenate(h, s), h)
        right = mb.concatenate(h, mb.concatenate(s, h))
        self.assertEqual(left.n, 15)
        self.assertEqual(left.steps, right.steps)
        self.assertEqual((left.inputs, left.outputs), ((1,), (13,)))
        self.assertEqual(left.outputs, right.outputs)
        self.assertEqual(left.skeleton_map, right.skeleton_map)
        self.assertEqual(left.corrections, right.corrections)
        self.assertEqual(left.params["plans"], right.params["plans"])
        cluster = mb.build_cluster(left.graph)
        for target in left.targets:
            self.assertAlmostEqual(target_value(cluster, left, target), 1.0, places=10)

    def test_phase_twice_is_rotation_by_pi(self):
        twice, zrot = mb.concatenate(mb.pi2_plan(), mb.pi2_plan()), mb.zrot_plan(theta=np.pi)
        for kind in ("cluster", "perturbed"):
            states = []
            for plan in (twice, zrot):
                state = mb.build_cluster(plan.graph)
                if kind == "perturbed":
                    state = mb.perturb(state, "random_local_rotation", 0.5, qubits=plan.inputs, seed=21)
                states.append(state)
            np.testing.assert_allclose(self.correlations(twice, states[0]),
                                       self.correlations(zrot, states[1]), atol=1e-9)

    def test_remainder_is_not_a_stabilizer(self):
        plan = mb.zrot_plan(theta=0.7)
        cluster = mb.build_cluster(plan.graph)
        self.assertLess(abs(mb.expectation(cluster, plan.remainder)), 1e-12)

        form = mb.stabilizer_product_form(plan, plan.targets[0])
        remainder_terms = mb.StabilizerProductForm(
            plan.n, [term for term in form.terms if term.remainder is not None])
        values = [
            mb.pre_measurement_expectation(
                mb.perturb(cluster, "random_local_rotation", 0.6, seed=seed),
                remainder_terms.expand(plan.graph))
            for seed in range(5)
        ]
        self.assertGreater(max(abs(v) for v in values), 1e-3)


class TestBranches(unittest.TestCase):
    """Branch enumeration and branch independence of the corrected resource."""

    def test_hadamard_branch_count(self):
        plan = mb.hadamard_plan()
        for backend in ("dense", "tableau"):
            branches = mb.enumerate_branches(mb.build_cluster(plan.graph, backend), plan)
            self.assertEqual(len(branches), 32)
            for branch in branches:
                self.assertAlmostEqual(branch.probability, 1 / 32)

    def test_branch_independence(self):
        plan = mb.zrot_plan(theta=0.6)
        cluster = mb.build_cluster(plan.graph)
        average = resource_density(cluster, plan)
        for _, probability, state, _ in corrected_branches(cluster, plan):
            np.testing.assert_allclose(reduced_density(state, plan.resource_qubits), average, atol=1e-10)

    def test_branch_independence_of_clifford_plans(self):
        plans = (mb.hadamard_plan(), mb.pi2_plan(), mb.identity_plan(k=1, l=2),
                 mb.csign_plan(), mb.diag_identity_plan_2d(n=3))
        for plan in plans:
            branches = corrected_branches(mb.build_cluster(plan.graph), plan)
            first = reduced_density(branches[0][2], plan.resource_qubits)
            for _, _, state, _ in branches[1:]:
                np.testing.assert_allclose(reduced_density(state, plan.resource_qubits), first,
                                           atol=1e-10, err_msg=plan.name)


class TestStabilizerForms(unittest.TestCase):
    """Correlators written as products of cluster stabilizers."""

    def test_hadamard(self):
        plan = mb.hadamard_plan()
        form = mb.stabilizer_product_form(plan, sparse(plan, "X1"), sparse(plan, "Z5"))
        self.assertEqual(form.sites, (1, 3, 4))
        self.assertEqual(form.sign, 1)
        self.assertEqual(form.expand(plan.graph), sparse(plan, "Z0 X1 Y3 Y4 Z5"))
        form = mb.stabilizer_product_form(plan, sparse(plan, "Z1"), sparse(plan, "X5"))
        self.assertEqual(form.sites, (2, 3, 5))

    def test_pi2(self):
        plan = mb.pi2_plan()
        form = mb.stabilizer_product_form(plan, sparse(plan, "Z1"), sparse(plan, "Z5"))
        self.assertEqual(form.sites, (2, 4))
        self.assertEqual(form.render(), "+1*K2K4")

    def test_pi2_rotated_output(self):
        plan = mb.pi2_plan()
        form = mb.stabilizer_product_form(plan, sparse(plan, "X1"), sparse(plan, "-Y5"))
        self.assertEqual(form.sites, (1, 3, 4, 5))
        self.assertEqual(form.sign, 1)
        self.assertEqual(form.render(), "+1*K1K3K4K5")
        self.assertEqual(form.expand(plan.graph), sparse(plan, "-Z0 X1 Y3 X4 Y5 Z6"))

    def test_zrot_zz(self):
        plan = mb.zrot_plan(theta=0.9)
        expr = mb.derive_pre_measurement_expression(plan, sparse(plan, "Z1"), sparse(plan, "Z5"))
        self.assertEqual(expr, sparse(plan, "Z1 X2 X4 Z5"))

    def test_zrot_rotated_target(self):
        theta = 0.9
        plan = mb.zrot_plan(theta=theta)
        target = plan.targets[0]
        form = mb.stabilizer_product_form(plan, target)
        self.assertEqual(len(form.terms), 4)
        self.assertTrue(any(term.remainder is not None for term in form.terms))
        assertExpressionsClose(self, form.expand(plan.graph), derive_target_expression(plan, target))
        cluster = mb.build_cluster(plan.graph)
        self.assertAlmostEqual(mb.pre_measurement_expectation(cluster, form.expand(plan.graph)), 1.0)

    def test_diagonal(self):
        plan = mb.diag_identity_plan_2d(n=3)
        g = plan.graph

        def at(letters):
            return mb.PauliString.from_letters(g.n, {g.vertex_at(*ij): c for ij, c in letters})

        A_x, B_x = at([((1, 1), "X")]), at([((3, 3), "X")])
        expected = at([((1, 1), "X"), ((2, 2), "X"), ((3, 3), "X"), ((0, 1), "Z"),
                       ((1, 0), "Z"), ((3, 4), "Z"), ((4, 3), "Z")])
        self.assertEqual(mb.derive_pre_measurement_expression(plan, A_x, B_x), expected)

        A_z, B_z = at([((1, 1), "Z")]), at([((3, 3), "Z")])
        expected = at([((2, 1), "X"), ((3, 2), "X"), ((1, 1), "Z"), ((3, 3), "Z"),
                       ((2, 0), "Z"), ((4, 2), "Z")])
        self.assertEqual(mb.derive_pre_measurement_expression(plan, A_z, B_z), expected)

    def test_form_unavailable(self):
        plan = mb.identity_plan()
        with self.assertRaises(mb.StabilizerFormUnavailable):
            mb.stabilizer_product_form(plan, sparse(plan, "X1"), sparse(plan, "Z3"))


class TestFidelity(unittest.TestCase):
    """Resource tomography and gate fidelity."""

    def test_cluster_is_perfect(self):
        for plan in (mb.hadamard_plan(), mb.zrot_plan(theta=0.3), mb.csign_plan()):
            rho = mb.resource_tomography(mb.build_cluster(plan.graph), plan)
            self.assertAlmostEqual(mb.gate_fidelity(rho, plan), 1.0, places=10)

    def test_tomography_matches_partial_trace(self):
        plan = mb.pi2_plan()
        rho0 = mb.perturb(mb.build_cluster(plan.graph), "random_local_rotation", 0.4, seed=12)
        np.testing.assert_allclose(mb.resource_tomography(rho0, plan), resource_density(rho0, plan), atol=1e-10)

    def test_noise_lowers_fidelity(self):
        plan = mb.hadamard_plan()
        rho0 = mb.perturb(mb.build_cluster(plan.graph), "depolarizing", 0.2, qubits=[3])
        fidelity = mb.gate_fidelity(mb.resource_tomography(rho0, plan), plan)
        self.assertLess(fidelity, 1.0 - 1e-3)
        self.assertGreater(fidelity, 0.0)

    def test_maximally_mixed_input(self):
        plan = mb.hadamard_plan()
        self.assertAlmostEqual(mb.gate_fidelity(np.eye(4) / 4, plan), 0.25, places=12)
        rho = mb.resource_tomography(mb.BranchEnsemble.maximally_mixed(plan.n), plan)
        np.testing.assert_allclose(rho, np.eye(4) / 4, atol=1e-10)
        self.assertAlmostEqual(mb.gate_fidelity(rho, plan), 0.25, places=10)

    def test_fidelity_falls_with_rotation_angle(self):
        plan = mb.identity_plan(mb.chain(5), k=1, l=1)
        cluster = mb.build_cluster(plan.graph)
        fidelities = []
        for beta in np.linspace(0.0, 0.8, 9):
            rho0 = mb.perturb(cluster, "local_z_rotation", beta)
            fidelity = mb.gate_fidelity(mb.resource_tomography(rho0, plan), plan)
            c = np.cos(beta)
            # (1 + <XX> + <ZZ> - <YY>) / 4
            self.assertAlmostEqual(fidelity, (1 + c + c ** 2 + c ** 3) / 4, places=10)
            fidelities.append(fidelity)
        self.assertTrue(all(b < a for a, b in zip(fidelities, fidelities[1:])))

    def test_ideal_state_is_fixed(self):
        plan = mb.zrot_plan(theta=0.8)
        psi = mb.ideal_resource_state(plan)
        for stabilizer in plan.ideal_stabilizers:
            self.assertAlmostEqual(mb.expectation(psi, stabilizer), 1.0, places=10)

    def test_shape_mismatch(self):
        with self.assertRaises(mb.DimensionError):
            mb.gate_fidelity(np.eye(2) / 2, mb.hadamard_plan())


if __name__ == "__main__":
    unittest.main()
