# Loading dependencies
import itertools
from collections import namedtuple

import numpy as np

from .Errors import (DimensionError, NonHermitianError, NumericalConsistencyError,
                     PlanError, StabilizerFormUnavailable,
                     UnsupportedBackendError)
from .GatePlans import OutcomeRecord, correction_for
from .Lattice import solve_stabilizer_product, stabilizer_product
from .OperatorExpression import OperatorExpression
from .PauliString import PauliString, commutes, multiply
from .StateVector import (BranchEnsemble, StateVector, as_ensemble,
                          check_density, expectation, measure_branches,
                          pauli_expectations, reduced_density)
from .Tableau import Tableau

LETTERS = "IXYZ"

WeightedBranch = namedtuple("WeightedBranch", ["outcomes", "probability", "state"])


def _check_input(rho0, plan):
    if not isinstance(rho0, (StateVector, BranchEnsemble, Tableau)):
        raise TypeError("input state must be a StateVector, BranchEnsemble or Tableau")
    if rho0.n != plan.n:
        raise DimensionError(f"plan acts on {plan.n} qubits, the state has {rho0.n}")
    if isinstance(rho0, Tableau) and not plan.is_clifford:
        raise UnsupportedBackendError(
            f"{plan.name} measures rotated bases; use the dense backend"
        )


def _walk_dense(psi, steps, outcomes, probability):
    if not steps:
        yield WeightedBranch(OutcomeRecord(outcomes), probability, psi)
        return
    step = steps[0]
    # outcomes is an ordered list of (qubit, outcome) pairs
    angle = step.resolved_angle(dict(outcomes)) if step.basis == "XEta" else None
    for branch in measure_branches(psi, step.basis, step.qubit, angle):
        if branch.state is None:
            continue
        outcomes.append((step.qubit, branch.outcome))
        yield from _walk_dense(branch.state, steps[1:], outcomes, probability * branch.probability)
        outcomes.pop()


def _walk_tableau(t, steps, outcomes, probability, out):
    if not steps:
        out.append(WeightedBranch(OutcomeRecord(outcomes), probability, t))
        return
    step = steps[0]
    observable = PauliString.single(t.n, step.qubit, step.basis)
    # +-1 when the state fixes the outcome, 0 when it is uniformly random
    fixed = t.expectation_pauli(observable)
    if fixed:
        choices = [(fixed, probability)]
    else:
        choices = [(1, probability / 2), (-1, probability / 2)]
    for outcome, weight in choices:
        _, posterior, _ = t.measure_pauli(observable, outcome=outcome)
        outcomes.append((step.qubit, outcome))
        _walk_tableau(posterior, steps[1:], outcomes, weight, out)
        outcomes.pop()


def enumerate_branches(rho0, plan):
    """Every outcome branch of the plan with non-zero probability.

    Branches are listed depth first in measurement order, +1 before -1. For an
    ensemble input the branches of each member follow one another, weighted
    by the member's weight. Each item is WeightedBranch(outcomes, probability,
    uncorrected post-measurement state).
    """
    _check_input(rho0, plan)
    if isinstance(rho0, Tableau):
        out = []
        _walk_tableau(rho0, list(plan.steps), [], 1.0, out)
        return out
    return list(_dense_branches(rho0, plan))


def _dense_branches(rho0, plan):
    """Branches of a dense input one at a time, in enumerate_branches order."""
    steps = list(plan.steps)
    for weight, psi in as_ensemble(rho0):
        yield from _walk_dense(psi, steps, [], weight)


def corrected_branches(rho0, plan):
    """(outcomes, probability, state, U_J) for every branch.

    Dense states come back corrected. Tableau states stay uncorrected and
    U_J is applied as a sign when expectations are taken.
    """
    out = []
    for branch in enumerate_branches(rho0, plan):
        correction = correction_for(plan, branch.outcomes)
        if isinstance(branch.state, Tableau):
            out.append((branch.outcomes, branch.probability, branch.state, correction))
        else:
            out.append((branch.outcomes, branch.probability, branch.state.apply_pauli(correction), correction))
    return out


def corrected_ensemble(rho0, plan):
    """sum_J U_J P_J rho0 P_J U_J^dagger as a BranchEnsemble (dense inputs only)."""
    if isinstance(rho0, Tableau):
        raise UnsupportedBackendError("corrected ensembles need a dense input")
    branches = [(p, psi) for _, p, psi, _ in corrected_branches(rho0, plan)]
    return BranchEnsemble(branches)


def _check_operators(plan, A, B):
    for name, op, allowed in (("A", A, plan.inputs), ("B", B, plan.outputs)):
        if op.n != plan.n:
            raise DimensionError(f"{name} acts on {op.n} qubits, the plan on {plan.n}")
        outside = set(op.support) - set(allowed)
        if outside:
            raise PlanError(f"{name} must act on qubits {list(allowed)} only, it touches {sorted(outside)}")
        if not op.is_hermitian:
            raise PlanError(f"{name} = {op} is not Hermitian")


def _tableau_value(branches, operator):
    value = 0.0
    for _, probability, t, correction in branches:
        sign = 1 if commutes(operator, correction) else -1
        value += probability * sign * t.expectation_pauli(operator)
    return value


def post_measurement_expectations(rho0, plan, pairs, tol=1e-10):
    """<A B> on the corrected resource for every (A, B) pair, branches enumerated once."""
    pairs = list(pairs)
    for A, B in pairs:
        _check_operators(plan, A, B)
    _check_input(rho0, plan)
    if isinstance(rho0, Tableau):
        branches = corrected_branches(rho0, plan)
        return [_tableau_value(branches, multiply(A, B)) for A, B in pairs]
    # U_J is a Pauli, so U_J^dagger (A B) U_J = +-(A B) and branch states stay uncorrected
    products = [multiply(A, B) for A, B in pairs]
    values = np.zeros(len(products), dtype=complex)
    for branch in _dense_branches(rho0, plan):
        correction = correction_for(plan, branch.outcomes)
        signs = np.array([1 if commutes(p, correction) else -1 for p in products])
        values += branch.probability * signs * pauli_expectations(branch.state, products)
    residue = float(np.max(np.abs(values.imag))) if products else 0.0
    if residue > tol:
        raise NonHermitianError(f"post-measurement values have imaginary parts up to {residue:.3e}")
    return [float(v) for v in values.real]


def post_measurement_expectation(rho0, plan, A, B):
    """sum_J Tr[(A B) U_J P_J rho0 P_J U_J^dagger] by exhaustive branch enumeration.

    Args:
        rho0: StateVector, BranchEnsemble or Tableau (Clifford plans only).
        plan: GatePlan.
        A: PauliString supported on the plan inputs.
        B: PauliString supported on the plan outputs.
    """
    return post_measurement_expectations(rho0, plan, [(A, B)])[0]


def split_operator(plan, operator):
    """Split a graph Pauli into its input part A and output part B."""
    A = operator.restricted(plan.inputs).with_phase(operator.phase)
    B = operator.restricted(plan.outputs).with_phase(0)
    if multiply(A, B) != operator:
        raise PlanError(f"{operator.to_sparse()} acts outside the plan inputs and outputs")
    return A, B


def target_value(rho0, plan, target):
    """Post-measurement value of an OperatorExpression on inputs and outputs."""
    terms = target.real_terms()
    pairs = [split_operator(plan, p) for _, p in terms]
    values = post_measurement_expectations(rho0, plan, pairs)
    return float(sum(c * v for (c, _), v in zip(terms, values)))


def outcome_operators(plan):
    """E_j with m_j P_J = P_J E_j for every measured qubit j.

    Pauli bases give the basis letter. An XEta step with angle theta and
    dependencies D gives cos(theta) X_j + sin(theta) (prod_{d in D} E_d) Y_j.
    """
    n = plan.n
    operators = {}
    for step in plan.steps:
        j = step.qubit
        # Pauli bases
        if step.basis != "XEta":
            operators[j] = OperatorExpression.from_pauli(PauliString.single(n, j, step.basis))
            continue
        # Rotated bases carry the sign of their dependencies
        dependency = OperatorExpression.identity(n)
        for d in step.depends:
            dependency = dependency * operators[d]
        x = OperatorExpression.from_pauli(PauliString.single(n, j, "X"))
        y = PauliString.single(n, j, "Y")
        operators[j] = x * np.cos(step.angle) + dependency * y * np.sin(step.angle)
    return operators


def derive_pre_measurement_expression(plan, A, B):
    """Outcome-free operator whose expectation on rho0 equals the corrected <A B>.

    The correction turns B into (-1)**(parities) B. Each parity is
    offset * prod(m_j), and every m_j is absorbed as the outcome operator
    E_j, giving offset * A B prod E_j (steps in measurement order).
    """
    _check_operators(plan, A, B)
    # Parities that flip B
    offset, factors = 1, set()
    for c in plan.corrections:
        if (B.z >> c.qubit) & 1:
            offset *= c.px.offset
            factors ^= set(c.px.factors)
        if (B.x >> c.qubit) & 1:
            offset *= c.pz.offset
            factors ^= set(c.pz.factors)

    # Replacing every outcome by its operator
    operators = outcome_operators(plan)
    expr = OperatorExpression.from_pauli(multiply(A, B), float(offset))
    for step in plan.steps:
        if step.qubit in factors:
            expr = expr * operators[step.qubit]
    return expr


def derive_target_expression(plan, target):
    """Pre-measurement form of an OperatorExpression target, term by term."""
    expr = OperatorExpression(plan.n)
    for coeff, pauli in target.real_terms():
        A, B = split_operator(plan, pauli)
        expr = expr + derive_pre_measurement_expression(plan, A, B) * coeff
    return expr


def pre_measurement_expectation(rho0, expr, tol=1e-10):
    """Tr[expr rho0] on a dense state, an ensemble or a stabilizer tableau."""
    if isinstance(rho0, Tableau):
        if expr.n != rho0.n:
            raise DimensionError(f"expression acts on {expr.n} qubits, the state has {rho0.n}")
        value = 0j
        for coeff, pauli in expr.terms:
            value += coeff * rho0.expectation_pauli(pauli)
        if abs(value.imag) > tol:
            raise NumericalConsistencyError(f"expectation has imaginary part {value.imag:.3e}")
        return float(value.real)
    return expectation(rho0, expr, tol)


StabilizerProductTerm = namedtuple("StabilizerProductTerm", ["coefficient", "sites", "remainder"])


class StabilizerProductForm:
    """Sum of coefficient * [remainder] * prod K_a over the listed sites."""

    def __init__(self, n, terms):
        self.n = n
        self.terms = tuple(terms)

    @property
    def sites(self):
        """Sites of a single-term form."""
        if len(self.terms) != 1:
            raise ValueError("form has several terms")
        return self.terms[0].sites

    @property
    def sign(self):
        if len(self.terms) != 1:
            raise ValueError("form has several terms")
        return self.terms[0].coefficient

    def expand(self, graph):
        """Multiply the stabilizers out into an OperatorExpression."""
        expr = OperatorExpression(self.n)
        for term in self.terms:
            product = stabilizer_product(graph, term.sites)
            if term.remainder is not None:
                product = multiply(term.remainder, product)
            expr = expr + OperatorExpression.from_pauli(product, term.coefficient)
        return expr

    def render(self):
        parts = []
        for term in self.terms:
            head = f"({term.remainder.to_sparse()[1:]})" if term.remainder is not None else ""
            sites = "".join(f"K{a}" for a in term.sites) or "I"
            parts.append(f"{term.coefficient:+g}*{head}{sites}")
        return " ".join(parts)

    def __repr__(self):
        return f"StabilizerProductForm({self.render()})"


def stabilizer_product_form(plan, A, B=None):
    """Express the pre-measurement correlator as cluster-stabilizer products.

    A and B are PauliStrings, or A alone is an OperatorExpression target.
    Terms outside the stabilizer group are tried once more after
    splitting off the plan's remainder operator.

    Raises:
        StabilizerFormUnavailable if some term has no such form.
    """
    if B is None:
        expr = derive_target_expression(plan, A)
    else:
        expr = derive_pre_measurement_expression(plan, A, B)

    terms = []
    for coeff, pauli in expr.real_terms():
        solution = solve_stabilizer_product(plan.graph, pauli, {})
        remainder = None
        # Second try after splitting off the remainder
        if solution is None and plan.remainder is not None and commutes(plan.remainder, pauli):
            remainder = plan.remainder
            solution = solve_stabilizer_product(plan.graph, multiply(remainder, pauli), {})
        if solution is None:
            raise StabilizerFormUnavailable(
                f"{pauli.to_sparse()} is not a product of cluster stabilizers for {plan.name}"
            )
        terms.append(StabilizerProductTerm(coeff * solution.sign, tuple(solution.sites), remainder))
    return StabilizerProductForm(plan.n, terms)


def _pauli_basis(k):
    """All 4**k plain Pauli strings on k qubits, letters over IXYZ."""
    return [PauliString.from_label("".join(letters)) for letters in itertools.product(LETTERS, repeat=k)]


def resource_tomography(rho0, plan, tol=1e-9):
    """Reconstruct the corrected resource state from its Pauli correlators.

    rho = sum_P <P> P / 2**(2k) over the inputs then the outputs; 16
    correlators for one qubit pair, 256 for two.
    """
    k = plan.k
    resource = plan.resource_qubits
    basis = _pauli_basis(2 * k)
    # Every resource Pauli split into its input and output parts
    pairs = []
    for local in basis:
        letters = {q: local.letter(position) for position, q in enumerate(resource)}
        full = PauliString.from_letters(plan.n, {q: c for q, c in letters.items() if c != "I"})
        pairs.append(split_operator(plan, full))
    values = post_measurement_expectations(rho0, plan, pairs)

    # Summing the Pauli expansion
    dim = 2 ** (2 * k)
    rho = np.zeros((dim, dim), dtype=complex)
    for local, value in zip(basis, values):
        rho += value * local.to_matrix()
    rho /= dim
    return check_density(rho, tol)


def resource_density(rho0, plan, tol=1e-9):
    """Reduced density of the corrected ensemble on inputs then outputs."""
    return reduced_density(corrected_ensemble(rho0, plan), plan.resource_qubits, tol)


def ideal_resource_state(plan):
    """Joint +1 eigenstate of the plan's ideal stabilizers.

    The projector product is applied to the normalized uniform superposition;
    if that is annihilated the computational basis states are tried in order.
    """
    stabilizers = plan.ideal_stabilizers
    k2 = 2 * plan.k
    dim = 2 ** k2
    matrices = [s.to_matrix() for s in stabilizers]
    for a, b in itertools.combinations(matrices, 2):
        if not np.allclose(a @ b, b @ a, rtol=0, atol=1e-12):
            raise PlanError("ideal stabilizers do not commute")

    # Projector onto the joint +1 eigenspace
    projector = np.eye(dim, dtype=complex)
    for matrix in matrices:
        projector = projector @ (np.eye(dim) + matrix) / 2
    if abs(np.trace(projector).real - 1) > 1e-9:
        raise PlanError("ideal stabilizers do not fix a unique state")

    seeds = [np.full(dim, dim ** -0.5, dtype=complex)] + list(np.eye(dim, dtype=complex))
    for seed in seeds:
        psi = projector @ seed
        norm = np.linalg.norm(psi)
        if norm > 1e-8:
            return StateVector(psi / norm, copy=False)
    raise NumericalConsistencyError("projector annihilates every seed state")


def stabilizer_group(stabilizers):
    """All 2**m products of subsets of the commuting generators (as matrices)."""
    dim = stabilizers[0].to_matrix().shape[0]
    elements = [np.eye(dim, dtype=complex)]
    for s in stabilizers:
        matrix = s.to_matrix()
        elements += [e @ matrix for e in elements]
    return elements


def gate_fidelity(rho, plan, tol=1e-10):
    """<psi_ideal| rho |psi_ideal>, cross-checked against the group average.

    Raises:
        NumericalConsistencyError if the two values differ by more than tol.
    """
    rho = np.asarray(rho, dtype=complex)
    psi = ideal_resource_state(plan).amplitudes
    if rho.shape != (psi.shape[0], psi.shape[0]):
        raise DimensionError(f"density matrix of shape {rho.shape} does not match the resource")
    # Overlap with the ideal state and the stabilizer-group average must agree
    direct = float(np.vdot(psi, rho @ psi).real)
    elements = stabilizer_group(plan.ideal_stabilizers)
    averaged = float(sum(np.trace(rho @ g).real for g in elements) / len(elements))
    if abs(direct - averaged) > tol:
        raise NumericalConsistencyError(
            f"fidelity {direct:.12f} disagrees with the stabilizer average {averaged:.12f}"
        )
    return direct
