# Loading dependencies
import itertools
import json
from collections import namedtuple

import numpy as np

from .Errors import PlanError
from .Lattice import (Graph, chain, lattice_region, solve_gf2,
                      solve_stabilizer_product, stabilizer_product)
from .OperatorExpression import OperatorExpression
from .PauliString import PauliString, commutes, multiply
from .Tableau import symplectic_rank

BASES = ("X", "Y", "Z", "XEta")
GATES = ("identity", "hadamard", "pi2", "zrot", "diag2d", "csign", "concat", "custom")


class MeasurementStep:
    """Single-qubit measurement of a plan.

    An XEta step measures cos(eta) X + sin(eta) Y with
    eta = angle * (product of the outcomes recorded on ``depends``).
    """

    __slots__ = ("qubit", "basis", "angle", "depends")

    def __init__(self, qubit, basis, angle=None, depends=()):
        canonical = {b.upper(): b for b in BASES}
        if not isinstance(basis, str) or basis.upper() not in canonical:
            raise PlanError(f"Unknown measurement basis {basis!r}, expected one of {BASES}")
        self.qubit = int(qubit)
        self.basis = canonical[basis.upper()]
        self.depends = tuple(int(d) for d in depends)
        if self.basis == "XEta":
            if angle is None:
                raise PlanError(f"XEta step on qubit {self.qubit} needs an angle")
            self.angle = float(angle)
        else:
            if angle is not None or self.depends:
                raise PlanError(f"{self.basis} step on qubit {self.qubit} takes no angle")
            self.angle = None

    @property
    def is_adaptive(self):
        return bool(self.depends)

    @property
    def skeleton_basis(self):
        """Clifford basis used for parity bookkeeping (XEta counts as X)."""
        return "X" if self.basis == "XEta" else self.basis

    def resolved_angle(self, outcomes):
        """Angle after feed-forward; ``outcomes`` maps measured qubit to +-1."""
        sign = 1
        for d in self.depends:
            try:
                sign *= outcomes[d]
            except KeyError:
                raise PlanError(f"step on qubit {self.qubit} needs the outcome of qubit {d}") from None
        return self.angle * sign

    def to_dict(self):
        data = {"qubit": self.qubit, "basis": self.basis}
        if self.basis == "XEta":
            data["angle"] = self.angle
            data["depends"] = list(self.depends)
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(data["qubit"], data["basis"], data.get("angle"), data.get("depends", ()))

    def __eq__(self, other):
        if not isinstance(other, MeasurementStep):
            return NotImplemented
        return (self.qubit, self.basis, self.angle, self.depends) == \
            (other.qubit, other.basis, other.angle, other.depends)

    __hash__ = None

    def __repr__(self):
        if self.basis == "XEta":
            return f"MeasurementStep({self.qubit}, XEta, angle={self.angle}, depends={self.depends})"
        return f"MeasurementStep({self.qubit}, {self.basis})"


class ParityFormula:
    """p = [1 - offset * prod(m_q for q in factors)] / 2, a value in {0, 1}."""

    __slots__ = ("offset", "factors")

    def __init__(self, offset=1, factors=()):
        if offset not in (1, -1):
            raise PlanError("parity offset must be +1 or -1")
        self.offset = offset
        self.factors = tuple(factors)
        if len(set(self.factors)) != len(self.factors):
            raise PlanError("parity factors must be distinct")

    def evaluate(self, outcomes):
        product = self.offset
        for q in self.factors:
            try:
                m = outcomes[q]
            except KeyError:
                raise PlanError(f"no outcome recorded for qubit {q}") from None
            product *= m
        return (1 - product) // 2

    def render(self, labels=None):
        labels = labels or {}
        names = " ".join(labels.get(q, f"m{q}") for q in self.factors)
        sign = "-" if self.offset == 1 else "+"
        return f"[1 {sign} {names or '1'}]/2"

    def to_dict(self):
        return {"offset": self.offset, "factors": list(self.factors)}

    def __eq__(self, other):
        if not isinstance(other, ParityFormula):
            return NotImplemented
        return self.offset == other.offset and set(self.factors) == set(other.factors)

    __hash__ = None

    def __repr__(self):
        return f"ParityFormula({self.render()})"


Correction = namedtuple("Correction", ["qubit", "px", "pz"])
Correction.__doc__ = "Outcome-dependent X**px Z**pz on one output qubit."


class OutcomeRecord:
    """Recorded +-1 outcomes of a plan's measured qubits, in measurement order."""

    def __init__(self, outcomes):
        items = list(outcomes.items()) if isinstance(outcomes, dict) else list(outcomes)
        self._outcomes = {}
        for q, m in items:
            if m not in (1, -1):
                raise PlanError(f"outcome of qubit {q} must be +1 or -1, got {m!r}")
            self._outcomes[int(q)] = int(m)

    def __getitem__(self, qubit):
        return self._outcomes[qubit]

    def __contains__(self, qubit):
        return qubit in self._outcomes

    def __len__(self):
        return len(self._outcomes)

    def items(self):
        return self._outcomes.items()

    def as_dict(self):
        return dict(self._outcomes)

    def check(self, plan):
        measured = set(plan.measured)
        missing = measured - set(self._outcomes)
        if missing:
            raise PlanError(f"no outcome recorded for qubits {sorted(missing)}")
        extra = set(self._outcomes) - measured
        if extra:
            raise PlanError(f"outcomes given for unmeasured qubits {sorted(extra)}")
        return self

    def __repr__(self):
        return f"OutcomeRecord({self._outcomes})"


def _embed(pauli, qubits, n):
    """Place a k-qubit PauliString onto graph qubits (logical i -> qubits[i])."""
    x = z = 0
    for i, q in enumerate(qubits):
        x |= ((pauli.x >> i) & 1) << q
        z |= ((pauli.z >> i) & 1) << q
    return PauliString(n, x, z, pauli.phase)


def _embed_expression(expr, qubits, n):
    return OperatorExpression(n, [(c, _embed(p, qubits, n)) for c, p in expr.terms])


def _generators(k):
    """X_0, Z_0, X_1, Z_1, ... on k logical qubits."""
    out = []
    for i in range(k):
        out.append(PauliString.single(k, i, "X"))
        out.append(PauliString.single(k, i, "Z"))
    return out


def map_pauli(images, pauli):
    """Image of a Pauli string under a Clifford map given on the generators."""
    k = pauli.n
    result = PauliString.identity(k).with_phase(pauli.phase)
    for q in range(k):
        xb, zb = (pauli.x >> q) & 1, (pauli.z >> q) & 1
        if xb:
            result = multiply(result, images[2 * q])
        if zb:
            result = multiply(result, images[2 * q + 1])
        if xb and zb:
            # Y = iXZ
            result = result.with_phase(result.phase + 1)
    return result


def map_expression(images, expr):
    return OperatorExpression(expr.n, [(c, map_pauli(images, p)) for c, p in expr.terms])


def compose_maps(first, second):
    """Images of the generators under ``second`` after ``first``.

    first holds OperatorExpressions, second PauliStrings.
    """
    return tuple(map_expression(second, image) for image in first)


def pauli_map(*labels):
    """Clifford map from the labels of the images of X_0, Z_0, X_1, ..."""
    return tuple(PauliString.from_label(label) for label in labels)


def _as_expressions(images):
    return tuple(
        image if isinstance(image, OperatorExpression) else OperatorExpression.from_pauli(image)
        for image in images
    )


def derive_corrections(graph, steps, inputs, outputs, targets):
    """Parity formulas that make every corrected branch satisfy the targets.

    For each target T (a PauliString on the inputs and outputs) a product of
    cluster stabilizers equal to sign * T * (basis letters on measured qubits)
    is found. After the measurements T has the value sign * prod(m) on the
    branch, and the output corrections flip it by a linear function of the
    parities. Solving that GF(2) system for the parities gives the formulas.

    Returns:
        tuple of Correction, one per output qubit.
    """
    # Unknowns are p_X and p_Z of every output
    measured = {s.qubit: s.skeleton_basis for s in steps}
    order = [s.qubit for s in steps]
    variables = []
    for o in outputs:
        variables += [(o, "px"), (o, "pz")]
    if len(targets) != len(variables):
        raise PlanError(f"{len(variables)} parities need as many targets, got {len(targets)}")

    # One stabilizer product per target
    signs, factor_sets, flips = [], [], []
    for target in targets:
        solution = solve_stabilizer_product(graph, target, measured)
        if solution is None:
            raise PlanError(f"target {target.to_sparse()} is not reachable from cluster stabilizers")
        signs.append(solution.sign)
        factor_sets.append({q for q in order if solution.product.letter(q) != "I"})
        row = 0
        for bit, (o, kind) in enumerate(variables):
            # X corrections anticommute with a Z part, Z corrections with an X part
            anticommutes = (target.z >> o) & 1 if kind == "px" else (target.x >> o) & 1
            row |= anticommutes << bit
        flips.append(row)

    # Solving for every parity
    formulas = {}
    for bit, variable in enumerate(variables):
        # parity = sum over targets of y_t * flip_t, with y . F = e_bit
        rows = []
        for col in range(len(variables)):
            mask = 0
            for t, flip in enumerate(flips):
                mask |= ((flip >> col) & 1) << t
            rows.append(mask)
        combination = solve_gf2(rows, [int(col == bit) for col in range(len(variables))])
        if combination is None:
            raise PlanError("targets do not determine the corrections")
        offset, factors = 1, set()
        for t in range(len(targets)):
            if (combination >> t) & 1:
                offset *= signs[t]
                factors ^= factor_sets[t]
        formulas[variable] = ParityFormula(offset, [q for q in order if q in factors])

    return tuple(Correction(o, formulas[(o, "px")], formulas[(o, "pz")]) for o in outputs)


class GatePlan:

    def __init__(self, **params):
        """Declarative measurement pattern teleporting a gate.

        Args:
            name: Gate label.
            graph: Graph carrying the cluster.
            inputs: Input qubits (one per logical qubit).
            outputs: Output qubits, same count as inputs.
            steps: Ordered MeasurementSteps.
            logical_map: Images of X_0, Z_0, X_1, ... under the ideal gate,
                PauliStrings or OperatorExpressions on the logical qubits.
            skeleton_map: Clifford map used to derive corrections, defaults
                to logical_map; required when logical_map is not Clifford.
            corrections: Per-output Corrections, derived when omitted.
            remainder: Optional non-stabilizer operator used by stabilizer
                product forms.
            outcome_labels: Mapping measured qubit -> display label.
            params: Constructor parameters for serialization.
            metadata: Free-form extra information.
        """
        self.name = params.pop("name", "custom")
        self.graph = self._is_graph_correct(params.pop("graph", None))
        self.inputs = tuple(int(q) for q in params.pop("inputs", ()))
        self.outputs = tuple(int(q) for q in params.pop("outputs", ()))
        self.steps = tuple(params.pop("steps", ()))
        logical_map = params.pop("logical_map", None)
        skeleton_map = params.pop("skeleton_map", None)
        corrections = params.pop("corrections", None)
        self.remainder = params.pop("remainder", None)
        self.outcome_labels = dict(params.pop("outcome_labels", {}))
        self.params = dict(params.pop("params", {}))
        self.metadata = dict(params.pop("metadata", {}))
        if params:
            raise TypeError(f"Unexpected plan arguments {sorted(params)}")

        # Checking the pattern
        self._is_qubits_correct()
        self._is_steps_correct()

        # Setting the gate maps
        k = len(self.inputs)
        if logical_map is None:
            logical_map = _generators(k)
        self.logical_map = _as_expressions(logical_map)
        if skeleton_map is None:
            skeleton_map = self._clifford_images(self.logical_map)
        self.skeleton_map = tuple(skeleton_map)
        if len(self.logical_map) != 2 * k or len(self.skeleton_map) != 2 * k:
            raise PlanError(f"a {k}-qubit gate map needs {2 * k} generator images")

        self._is_map_correct()
        # Corrections follow from the skeleton map
        if corrections is None:
            corrections = derive_corrections(
                self.graph, self.steps, self.inputs, self.outputs, self.skeleton_targets
            )
        self.corrections = tuple(corrections)
        self._is_corrections_correct()
        for q in self.measured:
            self.outcome_labels.setdefault(q, f"m{q}")

    @staticmethod
    def _is_graph_correct(graph):
        if not isinstance(graph, Graph):
            raise TypeError("graph must be a Graph")
        return graph

    def _is_qubits_correct(self):
        if not self.inputs or len(self.inputs) != len(self.outputs):
            raise PlanError("a plan needs the same positive number of inputs and outputs")
        io = self.inputs + self.outputs
        if len(set(io)) != len(io):
            raise PlanError("input and output qubits must be distinct")
        for q in io:
            if not 0 <= q < self.graph.n:
                raise PlanError(f"qubit {q} is not in the graph")

    def _is_steps_correct(self):
        seen = set()
        for step in self.steps:
            if not isinstance(step, MeasurementStep):
                raise TypeError("steps must be MeasurementSteps")
            if not 0 <= step.qubit < self.graph.n:
                raise PlanError(f"measured qubit {step.qubit} is not in the graph")
            if step.qubit in self.inputs or step.qubit in self.outputs:
                raise PlanError(f"qubit {step.qubit} is an input or output and cannot be measured")
            if step.qubit in seen:
                raise PlanError(f"qubit {step.qubit} is measured twice")
            for d in step.depends:
                if d not in seen:
                    raise PlanError(f"step on qubit {step.qubit} depends on {d}, which is not measured before it")
            seen.add(step.qubit)

    @staticmethod
    def _clifford_images(images):
        out = []
        for image in images:
            terms = image.terms
            if len(terms) != 1 or terms[0][0] not in (1, -1):
                raise PlanError("a non-Clifford gate map needs an explicit skeleton_map")
            coeff, pauli = terms[0]
            out.append(pauli if coeff == 1 else -pauli)
        return out

    def _is_map_correct(self):
        k = len(self.inputs)
        for image in self.skeleton_map:
            if not isinstance(image, PauliString) or image.n != k or not image.is_hermitian:
                raise PlanError("skeleton images must be Hermitian PauliStrings on the logical qubits")
        for image in self.logical_map:
            if image.n != k or not image.is_hermitian(1e-12):
                raise PlanError("gate images must be Hermitian operators on the logical qubits")
        targets = self.skeleton_targets
        for a, b in itertools.combinations(targets, 2):
            if not commutes(a, b):
                raise PlanError(f"ideal stabilizers {a.to_sparse()} and {b.to_sparse()} anticommute")
        if symplectic_rank(targets) != 2 * k:
            raise PlanError("ideal stabilizers are not independent")

    def _is_corrections_correct(self):
        if [c.qubit for c in self.corrections] != list(self.outputs):
            raise PlanError("one correction per output qubit is required")
        measured = set(self.measured)
        for c in self.corrections:
            for formula in (c.px, c.pz):
                if not set(formula.factors) <= measured:
                    raise PlanError(f"parity {formula.render()} refers to unmeasured qubits")

    # Views
    @property
    def n(self):
        return self.graph.n

    @property
    def k(self):
        return len(self.inputs)

    @property
    def measured(self):
        return tuple(s.qubit for s in self.steps)

    @property
    def bases(self):
        return {s.qubit: s.basis for s in self.steps}

    @property
    def is_clifford(self):
        return all(s.basis != "XEta" for s in self.steps)

    @property
    def is_adaptive(self):
        return any(s.is_adaptive for s in self.steps)

    @property
    def resource_qubits(self):
        return self.inputs + self.outputs

    @property
    def skeleton_targets(self):
        """g_in * skeleton(g)_out for every generator g, as graph PauliStrings."""
        return [
            multiply(_embed(g, self.inputs, self.n), _embed(image, self.outputs, self.n))
            for g, image in zip(_generators(self.k), self.skeleton_map)
        ]

    @property
    def targets(self):
        """Ideal stabilizers g_in * map(g)_out as graph OperatorExpressions."""
        return [
            _embed_expression(image, self.outputs, self.n) * _embed(g, self.inputs, self.n)
            for g, image in zip(_generators(self.k), self.logical_map)
        ]

    @property
    def ideal_stabilizers(self):
        """Targets on the resource qubits, ordered inputs then outputs."""
        k = self.k
        return [
            _embed_expression(image, range(k, 2 * k), 2 * k) * _embed(g, range(k), 2 * k)
            for g, image in zip(_generators(k), self.logical_map)
        ]

    def correction_for(self, outcomes):
        return correction_for(self, outcomes)

    def describe(self):
        """Human-readable lines: steps and parity formulas."""
        lines = [f"{self.name}: inputs {list(self.inputs)} outputs {list(self.outputs)}"]
        for step in self.steps:
            lines.append(f"  measure {step.basis} on {step.qubit} ({self.outcome_labels[step.qubit]})")
        for c in self.corrections:
            lines.append(f"  qubit {c.qubit}: p_X = {c.px.render(self.outcome_labels)}, "
                         f"p_Z = {c.pz.render(self.outcome_labels)}")
        return lines

    def __repr__(self):
        return (f"GatePlan({self.name!r}, n={self.n}, inputs={self.inputs}, "
                f"outputs={self.outputs}, steps={len(self.steps)})")


def correction_for(plan, outcomes):
    """U_J = prod over outputs of X**p_X Z**p_Z as a PauliString on the graph."""
    record = outcomes if isinstance(outcomes, OutcomeRecord) else OutcomeRecord(outcomes)
    record.check(plan)
    correction = PauliString.identity(plan.n)
    # X before Z on each output
    for c in plan.corrections:
        if c.px.evaluate(record):
            correction = multiply(correction, PauliString.single(plan.n, c.qubit, "X"))
        if c.pz.evaluate(record):
            correction = multiply(correction, PauliString.single(plan.n, c.qubit, "Z"))
    return correction


# Plan constructors
def _require_chain_segment(g, first, last):
    if first < 0 or last >= g.n:
        raise PlanError(f"chain of {g.n} qubits does not contain qubits {first}..{last}")
    for q in range(first, last):
        if not g.has_edge(q, q + 1):
            raise PlanError(f"qubits {q} and {q + 1} are not linked")


def identity_plan(g=None, k=1, l=1):
    """Identity gate on a chain: input k, output k + 2l.

    X on k+1..k+2l-1, Z on the outer neighbours k-1 and k+2l+1.
    """
    if l < 1 or k < 1:
        raise PlanError("identity plan needs k >= 1 and l >= 1")
    if g is None:
        g = chain(k + 2 * l + 2)
    _require_chain_segment(g, k - 1, k + 2 * l + 1)
    left, right = k - 1, k + 2 * l + 1
    steps = [MeasurementStep(left, "Z")]
    steps += [MeasurementStep(k + j, "X") for j in range(1, 2 * l)]
    steps.append(MeasurementStep(right, "Z"))
    labels = {left: "m_l", right: "m_r"}
    labels.update({k + j: f"m_{j}" for j in range(1, 2 * l)})
    return GatePlan(
        name="identity", graph=g, inputs=(k,), outputs=(k + 2 * l,), steps=steps,
        logical_map=pauli_map("+X", "+Z"), outcome_labels=labels,
        params={"k": k, "l": l, "chain": g.n},
    )


def _seven_qubit_chain(g):
    if g is None:
        return chain(7)
    if g.n != 7:
        raise PlanError(f"this gate needs a chain of 7 qubits, got {g.n}")
    _require_chain_segment(g, 0, 6)
    return g


def hadamard_plan(g=None):
    """Y on qubits 2, 3 and 4, Z on 0 and 6; input 1, output 5."""
    g = _seven_qubit_chain(g)
    steps = [MeasurementStep(0, "Z"), MeasurementStep(2, "Y"), MeasurementStep(3, "Y"),
             MeasurementStep(4, "Y"), MeasurementStep(6, "Z")]
    return GatePlan(name="hadamard", graph=g, inputs=(1,), outputs=(5,), steps=steps,
                    logical_map=pauli_map("+Z", "+X"))


def pi2_plan(g=None):
    """X on qubits 2 and 4, Y on 3, Z on 0 and 6; input 1, output 5."""
    g = _seven_qubit_chain(g)
    steps = [MeasurementStep(0, "Z"), MeasurementStep(2, "X"), MeasurementStep(3, "Y"),
             MeasurementStep(4, "X"), MeasurementStep(6, "Z")]
    return GatePlan(name="pi2", graph=g, inputs=(1,), outputs=(5,), steps=steps,
                    logical_map=pauli_map("-Y", "+Z"))


def zrot_plan(g=None, theta=0.0):
    """Rotation U_z(theta): qubit 3 measured in X_eta with eta = m2 * theta."""
    g = _seven_qubit_chain(g)
    theta = float(theta)
    steps = [MeasurementStep(0, "Z"), MeasurementStep(2, "X"),
             MeasurementStep(3, "XEta", angle=theta, depends=(2,)),
             MeasurementStep(4, "X"), MeasurementStep(6, "Z")]
    x = PauliString.single(1, 0, "X")
    y = PauliString.single(1, 0, "Y")
    rotated_x = OperatorExpression(1, [(np.cos(theta), x), (-np.sin(theta), y)])
    return GatePlan(
        name="zrot", graph=g, inputs=(1,), outputs=(5,), steps=steps,
        logical_map=(rotated_x, PauliString.single(1, 0, "Z")),
        skeleton_map=pauli_map("+X", "+Z"),
        remainder=PauliString.from_letters(7, {0: "Z", 1: "Y", 2: "Z"}),
        params={"theta": theta},
    )


def diag_region_coords(n):
    """Minimal coordinates for the diagonal identity of length n."""
    coords = [(i, i) for i in range(1, n + 1)]
    coords += [(i + 1, i) for i in range(1, n)]
    coords += [(0, 1), (1, 0), (n, n + 1), (n + 1, n), (2, 0), (n + 1, n - 1)]
    return coords


def diag_identity_plan_2d(g=None, n=3):
    """Identity gate along the diagonal (1,1) -> (n,n) of a square lattice.

    X on the interior diagonal (i,i), 1 < i < n, and on the parallel
    diagonal (i+1, i), 1 <= i <= n-1. Z on the six end qubits.
    """
    if n < 2:
        raise PlanError("the diagonal needs at least two sites")
    if g is None:
        g = lattice_region(diag_region_coords(n))
    if g.coords is None:
        raise PlanError("the diagonal plan needs a graph with lattice coordinates")
    for ij in diag_region_coords(n):
        if not g.has_coordinate(*ij):
            raise PlanError(f"lattice lacks coordinate {ij} for a diagonal of length {n}")

    steps = [MeasurementStep(g.vertex_at(i, i), "X") for i in range(2, n)]
    steps += [MeasurementStep(g.vertex_at(i + 1, i), "X") for i in range(1, n)]
    ends = [(0, 1), (1, 0), (n, n + 1), (n + 1, n), (2, 0), (n + 1, n - 1)]
    steps += [MeasurementStep(g.vertex_at(*ij), "Z") for ij in ends]
    labels = {s.qubit: "m_{},{}".format(*g.coords[s.qubit]) for s in steps}
    return GatePlan(
        name="diag2d", graph=g, inputs=(g.vertex_at(1, 1),), outputs=(g.vertex_at(n, n),),
        steps=steps, logical_map=pauli_map("+X", "+Z"), outcome_labels=labels,
        params={"n": n},
    )


# Plaquette 1-3-4-2 with the input legs on the left and the output legs on the right
CSIGN_GEOMETRY = {
    "coords": {
        "a_in": (0, 1), "b_in": (0, 2),
        "1": (1, 1), "2": (2, 1), "3": (1, 2), "4": (2, 2),
        "a_out": (3, 2), "b_out": (3, 1),
    },
    "boundary": (),
}
CSIGN_LABELS = ("a_in", "b_in", "1", "2", "3", "4", "a_out", "b_out")

# (stabilizer sites, target letters); the second identity has two readings
CSIGN_IDENTITIES = (
    (("a_in", "3", "a_out"), ({"a_in": "X", "a_out": "X", "b_out": "Z"},)),
    (("b_in", "4", "b_out"), ({"a_in": "Z", "b_in": "X", "b_out": "X"},
                              {"a_out": "Z", "b_in": "X", "b_out": "X"})),
    (("1", "4"), ({"a_in": "Z", "a_out": "Z"},)),
    (("2", "3"), ({"b_in": "Z", "b_out": "Z"},)),
)

CsignValidation = namedtuple("CsignValidation", ["passed", "variant", "reason", "transcript"])


def csign_geometry_graph(geometry=CSIGN_GEOMETRY):
    """Graph and labeling of a CSIGN geometry given by lattice coordinates."""
    coords = geometry["coords"]
    boundary = list(geometry.get("boundary", ()))
    order = list(CSIGN_LABELS) + [f"boundary{i}" for i in range(len(boundary))]
    points = [tuple(coords[name]) for name in CSIGN_LABELS] + [tuple(ij) for ij in boundary]
    g = lattice_region(points)
    labeling = {name: v for v, name in enumerate(order) if not name.startswith("boundary")}
    labeling["boundary"] = list(range(len(CSIGN_LABELS), len(order)))
    return g, labeling


def _misfit(product, letters, labeling, measured_x, boundary):
    """First qubit where product differs from the target letters, or None."""
    wanted = {labeling[name]: letter for name, letter in letters.items()}
    for q in range(product.n):
        letter = product.letter(q)
        if q in measured_x:
            ok = letter in ("I", "X")
        elif q in boundary:
            ok = letter in ("I", "Z")
        else:
            ok = letter == wanted.get(q, "I")
        if not ok:
            return q
    if product.phase != 0:
        return "sign"
    return None


def validate_csign_geometry(g, labeling):
    """Check the four CSIGN stabilizer-product identities on a labeled graph.

    Every product of cluster stabilizers must equal its target operator
    times X factors on qubits 1-4 and Z factors on boundary sites only.

    Returns:
        CsignValidation(passed, variant, reason, transcript); variant names
        the reading of the second identity that holds ("printed" uses
        Z on a_in, "alternate" Z on a_out).
    """
    # Checking the labeling
    transcript = []
    names = list(CSIGN_LABELS)
    missing = [name for name in names if name not in labeling]
    if missing:
        return CsignValidation(False, None, f"labeling lacks {missing}", transcript)
    vertices = [labeling[name] for name in names]
    boundary = set(labeling.get("boundary", ()))
    if len(set(vertices)) != len(vertices) or boundary & set(vertices):
        return CsignValidation(False, None, "labels must name distinct vertices", transcript)
    if any(not 0 <= v < g.n for v in list(vertices) + list(boundary)):
        return CsignValidation(False, None, "labeling refers to vertices outside the graph", transcript)

    # Each identity must reduce under one of its readings
    measured_x = {labeling[name] for name in ("1", "2", "3", "4")}
    variant = None
    for sites, readings in CSIGN_IDENTITIES:
        product = stabilizer_product(g, [labeling[s] for s in sites])
        head = " ".join(f"K_{s}" for s in sites)
        transcript.append(f"{head} = {product.to_sparse()}")
        for reading, letters in enumerate(readings):
            miss = _misfit(product, letters, labeling, measured_x, boundary)
            if miss is None:
                target = " ".join(f"{letter}_{name}" for name, letter in letters.items())
                transcript.append(f"  reduces to {target}")
                if len(readings) > 1:
                    variant = ("printed", "alternate")[reading]
                break
        else:
            target = " ".join(f"{letter}_{name}" for name, letter in readings[0].items())
            reason = f"{head} does not reduce to {target} (mismatch at {miss})"
            return CsignValidation(False, None, reason, transcript)
    return CsignValidation(True, variant, None, transcript)


def _lattice_neighbors(sites):
    return {(i + di, j + dj) for i, j in sites for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))}


def csign_candidates(max_vertices=13):
    """Labeled plaquette geometries: qubits 1-4 on a 2x2 square, legs outside it.

    Vertices beyond the eight labeled qubits are Z-measured boundary sites
    on lattice points touching the placement. Smaller regions come first,
    so the search stops at the smallest geometry that passes.

    Yields (geometry dict, graph, labeling). Nothing is yielded when the
    vertex budget is below the eight labeled qubits.
    """
    plaquette = [(1, 1), (2, 1), (1, 2), (2, 2)]
    # Lattice points touching the plaquette hold the four legs
    outer = sorted(_lattice_neighbors(plaquette) - set(plaquette))
    for extra in range(max_vertices - len(CSIGN_LABELS) + 1):
        for cells in itertools.permutations(plaquette):
            for legs in itertools.permutations(outer, 4):
                used = set(plaquette) | set(legs)
                free = sorted(_lattice_neighbors(used) - used)
                for boundary in itertools.combinations(free, extra):
                    coords = dict(zip(("1", "2", "3", "4"), cells))
                    coords.update(zip(("a_in", "b_in", "a_out", "b_out"), legs))
                    geometry = {"coords": coords, "boundary": boundary}
                    g, labeling = csign_geometry_graph(geometry)
                    yield geometry, g, labeling


def geometry_to_dict(geometry):
    """JSON form of a CSIGN geometry (coordinates as lists)."""
    return {"coords": {name: list(ij) for name, ij in sorted(geometry["coords"].items())},
            "boundary": [list(ij) for ij in geometry.get("boundary", ())]}


def geometry_from_dict(data):
    """CSIGN geometry from its JSON form; a csign_geometry.json file body is accepted too."""
    if "geometry" in data:
        data = data["geometry"]
    coords = data["coords"]
    missing = [name for name in CSIGN_LABELS if name not in coords]
    if missing:
        raise PlanError(f"CSIGN geometry lacks coordinates for {missing}")
    return {"coords": {name: tuple(int(c) for c in coords[name]) for name in CSIGN_LABELS},
            "boundary": tuple(tuple(int(c) for c in ij) for ij in data.get("boundary", ()))}


def csign_plan(geometry=CSIGN_GEOMETRY):
    """CSIGN from X measurements on the plaquette qubits 1-4."""
    # Validating the geometry before building the pattern
    g, labeling = csign_geometry_graph(geometry)
    check = validate_csign_geometry(g, labeling)
    if not check.passed:
        raise PlanError(f"CSIGN geometry fails validation: {check.reason}")
    # X on the plaquette, Z on the boundary
    steps = [MeasurementStep(labeling[name], "X") for name in ("1", "2", "3", "4")]
    steps += [MeasurementStep(q, "Z") for q in labeling["boundary"]]
    labels = {labeling[name]: f"m{name}" for name in ("1", "2", "3", "4")}
    return GatePlan(
        name="csign", graph=g,
        inputs=(labeling["a_in"], labeling["b_in"]),
        outputs=(labeling["a_out"], labeling["b_out"]),
        steps=steps,
        # X_a -> X_a Z_b, Z_a -> Z_a, X_b -> Z_a X_b, Z_b -> Z_b
        logical_map=pauli_map("+XZ", "+ZI", "+ZX", "+IZ"),
        outcome_labels=labels,
        params={} if geometry is CSIGN_GEOMETRY else {"geometry": geometry_to_dict(geometry)},
        metadata={"labeling": labeling, "variant": check.variant, "transcript": check.transcript},
    )


def _is_chain_plan(plan):
    g = plan.graph
    return plan.k == 1 and g.edges == chain(g.n).edges and plan.inputs[0] < plan.outputs[0]


def concatenate(p1, p2):
    """Feed the output of p1 into the input of p2 along one chain.

    The output qubit of p1 becomes an X-measured joining qubit, p1's Z step
    beyond its output and p2's Z step before its input are dropped.
    """
    # Both plans must be single-qubit chains, the second one Clifford
    for plan in (p1, p2):
        if not _is_chain_plan(plan):
            raise PlanError(f"{plan.name} is not a single-qubit chain plan")
    if not p2.is_clifford:
        raise PlanError(
            f"cannot append the non-Clifford plan {p2.name}: its measurement bases would have to "
            "absorb by-products of the earlier gate, which has no general form"
        )
    # Only Z steps may lie outside the joined segment
    out1, in2 = p1.outputs[0], p2.inputs[0]
    for step in p1.steps:
        if step.qubit > out1 and step.basis != "Z":
            raise PlanError(f"{p1.name} measures {step.basis} beyond its output")
    for step in p2.steps:
        if step.qubit < in2 and step.basis != "Z":
            raise PlanError(f"{p2.name} measures {step.basis} before its input")

    def relabel(q):
        return out1 + (q - in2)

    # Joining qubit out1 is measured in X
    n = out1 + 1 + (p2.n - in2 - 1)
    steps = [s for s in p1.steps if s.qubit < out1]
    steps.append(MeasurementStep(out1, "X"))
    steps += [MeasurementStep(relabel(s.qubit), s.basis) for s in p2.steps if s.qubit > in2]

    # Maps compose, nested concat configs are flattened
    logical_map = compose_maps(p1.logical_map, p2.skeleton_map)
    skeleton_map = tuple(map_pauli(p2.skeleton_map, image) for image in p1.skeleton_map)
    configs = []
    for plan in (p1, p2):
        if plan.name == "concat":
            configs += plan.params["plans"]
        else:
            configs.append(plan_to_config(plan))
    return GatePlan(
        name="concat", graph=chain(n), inputs=p1.inputs, outputs=(relabel(p2.outputs[0]),),
        steps=steps, logical_map=logical_map, skeleton_map=skeleton_map,
        params={"plans": configs},
    )


# Serialization
def plan_to_config(plan):
    """{"gate": name, "params": {...}} form of a plan."""
    if plan.name in ("hadamard", "pi2"):
        return {"gate": plan.name, "params": {}}
    if plan.name in ("identity", "zrot", "diag2d", "csign", "concat"):
        return {"gate": plan.name, "params": dict(plan.params)}
    return {
        "gate": "custom",
        "params": {
            "graph": plan.graph.to_dict(),
            "inputs": list(plan.inputs),
            "outputs": list(plan.outputs),
            "steps": [s.to_dict() for s in plan.steps],
            "map": [image.to_label() for image in plan.skeleton_map],
        },
    }


def plan_from_config(config):
    """Build a plan from its config form; raises PlanError on bad input."""
    if not isinstance(config, dict) or "gate" not in config:
        raise PlanError("a plan config needs the field 'gate'")
    gate = config["gate"]
    params = dict(config.get("params", {}))
    if gate not in GATES:
        raise PlanError(f"Unknown gate {gate!r}, expected one of {GATES}")
    try:
        if gate == "identity":
            k, l = int(params.get("k", 1)), int(params.get("l", 1))
            n = int(params.get("chain", k + 2 * l + 2))
            if n < 1:
                raise PlanError("chain length must be positive")
            return identity_plan(chain(n), k, l)
        if gate == "hadamard":
            return hadamard_plan()
        if gate == "pi2":
            return pi2_plan()
        if gate == "zrot":
            return zrot_plan(theta=float(params.get("theta", 0.0)))
        if gate == "diag2d":
            return diag_identity_plan_2d(n=int(params.get("n", 3)))
        if gate == "csign":
            # a pinned geometry, inline or as the path of a csign_geometry.json
            geometry = params.get("geometry")
            if geometry is None:
                return csign_plan()
            if isinstance(geometry, str):
                with open(geometry) as handle:
                    geometry = json.load(handle)
            return csign_plan(geometry_from_dict(geometry))
        if gate == "concat":
            plans = [plan_from_config(c) for c in params.get("plans", [])]
            if len(plans) < 2:
                raise PlanError("concat needs at least two plans")
            result = plans[0]
            for plan in plans[1:]:
                result = concatenate(result, plan)
            return result
        return GatePlan(
            name="custom",
            graph=Graph.from_dict(params["graph"]),
            inputs=params["inputs"],
            outputs=params["outputs"],
            steps=[MeasurementStep.from_dict(s) for s in params["steps"]],
            logical_map=pauli_map(*params["map"]),
        )
    except KeyError as missing:
        raise PlanError(f"{gate} plan config lacks {missing}") from None
    except (TypeError, ValueError) as error:
        if isinstance(error, PlanError):
            raise
        raise PlanError(f"invalid {gate} plan config: {error}") from None
