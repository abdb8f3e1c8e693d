# Loading dependencies
import warnings
from collections import namedtuple

import numpy as np

from .Errors import (DimensionError, NumericalConsistencyError,
                     UnsupportedBackendError)
from .PauliString import PauliString, multiply
from .StateVector import BranchEnsemble, StateVector, check_dense_size
from .Tableau import Tableau

BACKENDS = ("dense", "tableau")
PERTURBATION_MODELS = ("local_z_rotation", "local_x_rotation",
                       "random_local_rotation", "depolarizing")

# Depolarizing ensembles above this many branches trigger a warning
LARGE_ENSEMBLE = 4096


class Graph:

    def __init__(self, n, edges=(), coords=None):
        """Undirected simple graph with a qubit on every vertex.

        Args:
            n: Number of vertices, labelled 0..n-1.
            edges: Iterable of vertex pairs.
            coords: Optional mapping vertex -> (i, j) lattice coordinate.
        """
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("n must be a non-negative integer")
        self.n = int(n)

        normalized = []
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            for w in (u, v):
                if not 0 <= w < self.n:
                    raise DimensionError(f"vertex {w} out of range for n={self.n}")
            edge = (min(u, v), max(u, v))
            if edge in seen:
                raise ValueError(f"duplicate edge {edge}")
            seen.add(edge)
            normalized.append(edge)
        self.edges = tuple(sorted(normalized))

        self._neighbors = [[] for _ in range(self.n)]
        for u, v in self.edges:
            self._neighbors[u].append(v)
            self._neighbors[v].append(u)
        for nbrs in self._neighbors:
            nbrs.sort()

        self.coords = None
        self._vertex_at = None
        if coords is not None:
            self.coords = {int(v): tuple(int(c) for c in ij) for v, ij in dict(coords).items()}
            for v in self.coords:
                if not 0 <= v < self.n:
                    raise DimensionError(f"coordinate given for missing vertex {v}")
            self._vertex_at = {ij: v for v, ij in self.coords.items()}
            if len(self._vertex_at) != len(self.coords):
                raise ValueError("coordinate map is not injective")

    def neighbors(self, a):
        self._check_vertex(a)
        return list(self._neighbors[a])

    def neighbor_mask(self, a):
        mask = 0
        for v in self._neighbors[a]:
            mask |= 1 << v
        return mask

    def degree(self, a):
        return len(self.neighbors(a))

    def has_edge(self, u, v):
        return (min(u, v), max(u, v)) in set(self.edges)

    def vertex_at(self, i, j):
        """Vertex sitting at lattice coordinate (i, j)."""
        if self._vertex_at is None:
            raise ValueError("graph carries no coordinates")
        try:
            return self._vertex_at[(i, j)]
        except KeyError:
            raise DimensionError(f"no vertex at coordinate {(i, j)}") from None

    def has_coordinate(self, i, j):
        return self._vertex_at is not None and (i, j) in self._vertex_at

    def subgraph(self, vertices):
        """Induced subgraph, vertex k of the result is vertices[k]."""
        vertices = [int(v) for v in vertices]
        for v in vertices:
            self._check_vertex(v)
        relabel = {v: k for k, v in enumerate(vertices)}
        edges = [(relabel[u], relabel[v]) for u, v in self.edges if u in relabel and v in relabel]
        coords = None
        if self.coords is not None:
            coords = {relabel[v]: ij for v, ij in self.coords.items() if v in relabel}
        return Graph(len(vertices), edges, coords)

    def to_dict(self):
        data = {"n": self.n, "edges": [list(e) for e in self.edges]}
        if self.coords is not None:
            data["coords"] = {str(v): list(ij) for v, ij in sorted(self.coords.items())}
        return data

    @classmethod
    def from_dict(cls, data):
        """Parse {"n": int, "edges": [[u, v], ...], "coords": optional}."""
        if not isinstance(data, dict) or "n" not in data:
            raise ValueError("graph literal needs at least the field 'n'")
        n = data["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValueError("graph field 'n' must be a positive integer")
        edges = data.get("edges", [])
        for e in edges:
            if len(e) != 2:
                raise ValueError(f"edge {e} must have two endpoints")
        coords = data.get("coords")
        if coords is not None:
            coords = {int(v): tuple(ij) for v, ij in coords.items()}
        return cls(n, [tuple(e) for e in edges], coords)

    def _check_vertex(self, a):
        if not 0 <= a < self.n:
            raise DimensionError(f"vertex {a} out of range for n={self.n}")

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n, self.edges, self.coords) == (other.n, other.edges, other.coords)

    __hash__ = None

    def __repr__(self):
        return f"Graph(n={self.n}, edges={list(self.edges)})"


def chain(n):
    """1D line 0 - 1 - ... - (n-1)."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("a chain needs at least one vertex")
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def square(w, h):
    """w x h square lattice; coordinate (i, j) is vertex i*w + j (row i, column j)."""
    if w < 1 or h < 1:
        raise ValueError("lattice dimensions must be positive")
    edges = []
    coords = {}
    for i in range(h):
        for j in range(w):
            v = i * w + j
            coords[v] = (i, j)
            if j + 1 < w:
                edges.append((v, v + 1))
            if i + 1 < h:
                edges.append((v, v + w))
    return Graph(w * h, edges, coords)


def lattice_region(coords):
    """Induced square-lattice graph on a list of coordinates (vertex k = coords[k])."""
    coords = [tuple(int(c) for c in ij) for ij in coords]
    if not coords:
        raise ValueError("a region needs at least one coordinate")
    index = {ij: k for k, ij in enumerate(coords)}
    if len(index) != len(coords):
        raise ValueError("coordinates must be distinct")
    edges = []
    for k, (i, j) in enumerate(coords):
        for other in ((i + 1, j), (i, j + 1)):
            if other in index:
                edges.append((k, index[other]))
    return Graph(len(coords), edges, dict(enumerate(coords)))


def cluster_stabilizer(g, a):
    """K_a: X on a, Z on every neighbour of a."""
    g._check_vertex(a)
    return PauliString(g.n, 1 << a, g.neighbor_mask(a))


def cluster_stabilizers(g):
    return [cluster_stabilizer(g, a) for a in range(g.n)]


def stabilizer_product(g, sites):
    """Ordered product of K_a over sites, exact phase."""
    product = PauliString.identity(g.n)
    for a in sites:
        product = multiply(product, cluster_stabilizer(g, a))
    return product


def build_cluster(g, backend="dense", allow_large=False, check=True):
    """Cluster state of g: |+> on every vertex, then CZ along every edge.

    Raises NumericalConsistencyError if some <K_a> differs from 1.
    """
    if backend == "tableau":
        t = Tableau(g.n)
        for q in range(g.n):
            t.apply_clifford("H", q, inplace=True)
        for u, v in g.edges:
            t.apply_clifford("CZ", (u, v), inplace=True)
        state = t
        value = t.expectation_pauli
    elif backend == "dense":
        check_dense_size(g.n, allow_large)
        index = np.arange(2 ** g.n)
        amplitudes = np.full(2 ** g.n, 2 ** (-g.n / 2), dtype=complex)
        # CZ on (u, v) is the phase (-1)**(b_u b_v)
        for u, v in g.edges:
            both = (index >> (g.n - 1 - u)) & (index >> (g.n - 1 - v)) & 1
            amplitudes *= 1 - 2 * both
        state = StateVector(amplitudes, copy=False)

        def value(p):
            return state.expectation_pauli(p).real
    else:
        raise UnsupportedBackendError(f"Unknown backend {backend!r}, expected one of {BACKENDS}")

    if check:
        for a in range(g.n):
            if abs(value(cluster_stabilizer(g, a)) - 1) > 1e-12:
                raise NumericalConsistencyError(f"<K_{a}> differs from 1 after cluster preparation")
    return state


def _rotation(axis, beta):
    """exp(-i beta/2 n.sigma) for a unit axis n."""
    nx, ny, nz = axis
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    return np.array([[c - 1j * s * nz, -1j * s * (nx - 1j * ny)],
                     [-1j * s * (nx + 1j * ny), c + 1j * s * nz]], dtype=complex)


def perturb(state, model, strength, qubits=None, seed=None):
    """Apply a local noise model to every qubit (or the listed ones).

    Args:
        state: StateVector or BranchEnsemble.
        model: local_z_rotation, local_x_rotation, random_local_rotation
            (angle strength about a seeded random axis per qubit) or
            depolarizing (probability strength, returns an ensemble).
        strength: Rotation angle or depolarizing probability.
        qubits: Qubits to perturb, all by default.
        seed: Seed of random_local_rotation.
    """
    if isinstance(state, Tableau):
        raise UnsupportedBackendError("perturbations need a dense state")
    if model not in PERTURBATION_MODELS:
        raise ValueError(f"Unknown perturbation model {model!r}, expected one of {PERTURBATION_MODELS}")
    strength = float(strength)
    if not np.isfinite(strength):
        raise ValueError("perturbation strength must be finite")
    n = state.n
    qubits = list(range(n)) if qubits is None else [int(q) for q in qubits]

    if model == "depolarizing":
        if not 0 <= strength <= 1:
            raise ValueError("depolarizing probability must lie in [0, 1]")
        return _depolarize(state, strength, qubits)

    if model == "local_z_rotation":
        matrices = [_rotation((0, 0, 1), strength)] * len(qubits)
    elif model == "local_x_rotation":
        matrices = [_rotation((1, 0, 0), strength)] * len(qubits)
    else:
        rng = np.random.default_rng(seed)
        matrices = []
        for _ in qubits:
            axis = rng.normal(size=3)
            matrices.append(_rotation(axis / np.linalg.norm(axis), strength))

    def rotate(psi):
        for q, matrix in zip(qubits, matrices):
            psi = psi.apply_matrix(matrix, q)
        return psi

    if isinstance(state, BranchEnsemble):
        return BranchEnsemble([(w, rotate(psi)) for w, psi in state])
    return rotate(state)


def _depolarize(state, p, qubits):
    branches = [(1.0, state)] if isinstance(state, StateVector) else list(state)
    if p == 0:
        return BranchEnsemble(branches)
    n = branches[0][1].n
    kicks = [(1 - 0.75 * p, None)] + [(0.25 * p, letter) for letter in "XYZ"]
    for q in qubits:
        expanded = []
        for w, psi in branches:
            for weight, letter in kicks:
                if weight == 0:
                    continue
                kicked = psi if letter is None else psi.apply_pauli(PauliString.single(n, q, letter))
                expanded.append((w * weight, kicked))
        branches = expanded
    if len(branches) > LARGE_ENSEMBLE:
        warnings.warn(f"Depolarizing ensemble has {len(branches)} branches", UserWarning, stacklevel=3)
    return BranchEnsemble(branches)


def solve_gf2(rows, rhs):
    """Solve rows . c = rhs over GF(2); rows are int bitmasks.

    Free variables are set to zero. Returns the solution mask or None if
    the system is inconsistent.
    """
    pivots = []
    for row, bit in zip(rows, rhs):
        for pivot, prow, pbit in pivots:
            if row & pivot:
                row ^= prow
                bit ^= pbit
        if row == 0:
            if bit:
                return None
            continue
        pivot = row & -row
        pivots = [(pv, pr ^ row, pb ^ bit) if pr & pivot else (pv, pr, pb)
                  for pv, pr, pb in pivots]
        pivots.append((pivot, row, bit))
    solution = 0
    for pivot, _, bit in pivots:
        if bit:
            solution |= pivot
    return solution


StabilizerSolution = namedtuple("StabilizerSolution", ["sites", "sign", "product"])


def solve_stabilizer_product(g, required, measured):
    """Find cluster stabilizers whose product matches a required operator.

    The product must equal +-required on every unmeasured qubit (identity
    letters included), carry either identity or the measured basis letter
    on every measured qubit, and is otherwise unconstrained.

    Args:
        g: Graph.
        required: PauliString on g.n qubits.
        measured: Mapping qubit -> basis letter (X, Y, Z; XEta counts as X).

    Returns:
        StabilizerSolution(sites, sign, product) with sites ascending and
        product == sign * required * (letters on measured qubits), or None.
    """
    if required.n != g.n:
        raise DimensionError(f"{required} acts on {required.n} qubits, the graph has {g.n}")
    rows, rhs = [], []
    for q in range(g.n):
        x_row, z_row = 1 << q, g.neighbor_mask(q)
        basis = measured.get(q)
        if basis is None:
            rows += [x_row, z_row]
            rhs += [(required.x >> q) & 1, (required.z >> q) & 1]
            continue
        basis = basis.upper()
        if basis in ("X", "XETA"):
            rows.append(z_row)
        elif basis == "Z":
            rows.append(x_row)
        elif basis == "Y":
            rows.append(x_row ^ z_row)
        else:
            raise ValueError(f"Unsupported measurement basis {basis!r}")
        rhs.append(0)

    solution = solve_gf2(rows, rhs)
    if solution is None:
        return None
    sites = [a for a in range(g.n) if (solution >> a) & 1]
    product = stabilizer_product(g, sites)
    difference = (int(product.phase) - int(required.phase)) % 4
    if difference % 2:
        raise NumericalConsistencyError("stabilizer product is not Hermitian")
    return StabilizerSolution(sites, 1 if difference == 0 else -1, product)
