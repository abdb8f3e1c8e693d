# Loading dependencies
import warnings
from collections import namedtuple
from functools import lru_cache

import numpy as np
from scipy.linalg import eigvalsh

from .Errors import (DenseSizeError, DimensionError, NonHermitianError,
                     NumericalConsistencyError)
from .OperatorExpression import OperatorExpression
from .PauliString import PauliString

# Above the cap a dense run needs allow_large=True; above the warning size it warns
DENSE_QUBIT_CAP = 22
DENSE_WARN_QUBITS = 16

# Branches below this Born probability carry no state
ZERO_PROBABILITY = 1e-14

# Elements per block when many Pauli strings are evaluated at once
_BLOCK_ELEMENTS = 1 << 22

_SQRT2_INV = 1 / np.sqrt(2)
_GATES_1Q = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def uz(theta):
    """U_z(theta) = diag(exp(-i theta/2), exp(i theta/2))."""
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def ux(theta):
    """Rotation about X, H U_z(theta) H."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def x_eta(eta):
    """X_eta = U_z(eta) X U_z(-eta) = cos(eta) X + sin(eta) Y."""
    return np.array([[0, np.exp(-1j * eta)], [np.exp(1j * eta), 0]], dtype=complex)


_PARAMETRIC = {"UZ": uz, "UX": ux}


def check_dense_size(n, allow_large=False):
    """Refuse n above the dense cap unless allow_large; warn on large runs."""
    if n > DENSE_QUBIT_CAP and not allow_large:
        raise DenseSizeError(
            f"{n} qubits exceed the dense cap of {DENSE_QUBIT_CAP}; "
            "pass allow_large=True to override"
        )
    if n > DENSE_WARN_QUBITS:
        warnings.warn(f"Dense simulation of {n} qubits needs {16 * 2 ** n / 2 ** 20:.0f} MiB per state",
                      UserWarning, stacklevel=3)
    return n


def _index_mask(mask, n):
    """Move qubit bits to amplitude-index bits (qubit 0 is the most significant)."""
    out = 0
    for q in range(n):
        if (mask >> q) & 1:
            out |= 1 << (n - 1 - q)
    return out


@lru_cache(maxsize=None)
def _basis_indices(n):
    index = np.arange(2 ** n)
    index.flags.writeable = False
    return index


@lru_cache(maxsize=256)
def _pauli_table(n, x, z, phase):
    """(source, factor) with (P psi)[j] = factor[j] * psi[source[j]]."""
    source = _basis_indices(n) ^ _index_mask(x, n)
    # plain letters: prod(sigma) = i**(#Y) X^x Z^z
    factor = 1j ** ((phase + bin(x & z).count("1")) % 4) * _parity_signs(source, _index_mask(z, n))
    source.flags.writeable = False
    factor.flags.writeable = False
    return source, factor


class StateVector:

    def __init__(self, amplitudes, copy=True):
        """Dense pure state with qubit 0 as the most significant index bit.

        Args:
            amplitudes: 2**n complex numbers.
            copy: Copy the buffer; False adopts it.
        """
        if copy:
            amplitudes = np.array(amplitudes, dtype=complex)
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        size = amplitudes.shape[0]
        n = size.bit_length() - 1
        if size < 1 or 2 ** n != size:
            raise DimensionError(f"amplitude vector of length {size} is not a power of two")
        self.n = n
        self.amplitudes = amplitudes

    @classmethod
    def zeros(cls, n, allow_large=False):
        """|0...0>"""
        check_dense_size(n, allow_large)
        amplitudes = np.zeros(2 ** n, dtype=complex)
        amplitudes[0] = 1
        return cls(amplitudes, copy=False)

    @classmethod
    def plus_state(cls, n, allow_large=False):
        check_dense_size(n, allow_large)
        return cls(np.full(2 ** n, 2 ** (-n / 2), dtype=complex), copy=False)

    @classmethod
    def basis_state(cls, n, index):
        amplitudes = np.zeros(2 ** n, dtype=complex)
        amplitudes[index] = 1
        return cls(amplitudes, copy=False)

    def copy(self):
        return StateVector(self.amplitudes)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        norm = self.norm()
        if norm == 0:
            raise NumericalConsistencyError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / norm, copy=False)

    def _check_qubit(self, qubit):
        if not 0 <= qubit < self.n:
            raise DimensionError(f"qubit {qubit} out of range for n={self.n}")

    def apply_matrix(self, matrix, qubit):
        """Apply a 2x2 matrix (not necessarily unitary) to one qubit."""
        self._check_qubit(qubit)
        psi = self.amplitudes.reshape([2] * self.n)
        psi = np.moveaxis(np.tensordot(matrix, psi, axes=([1], [qubit])), 0, qubit)
        return StateVector(psi.reshape(-1), copy=False)

    def apply_gate(self, unitary, qubits, angle=None):
        """Apply a named gate or a 2x2 unitary.

        Names: H, S, SDG, X, Y, Z, CZ, CX, UZ and UX (the last two need angle).
        Returns a new state.
        """
        if isinstance(qubits, (int, np.integer)):
            qubits = (int(qubits),)
        qubits = tuple(int(q) for q in qubits)
        for q in qubits:
            self._check_qubit(q)

        if isinstance(unitary, str):
            name = unitary.upper()
            if name in ("CZ", "CX"):
                return self._apply_two_qubit(name, qubits)
            if name in _PARAMETRIC:
                if angle is None:
                    raise ValueError(f"{name} needs an angle")
                matrix = _PARAMETRIC[name](angle)
            elif name in _GATES_1Q:
                matrix = _GATES_1Q[name]
            else:
                raise ValueError(f"Unsupported gate {unitary!r}")
        else:
            matrix = np.asarray(unitary, dtype=complex)
            if matrix.shape != (2, 2):
                raise ValueError("only 2x2 matrices can be applied")
            if not np.allclose(matrix.conj().T @ matrix, np.eye(2), rtol=0, atol=1e-10):
                raise ValueError("matrix is not unitary within 1e-10")

        if len(qubits) != 1:
            raise ValueError("a single-qubit gate needs exactly one qubit")
        return self.apply_matrix(matrix, qubits[0])

    def _apply_two_qubit(self, name, qubits):
        if len(qubits) != 2 or qubits[0] == qubits[1]:
            raise ValueError(f"{name} needs two distinct qubits")
        a, b = qubits
        psi = self.amplitudes.reshape([2] * self.n).copy()

        def idx(va, vb):
            i = [slice(None)] * self.n
            i[a], i[b] = va, vb
            return tuple(i)

        if name == "CZ":
            psi[idx(1, 1)] *= -1
        else:
            psi[idx(1, 0)], psi[idx(1, 1)] = psi[idx(1, 1)].copy(), psi[idx(1, 0)].copy()
        return StateVector(psi.reshape(-1), copy=False)

    def apply_pauli(self, p):
        """Return p|psi> for a PauliString p (phase included)."""
        if p.n != self.n:
            raise DimensionError(f"{p} acts on {p.n} qubits, the state has {self.n}")
        source, factor = _pauli_table(self.n, p.x, p.z, int(p.phase))
        return StateVector(factor * self.amplitudes[source], copy=False)

    def expectation_pauli(self, p):
        """<psi|p|psi> as a complex number."""
        return complex(np.vdot(self.amplitudes, self.apply_pauli(p).amplitudes))

    def overlap(self, other):
        """<self|other>"""
        if other.n != self.n:
            raise DimensionError("states have different qubit counts")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def dumps(self, tol=0.0):
        """Debug text, one "index amplitude" line per amplitude above tol."""
        lines = []
        for index, amplitude in enumerate(self.amplitudes):
            if abs(amplitude) > tol:
                lines.append(f"{index} {amplitude.real:+.12f}{amplitude.imag:+.12f}j")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"StateVector(n={self.n}, norm={self.norm():.12f})"


def _parity_signs(index, mask):
    signs = np.ones(index.shape[0])
    bit = 0
    while mask >> bit:
        if (mask >> bit) & 1:
            signs *= 1 - 2 * ((index >> bit) & 1)
        bit += 1
    return signs


def apply_gate(s, unitary, qubits, angle=None):
    return s.apply_gate(unitary, qubits, angle=angle)


Branch = namedtuple("Branch", ["outcome", "probability", "state"])
Branch.__doc__ = """Projective branch: outcome +-1, Born probability, normalized post-state.

state is None when the probability is below ZERO_PROBABILITY.
"""


def observable_matrix(observable, angle=None):
    """2x2 matrix of a single-qubit observable X, Y, Z or XEta(angle)."""
    name = observable.upper()
    if name == "XETA":
        if angle is None:
            raise ValueError("XEta needs an angle")
        return x_eta(angle)
    if name not in ("X", "Y", "Z"):
        raise ValueError(f"Unsupported observable {observable!r}")
    return _GATES_1Q[name]


def measure_branches(s, observable, qubit, angle=None):
    """Both projective branches of measuring a single-qubit observable.

    Returns:
        (Branch for +1, Branch for -1)
    """
    s._check_qubit(qubit)
    matrix = observable_matrix(observable, angle)
    identity = np.eye(2, dtype=complex)
    branches = []
    for outcome in (1, -1):
        projected = s.apply_matrix((identity + outcome * matrix) / 2, qubit)
        probability = float(np.vdot(projected.amplitudes, projected.amplitudes).real)
        if probability < ZERO_PROBABILITY:
            branches.append(Branch(outcome, probability, None))
        else:
            state = StateVector(projected.amplitudes / np.sqrt(probability), copy=False)
            branches.append(Branch(outcome, probability, state))
    return tuple(branches)


class BranchEnsemble:

    def __init__(self, branches, tol=1e-10):
        """Mixed state sum_i w_i |psi_i><psi_i| over pure branches.

        Args:
            branches: Iterable of (weight, StateVector).
            tol: Tolerance on the weight sum.
        """
        branches = [(float(w), s) for w, s in branches]
        if not branches:
            raise ValueError("an ensemble needs at least one branch")
        n = branches[0][1].n
        for w, s in branches:
            if w < 0:
                raise ValueError("branch weights must be non-negative")
            if s.n != n:
                raise DimensionError("all branches must have the same qubit count")
        total = sum(w for w, _ in branches)
        if abs(total - 1) > tol:
            raise NumericalConsistencyError(f"branch weights sum to {total}, not 1")
        self.n = n
        self.branches = branches

    @classmethod
    def pure(cls, state):
        return cls([(1.0, state)])

    @classmethod
    def maximally_mixed(cls, n):
        """Uniform ensemble over the computational basis."""
        check_dense_size(n)
        weight = 2.0 ** (-n)
        return cls([(weight, StateVector.basis_state(n, i)) for i in range(2 ** n)])

    @property
    def weights(self):
        return [w for w, _ in self.branches]

    @property
    def states(self):
        return [s for _, s in self.branches]

    def __iter__(self):
        return iter(self.branches)

    def __len__(self):
        return len(self.branches)

    def __repr__(self):
        return f"BranchEnsemble(n={self.n}, branches={len(self.branches)})"


def as_ensemble(state):
    if isinstance(state, BranchEnsemble):
        return state
    if isinstance(state, StateVector):
        return BranchEnsemble.pure(state)
    raise TypeError("expected a StateVector or a BranchEnsemble")


def pauli_expectations(state, paulis):
    """<P> for every PauliString P, as a complex array.

    Each pure branch is evaluated against all strings in blocks; the
    branches of an ensemble are added in order with their weights.
    """
    ensemble = as_ensemble(state)
    paulis = list(paulis)
    for p in paulis:
        if p.n != ensemble.n:
            raise DimensionError(f"{p} acts on {p.n} qubits, the state has {ensemble.n}")
    values = np.zeros(len(paulis), dtype=complex)
    rows = max(1, _BLOCK_ELEMENTS >> ensemble.n)
    for start in range(0, len(paulis), rows):
        tables = [_pauli_table(p.n, p.x, p.z, int(p.phase)) for p in paulis[start:start + rows]]
        sources = np.stack([source for source, _ in tables])
        factors = np.stack([factor for _, factor in tables])
        for weight, psi in ensemble:
            a = psi.amplitudes
            values[start:start + len(tables)] += weight * (a.conj() * factors * a[sources]).sum(axis=1)
    return values


def expectation(state, expr, tol=1e-10):
    """Real expectation of an OperatorExpression (or PauliString).

    Raises NonHermitianError when the imaginary residue exceeds tol.
    """
    if isinstance(expr, PauliString):
        expr = OperatorExpression.from_pauli(expr)
    ensemble = as_ensemble(state)
    if expr.n != ensemble.n:
        raise DimensionError(f"expression acts on {expr.n} qubits, the state has {ensemble.n}")

    terms = expr.terms
    if not terms:
        return 0.0
    coefficients = np.array([coeff for coeff, _ in terms], dtype=complex)
    # fixed summation order: branches per term, then terms in order
    value = complex(np.sum(coefficients * pauli_expectations(ensemble, [p for _, p in terms])))
    if abs(value.imag) > tol:
        raise NonHermitianError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def reduced_density(state, qubits, tol=1e-10):
    """Partial trace keeping ``qubits`` in the given order.

    The first listed qubit is the most significant factor, matching
    PauliString.to_matrix on the kept qubits.
    """
    ensemble = as_ensemble(state)
    qubits = [int(q) for q in qubits]
    if len(set(qubits)) != len(qubits):
        raise ValueError("qubits must be distinct")
    for q in qubits:
        if not 0 <= q < ensemble.n:
            raise DimensionError(f"qubit {q} out of range for n={ensemble.n}")

    k = len(qubits)
    rest = [q for q in range(ensemble.n) if q not in qubits]
    rho = np.zeros((2 ** k, 2 ** k), dtype=complex)
    for weight, psi in ensemble:
        tensor = psi.amplitudes.reshape([2] * ensemble.n).transpose(qubits + rest)
        matrix = tensor.reshape(2 ** k, -1)
        rho += weight * (matrix @ matrix.conj().T)
    check_density(rho, tol)
    return rho


def reduced_two_qubit_density(state, qubits, tol=1e-10):
    a, b = qubits
    if a == b:
        raise ValueError("the two qubits must differ")
    return reduced_density(state, (a, b), tol)


def check_density(rho, tol=1e-10):
    """Hermitian, unit trace and eigenvalues above -tol, else raise."""
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=tol):
        raise NumericalConsistencyError("density matrix is not Hermitian")
    trace = np.trace(rho).real
    if abs(trace - 1) > tol:
        raise NumericalConsistencyError(f"density matrix has trace {trace}")
    smallest = eigvalsh(rho)[0]
    if smallest < -tol:
        raise NumericalConsistencyError(f"density matrix has eigenvalue {smallest:.3e}")
    return rho
