# Loading dependencies
import re
from enum import IntEnum

import numpy as np

from .Errors import DimensionError


class Phase(IntEnum):
    """Fourth roots of unity, stored as the exponent k of i**k."""

    ONE = 0
    I = 1
    MINUS_ONE = 2
    MINUS_I = 3

    def __mul__(self, other):
        return Phase((int(self) + int(other)) % 4)

    def as_complex(self):
        return _PHASE_VALUES[int(self)]

    @property
    def label(self):
        return _PHASE_LABELS[int(self)]


_PHASE_VALUES = (1 + 0j, 1j, -1 + 0j, -1j)
_PHASE_LABELS = ("+", "+i", "-", "-i")
_LABEL_PHASES = {"": 0, "+": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}

_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_SIGN_RE = re.compile(r"^\s*([+-]?i?)\s*")


def _popcount(value):
    return bin(value).count("1")


class PauliString:
    """Phased n-qubit Pauli operator in symplectic form.

    Bit q of ``x`` (``z``) is set when an X (Z) factor acts on qubit q. A
    qubit with both bits set carries Y, with Y = iXZ. The operator equals
    ``i**phase`` times the tensor product of the letters, so equal operators
    compare equal field by field.
    """

    __slots__ = ("n", "x", "z", "phase")

    def __init__(self, n, x=0, z=0, phase=0):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("n must be a non-negative integer")
        full = (1 << int(n)) - 1
        if x & ~full or z & ~full:
            raise DimensionError(f"masks do not fit into {n} qubits")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "x", int(x))
        object.__setattr__(self, "z", int(z))
        object.__setattr__(self, "phase", Phase(int(phase) % 4))

    def __setattr__(self, name, value):
        raise AttributeError("PauliString is immutable")

    # Constructors
    @classmethod
    def identity(cls, n):
        return cls(n)

    @classmethod
    def single(cls, n, qubit, letter):
        if not 0 <= qubit < n:
            raise DimensionError(f"qubit {qubit} out of range for n={n}")
        xb, zb = _LETTER_BITS[letter.upper()]
        return cls(n, xb << qubit, zb << qubit)

    @classmethod
    def from_letters(cls, n, letters, phase=0):
        """Build from a mapping qubit -> letter."""
        x = z = 0
        for qubit, letter in letters.items():
            if not 0 <= qubit < n:
                raise DimensionError(f"qubit {qubit} out of range for n={n}")
            xb, zb = _LETTER_BITS[letter.upper()]
            x |= xb << qubit
            z |= zb << qubit
        return cls(n, x, z, phase)

    @classmethod
    def from_label(cls, label):
        """Parse the dense form "+XIZY" (character q acts on qubit q)."""
        match = _SIGN_RE.match(label)
        sign = match.group(1)
        body = label[match.end():].strip()
        if not re.fullmatch(r"[IXYZ]*", body):
            raise ValueError(f"invalid Pauli label {label!r}")
        letters = {q: c for q, c in enumerate(body)}
        return cls.from_letters(len(body), letters, _LABEL_PHASES[sign])

    @classmethod
    def from_sparse(cls, text, n):
        """Parse the sparse form "+X0 Z2 Y3" (0-indexed) on n qubits."""
        match = _SIGN_RE.match(text)
        sign = match.group(1)
        letters = {}
        for token in text[match.end():].split():
            if token == "I":
                continue
            found = re.fullmatch(r"([XYZ])(\d+)", token)
            if found is None:
                raise ValueError(f"invalid sparse Pauli token {token!r}")
            qubit = int(found.group(2))
            if qubit in letters:
                raise ValueError(f"qubit {qubit} given twice in {text!r}")
            letters[qubit] = found.group(1)
        return cls.from_letters(n, letters, _LABEL_PHASES[sign])

    # Accessors
    def letter(self, qubit):
        return _BITS_LETTER[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    @property
    def support(self):
        mask = self.x | self.z
        return [q for q in range(self.n) if (mask >> q) & 1]

    @property
    def weight(self):
        return _popcount(self.x | self.z)

    @property
    def is_hermitian(self):
        return self.phase % 2 == 0

    @property
    def is_identity(self):
        return self.x == 0 and self.z == 0

    @property
    def sign(self):
        """+1 or -1 for Hermitian strings."""
        if not self.is_hermitian:
            raise ValueError(f"{self} is not Hermitian")
        return 1 if self.phase == Phase.ONE else -1

    def unsigned(self):
        return PauliString(self.n, self.x, self.z, 0)

    def with_phase(self, phase):
        return PauliString(self.n, self.x, self.z, phase)

    def restricted(self, qubits):
        """Keep only the factors on ``qubits`` (phase kept)."""
        mask = 0
        for q in qubits:
            mask |= 1 << q
        return PauliString(self.n, self.x & mask, self.z & mask, self.phase)

    def to_label(self):
        body = "".join(self.letter(q) for q in range(self.n))
        return self.phase.label + body

    def to_sparse(self):
        tokens = [f"{self.letter(q)}{q}" for q in self.support]
        return self.phase.label + (" ".join(tokens) if tokens else "I")

    def to_matrix(self):
        """Dense 2**n x 2**n matrix, qubit 0 is the leftmost tensor factor."""
        matrix = np.ones((1, 1), dtype=complex)
        for q in range(self.n):
            matrix = np.kron(matrix, _MATRICES[self.letter(q)])
        return self.phase.as_complex() * matrix

    # Algebra
    def __mul__(self, other):
        if isinstance(other, PauliString):
            return multiply(self, other)
        return NotImplemented

    def __neg__(self):
        return PauliString(self.n, self.x, self.z, self.phase + 2)

    def __eq__(self, other):
        if not isinstance(other, PauliString):
            return NotImplemented
        return (self.n, self.x, self.z, self.phase) == (other.n, other.x, other.z, other.phase)

    def __hash__(self):
        return hash((self.n, self.x, self.z, int(self.phase)))

    def __repr__(self):
        return f"PauliString({self.to_label()!r})"

    def __str__(self):
        return self.to_label()

    def commutes(self, other):
        return commutes(self, other)


def _check_same_size(p, q):
    if p.n != q.n:
        raise DimensionError(f"Pauli strings act on {p.n} and {q.n} qubits")


def multiply(p, q):
    """Exact operator product p·q including phase."""
    _check_same_size(p, q)
    full = (1 << p.n) - 1
    px, py, pz = p.x & ~p.z & full, p.x & p.z, ~p.x & p.z & full
    qx, qy, qz = q.x & ~q.z & full, q.x & q.z, ~q.x & q.z & full
    # XY = iZ, YZ = iX, ZX = iY and the reversed orders give -i
    plus = _popcount(px & qy) + _popcount(py & qz) + _popcount(pz & qx)
    minus = _popcount(px & qz) + _popcount(py & qx) + _popcount(pz & qy)
    phase = (int(p.phase) + int(q.phase) + plus - minus) % 4
    return PauliString(p.n, p.x ^ q.x, p.z ^ q.z, phase)


def commutes(p, q):
    """True iff the symplectic inner product of p and q is even."""
    _check_same_size(p, q)
    return (_popcount(p.x & q.z) + _popcount(p.z & q.x)) % 2 == 0


def _images(n, gate, qubits):
    """Images of X_t and Z_t under U·U† for every target qubit t."""
    single = PauliString.single

    def letters(mapping, phase=0):
        return PauliString.from_letters(n, mapping, phase)

    if gate in ("CZ", "CX"):
        if len(qubits) != 2 or qubits[0] == qubits[1]:
            raise ValueError(f"{gate} needs two distinct qubits")
        a, b = qubits
        if gate == "CZ":
            return {
                a: (letters({a: "X", b: "Z"}), single(n, a, "Z")),
                b: (letters({a: "Z", b: "X"}), single(n, b, "Z")),
            }
        return {
            a: (letters({a: "X", b: "X"}), single(n, a, "Z")),
            b: (single(n, b, "X"), letters({a: "Z", b: "Z"})),
        }

    if len(qubits) != 1:
        raise ValueError(f"{gate} acts on exactly one qubit")
    t = qubits[0]
    table = {
        "H": (single(n, t, "Z"), single(n, t, "X")),
        "S": (single(n, t, "Y"), single(n, t, "Z")),
        "SDG": (-single(n, t, "Y"), single(n, t, "Z")),
        "X": (single(n, t, "X"), -single(n, t, "Z")),
        "Y": (-single(n, t, "X"), -single(n, t, "Z")),
        "Z": (-single(n, t, "X"), single(n, t, "Z")),
    }
    if gate not in table:
        raise ValueError(f"Unsupported Clifford gate {gate!r}")
    return {t: table[gate]}


CLIFFORD_GATES = ("H", "S", "SDG", "X", "Y", "Z", "CZ", "CX")


def conjugate_by_clifford(p, gate, qubits):
    """Return U p U† for a tabulated Clifford generator U."""
    if isinstance(qubits, (int, np.integer)):
        qubits = (int(qubits),)
    qubits = tuple(int(q) for q in qubits)
    for q in qubits:
        if not 0 <= q < p.n:
            raise DimensionError(f"qubit {q} out of range for n={p.n}")
    images = _images(p.n, gate.upper(), qubits)

    mask = 0
    for q in qubits:
        mask |= 1 << q
    result = PauliString(p.n, p.x & ~mask, p.z & ~mask, p.phase)
    for t, (image_x, image_z) in images.items():
        xb, zb = (p.x >> t) & 1, (p.z >> t) & 1
        if xb and zb:
            # Y = iXZ
            product = multiply(image_x, image_z)
            factor = product.with_phase(product.phase + 1)
        elif xb:
            factor = image_x
        elif zb:
            factor = image_z
        else:
            continue
        result = multiply(result, factor)
    return result
