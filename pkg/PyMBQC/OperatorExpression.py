# Loading dependencies
import numbers

import numpy as np

from .Errors import DimensionError
from .PauliString import PauliString, multiply


class OperatorExpression:
    """Weighted sum of Pauli strings on n qubits.

    Terms are keyed by their (x, z) masks. The phase of every string is folded
    into its coefficient, so a term ``c`` at key ``(x, z)`` stands for ``c``
    times the plain letter product, which is Hermitian. The expression is
    Hermitian exactly when all coefficients are real.
    """

    def __init__(self, n, terms=None):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("n must be a non-negative integer")
        self.n = int(n)
        self._terms = {}
        for coeff, pauli in terms or ():
            self._add_term(coeff, pauli)

    @classmethod
    def from_pauli(cls, pauli, coeff=1.0):
        return cls(pauli.n, [(coeff, pauli)])

    @classmethod
    def identity(cls, n, coeff=1.0):
        return cls(n, [(coeff, PauliString.identity(n))])

    def _add_term(self, coeff, pauli):
        if pauli.n != self.n:
            raise DimensionError(f"{pauli} acts on {pauli.n} qubits, the expression on {self.n}")
        value = complex(coeff) * pauli.phase.as_complex()
        key = (pauli.x, pauli.z)
        total = self._terms.get(key, 0j) + value
        if total == 0:
            self._terms.pop(key, None)
        else:
            self._terms[key] = total

    @property
    def terms(self):
        """List of (coefficient, unsigned PauliString), ordered by masks."""
        return [
            (coeff, PauliString(self.n, x, z))
            for (x, z), coeff in sorted(self._terms.items())
        ]

    @property
    def paulis(self):
        return [pauli for _, pauli in self.terms]

    def coefficient(self, pauli):
        """Coefficient of the plain letter product carrying pauli's masks."""
        return self._terms.get((pauli.x, pauli.z), 0j)

    def __len__(self):
        return len(self._terms)

    def is_hermitian(self, tol=0.0):
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def real_terms(self, tol=1e-12):
        """Terms as (float coefficient, PauliString); raises if not Hermitian."""
        if not self.is_hermitian(tol):
            raise ValueError("expression is not Hermitian")
        return [(coeff.real, pauli) for coeff, pauli in self.terms]

    def to_matrix(self):
        dim = 2 ** self.n
        matrix = np.zeros((dim, dim), dtype=complex)
        for coeff, pauli in self.terms:
            matrix += coeff * pauli.to_matrix()
        return matrix

    # Algebra
    def _coerce(self, other):
        if isinstance(other, OperatorExpression):
            if other.n != self.n:
                raise DimensionError(f"expressions act on {self.n} and {other.n} qubits")
            return other
        if isinstance(other, PauliString):
            return OperatorExpression.from_pauli(other)
        if isinstance(other, numbers.Number):
            return OperatorExpression.identity(self.n, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        result = OperatorExpression(self.n)
        result._terms = dict(self._terms)
        for (x, z), coeff in other._terms.items():
            result._add_term(coeff, PauliString(self.n, x, z))
        return result

    __radd__ = __add__

    def __neg__(self):
        result = OperatorExpression(self.n)
        result._terms = {key: -coeff for key, coeff in self._terms.items()}
        return result

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            result = OperatorExpression(self.n)
            for (x, z), coeff in self._terms.items():
                result._add_term(coeff * other, PauliString(self.n, x, z))
            return result
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        result = OperatorExpression(self.n)
        for (x1, z1), c1 in sorted(self._terms.items()):
            left = PauliString(self.n, x1, z1)
            for (x2, z2), c2 in sorted(other._terms.items()):
                result._add_term(c1 * c2, multiply(left, PauliString(self.n, x2, z2)))
        return result

    def __rmul__(self, other):
        if isinstance(other, numbers.Number):
            return self * other
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self

    def __eq__(self, other):
        if isinstance(other, PauliString):
            other = OperatorExpression.from_pauli(other)
        if not isinstance(other, OperatorExpression):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    __hash__ = None

    def __repr__(self):
        if not self._terms:
            return f"OperatorExpression(n={self.n}, 0)"
        parts = []
        for coeff, pauli in self.terms:
            value = coeff.real if coeff.imag == 0 else coeff
            parts.append(f"{value:+g}*{pauli.to_sparse()[1:]}")
        return f"OperatorExpression(n={self.n}, {' '.join(parts)})"
