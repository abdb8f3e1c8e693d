# Loading dependencies
import numpy as np

from .Errors import ContradictionError, DimensionError, NumericalConsistencyError
from .PauliString import PauliString, commutes, conjugate_by_clifford, multiply


class Tableau:

    def __init__(self, n, stabilizers=None, destabilizers=None):
        """Stabilizer state given by n generators and their destabilizers.

        destabilizers[i] anticommutes with stabilizers[i] and commutes with
        every other stabilizer. Without generators the state is |0...0>.

        Args:
            n: Number of qubits.
            stabilizers: Sequence of n Hermitian PauliStrings.
            destabilizers: Sequence of n PauliStrings.
        """
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError("n must be a positive integer")
        self.n = int(n)

        if stabilizers is None and destabilizers is None:
            stabilizers = [PauliString.single(self.n, q, "Z") for q in range(self.n)]
            destabilizers = [PauliString.single(self.n, q, "X") for q in range(self.n)]
        elif stabilizers is None or destabilizers is None:
            raise ValueError("stabilizers and destabilizers must be given together")

        self.stabilizers = list(stabilizers)
        self.destabilizers = list(destabilizers)
        if len(self.stabilizers) != self.n or len(self.destabilizers) != self.n:
            raise DimensionError(f"a {self.n}-qubit tableau needs {self.n} generators of each kind")
        for p in self.stabilizers + self.destabilizers:
            if p.n != self.n:
                raise DimensionError(f"generator {p} does not act on {self.n} qubits")

    def copy(self):
        return Tableau(self.n, self.stabilizers, self.destabilizers)

    def apply_clifford(self, gate, qubits, inplace=False):
        """Conjugate every generator by the Clifford gate."""
        target = self if inplace else self.copy()
        target.stabilizers = [conjugate_by_clifford(p, gate, qubits) for p in target.stabilizers]
        target.destabilizers = [conjugate_by_clifford(p, gate, qubits) for p in target.destabilizers]
        return target

    def stabilizer_group_sign(self, p):
        """Return s in {+1, -1} with s·p in the stabilizer group, or 0.

        0 means p anticommutes with some generator, hence lies outside the
        group up to sign.
        """
        self._check(p)
        if any(not commutes(p, s) for s in self.stabilizers):
            return 0
        # p commutes with all stabilizers, so ±p = product of the s_i whose
        # destabilizer anticommutes with p
        product = PauliString.identity(self.n)
        for s, d in zip(self.stabilizers, self.destabilizers):
            if not commutes(p, d):
                product = multiply(product, s)
        if product.x != p.x or product.z != p.z:
            raise NumericalConsistencyError("tableau generators are not independent")
        difference = (int(product.phase) - int(p.phase)) % 4
        if difference % 2:
            raise ValueError(f"{p} is not Hermitian")
        return 1 if difference == 0 else -1

    def expectation_pauli(self, p):
        """<p> on the stabilizer state: +1, -1 or 0."""
        self._check(p)
        if not p.is_hermitian:
            raise ValueError(f"{p} is not Hermitian")
        return self.stabilizer_group_sign(p)

    def measure_pauli(self, p, outcome=None, rng=None, inplace=False):
        """Projectively measure the Hermitian Pauli string p.

        Args:
            p: Observable.
            outcome: Force +1 or -1; None draws the outcome from rng.
            rng: numpy Generator used when the outcome is random.
            inplace: Update this tableau rather than a copy.

        Returns:
            (outcome, posterior tableau, deterministic flag)
        """
        self._check(p)
        if not p.is_hermitian:
            raise ValueError(f"{p} is not Hermitian")
        if outcome not in (None, 1, -1):
            raise ValueError("outcome must be +1, -1 or None")

        target = self if inplace else self.copy()
        anticommuting = [i for i, s in enumerate(target.stabilizers) if not commutes(p, s)]

        if not anticommuting:
            determined = target.stabilizer_group_sign(p)
            if outcome is not None and outcome != determined:
                raise ContradictionError(
                    f"outcome {outcome:+d} forced on {p}, but the state fixes {determined:+d}"
                )
            return determined, target, True

        if outcome is None:
            if rng is None:
                raise ValueError("a random outcome needs an rng")
            outcome = 1 if rng.integers(0, 2) == 0 else -1

        r = anticommuting[0]
        pivot = target.stabilizers[r]
        for i in anticommuting[1:]:
            target.stabilizers[i] = multiply(target.stabilizers[i], pivot)
        for i, d in enumerate(target.destabilizers):
            if i != r and not commutes(p, d):
                target.destabilizers[i] = multiply(d, pivot)
        target.destabilizers[r] = pivot
        target.stabilizers[r] = p if outcome == 1 else -p
        return outcome, target, False

    def validate(self):
        """Debug check of the tableau invariants; raises on violation."""
        for i, s in enumerate(self.stabilizers):
            if not s.is_hermitian:
                raise NumericalConsistencyError(f"stabilizer {i} is not Hermitian")
            for j, t in enumerate(self.stabilizers[i + 1:], start=i + 1):
                if not commutes(s, t):
                    raise NumericalConsistencyError(f"stabilizers {i} and {j} anticommute")
            for j, d in enumerate(self.destabilizers):
                if commutes(s, d) == (i == j):
                    raise NumericalConsistencyError(
                        f"destabilizer {j} has the wrong commutation with stabilizer {i}"
                    )
        if symplectic_rank(self.stabilizers) != self.n:
            raise NumericalConsistencyError("stabilizers are not independent")
        return True

    def dumps(self):
        """Text form: section markers followed by one signed string per line."""
        lines = ["[stabilizers]"]
        lines += [p.to_label() for p in self.stabilizers]
        lines.append("[destabilizers]")
        lines += [p.to_label() for p in self.destabilizers]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        sections = {"[stabilizers]": [], "[destabilizers]": []}
        current = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line in sections:
                current = sections[line]
            elif current is None:
                raise ValueError(f"Pauli string {line!r} found before a section marker")
            else:
                current.append(PauliString.from_label(line))
        stabilizers = sections["[stabilizers]"]
        return cls(len(stabilizers), stabilizers, sections["[destabilizers]"])

    def _check(self, p):
        if p.n != self.n:
            raise DimensionError(f"{p} acts on {p.n} qubits, the tableau on {self.n}")

    def __repr__(self):
        return f"Tableau(n={self.n}, stabilizers={[p.to_label() for p in self.stabilizers]})"


def symplectic_rank(paulis):
    """GF(2) rank of the symplectic vectors (x | z) of the given strings."""
    rows = [p.x | (p.z << p.n) for p in paulis]
    rank = 0
    while rows:
        pivot = rows.pop()
        if pivot == 0:
            continue
        rank += 1
        low = pivot & -pivot
        rows = [row ^ pivot if row & low else row for row in rows]
    return rank


def apply_clifford(t, gate, qubits):
    """Functional form of Tableau.apply_clifford (returns a new tableau)."""
    return t.apply_clifford(gate, qubits)


def measure_pauli(t, p, outcome=None, rng=None):
    """Functional form of Tableau.measure_pauli (never mutates t)."""
    return t.measure_pauli(p, outcome=outcome, rng=rng)


def expectation_pauli(t, p):
    return t.expectation_pauli(p)
