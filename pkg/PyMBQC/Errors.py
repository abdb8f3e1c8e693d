"""Exceptions raised by PyMBQC.

Every class also derives from the builtin exception a caller would expect,
so ``except ValueError`` style handling keeps working.
"""


class MBQCError(Exception):
    """Base class of all PyMBQC errors."""


class DimensionError(MBQCError, ValueError):
    """Qubit counts do not match or an index is out of range."""


class ContradictionError(MBQCError, ValueError):
    """A forced outcome contradicts a deterministic measurement."""


class NonHermitianError(MBQCError, ValueError):
    """An expectation value carries an imaginary part above tolerance."""


class NumericalConsistencyError(MBQCError, ArithmeticError):
    """A numerical self-check failed (trace, positivity, agreement of formulas)."""


class UnsupportedBackendError(MBQCError, NotImplementedError):
    """The requested backend or derivation cannot handle this input."""


class PlanError(MBQCError, ValueError):
    """A gate plan is malformed or cannot be built on the given graph."""


class StabilizerFormUnavailable(MBQCError, LookupError):
    """No stabilizer-product form is tabulated for this correlation."""


class DenseSizeError(MBQCError, MemoryError):
    """The dense simulator would exceed its qubit cap."""


class ConfigError(MBQCError, ValueError):
    """An experiment configuration could not be parsed or validated."""
