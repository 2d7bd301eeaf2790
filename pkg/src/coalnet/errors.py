"""Exception and warning types shared across the package."""


class CoalnetError(Exception):
    """Base class for all package errors."""


class ConnectivityError(CoalnetError):
    """The edge list does not form a connected network."""


class CellIndexError(CoalnetError, IndexError):
    """A cell index is outside the network."""


class ParseError(CoalnetError, ValueError):
    """A network, coalescence or jet file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PreconditionError(CoalnetError):
    """An operation was called outside its domain (e.g. not a feedforward coalescence)."""


class InputError(CoalnetError, ValueError):
    """Malformed numeric input such as a non-square matrix."""


class JetError(CoalnetError, ValueError):
    """A Taylor jet violates the diffusive constraints or a nondegeneracy requirement."""


class GenericityError(CoalnetError):
    """The bifurcation condition is met by more than one eigenvalue."""


class RankError(CoalnetError):
    """A matrix does not have the rank required by the branch analysis."""


class ConsistencyError(CoalnetError):
    """Two independent computations of the same quantity disagree."""


class NumericalError(CoalnetError):
    """A numerical procedure failed to converge or produced unusable output."""


class ClusteringWarning(UserWarning):
    """Numerically computed eigenvalues lie too close to separate reliably."""


class LinkWarning(UserWarning):
    """Branch samples at consecutive parameter values could not be matched unambiguously."""
