"""Exception hierarchy shared by all zloch modules.

Every error that reflects bad *input* (rather than an internal bug) derives
from :class:`InputError`, so callers and the command line driver can map it
to the "invalid input" exit code uniformly.
"""


class ZlochError(Exception):
    """Base class for all package errors."""


class InputError(ZlochError):
    """Malformed or inconsistent input data."""


class EmbeddingError(InputError):
    """A polyline does not lie on the ambient lattice skeleton."""


class UndersampledError(InputError):
    """A phase step is too close to the aliasing threshold to be trusted."""


class ZeroSampleError(InputError):
    """A section sample vanishes where a nonzero value is required."""


class FluxMismatchError(InputError):
    """Requested vortex content is incompatible with the bundle flux."""


class NonIntegralFluxError(InputError):
    """Plaquette flux sums fail the integrality check (corrupt bundle data)."""


class CapabilityError(InputError):
    """Operation not supported for this manifold family."""


class ChainBoundaryError(InputError):
    """A chain that must be closed has nonzero boundary."""


class NotSurjectiveError(InputError):
    """A spinor homomorphism is too degenerate for a kernel frame."""


class FrameOverlapError(InputError):
    """Frame-field overlap determinants vanish (field too rough)."""


class InternalConsistencyError(ZlochError):
    """An exact integer contract failed; indicates corrupt intermediate data."""


class SearchBoundExceeded(ZlochError):
    """Exact search gave up before certifying optimality."""

    def __init__(self, message, best_value=None, best_witness=None):
        super().__init__(message)
        self.best_value = best_value
        self.best_witness = best_witness
