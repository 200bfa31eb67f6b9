"""Exception taxonomy shared by all modules.

InputError marks bad user data (CLI exit 3); the others mark computations
that refuse to proceed (CLI exit 2).
"""


class InputError(ValueError):
    """Invalid argument: wrong group element, mismatched sizes, bad schema."""


class CapacityError(RuntimeError):
    """A configured resource cap (ball size, conductor, panel count) was hit."""


class SingularPathError(RuntimeError):
    """A path sample failed the invertibility tolerance."""


class ClusteringError(RuntimeError):
    """Eigenvalue clusters could not be separated at the configured gap."""


class NotCertifiedError(RuntimeError):
    """A bound or extension could not be certified (e.g. exponential class growth)."""
