"""Exception types shared across the package.

Hitting an invariant manifold and leaving the modelled tube are normal
outcomes of the dynamics, not bugs, so they get their own classes and carry
enough context to be reported.  ``EscapedTube`` is intentionally *not* here:
an escape is returned as data by the return map, never raised.
"""


class ModelError(Exception):
    """Base class for everything raised by this package."""


class DomainError(ModelError):
    """Input lies outside the chart or section a map is defined on."""


class StableManifoldHit(ModelError):
    """The forward passage entered the local stable manifold.

    Carries the entry radius that fell below the resolution threshold (or
    was exactly zero).
    """

    def __init__(self, message, radius=0.0):
        super().__init__(message)
        self.radius = radius


class UnstableManifoldHit(ModelError):
    """Backward-time analogue of :class:`StableManifoldHit`."""

    def __init__(self, message, radius=0.0):
        super().__init__(message)
        self.radius = radius


class NoVisits(ModelError):
    """No parameter of a seed curve lands in the requested out-set."""


class InsufficientResolution(ModelError):
    """The seed curve cannot be shrunk enough to reach the requested turns."""


class TurnUnresolvable(ModelError):
    """A requested spiral turn lies below the floating-point radius floor
    or outside the reachable window."""


class RootNotConverged(ModelError):
    """A 1-d or 2-d root refinement stalled.  ``best_residual`` holds the
    smallest residual seen before giving up."""

    def __init__(self, message, best_residual=float("inf")):
        super().__init__(message)
        self.best_residual = best_residual


class WindowExhausted(ModelError):
    """A requested winding is not resolvable at some chain depth."""

    def __init__(self, message, depth=None):
        super().__init__(message)
        self.depth = depth


class ContainmentFailure(ModelError):
    """Box shrinking hit its floor without achieving containment."""

    def __init__(self, message, depth=None):
        super().__init__(message)
        self.depth = depth
