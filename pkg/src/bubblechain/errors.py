"""Exception hierarchy shared by all bubblechain modules."""


class BubbleChainError(Exception):
    """Base class for every error raised by this package."""


class InvalidBasisState(BubbleChainError, ValueError):
    pass


class ShapeError(BubbleChainError, ValueError):
    pass


class InvalidSitePair(BubbleChainError, ValueError):
    pass


class TooLarge(BubbleChainError):
    """Requested Hilbert space exceeds the dense dimension guard."""


class InvalidState(BubbleChainError, ValueError):
    pass


class InvalidArgument(BubbleChainError, ValueError):
    pass


class UnsupportedOption(BubbleChainError, ValueError):
    pass


class IdentificationError(BubbleChainError):
    pass


class NoResonance(BubbleChainError, ValueError):
    pass


class InvalidPlan(BubbleChainError, ValueError):
    pass


class GridError(BubbleChainError, ValueError):
    pass


class EmptyPostSelection(BubbleChainError):
    pass


class MappingUnavailable(BubbleChainError):
    pass


class LoweringError(BubbleChainError):
    pass


class Unsupported(BubbleChainError):
    pass


class ConfigError(BubbleChainError, ValueError):
    pass
