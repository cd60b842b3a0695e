class NumericalFailure(RuntimeError):
    """Base class for failures of the time stepping itself."""


class TracerDivergenceError(NumericalFailure):
    """A characteristic trace produced a non-finite state."""


class CharacteristicCrossingError(NumericalFailure):
    """Traced cell endpoints swapped order: characteristics have crossed."""
