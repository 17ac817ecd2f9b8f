"""Exception types raised across the pipeline."""


class PathMapError(Exception):
    """Base class for all pathmap errors."""


class DegenerateInput(PathMapError, ValueError):
    pass


class DegenerateTrace(DegenerateInput):
    pass


class UnclassifiableTrace(PathMapError):
    pass


class ParseError(PathMapError, ValueError):
    def __init__(self, position, message):
        self.position = position
        self.message = message
        super().__init__(f"{position}: {message}")


class SchemaError(PathMapError, ValueError):
    def __init__(self, field, constraint):
        self.field = field
        self.constraint = constraint
        super().__init__(f"{field}: {constraint}")


class UnsupportedWorld(PathMapError):
    pass


class CollisionError(PathMapError):
    pass


class SimulationTimeout(PathMapError, TimeoutError):
    """A phase exceeded its tick or restart budget."""


class BadAlpha(PathMapError, ValueError):
    pass


class LostObject(SimulationTimeout):
    pass


class FusionGap(PathMapError):
    pass
