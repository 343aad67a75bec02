"""Exception types raised across the package."""


class GraphodError(Exception):
    """Base class for all package errors."""


class GraphFormatError(GraphodError, ValueError):
    """Malformed graph input. ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}"
        super().__init__(f"{where}: {message}" if where else message)


class GraphBoundsError(GraphFormatError):
    """A node id is outside the declared node range."""


class ShapeError(GraphodError, ValueError):
    pass


class ContractError(GraphodError, ValueError):
    """A documented precondition was violated by the caller."""


class ConfigError(GraphodError, ValueError):
    pass


class TrainingDivergedError(GraphodError, RuntimeError):
    def __init__(self, epoch, loss):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
