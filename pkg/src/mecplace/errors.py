class MecPlaceError(Exception):
    """Base class for errors raised by this package."""


class TopologyParseError(MecPlaceError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DisconnectedGraphError(MecPlaceError, ValueError):
    def __init__(self, i: int, j: int):
        super().__init__(f"nodes {i} and {j} are not connected")
        self.pair = (i, j)


class UnresolvedReferenceError(MecPlaceError, KeyError):
    """A solution or scenario names a request, site, server or slot that does not exist."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class InstanceTooLargeError(MecPlaceError):
    """The exact solver refuses instances beyond its configured caps."""
