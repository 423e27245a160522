"""Exception hierarchy shared by the library and the command-line front end."""


class OnlineNPError(Exception):
    """Base class for every error raised deliberately by this package."""

    exit_code = 1


class InvalidArgumentError(OnlineNPError, ValueError):
    exit_code = 2


class ConfigError(OnlineNPError, ValueError):
    """A configuration key is unknown, missing or out of range."""

    exit_code = 2

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class DataError(OnlineNPError, ValueError):
    exit_code = 3


class ParseError(DataError):
    """A data file could not be parsed; carries the 1-based line number."""

    def __init__(self, path, line, message):
        self.path = path
        self.line = line
        super().__init__(f"{path}, line {line}: {message}")


class SchemaError(DataError):
    pass


class ProtocolError(OnlineNPError):
    exit_code = 4


class SnapshotError(OnlineNPError):
    exit_code = 3
