"""Exception hierarchy for the Morrey toolkit."""


class MorreyError(Exception):
    """Base class for every error raised by the toolkit."""


class GridError(MorreyError, ValueError):
    """Invalid grid layout, family descriptor or grid function."""


class GridFileError(GridError):
    """Malformed or truncated binary grid file."""


class ParameterError(MorreyError, ValueError):
    """Invalid exponent, radius, ladder or operator parameter."""


class ExponentRelationError(ParameterError):
    """A Spanne / Adams exponent relation does not hold."""

    def __init__(self, relation: str, detail: str = ""):
        self.relation = relation
        message = f"exponent relation violated: {relation}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class OracleSizeError(MorreyError):
    """Direct-summation oracle asked to run on a grid above its size guard."""


class ConfigError(MorreyError):
    """Bad settings file, run configuration or command-line override."""
