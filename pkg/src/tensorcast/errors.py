"""Exception taxonomy shared by the library and the CLI exit-code mapping."""


class ConfigError(Exception):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class DataError(Exception):
    """Missing, malformed or unusable input data (CLI exit code 3)."""


class NumericalError(Exception):
    """Estimation or simulation failure on otherwise well-formed data (CLI exit code 4)."""
