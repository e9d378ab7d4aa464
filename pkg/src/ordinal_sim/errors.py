"""Exception hierarchy shared by the library and the command line."""


class OrdinalSimError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 2


class InputError(OrdinalSimError, ValueError):
    """A caller passed an invalid argument (bad label, non-finite value, ...)."""

    exit_code = 1


class ConfigError(OrdinalSimError, ValueError):
    """Inconsistent model or training configuration."""

    exit_code = 1


class DataFormatError(OrdinalSimError, ValueError):
    """A dataset, embedding, scheme or checkpoint file could not be parsed."""

    exit_code = 2

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class DegenerateSchemeError(OrdinalSimError, ValueError):
    """Quantile derivation produced fewer than K distinct buckets."""

    exit_code = 2


class EmptyEmbeddingError(OrdinalSimError, ValueError):
    """Every token of a text was out of vocabulary."""

    exit_code = 2


class NumericError(OrdinalSimError, ArithmeticError):
    """A non-finite value appeared during forward pass or training."""

    exit_code = 3
