"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes. The message names both shapes."""


class DomainError(ValueError):
    """An argument is outside the operation's domain (empty input, bad depth, ...)."""


class CorpusError(ValueError):
    """A corpus file failed to parse or validate. The message names the line."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss. The message names epoch and batch."""
