"""Exception hierarchy shared across the package.

Each error class carries the process exit code the CLI maps it to, so
failure categories stay distinguishable from scripts.
"""


class VlaseError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(VlaseError):
    """Invalid configuration: bad flag values, mask/class mismatches,
    codebook/index pairing violations."""

    exit_code = 2


class InputError(VlaseError):
    """Malformed in-memory input: dimension mismatches, out-of-range
    values, duplicate pixels."""

    exit_code = 2


class TrainingError(VlaseError):
    """Codebook training cannot proceed (e.g. fewer features than clusters)."""

    exit_code = 2


class FormatError(VlaseError):
    """A file does not conform to one of the recognized formats."""

    exit_code = 3


class CorruptionError(FormatError):
    """A recognized file is damaged: truncated, checksum failure, or
    inconsistent declared counts.

    ``offset`` is the byte position where the damage was detected, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class EvaluationError(VlaseError):
    """Accuracy evaluation cannot be computed (e.g. missing ground truth)."""

    exit_code = 4
