"""Error types shared across the package."""


class InputError(ValueError):
    """Raised when an operation is called with invalid inputs.

    Covers dimension mismatches, out-of-bounds points, misconfigured
    problems, and feature-name misalignment. Maps to exit code 1 in the CLI
    and HTTP 400 in the service.
    """


class ParseError(InputError):
    """Raised when a model, dataset, or action-set document fails to parse.

    The message names the offending file location (row / field) whenever it
    is known.
    """


class CombinationCapError(InputError):
    """Raised when exhaustive enumeration would exceed the configured cap.

    The caller should shrink the instance (fewer actionable features or a
    coarser grid) or raise the cap explicitly.
    """
