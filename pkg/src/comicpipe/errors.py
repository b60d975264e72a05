"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: decode failures exit 2, backend
failures exit 3, prompt-budget overflow exits 4, everything else 1.
"""


class ComicPipeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ComicPipeError):
    """A caller-supplied value violates a documented precondition."""


class ImageDecodeError(ComicPipeError):
    """An image file could not be read or decoded."""


class SeriesNotFoundError(ComicPipeError):
    """The requested comic series is not present in the label registry."""


class BackendError(ComicPipeError):
    """Base class for model-backend failures."""


class BackendUnavailableError(BackendError):
    """Transport-level failure (connection, timeout, HTTP error) after retries."""


class ProtocolError(BackendError):
    """The backend answered, but the payload violates the wire protocol."""


class TokenBudgetExceededError(ComicPipeError):
    """An enhanced prompt exceeds the token budget under the fail policy."""


class ConfigError(ComicPipeError):
    """Pipeline configuration file is missing, malformed, or inconsistent."""
