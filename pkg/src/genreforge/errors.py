"""Exception taxonomy shared across the package."""


class GenreforgeError(Exception):
    """Base class for all errors raised by this package."""


# --- audio ingestion ---------------------------------------------------------

class UnreadableFileError(GenreforgeError):
    """The file is missing, truncated, or not a RIFF/WAVE container."""


class UnsupportedEncodingError(GenreforgeError):
    """The WAV payload is not 8- or 16-bit integer PCM, mono or stereo."""


class EmptyAudioError(GenreforgeError):
    """The file decoded to zero samples."""


class DegenerateConfigError(GenreforgeError):
    """A framing parameter produced a zero-length frame, hop, or window."""


class SignalTooShortError(GenreforgeError):
    """The signal is shorter than a single analysis frame."""


class ClipTooShortError(GenreforgeError):
    """The clip is too short for the requested summarization."""


# --- series handling ---------------------------------------------------------

class TooShortError(GenreforgeError):
    """A series has fewer elements than the operation needs."""


class LengthMismatchError(GenreforgeError):
    """Two series that must align have different lengths."""


# --- selection ---------------------------------------------------------------

class EmptySetError(GenreforgeError):
    """An entropy or split computation received no labels."""


class NotAPartitionError(GenreforgeError):
    """Child label groups do not partition the parent labels."""


class DegenerateDatasetError(GenreforgeError):
    """The dataset lacks the class structure the operation requires."""


class SchemaMismatchError(GenreforgeError):
    """A vector or matrix does not match the expected component schema."""


# --- autoencoder -------------------------------------------------------------

class DimensionMismatchError(GenreforgeError):
    """Input width does not match the network's input layer."""


class InputOutOfRangeError(GenreforgeError):
    """Training inputs must lie in the closed unit interval."""


class StaleCacheError(GenreforgeError):
    """A backward pass received a cache from a different forward pass."""


# --- svm ---------------------------------------------------------------------

class SingleClassError(GenreforgeError):
    """Binary training needs both a positive and a negative example."""


class TooFewSamplesError(GenreforgeError):
    """Not enough samples per class for the requested fold count."""


# --- orchestration -----------------------------------------------------------

class IndivisibleSplitError(GenreforgeError):
    """Requested split sizes are not exactly satisfiable per class."""


class ConfigError(GenreforgeError):
    """An experiment configuration file is malformed or inconsistent."""
