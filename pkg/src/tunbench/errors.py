"""Exception hierarchy shared across the package."""


class TunbenchError(Exception):
    """Base class for all package errors."""


class FormatError(TunbenchError):
    """Malformed input: key file, wire packet framing, or record header."""


class AuthError(TunbenchError):
    """HMAC tag verification failed.

    Carries no plaintext-derived data by construction: it is raised before
    any decryption output exists.
    """


class PaddingError(TunbenchError):
    """Invalid PKCS#7 padding after a successful authentication check."""


class SizeError(TunbenchError):
    """Plaintext too large to seal."""


class DecompressError(TunbenchError):
    """Malformed compressed stream or expansion beyond the configured cap."""


class ConfigError(TunbenchError):
    """Bad tunnel configuration file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SeqExhausted(TunbenchError):
    """Outgoing sequence space exhausted; endpoint must restart."""


class ReplayError(TunbenchError):
    """Packet rejected by the anti-replay window."""

    def __init__(self, kind):
        super().__init__(f"replay check failed: {kind}")
        self.kind = kind  # "duplicate" or "stale"


class CalibrationError(TunbenchError):
    """Link calibration produced a non-physical fit."""


class SpecError(TunbenchError):
    """Invalid traffic specification."""


class SearchError(TunbenchError):
    """Throughput search could not bracket a passing rate."""


class EmptyError(TunbenchError):
    """Metric requested over an empty sample set."""


class IoError(TunbenchError):
    """Result persistence failed."""
