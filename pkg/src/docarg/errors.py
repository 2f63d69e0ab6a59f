"""Exception types shared across the package."""


class DocargError(Exception):
    """Base class for all errors raised by this package."""


class CorpusFormatError(DocargError):
    """A corpus record is malformed or violates a document invariant."""


class SchemaError(DocargError):
    """Event types or roles do not match the active schema."""


class HeadResolutionError(DocargError):
    """Head-word lookup is impossible (missing dependency parses)."""


class GraphError(DocargError):
    """A semantic graph violates its structural invariants."""


class EncodingError(DocargError):
    """Document encoding failed (tokenization, masking, or windowing)."""


class DocumentTooLongError(EncodingError):
    """Document exceeds the encoder position budget under the active window policy."""


class ConfigError(DocargError):
    """Run configuration is invalid or inconsistent."""


class EvaluationError(DocargError):
    """Predictions cannot be aligned with the gold corpus."""
