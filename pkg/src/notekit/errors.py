"""Exception hierarchy shared by every module of the package."""


class NotekitError(Exception):
    """Base class for all errors raised by notekit."""


class ValidationError(NotekitError, ValueError):
    """Raised when a Music object violates one or more invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations[:5])
        if len(self.violations) > 5:
            summary += f"; ... ({len(self.violations)} total)"
        super().__init__(f"invalid music: {summary}")


class ParseError(NotekitError, ValueError):
    """Malformed input text or bytes.

    ``line``/``column`` are set for text formats, ``offset`` for binary or
    character-offset based formats.
    """

    def __init__(self, message, *, line=None, column=None, offset=None):
        self.line = line
        self.column = column
        self.offset = offset
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class SchemaError(NotekitError, ValueError):
    """Structurally valid input that does not follow the expected schema."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{message} at '{path}'"
        super().__init__(message)


class VersionError(NotekitError, ValueError):
    """Document written with an unsupported schema version."""


class FormatError(NotekitError, ValueError):
    """Input is not in the expected file format (e.g. bad magic bytes)."""


class TruncationError(FormatError):
    """Input ended before a complete structure could be read."""


class MalformedVLQError(FormatError):
    """Variable-length quantity longer than four bytes."""


class UnsupportedFeatureError(NotekitError, ValueError):
    """Input uses a feature that is deliberately not supported."""


class ArchiveError(NotekitError, ValueError):
    """Problem with a compressed MusicXML container."""


class ChannelExhaustionError(NotekitError, ValueError):
    """More melodic tracks than available MIDI channels."""


class PolyphonyError(NotekitError, ValueError):
    """Concurrent notes where monophonic input is required."""

    def __init__(self, tick):
        self.tick = tick
        super().__init__(f"concurrent notes at tick {tick}")


class DomainError(NotekitError, ValueError):
    """Token, cell or row value outside the representation's domain."""


class IntegrityError(NotekitError):
    """Downloaded file does not match its recorded checksum."""

    def __init__(self, message, filename=None):
        self.filename = filename
        super().__init__(message)


class TransferError(NotekitError):
    """Failed to fetch a remote resource."""

    def __init__(self, message, url=None):
        self.url = url
        super().__init__(message)


class EmptyCorpusError(NotekitError):
    """No file in a corpus could be converted."""


class ConfigurationError(NotekitError, ValueError):
    """Invalid combination of corpora or experiment settings."""


class SizeError(NotekitError, ValueError):
    """Not enough items for the requested operation."""


class ModelContractError(NotekitError):
    """A sequence model assigned zero probability to an observed token."""
