"""Exception hierarchy for bitstream and input handling."""


class SdctError(Exception):
    pass


class FormatError(SdctError, ValueError):
    """A stream or file does not follow the expected layout."""


class BadMagicError(FormatError):
    pass


class TruncatedStreamError(FormatError):
    pass


class MalformedTreeError(FormatError):
    pass
