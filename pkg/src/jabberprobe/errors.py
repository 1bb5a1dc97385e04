"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, DataError (and
subclasses) -> 3, NumericalError -> 4.
"""


class JabberprobeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(JabberprobeError):
    """Invalid or incomplete experiment configuration."""


class DataError(JabberprobeError):
    """Malformed or inconsistent input data."""


class ParseError(DataError):
    """CoNLL-U document violates the format or the tree invariants."""


class ReconciliationError(DataError):
    """A tokenization-alignment merge cannot be applied to a sentence."""


class LexiconError(DataError):
    """Pseudoword lexicon file is malformed."""


class JembFormatError(DataError):
    """Embedding interchange file is malformed.

    Carries the byte offset at which the problem was detected.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class AlignmentError(DataError):
    """Subword alignment record is inconsistent with the data it indexes."""


class NumericalError(JabberprobeError):
    """Training or evaluation produced a non-finite value."""
