"""Exception types shared across the package."""


class NesumError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(NesumError):
    """Missing inputs or inconsistent settings, detected before work starts."""


class CorpusLineError(NesumError, ValueError):
    """A single malformed line in a JSONL input."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class AlignmentError(NesumError, ValueError):
    """Annotation tokens do not line up with the document tokens."""

    def __init__(self, message, doc_id=None, index=None):
        super().__init__(message)
        self.doc_id = doc_id
        self.index = index


class DivergenceError(NesumError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None, batch_index=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch_index = batch_index
