"""Exception types shared across the package."""


class FormatError(ValueError):
    """A binary or text artifact does not conform to its file format."""


class ManifestError(ValueError):
    """A corpus manifest failed validation; the message names the record."""


class DegenerateInputError(ValueError):
    """An operation received input it is undefined for (e.g. two constant
    vectors in a concordance computation, or a zero-power embedding)."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss. Carries the history so far."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history
