"""Exception hierarchy for the condlevel toolkit.

Errors are split by the pipeline stage that raises them so the CLI can map
configuration problems (bad corpus, bad flags) to exit code 2 and runtime
failures to exit code 1.
"""


class CondlevelError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CondlevelError):
    """Bad configuration: missing corpus, malformed tile map, bad flags."""


# --- corpus / parsing ---

class RaggedRowsError(CondlevelError):
    def __init__(self, row: int, expected: int, got: int):
        super().__init__(f"row {row} has length {got}, expected {expected}")
        self.row = row
        self.expected = expected
        self.got = got


class UnknownTileError(CondlevelError):
    def __init__(self, char: str, row: int, col: int):
        super().__init__(f"unknown tile {char!r} at row {row}, col {col}")
        self.char = char
        self.row = row
        self.col = col


class HeightOverflowError(CondlevelError):
    """Grid is taller than the 16-row target, padding cannot apply."""


class TooSmallError(CondlevelError):
    """Grid extent is smaller than the 16-tile window."""


class BadLengthError(CondlevelError):
    """Feature vector or label has the wrong length."""


class MissingCorpusError(ConfigError):
    """A corpus directory or level file is absent."""


# --- labeling ---

class BadOverrideError(CondlevelError):
    """Manual pattern-label override line is malformed."""


class OutOfRangeError(CondlevelError):
    """Integer label encoding outside [0, 2^length)."""


# --- neural net / training ---

class ShapeMismatchError(CondlevelError):
    pass


class NonFiniteError(CondlevelError):
    """NaN or inf encountered where finite values are required."""


class NonFiniteGradientError(NonFiniteError):
    pass


class NonFiniteLossError(NonFiniteError):
    pass


# --- checkpoints ---

class CheckpointError(CondlevelError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class VocabMismatchError(CheckpointError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


# --- generation / evaluation ---

class SchemeMismatchError(CondlevelError):
    """Label does not fit the model's conditioning scheme."""


class EmptySetError(CondlevelError):
    pass


class TooFewSamplesError(CondlevelError):
    pass
