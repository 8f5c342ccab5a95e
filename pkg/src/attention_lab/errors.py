"""
Error types for the attention lab

Every module raises a subclass of AttentionLabError so the CLI can turn any
library failure into a clean exit status.
"""

from typing import Optional


class AttentionLabError(Exception):
    """Base class for all library errors"""


class ShapeError(AttentionLabError, ValueError):
    """Operand shapes do not line up"""


class DegenerateRowError(AttentionLabError, ValueError):
    """A mask row permits no key at all"""


class UnknownParameterError(AttentionLabError, KeyError):
    """Gradient requested for something that is not a parameter leaf"""


class EvaluationError(AttentionLabError, ArithmeticError):
    """A scalar function returned a non-finite value"""


class UndefinedScaleError(AttentionLabError, ValueError):
    """QNF scale factor is undefined for a zero-norm query"""


class NormBoundError(AttentionLabError, ValueError):
    """A vector norm exceeds the bound a transformation requires"""


class ZeroNormError(AttentionLabError, ValueError):
    """All keys are zero so the max norm M is zero"""


class MaskParameterError(AttentionLabError, ValueError):
    """Stride, block or summary width out of range"""


class SequenceLengthError(AttentionLabError, ValueError):
    """Sequence longer than the configured maximum length"""


class PatternError(AttentionLabError, ValueError):
    """Invalid head pattern parameters"""


class ConfigurationError(AttentionLabError, ValueError):
    """Inconsistent configuration values"""


class UnknownVariantError(ConfigurationError):
    """Variant tag is not one of the known attention variants"""


class BenchmarkError(AttentionLabError, RuntimeError):
    """Benchmark cannot be run or written"""


class UndefinedLossError(AttentionLabError, ValueError):
    """Reconstruction loss requested with zero masked positions"""


class DivergenceError(AttentionLabError, RuntimeError):
    """Training produced a non-finite loss"""

    def __init__(self, step: int, loss: float):
        super().__init__(f"Non-finite loss {loss} at step {step}")
        self.step = step
        self.loss = loss


class PCADimensionError(AttentionLabError, ValueError):
    """Requested more principal components than the data supports"""


class ConfigParseError(AttentionLabError, ValueError):
    """Config file or flag could not be parsed"""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
