"""Exception hierarchy shared by every module."""


class DecstabError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(DecstabError, ValueError):
    pass


class IndexOutOfRange(DecstabError, IndexError):
    pass


class IllPosedInterconnection(DecstabError):
    """``I - D_K D_P`` is singular or too badly conditioned to invert."""


class NumericalFailure(DecstabError):
    """A decomposition or eigensolver broke down."""


class UncontrollablePair(NumericalFailure):
    pass


class UnobservablePair(NumericalFailure):
    pass


class IllConditionedPlacement(NumericalFailure):
    pass


class SynthesisError(NumericalFailure):
    """Base for failures of the step-by-step stabilization loop."""


class HalvingExhausted(SynthesisError):
    pass


class RedrawLimit(SynthesisError):
    pass


class NoIndexFound(SynthesisError):
    pass


class PerturbationExhausted(SynthesisError):
    pass


class StepStalled(SynthesisError):
    pass


class UnstableFixedModes(DecstabError):
    """The plant has a fixed mode outside the acceptable region."""

    def __init__(self, modes, message=None):
        self.modes = list(modes)
        if message is None:
            shown = ", ".join(_fmt(z) for z in self.modes)
            message = f"unstable fixed mode(s): {shown}"
        super().__init__(message)


class ParseError(DecstabError, ValueError):
    pass


class ValidationError(DecstabError, ValueError):
    pass


def _fmt(z):
    z = complex(z)
    if abs(z.imag) < 1e-12:
        return f"{z.real:.6g}"
    return f"{z.real:.6g}{z.imag:+.6g}j"
