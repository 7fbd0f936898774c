"""Error hierarchy shared by every solver and by the command line.

Validation problems map to exit code 2, numerical failures to exit code 3.
"""

from typing import Optional


class SemiclassicaError(Exception):
    exit_code = 1
    code = "error"

    def __init__(self, message: str = "", **details: object) -> None:
        super().__init__(message or self.__class__.__name__)
        self.details = dict(details)

    def as_dict(self) -> dict:
        return {"error": self.__class__.__name__, "code": self.code, "message": str(self), "details": self.details}


class ValidationError(SemiclassicaError):
    exit_code = 2
    code = "validation"


class NumericalError(SemiclassicaError):
    exit_code = 3
    code = "numerical"


# numkit
class NonConvergent(NumericalError):
    pass


class NoSignChange(NumericalError):
    pass


class Diverged(NumericalError):
    pass


class MaxIterations(NumericalError):
    pass


class StepUnderflow(NumericalError):
    pass


class EventOverflow(NumericalError):
    pass


# wkb1d
class NoBoundState(NumericalError):
    pass


class BracketTooNarrow(ValidationError):
    pass


# crossed_fields
class InvalidProjection(ValidationError):
    pass


class Ionized(NumericalError):
    def __init__(self, message: str = "", lam: Optional[float] = None, **details: object) -> None:
        super().__init__(message, lam=lam, **details)
        self.lam = lam


# zeeman / helium_pt
class NoRoot(NumericalError):
    pass


class BranchForbidden(ValidationError):
    pass


class NoBarrier(NumericalError):
    pass


class OrbitCollision(NumericalError):
    pass


class EmptyContour(NumericalError):
    pass


# helium_collinear
class TripleCollision(NumericalError):
    pass


class Escape(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class HyperbolicDetected(NumericalError):
    pass


# decay
class InvalidQN(ValidationError):
    pass


class Collapse(NumericalError):
    pass


# stark_gutzwiller
class TurningPointNotFound(NumericalError):
    pass


class BranchCut(NumericalError):
    pass


class WrongSheet(NumericalError):
    pass


# collisions
class BelowTransferable(ValidationError):
    pass


class NoBoundRegion(NumericalError):
    pass


class NotBound(ValidationError):
    pass


class NoOverlap(NumericalError):
    pass


# classrep
class DerivativeNoise(NumericalError):
    pass


class IntegrableSingularity(NumericalError):
    pass


# milne
class GammaPole(NumericalError):
    pass


class PrecisionLoss(NumericalError):
    pass


class NoMinimum(NumericalError):
    pass


class PeelingUnstable(NumericalError):
    pass


# cli
class FixtureMissing(ValidationError):
    pass


class UnknownParameter(ValidationError):
    pass


class FieldTooStrong(ValidationError):
    pass
