"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front-end:
1 for malformed input (validation), 2 for runtime failures (poles,
non-convergence, ...).
"""

from __future__ import annotations


class MultiAsymError(Exception):
    exit_code = 2

    def to_json(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class ValidationError(MultiAsymError):
    exit_code = 1


class RuntimeFailure(MultiAsymError):
    exit_code = 2


# -- family -------------------------------------------------------------------

class FamilyError(ValidationError):
    """A single violated condition on a family of index sets."""


class DuplicateSet(FamilyError):
    def __init__(self, j: int, k: int):
        self.j, self.k = j, k
        super().__init__(f"DuplicateSet({j},{k})")


class OverlapViolation(FamilyError):
    def __init__(self, j: int, k: int):
        self.j, self.k = j, k
        super().__init__(f"OverlapViolation({j},{k})")


class EmptyHatSet(FamilyError):
    def __init__(self, j: int):
        self.j = j
        super().__init__(f"EmptyHatSet({j})")


class IndexOutOfRange(FamilyError):
    def __init__(self, j: int, i: int):
        self.j, self.i = j, i
        super().__init__(f"IndexOutOfRange({j},{i})")


class InvalidFamily(FamilyError):
    """Aggregate of every violation found by :func:`validate_family`."""

    def __init__(self, violations: list[FamilyError]):
        self.violations = list(violations)
        super().__init__(", ".join(str(v) for v in self.violations))

    def to_json(self) -> dict:
        return {
            "error": "InvalidFamily",
            "message": str(self),
            "violations": [str(v) for v in self.violations],
        }


class EmptySubset(ValidationError):
    pass


class InvalidSubfamily(ValidationError):
    pass


# -- expressions --------------------------------------------------------------

class ExprSyntaxError(ValidationError):
    def __init__(self, position: int, expected: str, text: str = ""):
        self.position, self.expected = position, expected
        super().__init__(f"at position {position}: expected {expected} in {text!r}")


class PoleError(RuntimeFailure, ZeroDivisionError):
    pass


class DomainError(RuntimeFailure, ArithmeticError):
    pass


class JetFailure(RuntimeFailure):
    pass


# -- geometry -----------------------------------------------------------------

class NonPositiveScale(ValidationError, ValueError):
    pass


class NotInCone(RuntimeFailure, ValueError):
    pass


# -- expansion ----------------------------------------------------------------

class MissingCoefficient(RuntimeFailure, KeyError):
    def __init__(self, J, alpha):
        self.J, self.alpha = J, alpha
        Exception.__init__(self, f"MissingCoefficient(J={sorted(J)}, alpha={tuple(alpha)})")

    def __str__(self) -> str:
        return self.args[0]


class CapExceeded(RuntimeFailure):
    pass


class NoPreimage(RuntimeFailure):
    pass


class NonConvergent(RuntimeFailure):
    pass


class QuadratureUnstable(RuntimeFailure):
    pass


class OnSubmanifold(RuntimeFailure, ValueError):
    pass


# -- morphism -----------------------------------------------------------------

class ZeroTime(RuntimeFailure, ValueError):
    pass


class IncompatibleMap(ValidationError):
    def __init__(self, block: int, witness):
        self.block, self.witness = block, witness
        super().__init__(f"f(M_{block}) is not contained in N_{block}; witness point {witness}")


class ScenarioError(ValidationError):
    pass
