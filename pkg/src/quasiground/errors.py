"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class QuasigroundError(Exception):
    code = "error"

    def to_record(self):
        return {"error": self.code, "message": str(self)}


class InvalidDimension(QuasigroundError, ValueError):
    code = "invalid-dimension"


class InvalidExponent(QuasigroundError, ValueError):
    code = "invalid-exponent"


class InvalidMass(QuasigroundError, ValueError):
    code = "invalid-mass"


class InvalidRegime(QuasigroundError, ValueError):
    code = "invalid-regime"


class NoBracket(QuasigroundError, RuntimeError):
    code = "no-bracket"


class IntegrationError(QuasigroundError, RuntimeError):
    code = "integration-error"


class NonUniqueProfile(QuasigroundError, RuntimeError):
    """More than one event-ordering sign change in the shooting scan."""
    code = "non-unique-profile"

    def __init__(self, brackets):
        self.brackets = list(brackets)
        super().__init__(f"shooting classification changes sign in several brackets: {self.brackets}")


class DomainOverflow(QuasigroundError, ValueError):
    code = "domain-overflow"


class NotNormalized(QuasigroundError, ValueError):
    code = "not-normalized"


class NumericalBlowup(QuasigroundError, FloatingPointError):
    code = "numerical-blowup"


class Stall(QuasigroundError, RuntimeError):
    """Step size underflow; ``result`` holds the last accepted state."""
    code = "stall"

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NoConvergence(QuasigroundError, RuntimeError):
    """Iteration cap reached; ``result`` holds the last state."""
    code = "no-convergence"

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class PartialSweep(QuasigroundError, RuntimeError):
    """A sweep member failed; ``records`` holds the completed prefix."""
    code = "partial-sweep"

    def __init__(self, message, q=None, records=None):
        super().__init__(message)
        self.q = q
        self.records = records or []

    def to_record(self):
        rec = super().to_record()
        rec["q"] = self.q
        return rec


class BadBracket(QuasigroundError, ValueError):
    code = "bad-bracket"


class ConfigError(QuasigroundError, ValueError):
    code = "usage"
