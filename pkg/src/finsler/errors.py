"""Exception hierarchy.

Every error carries a ``witness`` mapping with enough data to replay the
failure through the library API.
"""


class FinslerError(Exception):
    code = "FinslerError"

    def __init__(self, message, **witness):
        super().__init__(message)
        self.witness = witness


# metric DSL

class MetricSyntaxError(FinslerError, ValueError):
    code = "SyntaxError"

    def __init__(self, message, pos, expected=()):
        expected = tuple(expected)
        if expected:
            message = f"{message} at position {pos}; expected {', '.join(expected)}"
        else:
            message = f"{message} at position {pos}"
        super().__init__(message, pos=pos, expected=list(expected))
        self.pos = pos
        self.expected = expected


class DimensionError(FinslerError, ValueError):
    code = "DimensionError"


class HomogeneityError(FinslerError, ValueError):
    code = "HomogeneityError"


class DomainError(FinslerError, ArithmeticError):
    code = "DomainError"


class NonSmoothError(FinslerError, ArithmeticError):
    code = "NonSmoothError"


# metric tensor / classification

class SingularMetric(FinslerError, ArithmeticError):
    code = "SingularMetric"


class IsotropicVector(FinslerError, ValueError):
    code = "IsotropicVector"


class NotProductForm(FinslerError, ValueError):
    code = "NotProductForm"


class IsotropicDirection(FinslerError, ValueError):
    code = "IsotropicDirection"


# orthogonalization

class IsotropicIntermediate(FinslerError, ArithmeticError):
    code = "IsotropicIntermediate"


class SingularSystem(FinslerError, ArithmeticError):
    code = "SingularSystem"


class NotSpacelikeSeed(FinslerError, ValueError):
    code = "NotSpacelikeSeed"


class PerpContainsIsotropic(FinslerError, ArithmeticError):
    code = "PerpContainsIsotropic"


# motions

class NotOrthonormal(FinslerError, ValueError):
    code = "NotOrthonormal"


class SingularTransform(FinslerError, ValueError):
    code = "SingularTransform"


class RankDeficiencyAmbiguous(FinslerError, ArithmeticError):
    code = "RankDeficiencyAmbiguous"


class ConfigError(FinslerError, ValueError):
    code = "ConfigError"
