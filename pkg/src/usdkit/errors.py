"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
2 parse, 3 dimension/precondition, 4 numeric, 5 internal.
"""


class UsdkitError(Exception):
    exit_code = 5


class ParseError(UsdkitError):
    exit_code = 2


class NonFinite(ParseError):
    pass


class PreconditionError(UsdkitError):
    exit_code = 3


class DimensionMismatch(PreconditionError):
    pass


class NotHermitian(PreconditionError):
    pass


class NotUnitary(PreconditionError):
    pass


class NotDiscriminated(PreconditionError):
    pass


class ZeroState(PreconditionError):
    pass


class NotNormalized(PreconditionError):
    pass


class MissingPriors(PreconditionError):
    pass


class LengthMismatch(PreconditionError):
    pass


class BlockSizeMismatch(PreconditionError):
    pass


class NotDensityMatrix(PreconditionError):
    pass


class NumericError(UsdkitError):
    exit_code = 4


class NoConvergence(NumericError):
    pass


class Singular(NumericError):
    pass


class NonInvertible(Singular):
    pass


class LinearlyDependent(Singular):
    pass


class NegativeEigenvalue(NumericError):
    pass


class NotPassive(NumericError):
    pass


class RankDeficient(NumericError):
    pass
