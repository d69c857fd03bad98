"""Exception hierarchy shared by every lgfield module."""


class LGFieldError(Exception):
    """Base class for all errors raised by lgfield."""


class OverflowDomain(LGFieldError, OverflowError):
    """An exponential scaling factor would overflow double precision."""


class QuadratureFailure(LGFieldError, ArithmeticError):
    """Adaptive quadrature exhausted its budget without meeting tolerance."""

    def __init__(self, message, engine=None):
        super().__init__(message)
        self.engine = engine


class DegenerateKernel(LGFieldError, ArithmeticError):
    """The 2x2 kernel determinant vanishes (coincident measurement times)."""


class BranchAmbiguity(LGFieldError, ValueError):
    """The correlation coefficient sits on the arcsin branch point."""


class AllCellsFailed(LGFieldError, RuntimeError):
    """A scan grid has no finite cell to work with."""


class ConfigError(LGFieldError, ValueError):
    """A run configuration failed validation.

    ``field`` names the offending key using dotted notation.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
