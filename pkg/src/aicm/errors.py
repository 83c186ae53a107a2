"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed or unusable input data."""


class NumericalError(ArithmeticError):
    """An objective, transform or statistic could not be computed finitely."""


class SingularCovarianceError(NumericalError):
    """Sample covariance is numerically singular and no ridge was supplied."""


class NoLocalMassError(NumericalError):
    """A smoothing-test denominator vanished: no pair of points has kernel mass."""
