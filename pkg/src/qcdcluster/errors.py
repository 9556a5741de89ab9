"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures to process exit statuses without a lookup table.
"""


class QCDClusterError(Exception):
    exit_code = 1


class ConfigError(QCDClusterError, ValueError):
    """Invalid parameters or options."""

    exit_code = 2


class DataError(QCDClusterError, ValueError):
    """Input data violating a precondition."""

    exit_code = 3


class ParseError(DataError):
    """Malformed CSV input; the message names the offending data row."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class DomainError(DataError):
    pass


class ShapeError(DataError):
    pass


class DegenerateInputError(DataError):
    pass


class NumericalError(QCDClusterError, ArithmeticError):
    exit_code = 4


class EmptyClusterError(NumericalError):
    def __init__(self, cluster):
        super().__init__(f"cluster {cluster} has zero total membership weight")
        self.cluster = cluster


class ClusteringFailedError(NumericalError):
    pass


class SimulationError(NumericalError):
    pass
