class RiskStopError(ValueError):
    """Base class for invalid inputs across the package."""


class InvalidDistributionError(RiskStopError):
    pass


class InvalidSpecError(RiskStopError):
    pass


class InvalidKernelError(RiskStopError):
    def __init__(self, message, t=None, state=None, row_sum=None):
        super().__init__(message)
        self.t = t
        self.state = state
        self.row_sum = row_sum


class MonotoneDeclarationError(RiskStopError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class UnsupportedOrderError(RiskStopError):
    """Raised where a construction exists only for totally ordered states."""


class BudgetExceededError(RiskStopError):
    pass


class ModelFileError(RiskStopError):
    def __init__(self, message, line=None, path=None):
        loc = f"line {line}: " if line is not None else ""
        super().__init__(f"{loc}{message}")
        self.line = line
        self.path = path
