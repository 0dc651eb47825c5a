"""Exception types raised across the package."""


class WgError(Exception):
    """Base class for all package errors."""


class ParseError(WgError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TopologyError(WgError):
    pass


class NonStarShaped(WgError):
    pass


class UnsupportedOrder(WgError):
    pass


class SingularMass(WgError):
    pass


class SingularInterior(WgError):
    def __init__(self, cell, message="interior block is singular"):
        self.cell = cell
        super().__init__(f"cell {cell}: {message}")


class SingularSystem(WgError):
    def __init__(self, message, dof=None):
        self.dof = dof
        if dof is not None:
            message = f"{message} (dof {dof})"
        super().__init__(message)


class EmptyDirichlet(WgError):
    pass


class BudgetExceeded(WgError):
    pass
