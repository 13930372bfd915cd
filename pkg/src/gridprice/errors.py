"""Exception hierarchy. Every error carries a stable ``code`` string for the CLI."""


class GridPriceError(Exception):
    code = "GRIDPRICE_ERROR"


class DimensionMismatch(GridPriceError, ValueError):
    code = "DIMENSION_MISMATCH"


class NonConvex(GridPriceError, ValueError):
    code = "NON_CONVEX"

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SolverFailure(GridPriceError, RuntimeError):
    code = "SOLVER_FAILURE"

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class NegativeDemand(GridPriceError, ValueError):
    code = "NEGATIVE_DEMAND"


class InfeasibleConsumption(GridPriceError, ValueError):
    code = "INFEASIBLE_CONSUMPTION"


class InfeasibleEnv(GridPriceError, ValueError):
    code = "INFEASIBLE_ENV"


class UnknownFormulation(GridPriceError, ValueError):
    code = "UNKNOWN_FORMULATION"


class TooManyUsers(GridPriceError, ValueError):
    code = "TOO_MANY_USERS"


class DegenerateWeights(GridPriceError, ValueError):
    code = "DEGENERATE_WEIGHTS"


class NonzeroNightSolar(GridPriceError, ValueError):
    code = "NONZERO_NIGHT_SOLAR"


class SchemaViolation(GridPriceError, ValueError):
    code = "SCHEMA_VIOLATION"

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class ScenarioIOError(GridPriceError, OSError):
    code = "IO_ERROR"
