"""Exception types shared across the package."""


class ScenarioError(ValueError):
    """Config parse or invariant failure; the message names the offending field."""


class InfeasibleProblemError(RuntimeError):
    """The beampattern floor cannot be met within the power budget."""


class RepairExhaustedError(RuntimeError):
    """Particle repair hit its retry cap: the beampattern floor is (near-)infeasible
    for the frozen beamformer."""


class InfeasibleStartError(ValueError):
    """Solver start point is not strictly feasible."""


class SolverMaxIterationsError(RuntimeError):
    """Solver step cap reached; carries the best point found so far."""

    def __init__(self, message, best=None, objective=None):
        super().__init__(message)
        self.best = best
        self.objective = objective


class EigNonConvergenceError(RuntimeError):
    """Cyclic Jacobi sweep cap exceeded."""
