"""Exception types shared across the package."""


class LvseError(Exception):
    """Base class for all package-specific errors."""


class NonConvergent(LvseError):
    """Power flow failed to reach the mismatch tolerance (infeasible loading).

    Attributes
    ----------
    iterations : sweeps performed before giving up
    mismatch : worst per-bus complex-power mismatch at abort, pu
    timestep : index of the offending snapshot when solving a series, else None
    """

    def __init__(self, iterations, mismatch, timestep=None):
        self.iterations = int(iterations)
        self.mismatch = float(mismatch)
        self.timestep = timestep
        where = "" if timestep is None else f" at timestep {timestep}"
        super().__init__(
            f"power flow not converged{where}: mismatch {self.mismatch:.3e} pu "
            f"after {self.iterations} iterations"
        )


class DimensionMismatch(LvseError):
    """Input dimensions inconsistent with a model or network definition."""


class InfeasibleRequirement(LvseError):
    """EV energy requirement cannot fit inside the drawn plug window."""


class AlignmentError(LvseError):
    """Time indices of two series that must be aligned differ."""


class TooFewSamples(LvseError):
    """Not enough rows to perform the requested split."""


class NonFiniteLoss(LvseError):
    """Training loss became NaN/inf; carries the epoch it happened in."""

    def __init__(self, epoch, loss):
        self.epoch = int(epoch)
        self.loss = loss
        super().__init__(f"non-finite training loss {loss!r} in epoch {epoch}")


class EmptySeries(LvseError):
    """A metric was asked to score zero timesteps."""


class GridMismatch(LvseError):
    """Quantile predictions do not use the 0.01..0.99 step-0.01 grid."""


class InvalidInterval(LvseError):
    """A prediction interval has lower > upper somewhere."""


class MissingCell(LvseError):
    """Report generation found run cells absent from the ledger."""

    def __init__(self, cells):
        self.cells = list(cells)
        super().__init__("missing run cells: " + ", ".join(self.cells))
