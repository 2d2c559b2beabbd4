"""Exception hierarchy shared by all modules."""


class StochLQError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpec(StochLQError):
    """Malformed input: bad probabilities, missing fields, wrong structure."""


class MomentViolation(InvalidSpec):
    """A branch distribution is not conditionally mean-zero / unit-variance."""


class LevelMismatch(StochLQError):
    pass


class ShapeMismatch(StochLQError):
    pass


class DimensionMismatch(StochLQError):
    pass


class NonAdaptedProcess(StochLQError):
    """A process is not defined on exactly the nodes of its level."""


class AssumptionViolated(StochLQError):
    def __init__(self, report):
        self.report = report
        failed = report.failures()
        head = failed[0] if failed else None
        msg = f"{len(failed)} assumption check(s) failed"
        if head is not None:
            msg += f"; first: {head.check} at level {head.level}, node {head.node!r} (value {head.value:.3g})"
        super().__init__(msg)


class SingularUpsilon(StochLQError):
    """The coupled gain matrix is numerically singular at some node."""

    def __init__(self, k: int, node: str, rcond: float):
        self.k = k
        self.node = node
        self.rcond = rcond
        super().__init__(f"Upsilon singular at k={k}, node {node!r} (rcond={rcond:.3e})")


class IndefiniteHessian(StochLQError):
    pass


class OracleTooLarge(StochLQError):
    """Dense best-response assembly requested beyond the supported size."""
