"""Exception types shared across the package."""


class DimensionOverflowError(OverflowError):
    """A combinatorial dimension does not fit in a signed 64-bit integer."""


class DimensionCapError(ValueError):
    """A symmetric-space dimension exceeds the configured cap."""

    def __init__(self, what, value, cap):
        super().__init__(f"{what} = {value} exceeds the dimension cap {cap}")
        self.value = value
        self.cap = cap


class ConvergenceError(RuntimeError):
    """The ellipsoid solver hit its iteration cap."""

    def __init__(self, iterations, violation):
        super().__init__(
            f"ellipsoid solver did not converge after {iterations} updates "
            f"(max membership violation {violation:.3e})"
        )
        self.iterations = iterations
        self.violation = violation
