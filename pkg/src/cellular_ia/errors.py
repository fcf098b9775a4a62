"""Exception types raised by the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class OrderIncompatibleError(ValueError):
    """Two interfering cells are left incomparable by a partial order.

    Attributes
    ----------
    edges : list of tuple
        The offending undirected edges ``(u, v)`` with ``u < v``.
    """

    def __init__(self, edges, message=None):
        self.edges = [tuple(e) for e in edges]
        if message is None:
            shown = ", ".join("{%d,%d}" % e for e in self.edges[:10])
            message = f"order leaves adjacent cells incomparable: {shown}"
        super().__init__(message)


class AlignmentViolatedError(RuntimeError):
    """Residual interference exceeds the zero-forcing tolerance.

    Raised where a rate would otherwise be reported for a link whose
    interference has not actually been aligned away.
    """

    def __init__(self, cell, leakage, tol):
        self.cell = cell
        self.leakage = leakage
        self.tol = tol
        super().__init__(
            f"cell {cell}: residual leakage {leakage:.3e} exceeds zf_tol {tol:.1e}"
        )
