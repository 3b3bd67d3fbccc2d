"""Exception types raised by the solvers."""


class RankDeficient(ArithmeticError):
    """A restricted Gram matrix ``Psi_A^t Psi_A`` is (numerically) singular.

    ``index`` is the column of the sensing operator whose pivot broke down,
    or ``None`` when no single column can be blamed.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class Unsupported(RuntimeError):
    """The requested computation exceeds its combinatorial budget."""


class SelectionFailed(RuntimeError):
    """A discrepancy-type rule never fired before the path ended."""
