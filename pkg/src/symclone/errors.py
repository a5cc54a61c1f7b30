"""Exceptions shared by the integration kernels."""


class ConvergenceError(RuntimeError):
    """The implicit-midpoint fixed-point iteration failed or produced non-finite values."""
