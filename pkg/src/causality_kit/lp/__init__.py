from .simplex import KERNEL_BACKEND, LinearProgram, LPResult, solve

__all__ = ["KERNEL_BACKEND", "LinearProgram", "LPResult", "solve"]
