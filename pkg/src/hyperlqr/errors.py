"""Shared error types for solver failure modes."""

from __future__ import annotations


class CFLError(ValueError):
    """Time step violates the stability bound of an explicit march."""


class BlowUpError(RuntimeError):
    """A marching solve produced non-finite or runaway values."""

    def __init__(self, message: str, step: int, time: float):
        super().__init__(message)
        self.step = step
        self.time = time


class ConvergenceError(RuntimeError):
    """An iterative solve stopped without meeting its tolerance."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class ConfigError(ValueError):
    """A scenario description is malformed or inconsistent."""
