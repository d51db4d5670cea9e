"""Exception taxonomy shared across the toolkit.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numerical failures with 3, and domain guards (non-hyperbolic
parameters, excluded loci, out-of-range queries) with 4.
"""


class JuliadimError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(JuliadimError):
    """Malformed or inconsistent run configuration."""

    exit_code = 2


class NumericsError(JuliadimError):
    """A numerical routine failed to converge or lost precision."""

    exit_code = 3


class DomainError(JuliadimError):
    """Input lies outside the regime an operation is valid for."""

    exit_code = 4


class EscapeError(JuliadimError):
    """An orbit blew past the overflow guard during iteration."""

    exit_code = 3

    def __init__(self, steps_done: int, modulus: float):
        self.steps_done = steps_done
        self.modulus = modulus
        super().__init__(
            f"orbit escaped after {steps_done} steps (|z| ~ {modulus:.3e})"
        )
