"""Exception taxonomy shared by the toolkit.

The CLI maps ConfigError to exit code 2 and NumericalError to exit code 3;
everything else is a bug.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad field, shape mismatch, unparseable form."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, consistency violation)."""


class DegenerateModeError(NumericalError):
    """Coupling entries were requested for modes whose eigenvalues are not
    simple; the entries are only defined up to a basis rotation, so the
    computation is refused rather than silently rotated."""

    def __init__(self, indices):
        self.indices = tuple(indices)
        super().__init__(
            f"eigenvalues at (1-based) indices {self.indices} are not simple; "
            "coupling entries are ill-defined"
        )


class StrandedComponentError(ValueError):
    """The greedy reordering ran out of coupled indices before placing the
    requested number of modes; the pattern graph is not connected."""

    def __init__(self, placed, requested):
        self.placed = tuple(placed)
        self.requested = requested
        super().__init__(
            f"stranded component {{{', '.join(map(str, placed))}}}: "
            f"no index outside it couples to it ({len(placed)} of {requested} placed)"
        )
