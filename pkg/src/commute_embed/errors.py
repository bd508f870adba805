"""Exception hierarchy. Every error carries the CLI exit code it maps to."""


class EmbedError(Exception):
    exit_code = 1


class InputError(EmbedError):
    """Bad file, bad config, or a violated precondition on user input."""

    exit_code = 2


class MalformedHeaderError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class NonFiniteValueError(InputError):
    pass


class NumericError(EmbedError):
    """The input is well-formed but numerically degenerate."""

    exit_code = 3


class DegenerateInputError(NumericError):
    pass


class DisconnectedGraphError(NumericError):
    def __init__(self, component_sizes):
        self.component_sizes = sorted(component_sizes, reverse=True)
        super().__init__(
            f"graph is disconnected: {len(self.component_sizes)} components "
            f"of sizes {self.component_sizes}; commute time is undefined "
            "across components (increase n_neighbors or sigma)"
        )


class ConvergenceError(EmbedError):
    exit_code = 4
