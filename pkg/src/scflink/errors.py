"""Domain exceptions shared across the package."""


class ScflinkError(Exception):
    """Base class for all domain errors."""


class EmptyGraphError(ScflinkError):
    """Edge-list input produced a graph with no vertices."""


class EdgeListParseError(ScflinkError):
    """Malformed edge-list line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class VertexNotFoundError(ScflinkError, KeyError):
    """An external or internal vertex id is not in the graph."""


class SuperstepNumericError(ScflinkError):
    """A vertex program produced a non-finite state value."""

    def __init__(self, superstep: int, vertex: int):
        super().__init__(f"non-finite state at superstep {superstep}, vertex {vertex}")
        self.superstep = superstep
        self.vertex = vertex


class DegenerateAffinityError(ScflinkError):
    """The affinity matrix is identically zero; clustering is undefined."""


class DegenerateLabelsError(ScflinkError):
    """Training data contains a single class."""


class UnsupportedModelVersionError(ScflinkError):
    """Model file carries a version this code does not understand."""


class ModelFormatError(ScflinkError):
    """Model file is corrupt or structurally invalid."""


class InsufficientMemoryError(ScflinkError):
    """A node or budget is too small for the requested configuration."""
