"""Exception hierarchy shared by every pathsum module."""


class PathSumError(Exception):
    """Base class for all errors raised by pathsum."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class PartitionError(PathSumError, ValueError):
    kind = "partition"


class DomainError(PathSumError, ValueError):
    """A vertex argument lies in the deleted set or outside the graph."""

    kind = "domain"


class SingularityError(PathSumError, ArithmeticError):
    """A matrix that must be inverted is singular to working precision.

    ``deleted`` holds the 0-based vertices removed from the graph when the
    singular block was met (``None`` when not tied to a subgraph).
    """

    kind = "singularity"

    def __init__(self, message, deleted=None):
        super().__init__(message)
        self.deleted = None if deleted is None else tuple(sorted(deleted))

    def to_dict(self):
        out = super().to_dict()
        if self.deleted is not None:
            out["deleted"] = [v + 1 for v in self.deleted]
        return out


class NotPositiveDefiniteError(PathSumError, ValueError):
    kind = "not_positive_definite"


class TopologyError(PathSumError, ValueError):
    """Operation requires a tree but the graph has a cycle."""

    kind = "topology"


class ConfigurationError(PathSumError, ValueError):
    kind = "configuration"


class UnsupportedPartitionError(PathSumError, ValueError):
    kind = "unsupported_partition"


class ModelError(PathSumError, ValueError):
    """Malformed information matrix (asymmetric, wrong shape, zero diagonal)."""

    kind = "model"


class ParseError(PathSumError, ValueError):
    """Input file could not be parsed; carries the 1-based line when known."""

    kind = "parse"

    def __init__(self, message, path=None, line=None, column=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{': '.join([', '.join(where), message]) if where else message}")
        self.path = None if path is None else str(path)
        self.line = line
        self.column = column

    def to_dict(self):
        out = super().to_dict()
        for key in ("path", "line", "column"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out
