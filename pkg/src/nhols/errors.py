"""Exception hierarchy shared by every nhols module."""


class NHOLSError(Exception):
    """Base class for all errors raised by this package."""


class InvalidWeight(NHOLSError, ValueError):
    pass


class InvalidNode(NHOLSError, ValueError):
    pass


class IsolatedNode(NHOLSError, ValueError):
    def __init__(self, nodes, kind="degree"):
        self.nodes = list(nodes)
        self.kind = kind
        preview = ", ".join(str(v) for v in self.nodes[:10])
        more = "" if len(self.nodes) <= 10 else f" (+{len(self.nodes) - 10} more)"
        super().__init__(f"{len(self.nodes)} node(s) with zero {kind}: {preview}{more}")


class DegenerateTriple(NHOLSError, ValueError):
    pass


class DomainError(NHOLSError, ValueError):
    pass


class ShapeError(NHOLSError, ValueError):
    pass


class InvalidParam(NHOLSError, ValueError):
    pass


class InvalidLabels(NHOLSError, ValueError):
    pass


class InvalidEval(NHOLSError, ValueError):
    pass


class ParseError(NHOLSError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ConfigError(NHOLSError, ValueError):
    pass
