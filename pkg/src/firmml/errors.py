"""Exception hierarchy shared by the library and the CLI."""


class FirmError(Exception):
    """Base class for all library errors."""


class DomainError(FirmError, ValueError):
    """An argument lies outside the operation's domain."""


class ParseError(FirmError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class NoCommunity(FirmError):
    """No subgraph satisfying the requested structure contains the query."""


class QueryNotContained(NoCommunity):
    pass


class QuerySplit(NoCommunity):
    """Query nodes lie in two or more connected components."""


class IndexError_(FirmError):
    """Base for index problems (kept distinct from the builtin IndexError)."""


class IndexMismatch(IndexError_):
    """Index was built for a different graph."""


class CorruptIndex(IndexError_):
    pass


class BudgetExceeded(FirmError):
    pass


class UnsupportedParameter(DomainError):
    pass
