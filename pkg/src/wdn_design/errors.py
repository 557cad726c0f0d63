"""Exception hierarchy shared by every module of the package."""


class WdnDesignError(Exception):
    """Base class for all package errors."""


class InstanceError(WdnDesignError):
    """The network, demand model or catalog breaks a model invariant."""


class ParseError(InstanceError):
    def __init__(self, message, line=None, source="<input>"):
        self.message = message
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


class CatalogError(InstanceError):
    pass


class ContractViolation(WdnDesignError, ValueError):
    """A caller broke a documented precondition."""


class InfeasibleInstanceError(WdnDesignError):
    """No feasible solution could be produced for the instance."""


class SearchSpaceTooLarge(WdnDesignError):
    pass


class PairingError(WdnDesignError):
    """Record sets compared by summarize do not cover the same runs."""
