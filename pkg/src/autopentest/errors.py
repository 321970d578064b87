"""Exception hierarchy shared by every layer of the package."""


class PentestError(Exception):
    """Base class for all errors raised by autopentest."""


class ConfigurationError(PentestError):
    """Invalid weights, value tables or planner thresholds."""


class MalformedRepertoireError(PentestError):
    """A tactic or scan references capabilities/interfaces that do not exist."""


class ProtocolError(PentestError):
    """An illegal knowledge-base move, e.g. completing a scan that is not active."""


class SimulatorContractError(PentestError):
    """The managed system was asked to do something the planner should have filtered."""


class LoadError(PentestError):
    """A scenario/repertoire/weights document failed schema or reference checks.

    ``path`` points at the offending field, e.g. ``scan_rules.S0.reveals[3]``.
    """

    def __init__(self, message: str, path: str = "", source: str = ""):
        self.path = path
        self.source = source
        where = ":".join(p for p in (source, path) if p)
        super().__init__(f"{where}: {message}" if where else message)


class ImportFormatError(LoadError):
    """Malformed MDP machine/action record."""
