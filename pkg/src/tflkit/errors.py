class TflError(Exception):
    """Base class for all errors raised by the package."""


class ModelError(TflError):
    pass


class ParseError(TflError):
    def __init__(self, message, line=None, col=None, path=None):
        self.line = line
        self.col = col
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:{col or 1}: "
        elif where:
            where += " "
        super().__init__(where + message)


class UnsafeNet(ModelError):
    def __init__(self, marking, action):
        self.marking = marking
        self.action = action
        super().__init__(f"action {action} puts a second token on a place from marking {sorted(marking)}")


class StateExplosion(TflError):
    def __init__(self, what, cap):
        self.cap = cap
        super().__init__(f"{what} exceeded the cap of {cap}")


class NotARun(ModelError):
    pass


class UnboundVariable(TflError):
    pass


class PolarityError(TflError):
    pass


class NotLmuFragment(TflError):
    pass


class NotXi(TflError):
    pass


class CyclicInput(TflError):
    pass


class FragmentViolation(TflError):
    def __init__(self, kind, detail=""):
        self.kind = kind
        super().__init__(f"{kind}: {detail}" if detail else kind)


class OracleInconsistent(TflError):
    pass
