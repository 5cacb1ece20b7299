class HTDGError(Exception):
    """Base class for errors raised by this package."""


# graph building
class FinalizedGraph(HTDGError):
    pass


class UnknownDomain(HTDGError):
    pass


class UnknownNode(HTDGError):
    pass


class DuplicateEdge(HTDGError):
    pass


class SelfLoopOnStrongEdge(HTDGError):
    pass


class CompositionCycle(HTDGError):
    pass


class UnfinalizedChild(HTDGError):
    pass


class ValidationFailed(HTDGError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        codes = ", ".join(f"{d.code}{list(d.nodes)}" for d in self.diagnostics)
        super().__init__(f"graph failed validation: {codes}")


# execution
class NotFinalized(HTDGError):
    pass


class SecondConcurrentRun(HTDGError):
    pass


class ConditionIndexOutOfRange(HTDGError):
    pass


class ExecutorStopped(HTDGError):
    pass


class NotInstrumented(HTDGError):
    pass


# device flows
class CycleDetected(HTDGError):
    pass


class Deadlock(HTDGError):
    pass


# benchmarking
class NonTermination(HTDGError):
    pass


class OracleMismatch(HTDGError):
    pass


class ChecksumMismatch(HTDGError):
    pass


class BoundViolation(HTDGError):
    pass
