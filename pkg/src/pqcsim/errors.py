"""Exception hierarchy shared by all simulator layers."""


class SimulatorError(Exception):
    """Base class for every error raised by pqcsim."""

    category = "error"


class DomainError(SimulatorError, ValueError):
    """An argument lies outside the domain an operation accepts."""

    category = "domain"


class LocalityError(SimulatorError, ValueError):
    """A kernel was asked to act on a bit position that is not local to the shard."""

    category = "locality"


class CapacityError(SimulatorError, ValueError):
    """More qubits were requested to be made local than the layout can hold."""

    category = "capacity"


class CompileError(SimulatorError):
    category = "compile"


class ParseError(SimulatorError):
    """Malformed circuit text. Carries 1-based line and column numbers."""

    category = "parse"

    def __init__(self, message: str, line: int, col: int = 1):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class ProtocolError(SimulatorError):
    """Two ranks disagreed about an exchange (buffer lengths, partners)."""

    category = "protocol"


class DeadlockError(SimulatorError, TimeoutError):
    """A rendezvous did not complete within the configured timeout."""

    category = "deadlock"


class ResourceError(SimulatorError, MemoryError):
    """The requested state does not fit in the memory available to this process."""

    category = "resource"


class StateError(SimulatorError):
    """The state vector failed a sanity check (norm drift, wrong precondition)."""

    category = "state"
