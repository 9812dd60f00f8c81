"""Exception hierarchy shared across the package."""


class ResequencerError(Exception):
    """Base class for every error raised by this package."""


# --- lane buffer ---

class LaneError(ResequencerError):
    def __init__(self, lane: int, message: str = ""):
        self.lane = lane
        super().__init__(message or f"{type(self).__name__}: lane {lane}")


class LaneFull(LaneError):
    pass


class LaneLocked(LaneError):
    pass


class BufferFull(LaneError):
    pass


class LaneEmpty(LaneError):
    pass


class HeadBlocked(LaneError):
    pass


# --- metrics ---

class EmptySequence(ResequencerError):
    pass


class SequenceTooShort(ResequencerError):
    pass


class DuplicateBlendNumber(ResequencerError):
    pass


class ZeroBaseline(ResequencerError):
    pass


class DegenerateInput(ResequencerError):
    pass


class InsufficientSamples(ResequencerError):
    pass


# --- controller ---

class NoCompatibleOrder(ResequencerError):
    pass


class NoEligibleHead(ResequencerError):
    pass


class NoAvailableLane(ResequencerError):
    pass


class StaleDecision(ResequencerError):
    pass


# --- harness / IO ---

class InconsistentEvent(ResequencerError):
    pass


class ParseError(ResequencerError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationFailed(ResequencerError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "validation failed")


class IoError(ResequencerError):
    pass
