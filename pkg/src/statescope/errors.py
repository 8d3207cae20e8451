"""Error taxonomy shared by every statescope module.

Each error carries a machine-readable ``code`` plus a ``stage`` naming the
pipeline step it surfaced in, so the HTTP service and CLI can report
``{code, stage, detail}`` without string matching.
"""

from __future__ import annotations


class StatescopeError(Exception):
    code: str = "Error"
    http_status: int = 422

    def __init__(self, detail: str = "", stage: str | None = None):
        super().__init__(detail)
        self.detail = detail
        self.stage = stage or "core"

    def to_payload(self) -> dict:
        return {"code": self.code, "stage": self.stage, "detail": self.detail}


# ---------------------------------------------------------------- trace I/O

class EmptyInput(StatescopeError):
    code = "Empty"
    http_status = 400


class MalformedLine(StatescopeError):
    code = "MalformedLine"
    http_status = 400

    def __init__(self, line_no: int, detail: str = ""):
        super().__init__(detail or f"malformed line {line_no}")
        self.line_no = line_no


class NonMonotonicTimestamp(StatescopeError):
    code = "NonMonotonicTimestamp"
    http_status = 400

    def __init__(self, line_no: int, detail: str = ""):
        super().__init__(detail or f"timestamp not strictly increasing at line {line_no}")
        self.line_no = line_no


class HeaderMismatch(StatescopeError):
    code = "HeaderMismatch"
    http_status = 400


class TruncatedPayload(StatescopeError):
    code = "TruncatedPayload"
    http_status = 400


class NoOverlap(StatescopeError):
    code = "NoOverlap"


class EventOutsideRange(StatescopeError):
    code = "EventOutsideRange"


class SchemaViolation(StatescopeError):
    code = "SchemaViolation"
    http_status = 400


# ------------------------------------------------------------- synth device

class UndefinedTransition(StatescopeError):
    code = "UndefinedTransition"

    def __init__(self, state: str, event: str):
        super().__init__(f"no transition for event {event!r} from state {state!r}")
        self.state = state
        self.event = event


# ---------------------------------------------------------------------- dsp

class AliasedHarmonic(StatescopeError):
    code = "AliasedHarmonic"


class TooFewPeaks(StatescopeError):
    code = "TooFewPeaks"


class BinOutOfRange(StatescopeError):
    code = "BinOutOfRange"


# ----------------------------------------------------------------- features

class AllModalitiesEmpty(StatescopeError):
    code = "AllModalitiesEmpty"


class TooFewVectors(StatescopeError):
    code = "TooFewVectors"


# ------------------------------------------------------- embedding, cluster

class TooFewPoints(StatescopeError):
    code = "TooFewPoints"


class NonFinite(StatescopeError):
    code = "NonFinite"
    http_status = 400


class KExceedsN(StatescopeError):
    code = "KExceedsN"


class SingularCovariance(StatescopeError):
    code = "SingularCovariance"


class LengthMismatch(StatescopeError):
    code = "LengthMismatch"


# ---------------------------------------------------------------------- fsm

class UnannotatedWindow(StatescopeError):
    code = "UnannotatedWindow"

    def __init__(self, window_id: int):
        super().__init__(f"window {window_id} has no annotation")
        self.window_id = window_id


class IncompleteCollage(StatescopeError):
    code = "IncompleteCollage"

    def __init__(self, missing: list[str]):
        super().__init__(f"collage does not cover states: {sorted(missing)}")
        self.missing = sorted(missing)


class UnknownLabel(StatescopeError):
    code = "UnknownLabel"

    def __init__(self, labels: list[str]):
        super().__init__(f"unknown state labels: {sorted(labels)}")
        self.labels = sorted(labels)


# ------------------------------------------------------------------- verify

class TooFewPerState(StatescopeError):
    code = "TooFewPerState"

    def __init__(self, label: str, count: int, needed: int = 2):
        super().__init__(f"state {label!r} has {count} vectors, needs >= {needed}")
        self.label = label


# -------------------------------------------------------------------- store

class SessionNotFound(StatescopeError):
    code = "SessionNotFound"
    http_status = 404


class SessionExists(StatescopeError):
    code = "SessionExists"
    http_status = 409


class MissingArtifact(StatescopeError):
    code = "MissingArtifact"
    http_status = 404


class StaleArtifact(StatescopeError):
    code = "StaleArtifact"
    http_status = 409
