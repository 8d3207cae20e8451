"""Core trace types, file parsing, windowing, and session (de)serialization.

Conventions:
  * timestamps are integer milliseconds throughout,
  * power/network CSV files carry a ``timestamp_ms,value`` header and LF
    line endings (the parsers also accept headerless content),
  * IQ captures start at t = 0 ms in the session epoch,
  * a window's ``spectrum_psd`` is whatever emanation series the producer
    chose: a full PSD vector, or PSD sampled at reference peak bins.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    EmptyInput,
    EventOutsideRange,
    HeaderMismatch,
    MalformedLine,
    NonMonotonicTimestamp,
    NoOverlap,
    SchemaViolation,
    TruncatedPayload,
)

SESSION_SCHEMA = 1
CSV_HEADER = "timestamp_ms,value"
LABEL_ORIGINS = ("human", "merged", "collaged", "ground_truth")


@dataclass(frozen=True)
class PowerTrace:
    """Time-series current draw; samples are (timestamp_ms, current_ma)."""

    samples: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class NetworkTrace:
    """Per-interval throughput; samples are (timestamp_ms, bytes)."""

    samples: tuple[tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class IqTrace:
    """Complex baseband capture; sample 0 is at t = 0 ms."""

    sample_rate_hz: float
    center_freq_hz: float
    iq: np.ndarray

    def span_ms(self) -> tuple[int, int]:
        end = int(round(1000.0 * len(self.iq) / self.sample_rate_hz))
        return 0, max(end, 1)


@dataclass(frozen=True)
class TimedSpectra:
    """Precomputed per-instant PSD vectors, an alternative to raw IQ."""

    bin_hz: float
    unit: str  # "db" | "linear"
    entries: tuple[tuple[int, tuple[float, ...]], ...]  # (t_ms, psd)


@dataclass(frozen=True)
class StateLabel:
    name: str
    origin: str  # one of LABEL_ORIGINS

    def __post_init__(self):
        if not self.name:
            raise SchemaViolation("state label name must be non-empty")
        if self.origin not in LABEL_ORIGINS:
            raise SchemaViolation(f"unknown label origin {self.origin!r}")


@dataclass(frozen=True)
class MultiModalWindow:
    """One aligned observation window across the three modalities."""

    window_id: int
    t_start_ms: int
    t_end_ms: int
    power: tuple[float, ...]
    network: tuple[float, ...]
    spectrum_psd: tuple[float, ...]
    annotation: str | None = None
    cluster: int | None = None

    def __post_init__(self):
        if self.t_start_ms >= self.t_end_ms:
            raise SchemaViolation(
                f"window {self.window_id}: t_start {self.t_start_ms} >= t_end {self.t_end_ms}"
            )
        if not (self.power or self.network or self.spectrum_psd):
            raise SchemaViolation(f"window {self.window_id}: every modality is empty")
        if self.spectrum_psd and not np.all(np.isfinite(self.spectrum_psd)):
            raise SchemaViolation(f"window {self.window_id}: non-finite spectrum value")


@dataclass(frozen=True)
class TransitionEvent:
    event_id: int
    kind: str
    t_ms: int
    from_window: int
    to_window: int


@dataclass(frozen=True)
class Session:
    """Ordered log of windows, interaction events, and state labels."""

    session_id: str
    windows: tuple[MultiModalWindow, ...]
    events: tuple[TransitionEvent, ...]
    labels: tuple[StateLabel, ...]
    spectrum_unit: str = "db"

    def label_map(self) -> dict[str, StateLabel]:
        return {lab.name: lab for lab in self.labels}

    def window_by_id(self, window_id: int) -> MultiModalWindow:
        for w in self.windows:
            if w.window_id == window_id:
                return w
        raise SchemaViolation(f"no window with id {window_id}")


def validate_session(session: Session) -> None:
    """Raise SchemaViolation if any session invariant is broken."""
    ids = [w.window_id for w in session.windows]
    if len(set(ids)) != len(ids):
        raise SchemaViolation("duplicate window ids")
    starts = [w.t_start_ms for w in session.windows]
    if starts != sorted(starts):
        raise SchemaViolation("windows not ordered by t_start_ms")
    names = [lab.name for lab in session.labels]
    if len(set(names)) != len(names):
        raise SchemaViolation("duplicate label names")
    known = set(names)
    for w in session.windows:
        if w.annotation is not None and w.annotation not in known:
            raise SchemaViolation(f"window {w.window_id} annotated with unknown label {w.annotation!r}")
    order = {wid: i for i, wid in enumerate(ids)}
    for ev in session.events:
        if ev.from_window not in order or ev.to_window not in order:
            raise SchemaViolation(f"event {ev.event_id} references missing window")
        if order[ev.from_window] >= order[ev.to_window]:
            raise SchemaViolation(f"event {ev.event_id}: from_window does not precede to_window")


# --------------------------------------------------------------------------
# CSV traces
# --------------------------------------------------------------------------

def _read_text(src: str | bytes | Path) -> str:
    if isinstance(src, bytes):
        return src.decode("utf-8")
    return Path(src).read_text(encoding="utf-8")


def _parse_csv_samples(src, value_parser, value_desc: str):
    text = _read_text(src)
    samples = []
    prev_ts = None
    for line_no, line in enumerate(text.split("\n"), start=1):
        if line == "" or (line_no == 1 and line == CSV_HEADER):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise MalformedLine(line_no, f"expected 'timestamp_ms,{value_desc}' at line {line_no}")
        try:
            ts = int(parts[0])
            val = value_parser(parts[1])
        except ValueError:
            raise MalformedLine(line_no, f"cannot parse line {line_no}: {line!r}") from None
        if prev_ts is not None and ts <= prev_ts:
            raise NonMonotonicTimestamp(line_no)
        prev_ts = ts
        samples.append((ts, val))
    if not samples:
        raise EmptyInput("trace has no samples")
    return tuple(samples)


def _parse_current(raw: str) -> float:
    val = float(raw)
    if not np.isfinite(val) or val < 0:
        raise ValueError(raw)
    return val


def _parse_bytes(raw: str) -> int:
    val = int(raw)
    if val < 0:
        raise ValueError(raw)
    return val


def parse_power_trace(src: str | bytes | Path) -> PowerTrace:
    return PowerTrace(_parse_csv_samples(src, _parse_current, "current_ma"))


def parse_network_trace(src: str | bytes | Path) -> NetworkTrace:
    return NetworkTrace(_parse_csv_samples(src, _parse_bytes, "bytes"))


def _format_value(val) -> str:
    return str(val) if isinstance(val, int) else repr(float(val))


def serialize_power_trace(trace: PowerTrace) -> str:
    lines = [CSV_HEADER] + [f"{ts},{_format_value(v)}" for ts, v in trace.samples]
    return "\n".join(lines) + "\n"


def serialize_network_trace(trace: NetworkTrace) -> str:
    lines = [CSV_HEADER] + [f"{ts},{v}" for ts, v in trace.samples]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# IQ traces: JSON header + little-endian interleaved float32 payload
# --------------------------------------------------------------------------

def parse_iq_trace(header_src: str | bytes | Path, payload_src: str | bytes | Path) -> IqTrace:
    try:
        header = json.loads(_read_text(header_src))
    except json.JSONDecodeError as exc:
        raise HeaderMismatch(f"IQ header is not valid JSON: {exc}") from None
    try:
        rate = float(header["sample_rate_hz"])
        center = float(header["center_freq_hz"])
        count = int(header["count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise HeaderMismatch(f"IQ header missing or invalid field: {exc}") from None
    if rate <= 0 or count < 1:
        raise HeaderMismatch("sample_rate_hz must be > 0 and count >= 1")

    if isinstance(payload_src, bytes):
        payload = payload_src
    else:
        payload = Path(payload_src).read_bytes()
    needed = count * 8  # two float32 per complex sample
    if len(payload) < needed:
        raise TruncatedPayload(f"payload holds {len(payload)} bytes, header declares {needed}")
    if len(payload) > needed:
        raise HeaderMismatch(f"payload holds {len(payload)} bytes, header declares {needed}")
    flat = struct.unpack(f"<{count * 2}f", payload)
    iq = np.array(flat[0::2], dtype=np.complex128) + 1j * np.array(flat[1::2])
    return IqTrace(sample_rate_hz=rate, center_freq_hz=center, iq=iq)


def serialize_iq_trace(trace: IqTrace) -> tuple[str, bytes]:
    header = json.dumps(
        {
            "sample_rate_hz": trace.sample_rate_hz,
            "center_freq_hz": trace.center_freq_hz,
            "count": len(trace.iq),
        },
        sort_keys=True,
    )
    flat = np.empty(2 * len(trace.iq), dtype="<f4")
    flat[0::2] = np.real(trace.iq)
    flat[1::2] = np.imag(trace.iq)
    return header, flat.tobytes()


def parse_timed_spectra(src: str | bytes | Path) -> TimedSpectra:
    try:
        doc = json.loads(_read_text(src))
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"spectra file is not valid JSON: {exc}") from None
    if doc.get("schema") != SESSION_SCHEMA:
        raise SchemaViolation(f"unsupported spectra schema {doc.get('schema')!r}")
    entries = tuple(
        (int(e["t_ms"]), tuple(float(v) for v in e["psd"])) for e in doc.get("spectra", [])
    )
    if not entries:
        raise EmptyInput("spectra file has no entries")
    return TimedSpectra(bin_hz=float(doc.get("bin_hz", 1.0)), unit=doc.get("unit", "db"), entries=entries)


# --------------------------------------------------------------------------
# Windowing
# --------------------------------------------------------------------------

def _trace_span(samples: tuple[tuple[int, float], ...]) -> tuple[int, int]:
    times = [ts for ts, _ in samples]
    if len(times) > 1:
        dt = int(round(float(np.median(np.diff(times)))))
    else:
        dt = 1
    return times[0], times[-1] + max(dt, 1)


def window_boundaries(t0: int, t1: int, event_times: list[int], window_ms: int) -> list[int]:
    """Event-aligned boundaries: the grid restarts at every event time."""
    cuts = [t0] + sorted(set(event_times)) + [t1]
    bounds = []
    for seg_start, seg_end in zip(cuts[:-1], cuts[1:]):
        t = seg_start
        while t < seg_end:
            bounds.append(t)
            t += window_ms
    bounds.append(t1)
    return bounds


def _segment_spans(seg_start: int, seg_end: int, window_ms: int) -> list[tuple[int, int]]:
    starts = list(range(seg_start, seg_end, window_ms))
    return [(s, min(s + window_ms, seg_end)) for s in starts]


def window_session(
    power: PowerTrace | None,
    network: NetworkTrace | None,
    emanation: IqTrace | TimedSpectra | None,
    event_times: list[int],
    window_ms: int,
) -> list[MultiModalWindow]:
    """Partition the covered time range into event-aligned windows.

    The covered range is the intersection of the provided modality spans;
    every event time becomes a window boundary. Per-window slices are
    copied out of each modality (raw IQ is sliced, not transformed).
    """
    if window_ms <= 0:
        raise SchemaViolation("window_ms must be > 0")
    spans = []
    if power is not None:
        spans.append(_trace_span(power.samples))
    if network is not None:
        spans.append(_trace_span(network.samples))
    if isinstance(emanation, IqTrace):
        spans.append(emanation.span_ms())
    elif isinstance(emanation, TimedSpectra):
        times = [t for t, _ in emanation.entries]
        spans.append((times[0], times[-1] + 1))
    if not spans:
        raise NoOverlap("no modality streams supplied")
    t0 = max(s[0] for s in spans)
    t1 = min(s[1] for s in spans)
    if t0 >= t1:
        raise NoOverlap(f"streams share no time range (intersection [{t0},{t1}))")
    for t in event_times:
        if not (t0 < t < t1):
            raise EventOutsideRange(f"event at {t} ms outside covered range [{t0},{t1})")

    def slices(ws: int, we: int):
        pw = tuple(v for ts, v in power.samples if ws <= ts < we) if power else ()
        nw = tuple(float(v) for ts, v in network.samples if ws <= ts < we) if network else ()
        if isinstance(emanation, TimedSpectra):
            vecs = [np.asarray(psd) for t, psd in emanation.entries if ws <= t < we]
            em = tuple(float(v) for v in np.mean(vecs, axis=0)) if vecs else ()
        elif isinstance(emanation, IqTrace):
            fs = emanation.sample_rate_hz
            sl = emanation.iq[int(np.ceil(ws * fs / 1000.0)) : int(np.ceil(we * fs / 1000.0))]
            if len(sl):
                from . import dsp  # local import: dsp does not depend on this module

                spec = dsp.fft(sl, sample_rate_hz=fs)
                em = tuple(float(v) for v in dsp.psd(spec, window_length=len(sl)))
            else:
                em = ()
        else:
            em = ()
        return pw, nw, em

    cuts = [t0] + sorted({t for t in event_times}) + [t1]
    windows = []
    for seg_start, seg_end in zip(cuts[:-1], cuts[1:]):
        # windows whose slices are all empty merge into a neighbour so every
        # emitted window carries data while still partitioning the segment
        pending_start: int | None = None
        seg_windows: list[tuple[int, int, tuple, tuple, tuple]] = []
        for ws, we in _segment_spans(seg_start, seg_end, window_ms):
            pw, nw, em = slices(ws, we)
            if not (pw or nw or em):
                if seg_windows:
                    prev = seg_windows[-1]
                    seg_windows[-1] = (prev[0], we, prev[2], prev[3], prev[4])
                elif pending_start is None:
                    pending_start = ws
                continue
            start = pending_start if pending_start is not None else ws
            pending_start = None
            seg_windows.append((start, we, pw, nw, em))
        if pending_start is not None:
            raise NoOverlap(f"segment [{seg_start},{seg_end}) contains no samples in any modality")
        windows.extend(seg_windows)

    out = []
    for wid, (ws, we, pw, nw, em) in enumerate(windows):
        out.append(
            MultiModalWindow(
                window_id=wid,
                t_start_ms=int(ws),
                t_end_ms=int(we),
                power=pw,
                network=nw,
                spectrum_psd=em,
            )
        )
    return out


def events_for_boundaries(
    kinds_and_times: list[tuple[str, int]], windows: list[MultiModalWindow]
) -> tuple[TransitionEvent, ...]:
    """Resolve (kind, t_ms) pairs into TransitionEvents at window boundaries."""
    start_at = {w.t_start_ms: w.window_id for w in windows}
    end_at = {w.t_end_ms: w.window_id for w in windows}
    events = []
    for eid, (kind, t) in enumerate(sorted(kinds_and_times, key=lambda kt: kt[1])):
        if t not in start_at or t not in end_at:
            raise EventOutsideRange(f"event at {t} ms does not fall on a window boundary")
        events.append(TransitionEvent(eid, kind, t, from_window=end_at[t], to_window=start_at[t]))
    return tuple(events)


# --------------------------------------------------------------------------
# Session JSON (schema 1)
# --------------------------------------------------------------------------

def session_to_doc(session: Session) -> dict:
    return {
        "schema": SESSION_SCHEMA,
        "session_id": session.session_id,
        "spectrum_unit": session.spectrum_unit,
        "windows": [
            {
                "window_id": w.window_id,
                "t_start_ms": w.t_start_ms,
                "t_end_ms": w.t_end_ms,
                "power": list(w.power),
                "network": list(w.network),
                "spectrum_psd": list(w.spectrum_psd),
                "annotation": w.annotation,
                "cluster": w.cluster,
            }
            for w in session.windows
        ],
        "events": [
            {
                "event_id": e.event_id,
                "kind": e.kind,
                "t_ms": e.t_ms,
                "from_window": e.from_window,
                "to_window": e.to_window,
            }
            for e in session.events
        ],
        "labels": [{"name": lab.name, "origin": lab.origin} for lab in session.labels],
    }


def session_to_json(session: Session) -> str:
    return json.dumps(session_to_doc(session), sort_keys=True, indent=1) + "\n"


def session_from_doc(doc: dict) -> Session:
    if not isinstance(doc, dict) or doc.get("schema") != SESSION_SCHEMA:
        raise SchemaViolation(f"unsupported session schema {doc.get('schema')!r}")
    try:
        windows = tuple(
            MultiModalWindow(
                window_id=int(w["window_id"]),
                t_start_ms=int(w["t_start_ms"]),
                t_end_ms=int(w["t_end_ms"]),
                power=tuple(float(v) for v in w.get("power", [])),
                network=tuple(float(v) for v in w.get("network", [])),
                spectrum_psd=tuple(float(v) for v in w.get("spectrum_psd", [])),
                annotation=w.get("annotation"),
                cluster=w.get("cluster"),
            )
            for w in doc.get("windows", [])
        )
        events = tuple(
            TransitionEvent(
                event_id=int(e["event_id"]),
                kind=str(e["kind"]),
                t_ms=int(e["t_ms"]),
                from_window=int(e["from_window"]),
                to_window=int(e["to_window"]),
            )
            for e in doc.get("events", [])
        )
        labels = tuple(
            StateLabel(name=str(l["name"]), origin=str(l["origin"])) for l in doc.get("labels", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"malformed session document: {exc}") from None
    session = Session(
        session_id=str(doc.get("session_id", "")),
        windows=windows,
        events=events,
        labels=labels,
        spectrum_unit=doc.get("spectrum_unit", "db"),
    )
    validate_session(session)
    return session


def session_from_json(text: str | bytes) -> Session:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"session file is not valid JSON: {exc}") from None
    return session_from_doc(doc)


def annotate_windows(session: Session, name: str, window_ids: list[int], origin: str = "human") -> Session:
    """Return a session with the given windows annotated with ``name``."""
    known = {w.window_id for w in session.windows}
    missing = [wid for wid in window_ids if wid not in known]
    if missing:
        raise SchemaViolation(f"no such windows: {missing}")
    targets = set(window_ids)
    windows = tuple(
        replace(w, annotation=name) if w.window_id in targets else w for w in session.windows
    )
    labels = session.labels
    if name not in {lab.name for lab in labels}:
        labels = labels + (StateLabel(name=name, origin=origin),)
    return replace(session, windows=windows, labels=labels)
