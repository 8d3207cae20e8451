"""Synthetic ground-truth device: an FSM whose states emit side channels.

Each state carries Gaussian power/throughput profiles and a set of
emanation harmonics over a simulated spectrum span. Simulation is a pure
function of (device, script, window_ms, seed, params), which makes the
generated sessions usable as a deterministic test oracle; the single
``noise_scale`` knob controls how separable the states are.

Fixture profile values below are hand-picked for separability; only the
state counts and the all-zero network behaviour of the vision fixture are
meaningful, the mA/bps numbers are not measurements.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaViolation, UndefinedTransition
from .traces import (
    MultiModalWindow,
    Session,
    StateLabel,
    TransitionEvent,
)

SCHEMA = 1


@dataclass(frozen=True)
class StateProfile:
    power_mean_ma: float
    power_std_ma: float
    throughput_mean_bps: float
    throughput_std_bps: float
    emanation_harmonics: tuple[tuple[float, float], ...] = ()  # (freq_hz, psd_db)
    psd_noise_db: float = -90.0

    def __post_init__(self):
        if self.power_std_ma < 0 or self.throughput_std_bps < 0:
            raise SchemaViolation("profile std values must be >= 0")
        freqs = [f for f, _ in self.emanation_harmonics]
        if len(set(freqs)) != len(freqs):
            raise SchemaViolation("harmonic frequencies must be distinct")


@dataclass(frozen=True)
class GroundTruthDevice:
    states: dict[str, StateProfile]
    transitions: dict[tuple[str, str], str]  # (state, event kind) -> state
    initial: str

    def __post_init__(self):
        if self.initial not in self.states:
            raise SchemaViolation(f"initial state {self.initial!r} not defined")
        for (src, kind), dst in self.transitions.items():
            if src not in self.states or dst not in self.states:
                raise SchemaViolation(f"transition ({src},{kind})->{dst} references unknown state")


@dataclass(frozen=True)
class ScenarioScript:
    """Interaction plan: fire event, then dwell in the resulting state.

    ``initial_dwell_ms`` gives the initial state observable windows before
    the first event fires (defaults to one window).
    """

    steps: tuple[tuple[str, int], ...]  # (event kind, dwell_ms)
    initial_dwell_ms: int | None = None

    def __post_init__(self):
        for kind, dwell in self.steps:
            if dwell <= 0:
                raise SchemaViolation(f"dwell_ms must be > 0 (event {kind!r})")
        if self.initial_dwell_ms is not None and self.initial_dwell_ms <= 0:
            raise SchemaViolation("initial_dwell_ms must be > 0")


@dataclass(frozen=True)
class SimulationParams:
    power_interval_ms: int = 10
    network_interval_ms: int = 100
    spectrum_bins: int = 256
    spectrum_span_hz: float = 2e6
    psd_noise_std_db: float = 1.0
    noise_scale: float = 1.0  # SNR knob: 0 = noiseless emissions

    @property
    def bin_hz(self) -> float:
        return self.spectrum_span_hz / self.spectrum_bins


DEFAULT_PARAMS = SimulationParams()


def _validate_profiles(device: GroundTruthDevice, params: SimulationParams) -> None:
    nyquist = params.spectrum_span_hz / 2
    for name, prof in device.states.items():
        for f, _ in prof.emanation_harmonics:
            if not (0 < f < nyquist):
                raise SchemaViolation(
                    f"state {name!r}: harmonic {f} Hz outside (0, {nyquist}) of the simulated span"
                )


def _emit_windows(rng, prof: StateProfile, state: str, t0: int, dwell_ms: int,
                  window_ms: int, params: SimulationParams, next_id: int) -> list[MultiModalWindow]:
    bounds = list(range(t0, t0 + dwell_ms, window_ms)) + [t0 + dwell_ms]
    scale = params.noise_scale
    out = []
    for ws, we in zip(bounds[:-1], bounds[1:]):
        n_pow = max(1, (we - ws) // params.power_interval_ms)
        power = np.clip(rng.normal(prof.power_mean_ma, prof.power_std_ma * scale, n_pow), 0.0, None)
        n_net = max(1, (we - ws) // params.network_interval_ms)
        dt_s = params.network_interval_ms / 1000.0
        rates = rng.normal(prof.throughput_mean_bps, prof.throughput_std_bps * scale, n_net)
        network = np.clip(rates, 0.0, None) * dt_s
        spec = prof.psd_noise_db + rng.normal(0.0, params.psd_noise_std_db * scale, params.spectrum_bins)
        for f, level_db in prof.emanation_harmonics:
            b = int(round(f / params.bin_hz))
            spec[b] = level_db + rng.normal(0.0, params.psd_noise_std_db * scale)
        out.append(
            MultiModalWindow(
                window_id=next_id + len(out),
                t_start_ms=ws,
                t_end_ms=we,
                power=tuple(float(v) for v in power),
                network=tuple(float(v) for v in network),
                spectrum_psd=tuple(float(v) for v in spec),
                annotation=state,
            )
        )
    return out


def simulate(
    device: GroundTruthDevice,
    script: ScenarioScript,
    window_ms: int,
    seed: int,
    params: SimulationParams = DEFAULT_PARAMS,
    session_id: str | None = None,
) -> Session:
    """Run the script against the device and emit an annotated Session."""
    if window_ms <= 0:
        raise SchemaViolation("window_ms must be > 0")
    _validate_profiles(device, params)
    rng = np.random.default_rng(seed)

    windows: list[MultiModalWindow] = []
    events: list[TransitionEvent] = []
    state = device.initial
    t = 0
    first_dwell = script.initial_dwell_ms if script.initial_dwell_ms is not None else window_ms
    windows.extend(_emit_windows(rng, device.states[state], state, t, first_dwell,
                                 window_ms, params, next_id=0))
    t += first_dwell
    visited = {state}
    for kind, dwell in script.steps:
        target = device.transitions.get((state, kind))
        if target is None:
            raise UndefinedTransition(state, kind)
        events.append(
            TransitionEvent(
                event_id=len(events),
                kind=kind,
                t_ms=t,
                from_window=windows[-1].window_id,
                to_window=len(windows),
            )
        )
        state = target
        visited.add(state)
        windows.extend(_emit_windows(rng, device.states[state], state, t, dwell,
                                     window_ms, params, next_id=len(windows)))
        t += dwell
    labels = tuple(StateLabel(name, "ground_truth") for name in sorted(visited))
    return Session(
        session_id=session_id or f"synth-{seed}",
        windows=tuple(windows),
        events=tuple(events),
        labels=labels,
        spectrum_unit="db",
    )


# --------------------------------------------------------------------------
# Fixtures: a 5-state voice assistant and a 3-state local camera
# --------------------------------------------------------------------------

def voice_kit_fixture() -> GroundTruthDevice:
    """Five-state voice assistant analog with busy network and RF profiles.

    Busier states emit more and stronger harmonics, so the distribution of
    spike levels (count and dB) separates states, not just spike positions;
    summary statistics are blind to which bins carry the energy.
    """
    states = {
        "off": StateProfile(20.0, 2.0, 0.0, 0.0, ()),
        "internet_access": StateProfile(340.0, 4.0, 9000.0, 600.0,
                                        ((200e3, -60.0), (400e3, -63.0))),
        "listening": StateProfile(300.0, 4.0, 600.0, 80.0,
                                  ((250e3, -50.0), (500e3, -53.0), (750e3, -56.0))),
        "speech_processing": StateProfile(420.0, 5.0, 3500.0, 300.0,
                                          ((300e3, -40.0), (450e3, -42.0), (600e3, -44.0),
                                           (750e3, -46.0), (900e3, -48.0))),
        "responding": StateProfile(380.0, 5.0, 6500.0, 500.0,
                                   ((150e3, -28.0), (300e3, -30.0), (450e3, -32.0),
                                    (600e3, -34.0), (750e3, -36.0), (900e3, -38.0))),
    }
    transitions = {
        ("off", "power_on"): "internet_access",
        ("internet_access", "connected"): "listening",
        ("listening", "say_query"): "speech_processing",
        ("speech_processing", "processed"): "responding",
        ("responding", "done"): "listening",
        ("listening", "power_off"): "off",
    }
    return GroundTruthDevice(states=states, transitions=transitions, initial="off")


def vision_kit_fixture() -> GroundTruthDevice:
    """Three-state local camera analog: no network traffic in any state.

    Power separates "off" from the two active states but cannot tell
    "idle" from "detecting"; emanations do the opposite. Only the fused
    view separates all three, which is the point of the fixture.
    """
    states = {
        "off": StateProfile(30.0, 3.0, 0.0, 0.0, ()),
        "idle": StateProfile(250.0, 4.0, 0.0, 0.0, ()),
        "detecting": StateProfile(250.0, 4.0, 0.0, 0.0,
                                  ((300e3, -35.0), (600e3, -40.0))),
    }
    transitions = {
        ("off", "power_on"): "idle",
        ("idle", "face_in"): "detecting",
        ("detecting", "face_out"): "idle",
        ("idle", "power_off"): "off",
    }
    return GroundTruthDevice(states=states, transitions=transitions, initial="off")


def _allocate(total: int, n_visits: int) -> list[int]:
    """Split ``total`` windows across visits, every visit getting >= 1."""
    if total < n_visits:
        raise SchemaViolation(f"cannot spread {total} windows over {n_visits} visits")
    base, rem = divmod(total, n_visits)
    return [base + 1 if i < rem else base for i in range(n_visits)]


def _cycle_script(device: GroundTruthDevice, cycle_events: list[str], cycles: int,
                  windows_per_state: int, window_ms: int) -> ScenarioScript:
    """Repeat the event cycle, sizing dwells for an exact per-state window count."""
    # Symbolically walk the cycle to list visits per state (initial dwell first).
    visit_order: list[str] = [device.initial]
    state = device.initial
    for _ in range(cycles):
        for kind in cycle_events:
            nxt = device.transitions.get((state, kind))
            if nxt is None:
                raise UndefinedTransition(state, kind)
            visit_order.append(nxt)
            state = nxt
    per_state_visits: dict[str, int] = {}
    for s in visit_order:
        per_state_visits[s] = per_state_visits.get(s, 0) + 1
    alloc = {s: _allocate(windows_per_state, n) for s, n in per_state_visits.items()}
    counters = {s: 0 for s in per_state_visits}

    def take(s: str) -> int:
        n = alloc[s][counters[s]]
        counters[s] += 1
        return n

    initial_dwell = take(device.initial) * window_ms
    steps = []
    state = device.initial
    for _ in range(cycles):
        for kind in cycle_events:
            state = device.transitions[(state, kind)]
            steps.append((kind, take(state) * window_ms))
    return ScenarioScript(steps=tuple(steps), initial_dwell_ms=initial_dwell)


VOICE_CYCLE = ["power_on", "connected", "say_query", "processed", "done", "power_off"]
VISION_CYCLE = ["power_on", "face_in", "face_out", "power_off"]


def _feasible_cycles(cycles: int, windows_per_state: int) -> int:
    # two visits per cycle to the busiest state, plus the initial visit
    return max(1, min(cycles, windows_per_state // 2, windows_per_state - 1))


def voice_kit_script(windows_per_state: int = 100, window_ms: int = 1000, cycles: int = 10) -> ScenarioScript:
    cycles = _feasible_cycles(cycles, windows_per_state)
    return _cycle_script(voice_kit_fixture(), VOICE_CYCLE, cycles, windows_per_state, window_ms)


def vision_kit_script(windows_per_state: int = 100, window_ms: int = 1000, cycles: int = 10) -> ScenarioScript:
    cycles = _feasible_cycles(cycles, windows_per_state)
    return _cycle_script(vision_kit_fixture(), VISION_CYCLE, cycles, windows_per_state, window_ms)


FIXTURES = {"voice": (voice_kit_fixture, voice_kit_script), "vision": (vision_kit_fixture, vision_kit_script)}


# --------------------------------------------------------------------------
# JSON definitions for devices and scripts
# --------------------------------------------------------------------------

def device_to_doc(device: GroundTruthDevice) -> dict:
    return {
        "schema": SCHEMA,
        "initial": device.initial,
        "states": {
            name: {
                "power_mean_ma": p.power_mean_ma,
                "power_std_ma": p.power_std_ma,
                "throughput_mean_bps": p.throughput_mean_bps,
                "throughput_std_bps": p.throughput_std_bps,
                "emanation_harmonics": [list(h) for h in p.emanation_harmonics],
                "psd_noise_db": p.psd_noise_db,
            }
            for name, p in device.states.items()
        },
        "transitions": [
            {"from": src, "event": kind, "to": dst}
            for (src, kind), dst in sorted(device.transitions.items())
        ],
    }


def device_from_doc(doc: dict) -> GroundTruthDevice:
    if doc.get("schema") != SCHEMA:
        raise SchemaViolation(f"unsupported device schema {doc.get('schema')!r}")
    try:
        states = {
            name: StateProfile(
                power_mean_ma=float(p["power_mean_ma"]),
                power_std_ma=float(p["power_std_ma"]),
                throughput_mean_bps=float(p["throughput_mean_bps"]),
                throughput_std_bps=float(p["throughput_std_bps"]),
                emanation_harmonics=tuple(
                    (float(f), float(db)) for f, db in p.get("emanation_harmonics", [])
                ),
                psd_noise_db=float(p.get("psd_noise_db", -90.0)),
            )
            for name, p in doc["states"].items()
        }
        transitions = {
            (t["from"], t["event"]): t["to"] for t in doc.get("transitions", [])
        }
        return GroundTruthDevice(states=states, transitions=transitions, initial=doc["initial"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"malformed device document: {exc}") from None


def script_to_doc(script: ScenarioScript) -> dict:
    return {
        "schema": SCHEMA,
        "initial_dwell_ms": script.initial_dwell_ms,
        "steps": [{"event": k, "dwell_ms": d} for k, d in script.steps],
    }


def script_from_doc(doc: dict) -> ScenarioScript:
    if doc.get("schema") != SCHEMA:
        raise SchemaViolation(f"unsupported script schema {doc.get('schema')!r}")
    try:
        steps = tuple((str(s["event"]), int(s["dwell_ms"])) for s in doc["steps"])
        head = doc.get("initial_dwell_ms")
        return ScenarioScript(steps=steps, initial_dwell_ms=int(head) if head is not None else None)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"malformed script document: {exc}") from None


def load_device(path: str | Path) -> GroundTruthDevice:
    return device_from_doc(json.loads(Path(path).read_text()))


def load_script(path: str | Path) -> ScenarioScript:
    return script_from_doc(json.loads(Path(path).read_text()))
