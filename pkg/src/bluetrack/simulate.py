"""Deterministic discrete-event simulation of the radio environment.

Ground truth lives here: scripted piecewise-linear device motion, the true
channel law (the inverse of the fitted distance model), Gaussian timing
noise, the access point range limit, and injected faults.  A run turns a
script into an ordered event stream: periodic tracking signals plus fault
and range events.

Replays are exactly reproducible: randomness comes from a counter-based
Philox generator seeded explicitly, and events are emitted in nondecreasing
time order with faults applied before signals at the same instant.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import TrackingError
from .geometry import ApLayout, Point2D
from .protocol import TrackingSignal, encode_signal, validate_ap_code, validate_device_id

#: Smallest representable round trip; draws below this are floored.
T_MIN = 1e-12

#: Class-1 radio coverage, meters.
DEFAULT_RANGE_LIMIT_M = 100.0

DEFAULT_CADENCE_S = 5.0

FAULT_KINDS = ("ap_disconnect", "ap_reconnect", "device_offline")


class ScriptError(TrackingError):
    """A simulation script (or event file) is malformed."""


@dataclass(frozen=True)
class ChannelTruth:
    """True channel law ``t = 2*(s - error)/speed`` plus timing noise."""

    speed_mps: float
    error_m: float = 0.0
    noise_sigma_s: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.speed_mps) or self.speed_mps <= 0:
            raise ValueError(f"true signal speed must be > 0, got {self.speed_mps!r}")
        if not math.isfinite(self.noise_sigma_s) or self.noise_sigma_s < 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.noise_sigma_s!r}")


@dataclass(frozen=True)
class Waypoint:
    at: float
    pos: Point2D


@dataclass(frozen=True)
class DevicePath:
    """Scripted ground-truth motion, linearly interpolated between waypoints."""

    device_id: str
    waypoints: tuple[Waypoint, ...]

    def __post_init__(self) -> None:
        validate_device_id(self.device_id)
        if not self.waypoints:
            raise ScriptError(f"device {self.device_id}: at least one waypoint required")
        times = [w.at for w in self.waypoints]
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise ScriptError(f"device {self.device_id}: waypoint times must be strictly increasing")

    def position_at(self, t: float) -> Point2D:
        """Piecewise-linear interpolation, clamped at both ends."""
        points = self.waypoints
        if t <= points[0].at:
            return points[0].pos
        if t >= points[-1].at:
            return points[-1].pos
        for earlier, later in zip(points, points[1:]):
            if t <= later.at:
                frac = (t - earlier.at) / (later.at - earlier.at)
                return Point2D(
                    earlier.pos.x + frac * (later.pos.x - earlier.pos.x),
                    earlier.pos.y + frac * (later.pos.y - earlier.pos.y),
                )
        return points[-1].pos


@dataclass(frozen=True)
class Fault:
    """An injected fault: ap_disconnect / ap_reconnect / device_offline."""

    kind: str
    at: float
    ap: str | None = None
    device: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in FAULT_KINDS:
            raise ScriptError(f"unknown fault kind {self.kind!r}")
        if self.kind in ("ap_disconnect", "ap_reconnect"):
            if self.ap is None:
                raise ScriptError(f"fault {self.kind} requires an access point code")
            validate_ap_code(self.ap)
        if self.kind == "device_offline":
            if self.device is None:
                raise ScriptError("fault device_offline requires a device id")
            validate_device_id(self.device)
        if not math.isfinite(self.at) or self.at < 0:
            raise ScriptError(f"fault time must be finite and >= 0, got {self.at!r}")


@dataclass(frozen=True)
class SimScript:
    """Per-device motion plus the fault list."""

    devices: tuple[DevicePath, ...]
    faults: tuple[Fault, ...] = ()

    def __post_init__(self) -> None:
        if not self.devices:
            raise ScriptError("script contains no devices")
        ids = [d.device_id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ScriptError(f"duplicate device ids in script: {ids}")

    @property
    def horizon(self) -> float:
        return max(path.waypoints[-1].at for path in self.devices)


@dataclass(frozen=True)
class SimEvent:
    """One emitted event; ``signal`` is set only for kind ``signal_emitted``."""

    at: float
    kind: str
    device: str | None = None
    ap: str | None = None
    signal: TrackingSignal | None = None

    def to_record(self) -> dict:
        record: dict = {"at": self.at, "kind": self.kind}
        if self.device is not None:
            record["device"] = self.device
        if self.ap is not None:
            record["ap"] = self.ap
        if self.signal is not None:
            record["line"] = encode_signal(self.signal).rstrip("\n")
        return record


def rtt_for_distance(
    truth: ChannelTruth, distance_m: float, rng: np.random.Generator | None = None
) -> float:
    """Round-trip total for a true distance: ``2*(s - C)/V`` plus timing noise.

    Noise is Gaussian on the total time.  The result is floored at
    :data:`T_MIN` so every emitted time is positive.  Deterministic given
    the generator state (one normal draw per call).
    """
    if not math.isfinite(distance_m) or distance_m < 0:
        raise ValueError(f"distance must be finite and >= 0, got {distance_m!r}")
    if rng is None:
        rng = np.random.Generator(np.random.Philox(truth.seed))
    t = 2.0 * (distance_m - truth.error_m) / truth.speed_mps
    t += float(rng.normal(0.0, truth.noise_sigma_s))
    return max(t, T_MIN)


def inject_fault(script: SimScript, fault: Fault) -> SimScript:
    """Return the script with ``fault`` appended (insertion order is the tie-break)."""
    return dataclasses.replace(script, faults=script.faults + (fault,))


def run_simulation(
    script: SimScript,
    layout: ApLayout,
    truth: ChannelTruth,
    cadence: float = DEFAULT_CADENCE_S,
    range_limit_m: float = DEFAULT_RANGE_LIMIT_M,
) -> list[SimEvent]:
    """Run the scripted scenario and return the ordered event stream.

    Every ``cadence`` seconds (ticks at 0, cadence, 2*cadence, ... up to the
    script horizon) each online device measures its three access point round
    trips and emits one tracking signal.  Any disconnected access point
    suppresses whole signals (the wire format needs all three times); a leg
    whose true distance exceeds ``range_limit_m`` yields an ``out_of_range``
    event instead of a signal.  Faults take effect at their own timestamps,
    before signals of the same instant; two faults at the same time apply in
    insertion order.
    """
    if not math.isfinite(cadence) or cadence <= 0:
        raise ValueError(f"cadence must be > 0, got {cadence!r}")
    rng = np.random.Generator(np.random.Philox(truth.seed))
    events: list[SimEvent] = []
    down_aps: set[str] = set()
    offline: set[str] = set()

    for fault in script.faults:
        if fault.kind in ("ap_disconnect", "ap_reconnect") and fault.ap not in layout.codes:
            raise ScriptError(f"fault references unknown access point {fault.ap!r}")
    faults = sorted(script.faults, key=lambda f: f.at)  # stable: insertion order ties
    fault_idx = 0

    def apply_faults_through(t: float) -> None:
        nonlocal fault_idx
        while fault_idx < len(faults) and faults[fault_idx].at <= t:
            fault = faults[fault_idx]
            fault_idx += 1
            if fault.kind == "ap_disconnect":
                if fault.ap not in down_aps:
                    down_aps.add(fault.ap)
                    events.append(SimEvent(at=fault.at, kind="ap_disconnected", ap=fault.ap))
            elif fault.kind == "ap_reconnect":
                if fault.ap in down_aps:
                    down_aps.remove(fault.ap)
                    events.append(SimEvent(at=fault.at, kind="ap_reconnected", ap=fault.ap))
            elif fault.kind == "device_offline":
                if fault.device not in offline:
                    offline.add(fault.device)
                    events.append(SimEvent(at=fault.at, kind="device_offline", device=fault.device))

    horizon = script.horizon
    n_ticks = int(math.floor(horizon / cadence + 1e-9)) + 1
    for i in range(n_ticks):
        t = i * cadence
        apply_faults_through(t)
        for path in script.devices:
            if path.device_id in offline:
                continue
            if down_aps:
                continue  # a dark access point leaves the three-time frame unfillable
            pos = path.position_at(t)
            dists = [pos.distance_to(ap) for ap in layout.aps]
            over = [code for code, s in zip(layout.codes, dists) if s > range_limit_m]
            if over:
                for code in over:
                    events.append(
                        SimEvent(at=t, kind="out_of_range", device=path.device_id, ap=code)
                    )
                continue
            rtts = [rtt_for_distance(truth, s, rng) for s in dists]
            signal = TrackingSignal(path.device_id, rtts[0], rtts[1], rtts[2])
            events.append(
                SimEvent(at=t, kind="signal_emitted", device=path.device_id, signal=signal)
            )
    apply_faults_through(horizon)
    return events


@dataclass(frozen=True)
class SimConfig:
    """A full scenario: script, layout, channel truth and timing knobs."""

    script: SimScript
    layout: ApLayout
    truth: ChannelTruth
    cadence: float = DEFAULT_CADENCE_S
    range_limit_m: float = DEFAULT_RANGE_LIMIT_M


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ScriptError(f"{context}: missing key {key!r}")
    return mapping[key]


def load_sim_config(path: str | Path) -> SimConfig:
    """Parse a scenario file (JSON).

    Expected keys: ``devices[].id``, ``devices[].waypoints[] = {t, x, y}``,
    ``faults[]``, ``channel = {speed, error, noise_sigma, seed}``,
    ``layout = {aps: [{code, x, y}, ...]}``; optional ``cadence`` and
    ``range_limit``.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ScriptError(f"cannot read script {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScriptError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ScriptError(f"{path}: top level must be an object")
    try:
        devices = []
        for dev in _require(data, "devices", str(path)):
            device_id = _require(dev, "id", "device entry")
            waypoints = tuple(
                Waypoint(at=float(_require(w, "t", "waypoint")),
                         pos=Point2D(float(_require(w, "x", "waypoint")),
                                     float(_require(w, "y", "waypoint"))))
                for w in _require(dev, "waypoints", f"device {device_id}")
            )
            devices.append(DevicePath(device_id=device_id, waypoints=waypoints))
        faults = tuple(
            Fault(
                kind=_require(f, "kind", "fault entry"),
                at=float(_require(f, "at", "fault entry")),
                ap=f.get("ap"),
                device=f.get("device"),
            )
            for f in data.get("faults", [])
        )
        script = SimScript(devices=tuple(devices), faults=faults)
        channel = _require(data, "channel", str(path))
        truth = ChannelTruth(
            speed_mps=float(_require(channel, "speed", "channel")),
            error_m=float(channel.get("error", 0.0)),
            noise_sigma_s=float(channel.get("noise_sigma", 0.0)),
            seed=int(channel.get("seed", 0)),
        )
        layout_data = _require(data, "layout", str(path))
        layout = ApLayout.from_entries(
            (ap["code"], ap["x"], ap["y"]) for ap in _require(layout_data, "aps", "layout")
        )
        cadence = float(data.get("cadence", DEFAULT_CADENCE_S))
        range_limit = float(data.get("range_limit", DEFAULT_RANGE_LIMIT_M))
    except ScriptError:
        raise
    except (TypeError, ValueError, KeyError, TrackingError) as exc:
        raise ScriptError(f"{path}: {exc}") from exc
    return SimConfig(script=script, layout=layout, truth=truth, cadence=cadence,
                     range_limit_m=range_limit)


def write_events(path: str | Path, events: Iterable[SimEvent]) -> None:
    """Write the event stream as line-delimited JSON (stable key order)."""
    with Path(path).open("w") as fh:
        for event in events:
            fh.write(json.dumps(event.to_record(), sort_keys=True))
            fh.write("\n")


def read_events(path: str | Path) -> list[dict]:
    """Read a line-delimited event file back into records."""
    records = []
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ScriptError(f"cannot read event file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict) or "kind" not in record or "at" not in record:
            raise ScriptError(f"{path}:{lineno}: not an event record")
        records.append(record)
    return records
