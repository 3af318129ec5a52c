"""The central monitoring service: initialization workflow and live state.

Wraps a :class:`~bluetrack.monitor.MonitorEngine` behind the operator-facing
operations: entering calibration pairs (with the five-sample prompt and
abort), entering access point coordinates, ingesting raw wire lines,
acknowledging alarms, renaming devices and the guarded shutdown.

All mutations run under one lock, so the published event stream is
append-only and totally ordered; ``query_state`` returns point-in-time
snapshots.  Subscribers receive every record exactly once, in order.
"""

from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass, field

from .calibration import (
    CalibrationSet,
    ChannelParams,
    fit,
)
from .geometry import ApLayout, GeometryVerdict, check_geometry
from .monitor import (
    MonitorConfig,
    MonitorEngine,
    MonitorEvent,
    NotInitialized,
    ShutdownVerdict,
)
from .protocol import decode_signal

PHASE_UNINITIALIZED = "uninitialized"
PHASE_CALIBRATING = "calibrating"
PHASE_READY = "ready"

MIN_PAIRS_PROMPT_OPTIONS = ("continue", "abort")


@dataclass(frozen=True)
class CalibrationOutcome:
    """Result of a pair submission: a fit, or a prompt to continue/abort."""

    status: str  # "fitted" | "prompt"
    params: ChannelParams | None = None
    count: int = 0
    options: tuple[str, ...] = ()

    def to_record(self) -> dict:
        if self.status == "fitted":
            assert self.params is not None
            return {
                "status": "fitted",
                "speed_mps": self.params.speed_mps,
                "error_m": self.params.error_m,
                "residual_rms_m": self.params.residual_rms_m,
                "n_samples": self.params.n_samples,
            }
        return {"status": "prompt", "count": self.count, "options": list(self.options)}


@dataclass(frozen=True)
class LayoutOutcome:
    degenerate: bool

    def to_record(self) -> dict:
        record: dict = {"status": "ok"}
        if self.degenerate:
            record["warning"] = "access points are collinear; positions cannot be solved"
        return record


class CmsService:
    """Long-running monitoring service state machine.

    Phases: ``uninitialized`` (nothing entered), ``calibrating`` (an
    initialization is underway or half done) and ``ready`` (channel fitted
    and layout set; signals are accepted).  Re-running the initialization
    refits the channel and restarts the first-transmission rule for every
    device.
    """

    def __init__(self, config: MonitorConfig | None = None) -> None:
        self.config = config or MonitorConfig()
        self._lock = threading.RLock()
        self._params: ChannelParams | None = None
        self._layout: ApLayout | None = None
        self._layout_degenerate = False
        self._engine: MonitorEngine | None = None
        self._entry_open = False
        self._events: list[dict] = []
        self._subscribers: list[queue.SimpleQueue] = []
        self._stopped = threading.Event()
        self.on_stop = None  # optional callback fired once on accepted shutdown

    # -- event stream -------------------------------------------------------

    def _publish(self, events: list[MonitorEvent]) -> None:
        for event in events:
            record = event.to_record()
            record["seq"] = len(self._events)
            self._events.append(record)
            for sub in self._subscribers:
                sub.put(record)

    def events_since(self, seq: int = 0) -> list[dict]:
        with self._lock:
            return list(self._events[seq:])

    def subscribe(self, since: int = 0) -> queue.SimpleQueue:
        """Queue receiving history from ``since`` and then every new record."""
        with self._lock:
            sub: queue.SimpleQueue = queue.SimpleQueue()
            for record in self._events[since:]:
                sub.put(record)
            self._subscribers.append(sub)
            return sub

    def unsubscribe(self, sub: queue.SimpleQueue) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    @property
    def stopped(self) -> bool:
        return self._stopped.is_set()

    # -- initialization -------------------------------------------------------

    @property
    def phase(self) -> str:
        with self._lock:
            if self._engine is not None:
                return PHASE_READY
            if self._entry_open or self._params is not None or self._layout is not None:
                return PHASE_CALIBRATING
            return PHASE_UNINITIALIZED

    def submit_calibration_pairs(self, pairs, at: float | None = None) -> CalibrationOutcome:
        """Fit the channel from (distance_m, total_time_s) pairs.

        Below five pairs nothing is stored; the outcome is a prompt carrying
        the current count so the operator can continue entering pairs or
        abort.  A successful fit while already ready re-initializes: every
        device's next transmission becomes its initial location again.
        """
        at = time.time() if at is None else at
        cal = CalibrationSet.from_pairs(pairs)
        with self._lock:
            if len(cal) < 5:
                self._entry_open = True
                return CalibrationOutcome(
                    status="prompt", count=len(cal), options=MIN_PAIRS_PROMPT_OPTIONS
                )
            params = fit(cal)
            refit = self._engine is not None
            self._params = params
            self._entry_open = False
            events = [
                MonitorEvent(
                    kind="calibration_fitted",
                    at=at,
                    reason=f"speed={params.speed_mps} error={params.error_m} n={params.n_samples}",
                )
            ]
            if refit:
                self._engine.params = params
                events.extend(self._engine.reset_epoch(at=at))
            else:
                self._maybe_ready()
            self._publish(events)
            return CalibrationOutcome(status="fitted", params=params)

    def abort_calibration(self) -> str:
        """Abort the entry workflow; nothing submitted so far is kept."""
        with self._lock:
            self._entry_open = False
            return self.phase

    def set_ap_coordinates(self, entries, at: float | None = None) -> LayoutOutcome:
        """Store the three access point (code, x, y) rows.

        A collinear layout is stored with a warning rather than rejected;
        the operator may fix it with the next entry.  Changing the layout
        while ready restarts the first-transmission rule.
        """
        at = time.time() if at is None else at
        layout = ApLayout.from_entries(entries)
        degenerate = check_geometry(layout) is GeometryVerdict.DEGENERATE
        with self._lock:
            relaid = self._engine is not None
            self._layout = layout
            self._layout_degenerate = degenerate
            events = [
                MonitorEvent(
                    kind="layout_set",
                    at=at,
                    reason="degenerate" if degenerate else "ok",
                )
            ]
            if relaid:
                self._engine.layout = layout
                events.extend(self._engine.reset_epoch(at=at))
            else:
                self._maybe_ready()
            self._publish(events)
            return LayoutOutcome(degenerate=degenerate)

    def _maybe_ready(self) -> None:
        if self._engine is None and self._params is not None and self._layout is not None:
            self._engine = MonitorEngine(self._layout, self._params, self.config)

    # -- tracking --------------------------------------------------------------

    def ingest_signal(self, line: str, at: float | None = None) -> dict:
        """Decode one wire line and feed it to the engine; events are published."""
        at = time.time() if at is None else at
        sig = decode_signal(line)
        with self._lock:
            engine = self._require_engine()
            events = engine.process_signal(sig, at=at)
            self._publish(events)
            if not events:
                return {"status": "dropped", "device": sig.source,
                        "reason": "link error active"}
            return {"status": "accepted", "device": sig.source}

    def refresh(self, device_id: str, at: float | None = None) -> dict:
        """Operator acknowledgment: alarm off, marker back to default."""
        at = time.time() if at is None else at
        with self._lock:
            engine = self._require_engine()
            self._publish(engine.acknowledge(device_id, at=at))
            return {"status": "ok", "device": device_id}

    def rename_device(self, device_id: str, name: str, at: float | None = None) -> dict:
        at = time.time() if at is None else at
        with self._lock:
            engine = self._require_engine()
            self._publish(engine.rename_device(device_id, name, at=at))
            return {"status": "ok", "device": device_id, "name": name}

    def report_ap_down(self, code: str, at: float | None = None) -> dict:
        at = time.time() if at is None else at
        with self._lock:
            engine = self._require_engine()
            self._publish(engine.handle_ap_disconnect(code, at=at))
            return {"status": "ok", "ap": code}

    def report_ap_up(self, code: str, at: float | None = None) -> dict:
        at = time.time() if at is None else at
        with self._lock:
            engine = self._require_engine()
            self._publish(engine.handle_ap_reconnect(code, at=at))
            return {"status": "ok", "ap": code}

    def report_device_offline(self, device_id: str, at: float | None = None) -> dict:
        at = time.time() if at is None else at
        with self._lock:
            engine = self._require_engine()
            self._publish(engine.mark_device_offline(device_id, at=at))
            return {"status": "ok", "device": device_id}

    def report_out_of_range(self, device_id: str, code: str, at: float | None = None) -> dict:
        at = time.time() if at is None else at
        with self._lock:
            engine = self._require_engine()
            self._publish(engine.note_out_of_range(device_id, code, at=at))
            return {"status": "ok", "device": device_id, "ap": code}

    # -- queries ------------------------------------------------------------------

    def query_state(self) -> dict:
        """Consistent point-in-time snapshot of the whole service."""
        with self._lock:
            params = self._params
            snapshot: dict = {
                "phase": self.phase,
                "event_seq": len(self._events),
                "config": {
                    "move_threshold_m": self.config.move_threshold_m,
                    "grid_spacing_m": self.config.grid_spacing_m,
                    "cadence_s": self.config.cadence_s,
                },
                "params": None
                if params is None
                else {
                    "speed_mps": params.speed_mps,
                    "error_m": params.error_m,
                    "residual_rms_m": params.residual_rms_m,
                    "n_samples": params.n_samples,
                },
                "layout": None
                if self._layout is None
                else {
                    "aps": [
                        {"code": code, "x": p.x, "y": p.y}
                        for code, p in zip(self._layout.codes, self._layout.aps)
                    ],
                    "degenerate": self._layout_degenerate,
                },
                "devices": [] if self._engine is None else self._engine.snapshot_tracks(),
            }
            return snapshot

    # -- lifecycle -------------------------------------------------------------------

    def shutdown(self) -> ShutdownVerdict:
        """Exit gating: allowed only once no device link is live."""
        with self._lock:
            if self._engine is None:
                verdict = ShutdownVerdict(allowed=True)
            else:
                verdict = self._engine.can_shutdown()
            if verdict.allowed and not self._stopped.is_set():
                self._stopped.set()
                callback = self.on_stop
            else:
                callback = None
        if callback is not None:
            callback()
        return verdict

    def _require_engine(self) -> MonitorEngine:
        if self._engine is None:
            raise NotInitialized(
                "system is not initialized: calibration and access point coordinates required"
            )
        return self._engine


def replay_events(records) -> dict:
    """Rebuild the per-device view purely from the event stream.

    Mirrors what a dashboard client does: no positioning math, just folding
    records.  Returns ``{"devices": {id: {...}}}`` with the same core fields
    as the snapshot, so a replay can be checked against ``query_state``.
    """
    devices: dict[str, dict] = {}
    down_aps: set[str] = set()

    def track(device_id: str) -> dict:
        return devices.setdefault(
            device_id,
            {
                "id": device_id,
                "name": device_id,
                "initial": None,
                "last": None,
                "alarm": None,
                "link": "connected",
                "link_reason": None,
                "last_signal_at": None,
            },
        )

    for record in records:
        kind = record["kind"]
        if kind == "device_registered":
            entry = track(record["device"])
            pos = {"x": record["x"], "y": record["y"]}
            entry["initial"] = pos
            entry["last"] = pos
            entry["alarm"] = None
            entry["link"] = "connected"
            entry["link_reason"] = None
            entry["last_signal_at"] = record["at"]
            entry["name"] = record.get("name", entry["name"])
        elif kind == "position_updated":
            entry = track(record["device"])
            entry["last"] = {"x": record["x"], "y": record["y"]}
            entry["link"] = "connected"
            entry["link_reason"] = None
            entry["last_signal_at"] = record["at"]
        elif kind == "alarm_raised":
            entry = track(record["device"])
            entry["alarm"] = {"since": record["at"], "x": record["x"], "y": record["y"]}
        elif kind == "alarm_cleared":
            track(record["device"])["alarm"] = None
        elif kind == "device_renamed":
            track(record["device"])["name"] = record["name"]
        elif kind == "device_offline":
            entry = track(record["device"])
            entry["link"] = "offline"
            entry["link_reason"] = "disconnected"
        elif kind == "ap_error":
            down_aps.add(record["ap"])
            for entry in devices.values():
                if entry["link"] != "offline":
                    entry["link"] = "error"
                    entry["link_reason"] = record.get("reason")
        elif kind == "ap_restored":
            down_aps.discard(record["ap"])
            if not down_aps:
                for entry in devices.values():
                    if entry["link"] == "error":
                        entry["link"] = "connected"
                        entry["link_reason"] = None
        elif kind == "epoch_reset":
            for entry in devices.values():
                entry["initial"] = None
                entry["last"] = None
                entry["alarm"] = None
                entry["last_signal_at"] = None
    return {"devices": devices}
