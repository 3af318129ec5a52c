"""Per-device tracking state, movement alarms and link error handling.

The engine owns one :class:`DeviceTrack` per tracked device.  The first
signal a device sends after initialization fixes its initial location; from
then on every position is compared against the last acknowledged reference.
A change below the movement threshold in both coordinates is ignored; a
change of at least the threshold in either coordinate latches the alarm
until an operator acknowledges it, which also rebases the reference.

Access point disconnects would otherwise produce wrong positions and false
alarms, so they put every track into a link-error state: positions freeze,
active alarms are withdrawn, and nothing alarms again until the link is
restored.  The acknowledged reference survives the outage, so true movement
re-raises its alarm after reconnection.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum

from .calibration import ChannelParams, distance_from_time
from .errors import TrackingError
from .geometry import (
    ApLayout,
    DegenerateGeometry,
    DistanceTriple,
    Point2D,
    trilaterate,
)
from .protocol import FriendlyName, TrackingSignal


class NotInitialized(TrackingError):
    """Tracking was attempted before calibration and layout were set."""


class NoActiveAlarm(TrackingError):
    """Acknowledge called on a device whose alarm is not active."""


class UnknownDevice(TrackingError):
    """No track exists for the given device id."""


class UnknownAp(TrackingError):
    """The access point code is not part of the configured layout."""


class LinkState(Enum):
    CONNECTED = "connected"
    ERROR = "error"
    OFFLINE = "offline"


@dataclass(frozen=True)
class MonitorConfig:
    """Movement threshold (m), advisory grid spacing (m) and signal cadence (s)."""

    move_threshold_m: float = 1.0
    grid_spacing_m: float = 4.0
    cadence_s: float = 5.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.move_threshold_m) or self.move_threshold_m <= 0:
            raise ValueError(f"movement threshold must be > 0, got {self.move_threshold_m!r}")


@dataclass(frozen=True)
class Alarm:
    since: float
    at: Point2D


@dataclass
class DeviceTrack:
    """Mutable per-device state owned by the engine."""

    device_id: str
    friendly: FriendlyName
    initial: Point2D | None = None
    last: Point2D | None = None
    reference: Point2D | None = None  # last acknowledged position
    alarm: Alarm | None = None
    link: LinkState = LinkState.CONNECTED
    link_reason: str | None = None
    last_signal_at: float | None = None

    def to_record(self) -> dict:
        record: dict = {
            "id": self.device_id,
            "name": self.friendly.name,
            "display": self.friendly.display(),
            "link": self.link.value,
            "link_reason": self.link_reason,
            "last_signal_at": self.last_signal_at,
        }
        record["initial"] = None if self.initial is None else {"x": self.initial.x, "y": self.initial.y}
        record["last"] = None if self.last is None else {"x": self.last.x, "y": self.last.y}
        if self.alarm is None:
            record["alarm"] = None
        else:
            record["alarm"] = {"since": self.alarm.since, "x": self.alarm.at.x, "y": self.alarm.at.y}
        return record


@dataclass(frozen=True)
class MonitorEvent:
    """One entry of the totally-ordered monitor stream."""

    kind: str
    at: float
    device: str | None = None
    name: str | None = None
    ap: str | None = None
    x: float | None = None
    y: float | None = None
    reason: str | None = None

    def to_record(self) -> dict:
        record = {"kind": self.kind, "at": self.at}
        for key in ("device", "name", "ap", "x", "y", "reason"):
            value = getattr(self, key)
            if value is not None:
                record[key] = value
        return record


@dataclass(frozen=True)
class ShutdownVerdict:
    allowed: bool
    connected: tuple[str, ...] = ()


def movement_exceeds(reference: Point2D, position: Point2D, threshold: float) -> bool:
    """The alarm rule: trigger iff |dx| >= threshold or |dy| >= threshold."""
    return (
        abs(position.x - reference.x) >= threshold
        or abs(position.y - reference.y) >= threshold
    )


class MonitorEngine:
    """Tracks, alarms and link state for one initialized deployment.

    Track updates are serialized by the owning service; the engine itself
    performs no locking.  Every mutating call returns the monitor events it
    produced, in order.
    """

    def __init__(
        self,
        layout: ApLayout,
        params: ChannelParams,
        config: MonitorConfig | None = None,
    ) -> None:
        self.layout = layout
        self.params = params
        self.config = config or MonitorConfig()
        self.tracks: dict[str, DeviceTrack] = {}
        self._down_aps: set[str] = set()

    # -- signals ---------------------------------------------------------

    def process_signal(self, sig: TrackingSignal, at: float | None = None) -> list[MonitorEvent]:
        """Turn one tracking signal into position/alarm updates.

        While any access point is in error no update happens at all: the
        three times cannot all be trusted, and alarms from such data would
        be false.  Signals are then dropped without events.
        """
        at = time.time() if at is None else at
        if self._down_aps:
            return []
        distances = DistanceTriple(
            distance_from_time(self.params, sig.t_ap1).meters,
            distance_from_time(self.params, sig.t_ap2).meters,
            distance_from_time(self.params, sig.t_ap3).meters,
        )
        try:
            position = trilaterate(self.layout, distances)
        except DegenerateGeometry as exc:
            return [MonitorEvent(kind="geometry_error", at=at, device=sig.source, reason=str(exc))]

        track = self.tracks.get(sig.source)
        events: list[MonitorEvent] = []
        if track is None:
            track = DeviceTrack(device_id=sig.source, friendly=FriendlyName(sig.source, sig.source))
            self.tracks[sig.source] = track
        if track.link is LinkState.OFFLINE:
            track.link = LinkState.CONNECTED
            track.link_reason = None
        track.last_signal_at = at

        if track.initial is None:
            # First transmission after initialization: the initial location.
            track.initial = position
            track.reference = position
            track.last = position
            events.append(
                MonitorEvent(
                    kind="device_registered",
                    at=at,
                    device=track.device_id,
                    name=track.friendly.name,
                    x=position.x,
                    y=position.y,
                )
            )
            return events

        track.last = position
        events.append(
            MonitorEvent(kind="position_updated", at=at, device=track.device_id,
                         x=position.x, y=position.y)
        )
        if track.alarm is None and movement_exceeds(
            track.reference, position, self.config.move_threshold_m
        ):
            track.alarm = Alarm(since=at, at=position)
            events.append(
                MonitorEvent(kind="alarm_raised", at=at, device=track.device_id,
                             x=position.x, y=position.y)
            )
        return events

    # -- operator actions --------------------------------------------------

    def acknowledge(self, device_id: str, at: float | None = None) -> list[MonitorEvent]:
        """Stop the alarm and rebase the movement reference to the last position."""
        at = time.time() if at is None else at
        track = self._track(device_id)
        if track.alarm is None:
            raise NoActiveAlarm(f"device {device_id} has no active alarm")
        track.alarm = None
        track.reference = track.last
        return [MonitorEvent(kind="alarm_cleared", at=at, device=device_id)]

    def rename_device(self, device_id: str, name: str, at: float | None = None) -> list[MonitorEvent]:
        at = time.time() if at is None else at
        track = self._track(device_id)
        track.friendly.name = name
        return [MonitorEvent(kind="device_renamed", at=at, device=device_id, name=name)]

    # -- link state ----------------------------------------------------------

    def handle_ap_disconnect(
        self, code: str, at: float | None = None, reason: str | None = None
    ) -> list[MonitorEvent]:
        """An access point went dark: freeze everything and surface one error.

        Latched alarms are withdrawn (alarms and link errors are mutually
        exclusive); the acknowledged references stay, so real movement
        re-raises after reconnection.
        """
        at = time.time() if at is None else at
        self._require_known_ap(code)
        if code in self._down_aps:
            return []
        self._down_aps.add(code)
        reason = reason or f"access point {code} disconnected"
        events = [MonitorEvent(kind="ap_error", at=at, ap=code, reason=reason)]
        for track in self.tracks.values():
            if track.link is not LinkState.OFFLINE:
                track.link = LinkState.ERROR
                track.link_reason = reason
            if track.alarm is not None:
                track.alarm = None
                events.append(
                    MonitorEvent(kind="alarm_cleared", at=at, device=track.device_id,
                                 reason=reason)
                )
        return events

    def handle_ap_reconnect(self, code: str, at: float | None = None) -> list[MonitorEvent]:
        at = time.time() if at is None else at
        self._require_known_ap(code)
        if code not in self._down_aps:
            return []
        self._down_aps.remove(code)
        events = [MonitorEvent(kind="ap_restored", at=at, ap=code)]
        if not self._down_aps:
            for track in self.tracks.values():
                if track.link is LinkState.ERROR:
                    track.link = LinkState.CONNECTED
                    track.link_reason = None
        return events

    def mark_device_offline(self, device_id: str, at: float | None = None) -> list[MonitorEvent]:
        at = time.time() if at is None else at
        track = self._track(device_id)
        track.link = LinkState.OFFLINE
        track.link_reason = "disconnected"
        return [MonitorEvent(kind="device_offline", at=at, device=device_id)]

    def note_out_of_range(self, device_id: str, code: str, at: float | None = None) -> list[MonitorEvent]:
        """Record a range violation reported by the radio side (no state change)."""
        at = time.time() if at is None else at
        self._require_known_ap(code)
        return [MonitorEvent(kind="out_of_range", at=at, device=device_id, ap=code)]

    # -- lifecycle -------------------------------------------------------------

    def can_shutdown(self) -> ShutdownVerdict:
        """Shutdown is gated on live connections; error/offline tracks do not block."""
        connected = tuple(
            track.device_id
            for track in self.tracks.values()
            if track.link is LinkState.CONNECTED
        )
        if connected:
            return ShutdownVerdict(allowed=False, connected=connected)
        return ShutdownVerdict(allowed=True)

    def reset_epoch(self, at: float | None = None) -> list[MonitorEvent]:
        """Re-initialization: the next transmission of every device is initial again.

        Friendly names and link states persist; positions, references and
        alarms are cleared.
        """
        at = time.time() if at is None else at
        for track in self.tracks.values():
            track.initial = None
            track.last = None
            track.reference = None
            track.alarm = None
            track.last_signal_at = None
        return [MonitorEvent(kind="epoch_reset", at=at)]

    def snapshot_tracks(self) -> list[dict]:
        return [track.to_record() for track in self.tracks.values()]

    # -- helpers -------------------------------------------------------------

    def _track(self, device_id: str) -> DeviceTrack:
        track = self.tracks.get(device_id)
        if track is None:
            raise UnknownDevice(f"unknown device {device_id!r}")
        return track

    def _require_known_ap(self, code: str) -> None:
        if code not in self.layout.codes:
            raise UnknownAp(f"unknown access point code {code!r}")
