"""Wire formats for the tracking network.

Two line-oriented formats travel between the simulated radio side and the
central monitoring service:

* the tracking signal ``SourceID,time_AP1,time_AP2,time_AP3`` that a
  tracked device sends every few seconds, carrying its id and the three
  round-trip totals in seconds, and
* the echo frame an access point returns, which is the probe payload with
  the access point's three-letter code appended.

Codecs here are stateless; the only stateful piece is :class:`CodeRegistry`,
which guards deployment-wide uniqueness of access point codes.
"""

from __future__ import annotations

import math
import random
import re
import threading
from dataclasses import dataclass

from .errors import TrackingError

_DEVICE_ID_RE = re.compile(r"^[A-Za-z0-9]{1,16}$")
_AP_CODE_RE = re.compile(r"^[A-Za-z]{3}$")

PROBE_PREFIX = "PING-"


class ProtocolError(TrackingError):
    """Base class for wire-format errors."""


class ParseError(ProtocolError):
    """A line could not be decoded into a tracking signal."""


class InvalidDeviceId(ProtocolError):
    """Device ids are 1-16 alphanumeric ASCII characters."""


class InvalidCode(ProtocolError):
    """Access point codes are exactly three ASCII letters."""


class InvalidSignal(ProtocolError):
    """A tracking signal was built with missing or non-positive times."""


class DuplicateCode(ProtocolError):
    """The access point code is already registered in this deployment."""


def validate_device_id(text: str) -> str:
    if not isinstance(text, str) or not _DEVICE_ID_RE.match(text):
        raise InvalidDeviceId(f"invalid device id {text!r}")
    return text


def validate_ap_code(text: str) -> str:
    if not isinstance(text, str) or not _AP_CODE_RE.match(text):
        raise InvalidCode(f"invalid access point code {text!r}")
    return text


@dataclass
class FriendlyName:
    """Operator-visible label paired with the immutable device id.

    The ``name`` half is mutable: a tracker moved onto another object gets
    renamed without changing its id.
    """

    name: str
    device_id: str

    def __post_init__(self) -> None:
        validate_device_id(self.device_id)

    def display(self) -> str:
        if self.name and self.name != self.device_id:
            return f"{self.name}({self.device_id})"
        return self.device_id


@dataclass(frozen=True)
class TrackingSignal:
    """One periodic report: device id plus three round-trip totals (s)."""

    source: str
    t_ap1: float
    t_ap2: float
    t_ap3: float

    def __post_init__(self) -> None:
        try:
            validate_device_id(self.source)
        except InvalidDeviceId as exc:
            raise InvalidSignal(str(exc)) from exc
        for t in self.times:
            if not isinstance(t, (int, float)) or not math.isfinite(t) or t <= 0:
                raise InvalidSignal(f"round-trip times must be finite and > 0, got {t!r}")

    @property
    def times(self) -> tuple[float, float, float]:
        return (self.t_ap1, self.t_ap2, self.t_ap3)


def _format_seconds(value: float) -> str:
    # Fixed-point with at least 9 decimal places, widened until the text
    # parses back to the exact same float so encode/decode is lossless.
    for decimals in range(9, 40):
        text = f"{value:.{decimals}f}"
        if float(text) == value:
            return text
    return repr(value)


def encode_signal(sig: TrackingSignal) -> str:
    """Serialize to the canonical ``SourceID,t1,t2,t3`` line (newline-terminated)."""
    fields = [sig.source] + [_format_seconds(t) for t in sig.times]
    return ",".join(fields) + "\n"


def decode_signal(line: str) -> TrackingSignal:
    """Parse one wire line into a :class:`TrackingSignal`.

    Total on any string input: returns a signal or raises :class:`ParseError`.
    """
    if not isinstance(line, str):
        raise ParseError(f"expected a text line, got {type(line).__name__}")
    parts = line.rstrip("\r\n").split(",")
    if len(parts) != 4:
        raise ParseError(f"expected 4 comma-separated fields, got {len(parts)}")
    try:
        source = validate_device_id(parts[0])
    except InvalidDeviceId as exc:
        raise ParseError(str(exc)) from exc
    times = []
    for field in parts[1:]:
        try:
            t = float(field)
        except ValueError as exc:
            raise ParseError(f"non-numeric time field {field!r}") from exc
        if not math.isfinite(t):
            raise ParseError(f"time field {field!r} is not finite")
        if t <= 0:
            raise ParseError(f"time field {field!r} is not positive")
        times.append(t)
    return TrackingSignal(source, times[0], times[1], times[2])


@dataclass(frozen=True)
class EchoFrame:
    """A probe payload with exactly one access point code appended."""

    payload: str
    code: str

    def __post_init__(self) -> None:
        validate_ap_code(self.code)
        if not self.payload:
            raise ValueError("echo payload must be non-empty")
        if "," in self.payload or "\n" in self.payload or "\r" in self.payload:
            raise ValueError("echo payload already carries a code or is not an opaque token")

    def to_wire(self) -> str:
        return f"{self.payload},{self.code}"


def append_code(payload: str, code: str) -> EchoFrame:
    """Attach an access point code to a probe payload.

    Appending to a frame that already carries a code is rejected by the
    frame invariant (the payload may not contain the separator).
    """
    return EchoFrame(payload, validate_ap_code(code))


def strip_code(wire: str) -> tuple[str, str]:
    """Invert :func:`append_code`: split a wire frame back into (payload, code)."""
    if "," not in wire:
        raise ParseError(f"echo frame {wire!r} carries no code")
    payload, code = wire.rsplit(",", 1)
    try:
        validate_ap_code(code)
    except InvalidCode as exc:
        raise ParseError(str(exc)) from exc
    if not payload:
        raise ParseError("echo frame has an empty payload")
    return payload, code


def make_probe_payload(rng: random.Random | None = None) -> str:
    """Opaque probe token ``PING-<8 hex chars>``."""
    if rng is None:
        value = random.getrandbits(32)
    else:
        value = rng.getrandbits(32)
    return f"{PROBE_PREFIX}{value:08x}"


class CodeRegistry:
    """Deployment-wide access point code assignments (unique, thread-safe)."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._codes: dict[str, str] = {}

    def register(self, code: str, name: str = "") -> str:
        code = validate_ap_code(code)
        with self._lock:
            if code in self._codes:
                raise DuplicateCode(f"access point code {code!r} already registered")
            self._codes[code] = name
        return code

    def __contains__(self, code: str) -> bool:
        with self._lock:
            return code in self._codes

    def name_of(self, code: str) -> str:
        with self._lock:
            return self._codes[code]

    def codes(self) -> tuple[str, ...]:
        with self._lock:
            return tuple(self._codes)
