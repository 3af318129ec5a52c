"""bluetrack: desk-scale indoor tracking over a simulated radio channel.

Round-trip-time calibration fits the channel (speed and transmission
error), trilateration turns three access point distances into a device
coordinate, and a central monitoring service tracks devices, raises
movement alarms and guards its own shutdown.  A deterministic simulator
provides the radio side.
"""

from .calibration import (
    CalibrationSet,
    ChannelParams,
    DistanceEstimate,
    RttSample,
    distance_from_time,
    fit,
    half_time,
)
from .errors import TrackingError
from .geometry import (
    ApLayout,
    DegenerateGeometry,
    DistanceTriple,
    GeometryVerdict,
    LinearSystem2,
    Point2D,
    build_linear_system,
    check_geometry,
    solve_position,
    trilaterate,
)
from .monitor import MonitorConfig, MonitorEngine, MonitorEvent
from .protocol import (
    CodeRegistry,
    EchoFrame,
    FriendlyName,
    TrackingSignal,
    append_code,
    decode_signal,
    encode_signal,
    strip_code,
    validate_ap_code,
    validate_device_id,
)
from .service import CmsService, replay_events
from .simulate import (
    ChannelTruth,
    DevicePath,
    Fault,
    SimEvent,
    SimScript,
    Waypoint,
    inject_fault,
    rtt_for_distance,
    run_simulation,
)

__version__ = "0.1.0"

__all__ = [
    "ApLayout",
    "CalibrationSet",
    "ChannelParams",
    "ChannelTruth",
    "CmsService",
    "CodeRegistry",
    "DegenerateGeometry",
    "DevicePath",
    "DistanceEstimate",
    "DistanceTriple",
    "EchoFrame",
    "Fault",
    "FriendlyName",
    "GeometryVerdict",
    "LinearSystem2",
    "MonitorConfig",
    "MonitorEngine",
    "MonitorEvent",
    "Point2D",
    "RttSample",
    "SimEvent",
    "SimScript",
    "TrackingError",
    "TrackingSignal",
    "Waypoint",
    "append_code",
    "build_linear_system",
    "check_geometry",
    "decode_signal",
    "distance_from_time",
    "encode_signal",
    "fit",
    "half_time",
    "inject_fault",
    "replay_events",
    "rtt_for_distance",
    "run_simulation",
    "solve_position",
    "strip_code",
    "trilaterate",
    "validate_ap_code",
    "validate_device_id",
]
