"""Monitoring walk-through: the full loop from calibration to alarm.

The service is initialized with calibration pairs and access point
coordinates, then fed the simulator's signals. The first transmission
fixes each device's initial location; real movement latches an alarm
that the operator clears with Refresh; an access point outage freezes
tracking instead of raising false alarms.
"""

from bluetrack import (
    ChannelTruth,
    CmsService,
    DevicePath,
    MonitorConfig,
    Point2D,
    SimScript,
    Waypoint,
    encode_signal,
    rtt_for_distance,
    run_simulation,
)
from bluetrack.geometry import ApLayout

AP_ROWS = [("aaa", 0.0, 0.0), ("bbb", 10.0, 0.0), ("ccc", 0.0, 10.0)]
truth = ChannelTruth(speed_mps=340.0, error_m=0.25, seed=1)

service = CmsService(MonitorConfig(move_threshold_m=1.0))
print("phase:", service.phase)

# -- initialization: five calibration pairs plus the AP coordinates --------
pairs = [(s, rtt_for_distance(truth, s)) for s in (1.0, 2.0, 4.0, 8.0, 16.0)]
outcome = service.submit_calibration_pairs(pairs)
print(f"calibrated: V = {outcome.params.speed_mps:.1f} m/s, C = {outcome.params.error_m:.3f} m")
service.set_ap_coordinates(AP_ROWS)
print("phase:", service.phase)

# -- simulate a device that wanders off its spot -----------------------------
layout = ApLayout.from_entries(AP_ROWS)
script = SimScript(
    devices=(
        DevicePath("LG13", (Waypoint(0.0, Point2D(2, 2)), Waypoint(20.0, Point2D(2, 2)),
                            Waypoint(40.0, Point2D(6, 2)))),
    )
)
for event in run_simulation(script, layout, truth):
    if event.kind == "signal_emitted":
        service.ingest_signal(encode_signal(event.signal), at=event.at)

for record in service.events_since(0):
    if record["kind"] in ("device_registered", "alarm_raised"):
        print(f"  seq {record['seq']:2d}  t={record['at']:5.1f}  {record['kind']:17s} "
              f"({record.get('x', 0):.2f}, {record.get('y', 0):.2f})")

device = service.query_state()["devices"][0]
print("alarm latched:", device["alarm"] is not None,
      f" last position ({device['last']['x']:.2f}, {device['last']['y']:.2f})")

# -- the operator acknowledges: marker back to default, reference rebased ----
service.refresh("LG13")
print("after Refresh, alarm:", service.query_state()["devices"][0]["alarm"])

# -- exits are guarded while devices are connected ----------------------------
verdict = service.shutdown()
print("exit blocked by:", verdict.connected)
service.report_device_offline("LG13")
print("after disconnect, exit allowed:", service.shutdown().allowed)
