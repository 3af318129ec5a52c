"""HTTP service walk-through: the console's view of the system.

Starts the monitoring service on an ephemeral port, initializes it over
HTTP, streams a moving device into it and reads the event stream back,
exactly as the browser console does.
"""

import json
import urllib.request

from bluetrack import ChannelTruth, CmsService, MonitorConfig, rtt_for_distance
from bluetrack.httpd import CmsHttpServer

AP_ROWS = [{"code": "aaa", "x": 0, "y": 0}, {"code": "bbb", "x": 10, "y": 0},
           {"code": "ccc", "x": 0, "y": 10}]
truth = ChannelTruth(speed_mps=340.0, error_m=0.25)


def post(url, payload, content_type="application/json"):
    body = payload.encode() if isinstance(payload, str) else json.dumps(payload).encode()
    request = urllib.request.Request(url, data=body, method="POST")
    request.add_header("Content-Type", content_type)
    with urllib.request.urlopen(request, timeout=5) as response:
        return json.loads(response.read())


server = CmsHttpServer(CmsService(MonitorConfig(move_threshold_m=1.0)), port=0)
server.start()
base = server.url
print("service listening on", base)

pairs = [[s, rtt_for_distance(truth, s)] for s in (1.0, 2.0, 4.0, 8.0, 16.0)]
print("calibration:", post(f"{base}/calibration", {"pairs": pairs}))
print("layout:", post(f"{base}/layout", {"aps": AP_ROWS}))

# a device reports from (3, 4), then moves to (6, 4): raw wire lines
from bluetrack import Point2D, TrackingSignal, encode_signal

for at, spot in ((0.0, Point2D(3, 4)), (5.0, Point2D(6, 4))):
    times = [spot.distance_to(Point2D(ap["x"], ap["y"])) for ap in AP_ROWS]
    times = [2 * (s - truth.error_m) / truth.speed_mps for s in times]
    line = encode_signal(TrackingSignal("LG13", *times))
    print(f"signal at t={at}:", post(f"{base}/signal", {"line": line, "at": at}))

with urllib.request.urlopen(f"{base}/events?follow=0", timeout=5) as response:
    for raw in response.read().splitlines():
        record = json.loads(raw)
        print(f"  event {record['seq']}: {record['kind']}")

state = json.loads(urllib.request.urlopen(f"{base}/state", timeout=5).read())
device = state["devices"][0]
print(f"device {device['display']}: alarm={'on' if device['alarm'] else 'off'} "
      f"at ({device['last']['x']:.2f}, {device['last']['y']:.2f})")

print("refresh:", post(f"{base}/refresh/LG13", {}))
print("exit attempt:", post(f"{base}/link", {"kind": "device_offline", "device": "LG13"}))
print("shutdown:", post(f"{base}/shutdown", {}))
server.wait(timeout=5)
print("server stopped:", not server.running)
