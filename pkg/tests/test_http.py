import json
import threading
import urllib.error
import urllib.request

import pytest

from bluetrack.geometry import Point2D
from bluetrack.httpd import CmsHttpServer
from bluetrack.monitor import MonitorConfig
from bluetrack.protocol import TrackingSignal, encode_signal
from bluetrack.service import CmsService

from _helpers import line_pairs

AP_ENTRIES = [{"code": "aaa", "x": 0.0, "y": 0.0},
              {"code": "bbb", "x": 10.0, "y": 0.0},
              {"code": "ccc", "x": 0.0, "y": 10.0}]
AP_POINTS = [Point2D(ap["x"], ap["y"]) for ap in AP_ENTRIES]
CAL_PAIRS = line_pairs(2.0, 0.0, [1, 2, 3, 4, 5])


def line_at(point, device="LG13"):
    return encode_signal(TrackingSignal(device, *(point.distance_to(ap) for ap in AP_POINTS)))


@pytest.fixture()
def server():
    service = CmsService(MonitorConfig(move_threshold_m=1.0))
    http_server = CmsHttpServer(service, host="127.0.0.1", port=0)
    http_server.start()
    yield http_server
    http_server.stop()


def get(url, timeout=5.0):
    try:
        with urllib.request.urlopen(url, timeout=timeout) as response:
            return response.status, json.loads(response.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def post(url, payload=None, content_type="application/json", timeout=5.0):
    if isinstance(payload, (dict, list)):
        body = json.dumps(payload).encode()
    elif isinstance(payload, str):
        body = payload.encode()
    else:
        body = b""
    request = urllib.request.Request(url, data=body, method="POST")
    request.add_header("Content-Type", content_type)
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.status, json.loads(response.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def initialize(server):
    status, _ = post(f"{server.url}/calibration", {"pairs": CAL_PAIRS})
    assert status == 200
    status, _ = post(f"{server.url}/layout", {"aps": AP_ENTRIES})
    assert status == 200


class TestStateAndInitialization:
    def test_fresh_state(self, server):
        status, state = get(f"{server.url}/state")
        assert status == 200
        assert state["phase"] == "uninitialized"
        assert state["devices"] == []

    def test_calibration_fit_and_prompt(self, server):
        status, body = post(f"{server.url}/calibration", {"pairs": CAL_PAIRS})
        assert status == 200
        assert body["status"] == "fitted"
        assert body["speed_mps"] == 2.0

        status, body = post(f"{server.url}/calibration", {"pairs": CAL_PAIRS[:4]})
        assert status == 200
        assert body == {"status": "prompt", "count": 4, "options": ["continue", "abort"]}

    def test_calibration_abort(self, server):
        post(f"{server.url}/calibration", {"pairs": CAL_PAIRS[:3]})
        status, body = post(f"{server.url}/calibration", {"action": "abort"})
        assert status == 200
        assert body["status"] == "aborted"
        assert body["phase"] == "uninitialized"

    def test_layout_warning_on_collinear(self, server):
        collinear = [{"code": "aaa", "x": 0, "y": 0},
                     {"code": "bbb", "x": 5, "y": 0},
                     {"code": "ccc", "x": 10, "y": 0}]
        status, body = post(f"{server.url}/layout", {"aps": collinear})
        assert status == 200
        assert "warning" in body

    def test_layout_duplicate_code_is_400(self, server):
        bad = [dict(AP_ENTRIES[0]), dict(AP_ENTRIES[0]), dict(AP_ENTRIES[2])]
        status, body = post(f"{server.url}/layout", {"aps": bad})
        assert status == 400
        assert body["error"] == "DuplicateCode"

    def test_missing_body_is_400(self, server):
        status, body = post(f"{server.url}/layout")
        assert status == 400


class TestSignalEndpoint:
    def test_raw_text_body(self, server):
        initialize(server)
        status, body = post(f"{server.url}/signal", line_at(Point2D(3, 4)), content_type="text/plain")
        assert status == 200
        assert body == {"status": "accepted", "device": "LG13"}
        _, state = get(f"{server.url}/state")
        assert state["devices"][0]["initial"]["x"] == pytest.approx(3.0, abs=1e-9)

    def test_json_body_with_timestamp(self, server):
        initialize(server)
        status, body = post(f"{server.url}/signal", {"line": line_at(Point2D(3, 4)), "at": 12.5})
        assert status == 200
        _, state = get(f"{server.url}/state")
        assert state["devices"][0]["last_signal_at"] == 12.5

    def test_before_initialization_is_409(self, server):
        status, body = post(f"{server.url}/signal", line_at(Point2D(3, 4)), content_type="text/plain")
        assert status == 409
        assert body["error"] == "NotInitialized"

    def test_malformed_line_is_400(self, server):
        initialize(server)
        status, body = post(f"{server.url}/signal", "LG13,1,2\n", content_type="text/plain")
        assert status == 400
        assert body["error"] == "ParseError"


class TestOperatorEndpoints:
    def test_refresh_flow(self, server):
        initialize(server)
        post(f"{server.url}/signal", line_at(Point2D(3, 4)), content_type="text/plain")
        post(f"{server.url}/signal", line_at(Point2D(6, 4)), content_type="text/plain")
        _, state = get(f"{server.url}/state")
        assert state["devices"][0]["alarm"] is not None

        status, _ = post(f"{server.url}/refresh/LG13")
        assert status == 200
        _, state = get(f"{server.url}/state")
        assert state["devices"][0]["alarm"] is None

        status, body = post(f"{server.url}/refresh/LG13")
        assert status == 409
        assert body["error"] == "NoActiveAlarm"

        status, body = post(f"{server.url}/refresh/ghost")
        assert status == 404
        assert body["error"] == "UnknownDevice"

    def test_rename(self, server):
        initialize(server)
        post(f"{server.url}/signal", line_at(Point2D(3, 4)), content_type="text/plain")
        status, body = post(f"{server.url}/rename/LG13", {"name": "Luggage-2"})
        assert status == 200
        _, state = get(f"{server.url}/state")
        assert state["devices"][0]["name"] == "Luggage-2"

    def test_link_reports(self, server):
        initialize(server)
        post(f"{server.url}/signal", line_at(Point2D(3, 4)), content_type="text/plain")
        status, _ = post(f"{server.url}/link", {"kind": "ap_down", "ap": "bbb"})
        assert status == 200
        _, state = get(f"{server.url}/state")
        assert state["devices"][0]["link"] == "error"
        post(f"{server.url}/link", {"kind": "ap_up", "ap": "bbb"})
        _, state = get(f"{server.url}/state")
        assert state["devices"][0]["link"] == "connected"

        status, body = post(f"{server.url}/link", {"kind": "ap_down", "ap": "zzz"})
        assert status == 404
        assert body["error"] == "UnknownAp"

    def test_unknown_route_is_404(self, server):
        status, _ = get(f"{server.url}/nothing")
        assert status == 404


class TestShutdownEndpoint:
    def test_blocked_lists_devices(self, server):
        initialize(server)
        post(f"{server.url}/signal", line_at(Point2D(3, 4), device="LG13"), content_type="text/plain")
        post(f"{server.url}/signal", line_at(Point2D(5, 5), device="CH01"), content_type="text/plain")
        status, body = post(f"{server.url}/shutdown")
        assert status == 409
        assert body == {"status": "blocked", "devices": ["LG13", "CH01"]}
        assert server.running

    def test_allowed_stops_server(self, server):
        initialize(server)
        post(f"{server.url}/signal", line_at(Point2D(3, 4)), content_type="text/plain")
        post(f"{server.url}/link", {"kind": "device_offline", "device": "LG13"})
        status, body = post(f"{server.url}/shutdown")
        assert status == 200
        assert body == {"status": "ok"}
        server.wait(timeout=5.0)
        assert not server.running


class TestEventsEndpoint:
    def test_history_dump(self, server):
        initialize(server)
        post(f"{server.url}/signal", line_at(Point2D(3, 4)), content_type="text/plain")
        with urllib.request.urlopen(f"{server.url}/events?follow=0", timeout=5) as response:
            assert response.headers["Content-Type"] == "application/x-ndjson"
            records = [json.loads(line) for line in response.read().splitlines()]
        assert [r["seq"] for r in records] == list(range(len(records)))
        assert any(r["kind"] == "device_registered" for r in records)

    def test_since_filter(self, server):
        initialize(server)
        post(f"{server.url}/signal", line_at(Point2D(3, 4)), content_type="text/plain")
        with urllib.request.urlopen(f"{server.url}/events?follow=0&since=2", timeout=5) as response:
            records = [json.loads(line) for line in response.read().splitlines()]
        assert all(r["seq"] >= 2 for r in records)

    def test_live_tail_receives_new_records(self, server):
        initialize(server)
        response = urllib.request.urlopen(f"{server.url}/events?since=0", timeout=5)
        # history first (calibration_fitted, layout_set)
        first = json.loads(response.readline())
        assert first["seq"] == 0

        got = {}

        def reader():
            while True:
                record = json.loads(response.readline())
                if record["kind"] == "device_registered":
                    got["record"] = record
                    return

        thread = threading.Thread(target=reader, daemon=True)
        thread.start()
        post(f"{server.url}/signal", line_at(Point2D(3, 4)), content_type="text/plain")
        thread.join(timeout=5.0)
        assert got["record"]["device"] == "LG13"
        response.close()

    def test_cors_header_present(self, server):
        with urllib.request.urlopen(f"{server.url}/state", timeout=5) as response:
            assert response.headers["Access-Control-Allow-Origin"] == "*"
