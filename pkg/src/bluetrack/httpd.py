"""HTTP + JSON front door for the monitoring service.

Endpoints (all JSON unless noted):

    GET  /state             point-in-time snapshot
    POST /calibration       {"pairs": [[distance_m, total_time_s], ...]}
                            or {"action": "abort"}
    POST /layout            {"aps": [{"code","x","y"} x3]}
    POST /signal            raw wire line as a text body, or
                            {"line": "...", "at": optional seconds}
    POST /refresh/<id>      acknowledge an alarm
    POST /rename/<id>       {"name": "..."}
    POST /shutdown          gated on connected devices
    POST /link              radio-side link reports:
                            {"kind": "ap_down"|"ap_up", "ap": code} or
                            {"kind": "device_offline", "device": id} or
                            {"kind": "out_of_range", "device": id, "ap": code}
    GET  /events?since=N&follow=0|1
                            line-delimited JSON event stream; follow=1
                            (default) keeps the response open and pushes
                            records as they are published

Errors map to 400 (malformed input), 404 (unknown device or access point),
409 (wrong phase, no active alarm, blocked shutdown) with a JSON body
``{"error": ..., "message": ...}``.
"""

from __future__ import annotations

import json
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .calibration import CalibrationFormatError, DegenerateTimes, InvalidSample
from .errors import TrackingError
from .monitor import NoActiveAlarm, NotInitialized, UnknownAp, UnknownDevice
from .protocol import DuplicateCode, InvalidCode, InvalidDeviceId, ParseError
from .service import CmsService

_BAD_REQUEST = (ParseError, InvalidCode, InvalidDeviceId, DuplicateCode,
                InvalidSample, DegenerateTimes, CalibrationFormatError, ValueError)
_NOT_FOUND = (UnknownDevice, UnknownAp)
_CONFLICT = (NotInitialized, NoActiveAlarm)

_STREAM_POLL_S = 0.25


class CmsHttpServer:
    """Owns the listening socket and the serving thread."""

    def __init__(self, service: CmsService, host: str = "127.0.0.1", port: int = 0) -> None:
        self.service = service
        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.daemon_threads = True
        self._httpd.service = service  # type: ignore[attr-defined]
        self._httpd.closing = False  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None
        service.on_stop = self.stop_async

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop_async(self) -> None:
        threading.Thread(target=self.stop, daemon=True).start()

    def stop(self) -> None:
        self._httpd.closing = True  # type: ignore[attr-defined]
        self._httpd.shutdown()
        self._httpd.server_close()

    def wait(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    @property
    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()


class _Handler(BaseHTTPRequestHandler):
    # one request per connection keeps the streaming endpoint simple
    protocol_version = "HTTP/1.0"

    @property
    def service(self) -> CmsService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib signature
        pass

    # -- plumbing -------------------------------------------------------

    def _send_json(self, status: int, payload: dict) -> None:
        body = (json.dumps(payload) + "\n").encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, exc: Exception) -> None:
        self._send_json(status, {"error": type(exc).__name__, "message": str(exc)})

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _read_json(self) -> dict:
        body = self._read_body()
        if not body:
            raise ValueError("request body required")
        try:
            data = json.loads(body)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid JSON body: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError("JSON body must be an object")
        return data

    def _dispatch(self, handler) -> None:
        try:
            handler()
        except _NOT_FOUND as exc:
            self._send_error_json(404, exc)
        except _CONFLICT as exc:
            self._send_error_json(409, exc)
        except _BAD_REQUEST as exc:
            self._send_error_json(400, exc)
        except (BrokenPipeError, ConnectionResetError):
            pass
        except TrackingError as exc:
            self._send_error_json(400, exc)
        except Exception as exc:  # pragma: no cover - defensive
            self._send_error_json(500, exc)

    # -- routes ----------------------------------------------------------

    def do_OPTIONS(self) -> None:  # CORS preflight for browser consoles
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self) -> None:
        parsed = urlparse(self.path)
        if parsed.path == "/state":
            self._dispatch(lambda: self._send_json(200, self.service.query_state()))
        elif parsed.path == "/events":
            self._dispatch(lambda: self._stream_events(parse_qs(parsed.query)))
        else:
            self._send_json(404, {"error": "NotFound", "message": f"no route {parsed.path}"})

    def do_POST(self) -> None:
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        if parsed.path == "/calibration":
            self._dispatch(self._post_calibration)
        elif parsed.path == "/layout":
            self._dispatch(self._post_layout)
        elif parsed.path == "/signal":
            self._dispatch(self._post_signal)
        elif parsed.path == "/shutdown":
            self._dispatch(self._post_shutdown)
        elif parsed.path == "/link":
            self._dispatch(self._post_link)
        elif len(parts) == 2 and parts[0] == "refresh":
            self._dispatch(lambda: self._send_json(200, self.service.refresh(parts[1])))
        elif len(parts) == 2 and parts[0] == "rename":
            self._dispatch(lambda: self._post_rename(parts[1]))
        else:
            self._send_json(404, {"error": "NotFound", "message": f"no route {parsed.path}"})

    def _post_calibration(self) -> None:
        data = self._read_json()
        if data.get("action") == "abort":
            self._send_json(200, {"status": "aborted", "phase": self.service.abort_calibration()})
            return
        pairs = data.get("pairs")
        if not isinstance(pairs, list):
            raise ValueError('body must carry "pairs": [[distance_m, total_time_s], ...]')
        outcome = self.service.submit_calibration_pairs([tuple(p) for p in pairs])
        self._send_json(200, outcome.to_record())

    def _post_layout(self) -> None:
        data = self._read_json()
        aps = data.get("aps")
        if not isinstance(aps, list):
            raise ValueError('body must carry "aps": [{"code","x","y"} x3]')
        entries = [(ap["code"], ap["x"], ap["y"]) for ap in aps]
        outcome = self.service.set_ap_coordinates(entries)
        self._send_json(200, outcome.to_record())

    def _post_signal(self) -> None:
        content_type = (self.headers.get("Content-Type") or "").split(";")[0].strip()
        if content_type == "application/json":
            data = self._read_json()
            line = data.get("line")
            if not isinstance(line, str):
                raise ParseError('JSON signal body must carry "line"')
            at = data.get("at")
            ack = self.service.ingest_signal(line, at=float(at) if at is not None else None)
        else:
            line = self._read_body().decode("utf-8", errors="replace")
            ack = self.service.ingest_signal(line)
        self._send_json(200, ack)

    def _post_rename(self, device_id: str) -> None:
        data = self._read_json()
        name = data.get("name")
        if not isinstance(name, str) or not name:
            raise ValueError('body must carry a non-empty "name"')
        self._send_json(200, self.service.rename_device(device_id, name))

    def _post_shutdown(self) -> None:
        verdict = self.service.shutdown()
        if verdict.allowed:
            self._send_json(200, {"status": "ok"})
        else:
            self._send_json(
                409, {"status": "blocked", "devices": list(verdict.connected)}
            )

    def _post_link(self) -> None:
        data = self._read_json()
        kind = data.get("kind")
        at = data.get("at")
        at = float(at) if at is not None else None
        if kind == "ap_down":
            self._send_json(200, self.service.report_ap_down(data["ap"], at=at))
        elif kind == "ap_up":
            self._send_json(200, self.service.report_ap_up(data["ap"], at=at))
        elif kind == "device_offline":
            self._send_json(200, self.service.report_device_offline(data["device"], at=at))
        elif kind == "out_of_range":
            self._send_json(200, self.service.report_out_of_range(data["device"], data["ap"], at=at))
        else:
            raise ValueError(f"unknown link report kind {kind!r}")

    # -- event stream -----------------------------------------------------

    def _stream_events(self, query: dict) -> None:
        since = int(query.get("since", ["0"])[0])
        follow = query.get("follow", ["1"])[0] not in ("0", "false")
        self.send_response(200)
        self.send_header("Content-Type", "application/x-ndjson")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()

        def write_record(record: dict) -> bool:
            try:
                self.wfile.write((json.dumps(record) + "\n").encode())
                self.wfile.flush()
                return True
            except (BrokenPipeError, ConnectionResetError):
                return False

        if not follow:
            for record in self.service.events_since(since):
                if not write_record(record):
                    return
            return

        sub = self.service.subscribe(since)
        try:
            while not self.service.stopped and not getattr(self.server, "closing", False):
                try:
                    record = sub.get(timeout=_STREAM_POLL_S)
                except queue.Empty:
                    continue
                if not write_record(record):
                    return
        finally:
            self.service.unsubscribe(sub)
