"""Headless entry points: simulate, calibrate, serve and replay.

Exit codes are stable: 0 success, 2 unreadable/invalid script, config or
CSV input, 3 calibration attempted with fewer than five pairs, 4 serve port
already in use, 5 replay could not reach the service.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import signal
import sys
import threading
import time
import urllib.error
import urllib.request
from pathlib import Path

from .calibration import (
    CalibrationFormatError,
    DegenerateTimes,
    InsufficientSamples,
    export_params,
    fit,
    load_calibration_csv,
)
from .httpd import CmsHttpServer
from .monitor import MonitorConfig
from .service import CmsService
from .simulate import ScriptError, load_sim_config, read_events, run_simulation, write_events

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_TOO_FEW_PAIRS = 3
EXIT_PORT_IN_USE = 4
EXIT_NO_CONNECTION = 5

_CONFIG_KEYS = ("move_threshold", "grid_spacing", "cadence", "host")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bluetrack", description="Indoor tracking toolkit: simulate, calibrate, serve, replay."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("sim", help="run a scripted simulation and write the event file")
    p_sim.add_argument("--script", required=True, help="scenario JSON file")
    p_sim.add_argument("--out", required=True, help="output event file (line-delimited JSON)")
    p_sim.add_argument("--seed", type=int, default=None, help="override the channel seed")

    p_cal = sub.add_parser("calibrate", help="fit signal speed and transmission error from a CSV")
    p_cal.add_argument("--csv", required=True, help="CSV with header distance_m,total_time_s")

    p_serve = sub.add_parser("serve", help="run the central monitoring service over HTTP")
    p_serve.add_argument("--port", type=int, default=8700)
    p_serve.add_argument("--config", default=None, help="optional JSON config file")
    p_serve.add_argument(
        "--force-exit", action="store_true",
        help="on SIGTERM/SIGINT stop even while devices are still connected",
    )

    p_replay = sub.add_parser("replay", help="feed a recorded event file into a running service")
    p_replay.add_argument("--events", required=True, help="event file from the sim subcommand")
    p_replay.add_argument("--url", required=True, help="service base URL, e.g. http://127.0.0.1:8700")
    p_replay.add_argument(
        "--speed", type=float, default=0.0,
        help="pacing multiplier; 0 (default) replays as fast as possible",
    )
    return parser


def cmd_sim(script_path: str, out_path: str, seed: int | None) -> int:
    try:
        config = load_sim_config(script_path)
    except ScriptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    truth = config.truth
    if seed is not None:
        truth = dataclasses.replace(truth, seed=seed)
    events = run_simulation(
        config.script, config.layout, truth,
        cadence=config.cadence, range_limit_m=config.range_limit_m,
    )
    write_events(out_path, events)
    print(f"wrote {len(events)} events to {out_path}")
    return EXIT_OK


def cmd_calibrate(csv_path: str) -> int:
    try:
        cal = load_calibration_csv(csv_path)
    except (OSError, CalibrationFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        params = fit(cal)
    except InsufficientSamples as exc:
        print(f"{exc}; continue entering pairs or abort", file=sys.stderr)
        return EXIT_TOO_FEW_PAIRS
    except DegenerateTimes as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    print(export_params(params))
    return EXIT_OK


def _load_serve_config(path: str | None) -> tuple[MonitorConfig, str]:
    host = "127.0.0.1"
    kwargs: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot load config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError(f"config {path}: top level must be an object")
        unknown = set(data) - set(_CONFIG_KEYS)
        if unknown:
            raise ValueError(f"config {path}: unknown keys {sorted(unknown)}")
        host = data.get("host", host)
        if "move_threshold" in data:
            kwargs["move_threshold_m"] = float(data["move_threshold"])
        if "grid_spacing" in data:
            kwargs["grid_spacing_m"] = float(data["grid_spacing"])
        if "cadence" in data:
            kwargs["cadence_s"] = float(data["cadence"])
    return MonitorConfig(**kwargs), host


def cmd_serve(config_path: str | None, port: int, force_exit: bool = False) -> int:
    try:
        config, host = _load_serve_config(config_path)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    service = CmsService(config)
    try:
        server = CmsHttpServer(service, host=host, port=port)
    except OSError as exc:
        print(f"error: cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return EXIT_PORT_IN_USE

    def handle_signal(signum, frame) -> None:
        verdict = service.shutdown()
        if not verdict.allowed:
            print(
                f"shutdown blocked by connected devices: {', '.join(verdict.connected)}",
                file=sys.stderr,
            )
            if force_exit:
                print("forcing exit", file=sys.stderr)
                server.stop_async()

    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGTERM, handle_signal)
        signal.signal(signal.SIGINT, handle_signal)
    server.start()
    print(f"monitoring service listening on {server.url}")
    while server.running:
        server.wait(timeout=0.5)
    return EXIT_OK


def _post(url: str, payload: bytes, content_type: str) -> None:
    request = urllib.request.Request(url, data=payload, method="POST")
    request.add_header("Content-Type", content_type)
    try:
        with urllib.request.urlopen(request, timeout=10) as response:
            response.read()
    except urllib.error.HTTPError as exc:
        # The service answered: delivery worked, the payload was rejected.
        body = exc.read().decode(errors="replace").strip()
        print(f"service rejected {url}: {exc.code} {body}", file=sys.stderr)


def cmd_replay(events_path: str, base_url: str, speed: float = 0.0) -> int:
    try:
        records = read_events(events_path)
    except ScriptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    base_url = base_url.rstrip("/")
    previous_at: float | None = None
    sent = 0
    for record in records:
        if speed > 0 and previous_at is not None:
            delay = (record["at"] - previous_at) / speed
            if delay > 0:
                time.sleep(delay)
        previous_at = record["at"]
        try:
            kind = record["kind"]
            if kind == "signal_emitted":
                payload = json.dumps({"line": record["line"], "at": record["at"]}).encode()
                _post(f"{base_url}/signal", payload, "application/json")
            elif kind == "ap_disconnected":
                payload = json.dumps({"kind": "ap_down", "ap": record["ap"], "at": record["at"]}).encode()
                _post(f"{base_url}/link", payload, "application/json")
            elif kind == "ap_reconnected":
                payload = json.dumps({"kind": "ap_up", "ap": record["ap"], "at": record["at"]}).encode()
                _post(f"{base_url}/link", payload, "application/json")
            elif kind == "device_offline":
                payload = json.dumps(
                    {"kind": "device_offline", "device": record["device"], "at": record["at"]}
                ).encode()
                _post(f"{base_url}/link", payload, "application/json")
            elif kind == "out_of_range":
                payload = json.dumps(
                    {"kind": "out_of_range", "device": record["device"], "ap": record["ap"],
                     "at": record["at"]}
                ).encode()
                _post(f"{base_url}/link", payload, "application/json")
            else:
                print(f"skipping unknown event kind {kind!r}", file=sys.stderr)
                continue
            sent += 1
        except (urllib.error.URLError, ConnectionError, TimeoutError) as exc:
            print(f"error: cannot reach service at {base_url}: {exc}", file=sys.stderr)
            return EXIT_NO_CONNECTION
    print(f"replayed {sent} events to {base_url}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "sim":
        return cmd_sim(args.script, args.out, args.seed)
    if args.command == "calibrate":
        return cmd_calibrate(args.csv)
    if args.command == "serve":
        return cmd_serve(args.config, args.port, force_exit=args.force_exit)
    if args.command == "replay":
        return cmd_replay(args.events, args.url, speed=args.speed)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
