"""Wire format walk-through: tracking signals and access point echoes.

Devices report as one comma-separated line per transmission; access
points answer probes by appending their three-letter code.
"""

from bluetrack import (
    CodeRegistry,
    TrackingSignal,
    append_code,
    decode_signal,
    encode_signal,
    strip_code,
)
from bluetrack.protocol import ParseError, make_probe_payload

# ----- the tracking signal ---------------------------------------------------
signal = TrackingSignal("LG13", 2.0e-6, 2.5e-6, 1.8e-6)
line = encode_signal(signal)
print("encoded:", line.strip())
print("decoded:", decode_signal(line))

# decoding is total: anything that is not a signal raises ParseError
for bad in ("LG13,1,2", "LG13,1,x,3", "LG13,1,-2,3", "not a signal at all"):
    try:
        decode_signal(bad)
    except ParseError as exc:
        print(f"rejected {bad!r}: {exc}")

# ----- access point identity -------------------------------------------------
registry = CodeRegistry()
registry.register("eWg", "East-Wing")
registry.register("nWg", "North-Wing")
print("registered codes:", registry.codes())

probe = make_probe_payload()
frame = append_code(probe, "eWg")
print("probe:", probe, "-> echo frame:", frame.to_wire())
payload, code = strip_code(frame.to_wire())
print("stripped back:", payload, code)
