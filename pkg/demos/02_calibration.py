"""Channel calibration walk-through: fitting signal speed and error.

An operator measures at least five distances and records the round-trip
total for each. The fit models distance as a line in the one-way time
(half the round trip): the slope is the signal speed V, the intercept C
absorbs systematic transmission delay.
"""

import numpy as np

from bluetrack import CalibrationSet, distance_from_time, fit
from bluetrack.calibration import InsufficientSamples, export_params

# ----- an exact channel: V = 340 m/s, C = 0.25 m --------------------------
half_times = [0.01, 0.02, 0.04, 0.08, 0.16]
pairs = [(340.0 * t + 0.25, 2.0 * t) for t in half_times]  # (distance, total time)
params = fit(CalibrationSet.from_pairs(pairs))
print(f"exact line fit: V = {params.speed_mps} m/s, C = {params.error_m} m, "
      f"residual RMS = {params.residual_rms_m:.2e} m")

# ----- the five-sample rule ------------------------------------------------
try:
    fit(CalibrationSet.from_pairs(pairs[:4]))
except InsufficientSamples as exc:
    print("four pairs are refused:", exc)

# ----- noisy measurements ---------------------------------------------------
rng = np.random.default_rng(3)
t = rng.uniform(0.01, 0.2, size=30)
s = 340.0 * t + 0.25 + rng.normal(0.0, 0.05, size=30)
noisy = fit(CalibrationSet.from_pairs(list(zip(s, 2.0 * t))))
print(f"noisy fit over 30 samples: V = {noisy.speed_mps:.2f} m/s, "
      f"C = {noisy.error_m:.3f} m, residual RMS = {noisy.residual_rms_m:.3f} m")

# repeated measurements at one distance average into a single sample
repeated = CalibrationSet.from_repeated_times(
    [(5.0, [0.0285, 0.0280, 0.0279]), (10.0, [0.0574]), (20.0, [0.1162]),
     (40.0, [0.2338]), (80.0, [0.4691])]
)
print(f"repeated-times fit: V = {fit(repeated).speed_mps:.1f} m/s")

# converting round trips back to distances, with clamping on display
estimate = distance_from_time(noisy, 0.05)
print(f"t = 0.05 s -> {estimate.meters:.3f} m (clamped={estimate.clamped})")
tiny = distance_from_time(noisy, 1e-6)
print(f"t = 1 microsecond -> {tiny.meters:.4f} m (clamped={tiny.clamped})")

print("exported document:", export_params(noisy))
