"""Transmitted impedance of the three teleoperation controllers.

Plots what the operator's hand feels through the closed loop against the
raw environment impedance. Controller 1 reproduces the environment
(sharp resonance peak), the 40 ms round-trip of controller 2 squashes
and shifts it, and controller 3 (no force feedback) reflects only the
handle device.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from flexhammer import (DeviceParams, ZeModel, controller_preset,
                        resonance_prominence, transmitted_impedance,
                        ze_response)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

device = DeviceParams()            # same hardware on both sides
env = ZeModel()
grid = np.geomspace(0.5, 20.0, 6000)

ze = ze_response(env, grid)
curves = {p: transmitted_impedance(controller_preset(p), device, device,
                                   env, grid) for p in (1, 2, 3)}

fig, (ax_m, ax_p) = plt.subplots(2, 1, figsize=(6.5, 7), sharex=True)
ax_m.semilogx(grid, ze.mag_db, "k--", label="environment Ze")
for p, curve in curves.items():
    ax_m.semilogx(grid, curve.mag_db, label=f"controller {p}")
    ax_p.semilogx(grid, curve.phase_deg, label=f"controller {p}")
ax_p.semilogx(grid, ze.phase_deg, "k--")
# the critical region around the resonance
ax_m.axvspan(3.8, 5.8, color="0.92")
ax_m.set_ylabel("|Z| (dB re 1 N·m·s/rad)")
ax_p.set_ylabel("phase (deg)")
ax_p.set_xlabel("frequency (Hz)")
ax_m.legend(loc="lower right", fontsize=8)
ax_m.set_title("impedance transmitted to the handle")
fig.tight_layout()
fig.savefig(OUT / "transmitted_impedance.png", dpi=130)

print("resonance prominence in 3.8-5.8 Hz (peak vs +-1 Hz flanks):")
peak, prom = resonance_prominence(ze, (3.8, 5.8))
print(f"  environment : peak {peak:.2f} Hz, {prom:5.1f} dB")
for p, curve in curves.items():
    peak, prom = resonance_prominence(curve, (3.8, 5.8))
    print(f"  controller {p}: peak {peak:.2f} Hz, {prom:5.1f} dB")
print(f"figure written to {OUT}")
