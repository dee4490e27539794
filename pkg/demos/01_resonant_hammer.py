"""Why a flexible hammer beats a rigid one.

Compares the velocity transfer of the rigid and flexible hammer, drives
both with the same single-swing strike, and shows the spring soaking up
the kinetic energy at the reversal and giving it back on the forward
swing. Figures land in demos/output/.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from flexhammer import (HammerParams, StrikeProfile, energy_decomposition,
                        optimal_timing, resonance_frequency, rigid_hammer,
                        simulate_hammer, strike_profile,
                        velocity_frequency_response)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# the nominal spring: 115 g head on a 150 mm arm, identified damping
flexible = HammerParams(m=2.59e-3, b=3e-3, k=2.23)
rigid = rigid_hammer()

f_res = resonance_frequency(flexible, "approx")
print(f"resonance frequency : {f_res:.2f} Hz")
print(f"optimal reversal    : {optimal_timing(flexible) * 1e3:.1f} ms after onset")

# --- frequency domain -------------------------------------------------
grid = np.geomspace(0.5, 20.0, 2000)
H_flex = velocity_frequency_response(flexible, grid)
H_rig = velocity_frequency_response(rigid, grid)

fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogx(grid, H_rig.magnitude, label="rigid", color="gray")
ax.semilogx(grid, H_flex.magnitude, label="flexible")
ax.axvline(f_res, ls=":", color="k", lw=0.8)
ax.axvline(np.sqrt(2) * f_res, ls="--", color="r", lw=0.8,
           label="unity crossing (~1.5 f_res)")
ax.set_xlabel("frequency (Hz)")
ax.set_ylabel("|v_out / v_in|")
ax.set_yscale("log")
ax.legend()
ax.set_title("velocity transfer of the hammer")
fig.tight_layout()
fig.savefig(OUT / "transfer_function.png", dpi=130)

# --- time domain: one strike at resonance ------------------------------
dt = 1e-3
strike = StrikeProfile(amplitude=2.0, freq_hz=f_res, onset=0.2)
v_in = strike_profile(strike, dt, 0.2 + 1.0 / f_res + 0.3)
tr_flex = simulate_hammer(flexible, v_in, dt=dt)
tr_rig = simulate_hammer(rigid, v_in, dt=dt)
gain = tr_flex["v_out"].max() / v_in.max()
print(f"strike at resonance : gain G = {gain:.2f} (rigid stays at 1.00)")

e = energy_decomposition(flexible, tr_flex)
t = tr_flex.time

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
ax1.plot(t, v_in, label="input (= rigid response)", color="gray")
ax1.plot(t, tr_flex["v_out"], label="flexible hammer")
ax1.set_ylabel("velocity (rad/s)")
ax1.legend()
ax1.set_title(f"single strike at {f_res:.2f} Hz, gain {gain:.2f}")
ax2.plot(t, e["E_kin"], label="kinetic")
ax2.plot(t, e["E_spring"], label="spring")
ax2.plot(t, e["E_total"], "--", label="total", color="k", lw=0.8)
ax2.set_xlabel("time (s)")
ax2.set_ylabel("energy (J)")
ax2.legend()
fig.tight_layout()
fig.savefig(OUT / "strike_and_energy.png", dpi=130)
print(f"figures written to {OUT}")
