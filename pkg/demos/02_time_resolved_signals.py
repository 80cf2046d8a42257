#!/usr/bin/env python3
"""Plot what the detector actually sees over one drive period.

Three layers of realism for the forward-beam intensity:

* ``exact_intensity``   -- full projection chain through the spin rotator
* ``ideal_intensity``   -- first order in the rotation angle alpha; its
                            sinusoidal modulation encodes the weak value
* ``real_intensity``    -- finite interference contrast eta, which mixes in
                            the flat isolated-path signal

The figure shows all three per phase setting, plus the rotator-off fringes
used for calibration.  Output lands in demos/output/.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wvbench.interferometer import (
    ProtocolParams,
    empty_interferogram,
    exact_intensity,
    ideal_intensity,
    isolated_path_intensities,
    real_intensity,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

chis = [0.0, np.pi / 3, np.pi / 2, 3 * np.pi / 4]
fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True, sharey=True)

for ax, chi in zip(axes.ravel(), chis):
    params = ProtocolParams(chi=chi)
    t = np.linspace(0.0, params.period, 400)
    ax.plot(t * 1e6, exact_intensity(t, params), label="exact", lw=2)
    ax.plot(t * 1e6, ideal_intensity(t, params), "--", label="first order")
    ax.plot(t * 1e6, real_intensity(t, params), label=f"contrast {params.eta}")
    i1, i2 = isolated_path_intensities(t, params)
    ax.plot(t * 1e6, i1 + i2, ":", color="gray", label="paths alone")
    ax.set_title(f"chi = {chi:.3f} rad")
    ax.grid(alpha=0.3)
axes[0, 0].legend(fontsize=8)
for ax in axes[1]:
    ax.set_xlabel("time in period (us)")
for ax in axes[:, 0]:
    ax.set_ylabel("intensity (unit flux)")
fig.suptitle("Forward-beam intensity over one rotator period")
fig.tight_layout()
fig.savefig(OUT / "time_resolved_signals.png", dpi=150)
print(f"wrote {OUT / 'time_resolved_signals.png'}")

# The modulation is tiny (first order in alpha) -- zoom on its shape:
# subtract the mean and compare phases across settings.
fig, ax = plt.subplots(figsize=(8, 4.5))
for chi in chis:
    params = ProtocolParams(chi=chi)
    t = np.linspace(0.0, params.period, 400)
    y = ideal_intensity(t, params)
    p = (1 + np.cos(chi)) / 2
    ax.plot(t * 1e6, y - p / 2, label=f"chi = {chi:.2f}")
ax.set_xlabel("time in period (us)")
ax.set_ylabel("intensity - mean")
ax.set_title("Modulation only: amplitude and phase carry |w| and arg(w)")
ax.grid(alpha=0.3)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "modulation_phases.png", dpi=150)
print(f"wrote {OUT / 'modulation_phases.png'}")

# Rotator off: the plain two-path fringes that calibrate the contrast and
# the post-selection probabilities.
fig, ax = plt.subplots(figsize=(8, 4.5))
chi_grid = np.linspace(0.0, 2 * np.pi, 200)
ax.plot(chi_grid, empty_interferogram(chi_grid, 0.79), label="analyzer +x, eta 0.79")
ax.plot(
    chi_grid,
    empty_interferogram(chi_grid, 0.79, np.pi / 2),
    label="analyzer +y (quarter shift)",
)
ax.plot(chi_grid, empty_interferogram(chi_grid, 1.0), "--", color="gray", label="perfect contrast")
ax.set_xlabel("chi (rad)")
ax.set_ylabel("normalized rate")
ax.set_title("Rotator-off fringes")
ax.grid(alpha=0.3)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "empty_fringes.png", dpi=150)
print(f"wrote {OUT / 'empty_fringes.png'}")
