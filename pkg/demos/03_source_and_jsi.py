"""The eight-channel source: ITU grid, channel states, and the JSI.

The source emits energy-matched signal/idler pairs on a 25 GHz flex grid
centered at 192.3125 THz. Channel quality is captured by a per-channel
visibility calibrated from locally measured Bell-state fidelities. The joint
spectral intensity (coincidences vs signal/idler channel indices) shows the
energy matching as a bright diagonal over an accidental floor.
"""

import numpy as np

from qlan import (car, channel_frequencies, channel_state, default_config,
                  fidelity_with_pure, jsi_matrix, ket_psi_plus)

config = default_config(1)

print("Channel grid (THz), pair rates, and calibrated fidelities:")
print(f"  {'ch':>3} {'signal':>9} {'idler':>9} {'pairs/s':>10} {'fidelity':>9}")
for spec in config.channels:
    sig, idl = channel_frequencies(spec.index)
    fid = fidelity_with_pure(channel_state(spec), ket_psi_plus())
    print(f"  {spec.index:3d} {sig:9.4f} {idl:9.4f} {spec.pair_rate:10.3g} {fid:9.3f}")
print()

jsi = jsi_matrix(config.channels, config.jsi_integration_s,
                 config.jsi_detector_effs,
                 accidental_floor_hz=config.jsi_accidental_floor_hz,
                 poisson=True, seed=1)
print("Joint spectral intensity (counts, 5 s integration, Poisson sampled):")
print("  rows = signal channel, columns = idler channel")
with np.printoptions(formatter={"float": lambda v: f"{v:9.3g}"}):
    print(jsi)
print()
print(f"Coincidence-to-accidental ratio: {car(jsi):.2f}")
print("(matched-bin mean over mismatched-bin mean; the configured source")
print(" reproduces the measured 11.4)")
