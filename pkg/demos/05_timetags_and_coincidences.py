"""Timetag streams end to end: simulate, serialize, correlate.

Generates GPS-synchronized detection streams for one link, writes them in the
QLTT binary format, recovers the inter-node delay from the cross-correlation
histogram, and counts windowed coincidences with time-shifted accidental
estimation.
"""

import io

import numpy as np

from qlan import (ClockModel, DetectorModel, LinkBudget, correlate,
                  delay_histogram, find_offset, ket_psi_plus, label_setting,
                  pure_state_density, read_stream, simulate_link, write_stream)

rho = pure_state_density(ket_psi_plus())
budget = LinkBudget(link="A-B", loss_db=2.0, eff_node1=0.85, eff_node2=0.85)
detectors = (DetectorModel("snspd", 0.85, jitter_ps=50.0, dark_rate_hz=2000.0),
             DetectorModel("snspd", 0.85, jitter_ps=50.0, dark_rate_hz=2000.0))
clocks = (ClockModel("A", pps_sigma_ns=8.556, drift_ns_per_s=4.0, seed=1),
          ClockModel("B", pps_sigma_ns=8.556, drift_ns_per_s=16.0, seed=2))

print("Simulating 30 s of a bright link (5e4 pairs/s, GPS-class clocks)...")
s1, s2 = simulate_link(rho, 5e4, budget,
                       (label_setting("H"), label_setting("V")),
                       detectors, clocks, 30.0, seed=42,
                       fiber_delays_ns=(20.0, 1250.0))
print(f"  node A: {len(s1)} records, node B: {len(s2)} records")

buffer = io.BytesIO()
nbytes = write_stream(s1, buffer)
reread = read_stream(io.BytesIO(buffer.getvalue()))
print(f"  QLTT round trip: {nbytes} bytes, "
      f"identical={np.array_equal(reread.bins, s1.bins)}")
print()

hist = delay_histogram(s1, s2, span_bins=500)
estimate = find_offset(hist)
print(f"Delay recovery: peak at {estimate.delay_bins} bins "
      f"({estimate.delay_bins * 5} ns; configured 1230 ns), "
      f"low_confidence={estimate.low_confidence}")

window = hist.counts[np.abs(hist.lags - estimate.delay_bins) <= 10]
print("Histogram around the peak (counts per 5 ns lag bin):")
print(" ", window.tolist())
print()

result = correlate(s1, s2, window_ns=10.0, span_bins=500)
print(f"Coincidences in a 10 ns window: raw={result.raw_coincidences} "
      f"accidentals={result.accidentals:.1f}")
print(f"  raw rate        {result.raw_rate:8.1f} /s")
print(f"  corrected rate  {result.corrected_rate:8.1f} /s")
print("The GPS clocks smear the peak over a few bins, so a 10 ns window")
print("captures only part of the true pairs; narrowing it without better")
print("clocks would cost signal, which is the window-narrowing tradeoff.")
