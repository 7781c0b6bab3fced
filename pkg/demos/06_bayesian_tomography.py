"""Bayesian state tomography from coincidence counts.

Counts from two measurement bases (rectilinear and diagonal) are not
tomographically complete, yet the Metropolis-Hastings posterior over the
Ginibre parameterization still concentrates for highly correlated states,
with honest error bars on everything derived (fidelity, E_N, R_E).
"""

import numpy as np

from qlan import (MeasurementRecord, coincidence_probability, label_setting,
                  sample_posterior, summarize_link, werner_state)

rng = np.random.default_rng(7)


def synthetic_records(rho, per_basis):
    records = []
    for labels1 in (("H", "V"), ("D", "A")):
        for labels2 in (("H", "V"), ("D", "A")):
            settings = [(a, b) for a in labels1 for b in labels2]
            probs = np.array([coincidence_probability(
                rho, label_setting(a), label_setting(b)) for a, b in settings])
            probs = np.clip(probs, 0, None)
            probs /= probs.sum()
            for (a, b), count in zip(settings, rng.multinomial(per_basis, probs)):
                records.append(MeasurementRecord(
                    (label_setting(a), label_setting(b)), float(count)))
    return records


for visibility, counts in ((1.0, 10**4), (0.74, 5000), (0.45, 5000)):
    truth = werner_state(visibility)
    ensemble = sample_posterior(synthetic_records(truth, counts),
                                num_samples=512, seed=3)
    report = summarize_link(ensemble, coincidence_rate=100.0)
    true_fid = (1 + 3 * visibility) / 4
    print(f"visibility {visibility:.2f} ({counts} counts/basis):")
    print(f"  fidelity  {report.fidelity:.4f} +- {report.fidelity_std:.4f}"
          f"   (true {true_fid:.4f})")
    print(f"  E_N       {report.log_negativity:.4f} +- {report.log_negativity_std:.4f}")
    print(f"  R_E@100/s {report.ebit_rate:.1f} +- {report.ebit_rate_std:.1f}")
    print(f"  chain: step {ensemble.step_size:.4f}, thin {ensemble.thin}, "
          f"acceptance {ensemble.acceptance_rate:.2f}, "
          f"split-stat {ensemble.split_statistic:.3f}")
    print()

print("Note the widening error bars at low visibility: with only two bases")
print("measured, the circular-basis correlations are prior-dominated, and the")
print("posterior honestly reports that uncertainty in E_N and R_E.")
