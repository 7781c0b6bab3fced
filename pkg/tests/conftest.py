import numpy as np
import pytest

from qlan.config import parse_config

# Lightweight two-node configuration for pipeline tests: bright link, short
# integrations, loose clocks kept small so delay recovery stays trivial.
SMALL_CONFIG = """
schema_version = 1
name = "unit-test"
seed = 4242

[nodes.A]
fiber_delay_ns = 20.0
clock = {pps_sigma_ns = 1.5, drift_ns_per_s = 0.0, seed = 11}
detector = {kind = "snspd", efficiency = 0.9, dead_time_us = 0.0, jitter_ps = 50.0, dark_rate_hz = 500.0}

[nodes.B]
fiber_delay_ns = 140.0
clock = {pps_sigma_ns = 1.5, drift_ns_per_s = 0.0, seed = 12}
detector = {kind = "snspd", efficiency = 0.9, dead_time_us = 0.0, jitter_ps = 50.0, dark_rate_hz = 500.0}

[source]
[[source.channels]]
index = 1
pair_rate_hz = 4.0e4
fidelity = 0.97
crosstalk_fraction = 0.02

[[source.channels]]
index = 2
pair_rate_hz = 2.0e4
fidelity = 0.94
crosstalk_fraction = 0.02

[jsi]
accidental_floor_hz = 50.0

[allocation]
assignment = {1 = "A-B", 2 = "A-B"}

[links.A-B]
loss_db = 1.0
arm_split = 0.5
excess_loss_db = [3.0, 3.0]
capture_fraction = 0.9

[plan]
integration_s = 3.0
calibration_integration_s = 2.0
window_ns = 10.0
span_bins = 400
resolution_ps = 5000
num_samples = 128
tomography_bases = ["rect", "diag"]

[rsp]
tasks = [{link = "A-B", sender = "A", projection = "D", target = "D"}]
"""


@pytest.fixture(scope="session")
def small_config():
    return parse_config(SMALL_CONFIG, name="unit-test")


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_density(rng, dim=4):
    """Ginibre-sampled random density matrix (test oracle helper)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return m / np.trace(m).real
