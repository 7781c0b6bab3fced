"""Timetag-stream generation and the QLTT binary interchange format.

The physical chain per link: homogeneous Poisson pair emissions, a joint
analyzer outcome sampled from the two-qubit state (before losses, so quantum
correlations survive thinning), independent arm losses, then per-node detector
response (Gaussian jitter, optional gating, non-paralyzable dead time, dark
counts) and a GPS-style clock offset that redraws every second and drifts
linearly in between. Times are tracked in picoseconds and binned to the TDC
resolution (default 5 ns) on output.

QLTT file layout (little-endian): magic "QLTT", u16 version (=1), u16 node-id
byte length + UTF-8 node id, u32 clock resolution in ps, u64 record count,
then 9-byte records of u64 global bin + u8 detector channel.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (BadMagic, InvalidDuration, ModelMismatch, TruncatedFile,
                     UnsortedInput, UnsortedRecords, UnsupportedVersion)
from .polarization import analyzer_projector
from .quantum import kron

MAGIC = b"QLTT"
FORMAT_VERSION = 1
DEFAULT_RESOLUTION_PS = 5000
_RECORD_DTYPE = np.dtype([("bin", "<u8"), ("channel", "u1")])

MAX_DURATION_S = 3600.0


@dataclass(frozen=True)
class ClockModel:
    """Per-node GPS clock: a fresh Gaussian PPS offset each second plus a
    linear drift inside the second."""

    node: str
    pps_sigma_ns: float = 0.0
    drift_ns_per_s: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.pps_sigma_ns < 0:
            raise ValueError("pps_sigma_ns must be >= 0")


@dataclass(frozen=True)
class GateSpec:
    rate_mhz: float
    window_ns: float


@dataclass(frozen=True)
class DetectorModel:
    """Temporal response of one single-photon detector.

    Efficiency participates in the link budget's arm transmissions; this model
    handles jitter, gating, dead time, and dark counts.
    """

    kind: str
    efficiency: float
    dead_time_us: float = 0.0
    jitter_ps: float = 0.0
    gate: GateSpec = None
    dark_rate_hz: float = 0.0

    def __post_init__(self):
        if self.kind not in ("snspd", "gated_apd"):
            raise ModelMismatch(f"unknown detector kind {self.kind!r}")
        if self.kind == "gated_apd" and self.gate is None:
            raise ModelMismatch("gated_apd requires a gate specification")
        if self.kind == "snspd" and self.gate is not None:
            raise ModelMismatch("snspd must not carry a gate specification")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")


@dataclass
class TimetagStream:
    """Sorted detection records for one node."""

    node: str
    clock_resolution_ps: int
    bins: np.ndarray                 # u64, non-decreasing
    channels: np.ndarray = None      # u8, same length

    def __post_init__(self):
        if self.clock_resolution_ps <= 0:
            raise ValueError("clock resolution must be positive")
        self.bins = np.ascontiguousarray(self.bins, dtype=np.uint64)
        if self.channels is None:
            self.channels = np.zeros(self.bins.size, dtype=np.uint8)
        self.channels = np.ascontiguousarray(self.channels, dtype=np.uint8)
        if self.channels.size != self.bins.size:
            raise ValueError("bins and channels must have equal length")
        if self.bins.size > 1 and np.any(np.diff(self.bins.astype(np.int64)) < 0):
            raise UnsortedRecords(f"stream for node {self.node} is not sorted")

    def __len__(self):
        return self.bins.size

    def times_ps(self):
        return self.bins.astype(np.int64) * self.clock_resolution_ps


def sample_clock_offsets(model, num_seconds, run_seed=0):
    """PPS offsets (ns) for seconds 0..num_seconds-1, deterministic per seed."""
    rng = np.random.default_rng([int(model.seed), int(run_seed)])
    return rng.normal(0.0, model.pps_sigma_ns, int(num_seconds))


def sample_clock_offset(model, second_index, run_seed=0):
    """PPS offset (ns) of one node at a given second."""
    return float(sample_clock_offsets(model, second_index + 1, run_seed)[-1])


def apply_dead_time(events, dead_time):
    """Non-paralyzable dead-time filter on sorted event times.

    An event is kept iff it falls at least ``dead_time`` after the last kept
    event. Units of events and dead_time must agree.
    """
    events = np.asarray(events)
    if events.size == 0 or dead_time <= 0:
        return events.copy()
    gaps = np.diff(events)
    if events.size > 1 and np.any(gaps < 0):
        raise UnsortedInput("dead-time filter requires sorted input")
    collision = gaps < dead_time
    if not collision.any():
        return events.copy()
    keep = np.ones(events.size, dtype=bool)
    idx = np.flatnonzero(collision)
    run_breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], run_breaks + 1))
    ends = np.concatenate((run_breaks, [idx.size - 1]))
    for s_i, e_i in zip(starts, ends):
        first = int(idx[s_i])
        last = int(idx[e_i]) + 1
        seg = events[first:last + 1].tolist()
        last_kept = seg[0]
        for j in range(1, len(seg)):
            if seg[j] - last_kept >= dead_time:
                last_kept = seg[j]
            else:
                keep[first + j] = False
    return events[keep]


def joint_outcome_rates(rho, setting1, setting2, pair_rate, t1, t2):
    """Detected-event rates after joint analyzer sampling and arm losses.

    Returns (both, node1_only, node2_only) rates in events/s. Sampling the
    joint analyzer outcome before the independent losses splits the pair
    process into three independent Poisson processes with these rates.
    """
    rho = np.asarray(rho, dtype=complex)
    p1 = analyzer_projector(setting1)
    p2 = analyzer_projector(setting2)
    q_pp = float(np.trace(rho @ kron(p1, p2)).real)
    q_1 = float(np.trace(rho @ kron(p1, np.eye(2))).real)
    q_2 = float(np.trace(rho @ kron(np.eye(2), p2)).real)
    q_pp = min(max(q_pp, 0.0), 1.0)
    both = pair_rate * q_pp * t1 * t2
    only1 = pair_rate * t1 * max(q_1 - q_pp * t2, 0.0)
    only2 = pair_rate * t2 * max(q_2 - q_pp * t1, 0.0)
    return both, only1, only2


def _gate_filter(times_ps, gate):
    period_ps = 1e6 / gate.rate_mhz
    half_window = 0.5 * gate.window_ns * 1e3
    phase = np.mod(times_ps, period_ps)
    dist = np.minimum(phase, period_ps - phase)
    return times_ps[dist <= half_window]


def detect_node(photon_times_s, detector, clock, duration_s, seed,
                fiber_delay_ns=0.0, resolution_ps=DEFAULT_RESOLUTION_PS,
                node_tag=0):
    """Turn arrival times at one node into a sorted, binned detection stream."""
    rng = np.random.default_rng([int(seed), 7000 + node_tag])
    times = np.asarray(photon_times_s, dtype=float)
    # Clock offset: per-second Gaussian plus linear drift within the second.
    n_seconds = int(np.ceil(duration_s)) + 1
    offsets_ns = sample_clock_offsets(clock, n_seconds, run_seed=seed)
    seconds = np.floor(times).astype(np.int64)
    offset = offsets_ns[seconds] + clock.drift_ns_per_s * (times - seconds)
    times_ps = times * 1e12 + fiber_delay_ns * 1e3 + offset * 1e3
    if detector.jitter_ps > 0:
        times_ps = times_ps + rng.normal(0.0, detector.jitter_ps, times.size)
    dark_count = rng.poisson(detector.dark_rate_hz * duration_s)
    dark_ps = rng.random(dark_count) * duration_s * 1e12
    times_ps = np.concatenate([times_ps, dark_ps])
    if detector.gate is not None:
        times_ps = _gate_filter(times_ps, detector.gate)
    times_ps = np.sort(times_ps[times_ps >= 0.0])
    dead_ps = detector.dead_time_us * 1e6
    if dead_ps > 0:
        times_ps = apply_dead_time(times_ps, dead_ps)
    bins = (times_ps / resolution_ps).astype(np.uint64)
    return TimetagStream(node=clock.node, clock_resolution_ps=resolution_ps,
                         bins=bins)


def simulate_pair_streams(states, pair_rates, budget, settings, detectors,
                          clocks, duration_s, seed, fiber_delays_ns=(0.0, 0.0),
                          resolution_ps=DEFAULT_RESOLUTION_PS):
    """Simulate one link carrying one or more channel states.

    states/pair_rates: per-channel two-qubit density matrices and generated
    pair rates. Channels add as independent Poisson processes; the detector
    chain is applied to each node's merged arrivals.
    """
    if not 0 < duration_s <= MAX_DURATION_S:
        raise InvalidDuration(f"duration must lie in (0, {MAX_DURATION_S}] s")
    if len(states) != len(pair_rates):
        raise ModelMismatch("states and pair_rates must pair up")
    if len(settings) != 2 or len(detectors) != 2 or len(clocks) != 2:
        raise ModelMismatch("need settings, detectors, clocks for both nodes")
    t1, t2 = budget.arm_transmissions()
    arrivals1 = []
    arrivals2 = []
    for index, (rho, rate) in enumerate(zip(states, pair_rates)):
        rng = np.random.default_rng([int(seed), 100 + index])
        both, only1, only2 = joint_outcome_rates(
            rho, settings[0], settings[1], rate, t1, t2)
        n_both = rng.poisson(both * duration_s)
        t_both = rng.random(n_both) * duration_s
        n_1 = rng.poisson(only1 * duration_s)
        t_1 = rng.random(n_1) * duration_s
        n_2 = rng.poisson(only2 * duration_s)
        t_2 = rng.random(n_2) * duration_s
        arrivals1.append(np.concatenate([t_both, t_1]))
        arrivals2.append(np.concatenate([t_both, t_2]))
    stream1 = detect_node(np.concatenate(arrivals1) if arrivals1 else np.empty(0),
                          detectors[0], clocks[0], duration_s, seed,
                          fiber_delays_ns[0], resolution_ps, node_tag=0)
    stream2 = detect_node(np.concatenate(arrivals2) if arrivals2 else np.empty(0),
                          detectors[1], clocks[1], duration_s, seed,
                          fiber_delays_ns[1], resolution_ps, node_tag=1)
    return stream1, stream2


def simulate_link(rho, pair_rate, budget, settings, detectors, clocks,
                  duration_s, seed, fiber_delays_ns=(0.0, 0.0),
                  resolution_ps=DEFAULT_RESOLUTION_PS):
    """Single-channel convenience wrapper around simulate_pair_streams."""
    return simulate_pair_streams([rho], [pair_rate], budget, settings,
                                 detectors, clocks, duration_s, seed,
                                 fiber_delays_ns, resolution_ps)


def write_stream(stream, destination):
    """Serialize a stream to the QLTT binary format (bit-exact round trip)."""
    node_bytes = stream.node.encode("utf-8")
    header = (MAGIC
              + struct.pack("<H", FORMAT_VERSION)
              + struct.pack("<H", len(node_bytes)) + node_bytes
              + struct.pack("<I", stream.clock_resolution_ps)
              + struct.pack("<Q", len(stream)))
    records = np.empty(len(stream), dtype=_RECORD_DTYPE)
    records["bin"] = stream.bins
    records["channel"] = stream.channels
    payload = header + records.tobytes()
    if hasattr(destination, "write"):
        destination.write(payload)
    else:
        Path(destination).write_bytes(payload)
    return len(payload)


def read_stream(source):
    """Parse a QLTT file back into a TimetagStream."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic("not a QLTT file")
    pos = 4

    def take(count, what):
        nonlocal pos
        if pos + count > len(data):
            raise TruncatedFile(f"file ends inside {what}")
        chunk = data[pos:pos + count]
        pos += count
        return chunk

    version = struct.unpack("<H", take(2, "version"))[0]
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"version {version} not supported")
    name_len = struct.unpack("<H", take(2, "node-id length"))[0]
    node = take(name_len, "node id").decode("utf-8")
    resolution = struct.unpack("<I", take(4, "clock resolution"))[0]
    count = struct.unpack("<Q", take(8, "record count"))[0]
    body = take(count * _RECORD_DTYPE.itemsize, "records")
    records = np.frombuffer(body, dtype=_RECORD_DTYPE)
    bins = records["bin"].copy()
    if bins.size > 1 and np.any(np.diff(bins.astype(np.int64)) < 0):
        raise UnsortedRecords("record bins are not non-decreasing")
    return TimetagStream(node=node, clock_resolution_ps=resolution,
                         bins=bins, channels=records["channel"].copy())
