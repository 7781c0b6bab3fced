"""Experiment configuration: TOML parsing, validation, and seed fan-out.

A config file carries everything a run needs: node clocks and detectors, the
eight source channels, the channel-to-link allocation, per-link loss budgets,
and the measurement plan. Frequencies live on an exact integer grid in units
of 12.5 GHz. A single master seed fans out to per-component seeds by stable
hashing, so every artifact of a run is citable as (config, seed).
"""

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .allocation import ChannelAllocation, LinkBudget, link_nodes
from .errors import ConfigError
from .source import ChannelPairSpec, visibility_from_fidelity
from .timetag import ClockModel, DetectorModel, GateSpec

SCHEMA_VERSION = 1


def stable_seed(*parts):
    """Deterministic 63-bit seed from string-able parts (sha256-based)."""
    payload = "::".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass(frozen=True)
class NodeConfig:
    name: str
    clock: ClockModel
    detector: DetectorModel
    fiber_delay_ns: float = 0.0


@dataclass(frozen=True)
class PlanConfig:
    integration_s: float = 60.0
    calibration_integration_s: float = 5.0
    calibration_scan_s: float = 120.0
    window_ns: float = 10.0
    span_bins: int = 2000
    resolution_ps: int = 5000
    num_samples: int = 1024
    tomography_bases: tuple = ("rect", "diag")
    accidental_shifts: int = 8


@dataclass(frozen=True)
class RspTaskConfig:
    link: str
    sender: str
    projection: str
    target: str


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    nodes: dict
    channels: list
    allocation: ChannelAllocation
    budgets: dict
    plan: PlanConfig
    rsp_tasks: list = field(default_factory=list)
    jsi_accidental_floor_hz: float = 0.0
    jsi_integration_s: float = 5.0
    jsi_detector_effs: tuple = (0.8, 0.8)
    expected_singles: dict = field(default_factory=dict)

    def channel(self, index):
        for spec in self.channels:
            if spec.index == index:
                return spec
        raise KeyError(index)

    def child_seed(self, *parts):
        return stable_seed(self.seed, *parts)


def _get(table, key, kind, path, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    value = table[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{path}.{key}",
                          f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_detector(table, path):
    kind = _get(table, "kind", str, path, required=True)
    gate = None
    if "gate_rate_mhz" in table or "gate_window_ns" in table:
        gate = GateSpec(rate_mhz=_get(table, "gate_rate_mhz", float, path, required=True),
                        window_ns=_get(table, "gate_window_ns", float, path, required=True))
    try:
        return DetectorModel(
            kind=kind,
            efficiency=_get(table, "efficiency", float, path, required=True),
            dead_time_us=_get(table, "dead_time_us", float, path, 0.0),
            jitter_ps=_get(table, "jitter_ps", float, path, 0.0),
            gate=gate,
            dark_rate_hz=_get(table, "dark_rate_hz", float, path, 0.0),
        )
    except Exception as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_node(name, table, path):
    clock_table = table.get("clock", {})
    clock = ClockModel(
        node=name,
        pps_sigma_ns=_get(clock_table, "pps_sigma_ns", float, f"{path}.clock", 0.0),
        drift_ns_per_s=_get(clock_table, "drift_ns_per_s", float, f"{path}.clock", 0.0),
        seed=_get(clock_table, "seed", int, f"{path}.clock", 0),
    )
    if "detector" not in table:
        raise ConfigError(f"{path}.detector", "missing required field")
    detector = _parse_detector(table["detector"], f"{path}.detector")
    return NodeConfig(name=name, clock=clock, detector=detector,
                      fiber_delay_ns=_get(table, "fiber_delay_ns", float, path, 0.0))


def _parse_channels(tables, path):
    channels = []
    seen = set()
    for i, table in enumerate(tables):
        p = f"{path}[{i}]"
        index = _get(table, "index", int, p, required=True)
        if index in seen:
            raise ConfigError(p, f"duplicate channel index {index}")
        seen.add(index)
        if "fidelity" in table:
            visibility = visibility_from_fidelity(_get(table, "fidelity", float, p))
        else:
            visibility = _get(table, "visibility", float, p, 1.0)
        channels.append(ChannelPairSpec(
            index=index,
            pair_rate=_get(table, "pair_rate_hz", float, p, required=True),
            bell_phase_deg=_get(table, "bell_phase_deg", float, p, 0.0),
            visibility=visibility,
            crosstalk_fraction=_get(table, "crosstalk_fraction", float, p, 0.0),
        ))
    return sorted(channels, key=lambda c: c.index)


def _parse_budget(link, table, nodes, path):
    n1, n2 = link_nodes(link)
    for node in (n1, n2):
        if node not in nodes:
            raise ConfigError(path, f"link references unknown node {node!r}")
    excess = table.get("excess_loss_db", [0.0, 0.0])
    if not (isinstance(excess, list) and len(excess) == 2):
        raise ConfigError(f"{path}.excess_loss_db", "expected a two-element list")
    darks = (nodes[n1].detector.dark_rate_hz, nodes[n2].detector.dark_rate_hz)
    return LinkBudget(
        link=link,
        loss_db=_get(table, "loss_db", float, path, 0.0),
        eff_node1=nodes[n1].detector.efficiency,
        eff_node2=nodes[n2].detector.efficiency,
        arm_split=_get(table, "arm_split", float, path, 0.5),
        excess_loss_db=(float(excess[0]), float(excess[1])),
        capture_fraction=_get(table, "capture_fraction", float, path, 1.0),
        phase_offset_deg=_get(table, "phase_offset_deg", float, path, 0.0),
        phase_slope_deg=_get(table, "phase_slope_deg", float, path, 0.0),
        depolarization=_get(table, "depolarization", float, path, 0.0),
        dark_rates_hz=darks,
    )


def parse_config(text, name="config"):
    """Parse and validate a TOML experiment configuration."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(name, f"TOML syntax error: {exc}") from exc
    version = _get(data, "schema_version", int, name, required=True)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version}")
    seed = _get(data, "seed", int, name, required=True)

    node_tables = data.get("nodes")
    if not node_tables:
        raise ConfigError("nodes", "missing required table")
    nodes = {n: _parse_node(n, t, f"nodes.{n}") for n, t in node_tables.items()}

    source_table = data.get("source", {})
    channels = _parse_channels(source_table.get("channels", []), "source.channels")
    if not channels:
        raise ConfigError("source.channels", "at least one channel is required")

    alloc_table = data.get("allocation", {})
    raw_assignment = alloc_table.get("assignment", {})
    assignment = {}
    for key, value in raw_assignment.items():
        try:
            index = int(key)
        except ValueError:
            raise ConfigError(f"allocation.assignment.{key}",
                              "channel keys must be integers") from None
        assignment[index] = value if value else None
    links = set(alloc_table.get("links", [])) | {v for v in assignment.values() if v}
    allocation = ChannelAllocation(assignment, links=links)
    for link in sorted(allocation.links):
        for node in link_nodes(link):
            if node not in nodes:
                raise ConfigError("allocation", f"{link} references unknown node {node!r}")

    budget_tables = data.get("links", {})
    budgets = {}
    for link in sorted(allocation.links):
        if link not in budget_tables:
            raise ConfigError(f"links.{link}", "missing loss budget for allocated link")
        budgets[link] = _parse_budget(link, budget_tables[link], nodes, f"links.{link}")

    plan_table = data.get("plan", {})
    plan = PlanConfig(
        integration_s=_get(plan_table, "integration_s", float, "plan", 60.0),
        calibration_integration_s=_get(plan_table, "calibration_integration_s",
                                       float, "plan", 5.0),
        calibration_scan_s=_get(plan_table, "calibration_scan_s", float,
                                "plan", 120.0),
        window_ns=_get(plan_table, "window_ns", float, "plan", 10.0),
        span_bins=_get(plan_table, "span_bins", int, "plan", 2000),
        resolution_ps=_get(plan_table, "resolution_ps", int, "plan", 5000),
        num_samples=_get(plan_table, "num_samples", int, "plan", 1024),
        tomography_bases=tuple(plan_table.get("tomography_bases", ["rect", "diag"])),
        accidental_shifts=_get(plan_table, "accidental_shifts", int, "plan", 8),
    )
    if plan.integration_s <= 0:
        raise ConfigError("plan.integration_s", "must be positive")

    tasks = []
    for i, task in enumerate(data.get("rsp", {}).get("tasks", [])):
        p = f"rsp.tasks[{i}]"
        link = _get(task, "link", str, p, required=True)
        sender = _get(task, "sender", str, p, required=True)
        if link not in allocation.links:
            raise ConfigError(p, f"task link {link!r} is not an allocated link")
        if sender not in link_nodes(link):
            raise ConfigError(p, f"sender {sender!r} is not a node of {link}")
        tasks.append(RspTaskConfig(
            link=link, sender=sender,
            projection=_get(task, "projection", str, p, required=True),
            target=_get(task, "target", str, p, required=True),
        ))

    jsi_table = data.get("jsi", {})
    expected = data.get("expected_singles", {})
    expected_singles = {lk: tuple(v) for lk, v in expected.items()}
    return ExperimentConfig(
        name=_get(data, "name", str, name, name),
        seed=seed,
        nodes=nodes,
        channels=channels,
        allocation=allocation,
        budgets=budgets,
        plan=plan,
        rsp_tasks=tasks,
        jsi_accidental_floor_hz=_get(jsi_table, "accidental_floor_hz", float, "jsi", 0.0),
        jsi_integration_s=_get(jsi_table, "integration_s", float, "jsi", 5.0),
        jsi_detector_effs=tuple(jsi_table.get("detector_effs", [0.8, 0.8])),
        expected_singles=expected_singles,
    )


def load_config(path):
    return parse_config(Path(path).read_text(), name=str(path))


def packaged_config_path(allocation):
    """Path of a shipped calibrated configuration (allocation 1 or 2)."""
    return Path(__file__).parent / "configs" / f"alloc{allocation}.toml"


def default_config(allocation=1):
    """Calibrated three-node testbed configuration for allocation 1 or 2."""
    return load_config(packaged_config_path(allocation))
