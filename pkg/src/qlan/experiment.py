"""End-to-end experiment orchestration: simulate, correlate, reconstruct.

Per link the pipeline mirrors the deployed procedure: recover the stream
delay from an H/V correlation run, solve the phase-compensation angle x from
a four-point D/D scan on the second node's half-wave plate, then cycle the
tomography settings, count windowed coincidences with time-shifted accidental
estimates, and run the Bayesian reconstruction on raw and subtracted counts.
"""

from dataclasses import dataclass

import numpy as np

from .allocation import link_nodes
from .coincidence import (count_coincidences_at, delay_histogram,
                          estimate_accidentals, find_offset, subtracted_counts)
from .errors import InsufficientCounts, QlanError, StreamTooShort
from .polarization import (analyzer_projector, coincidence_probability,
                           label_setting)
from .quantum import bloch_vector, ket_psi_plus, mixed_state_fidelity
from .rsp import rsp_predict
from .source import channel_state
from .timetag import sample_clock_offsets, simulate_pair_streams
from .tomography import (MeasurementRecord, qubit_tomography, sample_posterior,
                         summarize_link)

BASIS_LABELS = {"rect": ("H", "V"), "diag": ("D", "A"), "circ": ("R", "L")}
PHASE_STEP_OFFSETS = (0.0, 22.5, 45.0, 67.5)
RSP_MIN_COUNTS = 100


@dataclass
class LinkCalibration:
    link: str
    delay_bins: int
    x_deg: float                  # compensation HWP angle of the second node
    scan_counts: tuple = ()

    @property
    def compensated_phase_deg(self):
        """Residual link phase implied by the solved compensation angle."""
        return (4.0 * self.x_deg) % 360.0


@dataclass
class LinkRunResult:
    link: str
    calibration: LinkCalibration
    report_raw: object
    report_sub: object
    raw_counts: dict
    accidental_counts: dict
    singles_rates: tuple
    error: str = ""


@dataclass
class RspResult:
    link: str
    sender: str
    projection_label: str
    target_label: str
    fidelity_vs_target: float
    fidelity_vs_target_std: float
    fidelity_vs_prediction: float
    fidelity_vs_prediction_std: float
    post_selected_counts: float
    receiver_bloch: np.ndarray
    sample_bloch: np.ndarray
    ensemble: object = None


def link_effective_states(config, link):
    """Per-channel (state, pair rate) as transmitted over one link.

    Fiber birefringence enters as the budget's per-link phase offset and
    per-channel phase slope around the band center, plus an optional
    depolarization factor.
    """
    budget = config.budgets[link]
    channels = config.allocation.channels_for(link)
    if not channels:
        return [], []
    mid = 0.5 * (channels[0] + channels[-1])
    states, rates = [], []
    for index in channels:
        spec = config.channel(index)
        extra = budget.phase_offset_deg + budget.phase_slope_deg * (index - mid)
        states.append(channel_state(spec, extra_phase_deg=extra,
                                    depolarization=budget.depolarization))
        rates.append(spec.pair_rate)
    return states, rates


def simulate_link_setting(config, link, settings, duration_s, seed):
    """Simulate both nodes of a link for one analyzer setting pair."""
    n1, n2 = link_nodes(link)
    states, rates = link_effective_states(config, link)
    node1, node2 = config.nodes[n1], config.nodes[n2]
    return simulate_pair_streams(
        states, rates, config.budgets[link], settings,
        (node1.detector, node2.detector), (node1.clock, node2.clock),
        duration_s, seed,
        fiber_delays_ns=(node1.fiber_delay_ns, node2.fiber_delay_ns),
        resolution_ps=config.plan.resolution_ps)


def _phase_step_scan(config, link, delay_bins, seed):
    """Four-point D/D scan counts sharing one pair realization.

    The same emitted pairs (and therefore the same clock-offset capture
    pattern) are thinned by each step's joint projection probability, so the
    per-second window-capture factor is common to all four counts and cancels
    in the phase estimator. Without this, second-scale PPS wander comparable
    to the window width buries the modulation in capture noise.
    """
    plan = config.plan
    n1, n2 = link_nodes(link)
    node1, node2 = config.nodes[n1], config.nodes[n2]
    budget = config.budgets[link]
    t1, t2 = budget.arm_transmissions()
    states, rates = link_effective_states(config, link)
    flux = float(sum(rates))
    if flux <= 0:
        return [0, 0, 0, 0]
    duration = plan.calibration_scan_s
    rng = np.random.default_rng([int(seed), 31])
    n_pairs = rng.poisson(flux * t1 * t2 * duration)
    times = rng.random(n_pairs) * duration
    thin = rng.random(n_pairs)
    res = plan.resolution_ps
    max_dev = int(plan.window_ns * 1e3 / 2 // res)

    def detected_bins(node, tag):
        offsets = sample_clock_offsets(node.clock, int(np.ceil(duration)) + 1,
                                       run_seed=seed)
        seconds = np.floor(times).astype(np.int64)
        wander = offsets[seconds] + node.clock.drift_ns_per_s * (times - seconds)
        jitter = np.random.default_rng([int(seed), 41 + tag]).normal(
            0.0, node.detector.jitter_ps, n_pairs)
        ps = times * 1e12 + node.fiber_delay_ns * 1e3 + wander * 1e3 + jitter
        return (ps / res).astype(np.int64)

    in_window = np.abs(detected_bins(node2, 1) - detected_bins(node1, 0)
                       - delay_bins) <= max_dev
    weights = np.array(rates) / flux
    fixed = label_setting("D", 0.0)
    counts = []
    for offset in PHASE_STEP_OFFSETS:
        stepped = label_setting("D", offset)
        q = sum(w * coincidence_probability(rho, fixed, stepped)
                for w, rho in zip(weights, states))
        counts.append(int(np.count_nonzero((thin < q) & in_window)))
    return counts


def calibrate_link(config, link):
    """Recover the stream delay and the compensation angle for one link."""
    plan = config.plan
    cal_t = plan.calibration_integration_s
    # Delay recovery on the strongly anticorrelated H/V setting.
    s1, s2 = simulate_link_setting(
        config, link, (label_setting("H"), label_setting("V")), cal_t,
        config.child_seed(link, "delay"))
    estimate = find_offset(delay_histogram(s1, s2, plan.span_bins))
    delay = estimate.delay_bins
    # Four-point phase stepping: both QWPs at 45 deg, the second node's HWP
    # walks 22.5 deg increments; the count modulation phase is 4x the
    # compensation angle.
    counts = _phase_step_scan(config, link, delay,
                              config.child_seed(link, "phase-step"))
    phase = np.arctan2(counts[1] - counts[3], counts[0] - counts[2])
    x_deg = float(np.rad2deg(phase) / 4.0) % 90.0
    return LinkCalibration(link=link, delay_bins=delay, x_deg=x_deg,
                           scan_counts=tuple(counts))


def _tomography_labels(config):
    labels = []
    for basis in config.plan.tomography_bases:
        labels.extend(BASIS_LABELS[basis])
    return labels


def _setting_for(label, node_slot, x_deg):
    # Compensation is solved on the second node; the first node's offsets are
    # absolute.
    return label_setting(label, x_deg if node_slot == 1 else 0.0)


DELAY_CANDIDATE_SPREAD = 4


def measure_link_counts(config, link, calibration, store_streams=None):
    """Raw and accidental coincidence counts for every tomography setting.

    Every setting is counted at the same small set of candidate delays around
    the calibration value; the delay that maximizes the total count across
    the link is then applied uniformly. A per-setting delay estimate would
    bias outcome ratios: bright settings would re-center on their own peak
    while dim ones cannot.
    """
    plan = config.plan
    labels = _tomography_labels(config)
    candidates = [calibration.delay_bins + k
                  for k in range(-DELAY_CANDIDATE_SPREAD, DELAY_CANDIDATE_SPREAD + 1)]
    candidate_counts = {}
    accidentals = {}
    singles = np.zeros(2)
    for l1 in labels:
        for l2 in labels:
            settings = (_setting_for(l1, 0, calibration.x_deg),
                        _setting_for(l2, 1, calibration.x_deg))
            s1, s2 = simulate_link_setting(
                config, link, settings, plan.integration_s,
                config.child_seed(link, "tomo", l1, l2))
            candidate_counts[(l1, l2)] = count_coincidences_at(
                s1, s2, candidates, plan.window_ns)
            try:
                # Accidental windows are translation invariant, so anchoring
                # the shifts at the calibration delay is as good as any.
                accidentals[(l1, l2)] = estimate_accidentals(
                    s1, s2, calibration.delay_bins, plan.window_ns,
                    num_shifts=plan.accidental_shifts)
            except StreamTooShort:
                accidentals[(l1, l2)] = 0.0
            singles += (len(s1) / plan.integration_s, len(s2) / plan.integration_s)
            if store_streams is not None:
                store_streams[(l1, l2)] = (s1, s2)
    totals = np.sum(list(candidate_counts.values()), axis=0)
    best = int(np.argmax(totals))
    raw = {key: int(counts[best]) for key, counts in candidate_counts.items()}
    singles /= len(labels) ** 2
    return raw, accidentals, tuple(singles)


def _records_from_counts(counts, calibration, integration_s):
    records = []
    for (l1, l2), count in counts.items():
        settings = (_setting_for(l1, 0, calibration.x_deg),
                    _setting_for(l2, 1, calibration.x_deg))
        records.append(MeasurementRecord(settings, float(count), integration_s))
    return records


def basis_group_rates(counts, labels, integration_s):
    """Mean whole-basis coincidence rate over complete 4-outcome groups."""
    pairs = [(labels[0], labels[1])]
    if len(labels) == 4:
        pairs = [(labels[0], labels[1]), (labels[2], labels[3])]
    group_rates = []
    for ls1 in pairs:
        for ls2 in pairs:
            total = sum(counts[(a, b)] for a in ls1 for b in ls2)
            group_rates.append(total / integration_s)
    return float(np.mean(group_rates))


def run_link(config, link, num_samples=None, seed_tag="run"):
    """Full single-link pipeline: calibrate, measure, reconstruct (raw + sub)."""
    plan = config.plan
    num_samples = num_samples or plan.num_samples
    calibration = calibrate_link(config, link)
    raw, accidentals, singles = measure_link_counts(config, link, calibration)
    sub = subtracted_counts(raw, accidentals)
    labels = _tomography_labels(config)
    rate_raw = basis_group_rates(raw, labels, plan.integration_s)
    rate_sub = basis_group_rates(sub, labels, plan.integration_s)
    target = ket_psi_plus(np.deg2rad(calibration.compensated_phase_deg))
    channels = tuple(config.allocation.channels_for(link))

    ensemble_raw = sample_posterior(
        _records_from_counts(raw, calibration, plan.integration_s),
        num_samples=num_samples, seed=config.child_seed(link, seed_tag, "raw"))
    report_raw = summarize_link(ensemble_raw, rate_raw, target=target,
                                link=link, channels=channels)
    ensemble_sub = sample_posterior(
        _records_from_counts(sub, calibration, plan.integration_s),
        num_samples=num_samples, seed=config.child_seed(link, seed_tag, "sub"))
    report_sub = summarize_link(ensemble_sub, rate_sub, target=target,
                                link=link, channels=channels)
    return LinkRunResult(link=link, calibration=calibration,
                         report_raw=report_raw, report_sub=report_sub,
                         raw_counts=raw, accidental_counts=accidentals,
                         singles_rates=singles)


def run_experiment(config, num_samples=None, links=None):
    """Run every allocated link; per-link failures are recorded, not fatal."""
    results = {}
    for link in sorted(links or config.allocation.links):
        try:
            results[link] = run_link(config, link, num_samples=num_samples)
        except QlanError as exc:
            results[link] = LinkRunResult(
                link=link, calibration=None, report_raw=None, report_sub=None,
                raw_counts={}, accidental_counts={}, singles_rates=(0.0, 0.0),
                error=f"{type(exc).__name__}: {exc}")
    return results


def run_rsp_task(config, task, link_result, num_samples=None):
    """Execute one RSP task against an already-characterized link.

    The sender's analyzer is fixed to the task projection; the receiver cycles
    all six standard projections and its post-selected counts feed a
    single-qubit reconstruction. Reports fidelity against the ideal prepared
    state and against the prediction from the link's estimated density matrix.
    """
    plan = config.plan
    num_samples = num_samples or plan.num_samples
    calibration = link_result.calibration
    nodes = link_nodes(task.link)
    sender_slot = nodes.index(task.sender)
    receiver_slot = 1 - sender_slot
    sender_setting = _setting_for(task.projection_label, sender_slot,
                                  calibration.x_deg)

    candidates = [calibration.delay_bins + k
                  for k in range(-DELAY_CANDIDATE_SPREAD, DELAY_CANDIDATE_SPREAD + 1)]
    receiver_settings = []
    candidate_counts = []
    for label in ("H", "V", "D", "A", "R", "L"):
        receiver_setting = _setting_for(label, receiver_slot, calibration.x_deg)
        settings = [None, None]
        settings[sender_slot] = sender_setting
        settings[receiver_slot] = receiver_setting
        s1, s2 = simulate_link_setting(
            config, task.link, tuple(settings), plan.integration_s,
            config.child_seed(task.link, "rsp", task.projection_label, label))
        candidate_counts.append(count_coincidences_at(
            s1, s2, candidates, plan.window_ns))
        receiver_settings.append(receiver_setting)
    best = int(np.argmax(np.sum(candidate_counts, axis=0)))
    records = [MeasurementRecord(setting, float(counts[best]), plan.integration_s)
               for setting, counts in zip(receiver_settings, candidate_counts)]
    total = float(sum(r.count for r in records))
    if total < RSP_MIN_COUNTS:
        raise InsufficientCounts(
            f"only {total:.0f} post-selected events on {task.link}")

    ensemble = qubit_tomography(records, num_samples=num_samples,
                                seed=config.child_seed(task.link, "rsp-tomo",
                                                       task.projection_label))
    sender_projector = analyzer_projector(sender_setting)
    ideal_pair = np.outer(
        ket_psi_plus(np.deg2rad(calibration.compensated_phase_deg)),
        ket_psi_plus(np.deg2rad(calibration.compensated_phase_deg)).conj())
    ideal_target, _ = rsp_predict(ideal_pair, sender_projector, sender_slot)
    predicted, _ = rsp_predict(link_result.report_raw.rho_mean,
                               sender_projector, sender_slot)

    f_target = np.array([mixed_state_fidelity(s, ideal_target)
                         for s in ensemble.samples])
    f_pred = np.array([mixed_state_fidelity(s, predicted)
                       for s in ensemble.samples])
    return RspResult(
        link=task.link, sender=task.sender,
        projection_label=task.projection_label, target_label=task.target_label,
        fidelity_vs_target=float(f_target.mean()),
        fidelity_vs_target_std=float(f_target.std()),
        fidelity_vs_prediction=float(f_pred.mean()),
        fidelity_vs_prediction_std=float(f_pred.std()),
        post_selected_counts=total,
        receiver_bloch=bloch_vector(ensemble.mean),
        sample_bloch=np.array([bloch_vector(s) for s in ensemble.samples]),
        ensemble=ensemble,
    )
