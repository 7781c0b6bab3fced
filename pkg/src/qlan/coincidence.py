"""Delay recovery, windowed coincidence counting, and accidental estimation.

Counting semantics (pinned by the brute-force oracle in the tests): candidate
pairs are all (a, b) events with |t_b - t_a - delay| <= window/2; they are
matched greedily nearest-first on that deviation, ties broken by earlier a
then earlier b, and every event participates in at most one pair.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (EmptyHistogram, KeyMismatch, ResolutionMismatch,
                     StreamTooShort)

ACCIDENTAL_SHIFT_NS = 100.0
ACCIDENTAL_NUM_SHIFTS = 8


@dataclass(frozen=True)
class DelayHistogram:
    lags: np.ndarray        # bin offsets (t_b - t_a), ascending
    counts: np.ndarray
    bin_width: int          # lag bins per histogram bin
    resolution_ps: int


@dataclass(frozen=True)
class OffsetEstimate:
    delay_bins: int
    peak_counts: int
    low_confidence: bool


@dataclass(frozen=True)
class CoincidenceResult:
    delay_bins: int
    window_ns: float
    raw_coincidences: int
    accidentals: float
    integration_s: float

    @property
    def raw_rate(self):
        return self.raw_coincidences / self.integration_s

    @property
    def accidental_rate(self):
        return self.accidentals / self.integration_s

    @property
    def corrected_rate(self):
        return max(self.raw_coincidences - self.accidentals, 0.0) / self.integration_s


def _check_resolution(a, b):
    if a.clock_resolution_ps != b.clock_resolution_ps:
        raise ResolutionMismatch(
            f"{a.clock_resolution_ps} ps vs {b.clock_resolution_ps} ps")
    return a.clock_resolution_ps


def delay_histogram(a, b, span_bins, bin_width=1):
    """Histogram of pairwise delays (t_b - t_a) within +/- span_bins.

    Linear in events for spans small against the stream duration: each b event
    only meets the a events inside its span window.
    """
    resolution = _check_resolution(a, b)
    if span_bins <= 0 or span_bins > 10**6:
        raise ValueError("span_bins must lie in 1..1e6")
    ta = a.bins.astype(np.int64)
    tb = b.bins.astype(np.int64)
    edges_per_bin = int(bin_width)
    n_bins = (2 * span_bins) // edges_per_bin + 1
    counts = np.zeros(n_bins, dtype=np.int64)
    if ta.size and tb.size:
        lo = np.searchsorted(ta, tb - span_bins, side="left")
        hi = np.searchsorted(ta, tb + span_bins, side="right")
        sizes = hi - lo
        total = int(sizes.sum())
        if total:
            starts = np.repeat(lo, sizes)
            offsets = np.arange(total) - np.repeat(
                np.concatenate(([0], np.cumsum(sizes)[:-1])), sizes)
            deltas = ta[starts + offsets]
            deltas = np.repeat(tb, sizes) - deltas
            np.add.at(counts, (deltas + span_bins) // edges_per_bin, 1)
    lags = np.arange(n_bins) * edges_per_bin - span_bins
    return DelayHistogram(lags=lags, counts=counts, bin_width=edges_per_bin,
                          resolution_ps=resolution)


def find_offset(hist):
    """Argmax lag with deterministic tie-breaks: smallest |lag|, negative first.

    Flags low confidence when the peak does not clear mean + 5 sqrt(mean) of
    the histogram (Poisson significance).
    """
    counts = np.asarray(hist.counts)
    if counts.size == 0:
        raise EmptyHistogram("histogram has no bins")
    peak = counts.max()
    candidates = hist.lags[counts == peak]
    order = sorted(candidates, key=lambda lag: (abs(lag), lag >= 0))
    delay = int(order[0])
    mean = counts.mean()
    low_confidence = bool(peak < mean + 5.0 * np.sqrt(max(mean, 1e-12)))
    return OffsetEstimate(delay_bins=delay, peak_counts=int(peak),
                          low_confidence=low_confidence)


def _max_deviation_bins(window_ns, resolution_ps):
    window_ps = window_ns * 1e3
    if window_ps < resolution_ps:
        raise ValueError("window must be at least one clock bin wide")
    return int(window_ps / 2 // resolution_ps)


def _candidate_pairs(ta, tb, delay, max_dev):
    """(i, j, deviation) for all pairs with |tb[j] - ta[i] - delay| <= max_dev."""
    if ta.size == 0 or tb.size == 0:
        return (np.empty(0, np.int64),) * 3
    # Window the smaller stream against the larger one to keep the searchsorted
    # pass cheap; the candidate set itself is the same either way.
    if ta.size <= tb.size:
        lo = np.searchsorted(tb, ta + delay - max_dev, side="left")
        hi = np.searchsorted(tb, ta + delay + max_dev, side="right")
        sizes = hi - lo
        total = int(sizes.sum())
        if not total:
            return (np.empty(0, np.int64),) * 3
        i_idx = np.repeat(np.arange(ta.size), sizes)
        starts = np.repeat(lo, sizes)
        offsets = np.arange(total) - np.repeat(
            np.concatenate(([0], np.cumsum(sizes)[:-1])), sizes)
        j_idx = starts + offsets
    else:
        lo = np.searchsorted(ta, tb - delay - max_dev, side="left")
        hi = np.searchsorted(ta, tb - delay + max_dev, side="right")
        sizes = hi - lo
        total = int(sizes.sum())
        if not total:
            return (np.empty(0, np.int64),) * 3
        j_idx = np.repeat(np.arange(tb.size), sizes)
        starts = np.repeat(lo, sizes)
        offsets = np.arange(total) - np.repeat(
            np.concatenate(([0], np.cumsum(sizes)[:-1])), sizes)
        i_idx = starts + offsets
    dev = tb[j_idx] - ta[i_idx] - delay
    return i_idx, j_idx, dev


def _greedy_match_count(i_idx, j_idx, dev, n_a, n_b):
    if i_idx.size == 0:
        return 0
    order = np.lexsort((j_idx, i_idx, np.abs(dev)))
    used_a = np.zeros(n_a, dtype=bool)
    used_b = np.zeros(n_b, dtype=bool)
    count = 0
    for k in order:
        i = i_idx[k]
        j = j_idx[k]
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = True
        used_b[j] = True
        count += 1
    return count


def count_coincidences(a, b, delay_bins, window_ns):
    """Greedy nearest-first one-to-one pair count at a fixed delay."""
    return int(count_coincidences_at(a, b, [delay_bins], window_ns)[0])


def count_coincidences_at(a, b, delays_bins, window_ns):
    """Coincidence counts at several candidate delays in one stream pass.

    Candidate pairs are gathered once over the hull of all delays, then
    matched independently per delay; equivalent to calling count_coincidences
    at each delay, but with a single search over the streams.
    """
    resolution = _check_resolution(a, b)
    max_dev = _max_deviation_bins(window_ns, resolution)
    delays = [int(d) for d in delays_bins]
    ta = a.bins.astype(np.int64)
    tb = b.bins.astype(np.int64)
    center = delays[0]
    hull = max(abs(d - center) for d in delays) + max_dev
    i_idx, j_idx, dev = _candidate_pairs(ta, tb, center, hull)
    counts = np.zeros(len(delays), dtype=np.int64)
    for n, delay in enumerate(delays):
        mask = np.abs(dev - (delay - center)) <= max_dev
        counts[n] = _greedy_match_count(i_idx[mask], j_idx[mask],
                                        dev[mask] - (delay - center),
                                        ta.size, tb.size)
    return counts


def estimate_accidentals(a, b, delay_bins, window_ns,
                         num_shifts=ACCIDENTAL_NUM_SHIFTS,
                         shift_spacing_ns=ACCIDENTAL_SHIFT_NS):
    """Mean coincidence count over time-shifted (uncorrelated) windows.

    Windows sit at delay + k * shift_spacing for k = 1..num_shifts; the
    spacing must clear the correlated peak by 10x the window width.
    """
    resolution = _check_resolution(a, b)
    if shift_spacing_ns < 10 * window_ns:
        raise ValueError("shift spacing must be >= 10x the coincidence window")
    if a.bins.size == 0 or b.bins.size == 0:
        raise StreamTooShort("cannot shift windows on an empty stream")
    shift_bins = max(int(round(shift_spacing_ns * 1e3 / resolution)), 1)
    max_dev = _max_deviation_bins(window_ns, resolution)
    span = int(b.bins[-1]) - int(a.bins[0])
    if delay_bins + num_shifts * shift_bins + max_dev > span:
        raise StreamTooShort("shifted windows exceed the stream span")
    delays = [delay_bins + k * shift_bins for k in range(1, num_shifts + 1)]
    return float(np.mean(count_coincidences_at(a, b, delays, window_ns)))


def subtracted_counts(raw_by_setting, accidentals_by_setting):
    """Elementwise max(raw - accidentals, 0) over matching setting keys."""
    if set(raw_by_setting) != set(accidentals_by_setting):
        raise KeyMismatch("raw and accidental maps carry different settings")
    return {key: max(raw_by_setting[key] - accidentals_by_setting[key], 0.0)
            for key in raw_by_setting}


def correlate(a, b, window_ns, span_bins=2000, integration_s=None,
              delay_bins=None, num_shifts=ACCIDENTAL_NUM_SHIFTS):
    """Full pipeline for one stream pair: recover delay, count, estimate noise."""
    if integration_s is None:
        resolution = _check_resolution(a, b)
        last = max(int(a.bins[-1]) if len(a) else 0, int(b.bins[-1]) if len(b) else 0)
        integration_s = max(last * resolution * 1e-12, 1e-9)
    if delay_bins is None:
        estimate = find_offset(delay_histogram(a, b, span_bins))
        delay_bins = estimate.delay_bins
    raw = count_coincidences(a, b, delay_bins, window_ns)
    try:
        accidentals = estimate_accidentals(a, b, delay_bins, window_ns,
                                           num_shifts=num_shifts)
    except StreamTooShort:
        accidentals = 0.0
    return CoincidenceResult(delay_bins=int(delay_bins), window_ns=window_ns,
                             raw_coincidences=raw, accidentals=accidentals,
                             integration_s=integration_s)
