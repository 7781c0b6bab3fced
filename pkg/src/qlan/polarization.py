"""Jones-calculus model of the QWP -> HWP -> PBS polarization analyzers.

Each node measures by projecting onto the state transmitted at the PBS H-port
after the photon traverses the quarter- then half-wave plate. Residual phase
between H and V accumulated in fiber is compensated operationally: both QWPs
go to 45 degrees and one node's HWP angle x is tuned to maximize coincidences,
defining that link's effective D/D measurement. All other settings are fixed
HWP offsets from x.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateState
from .quantum import KET_H, kron

# HWP offsets from the compensation angle x for each projection label. H and V
# do not involve the QWP-at-45 trick and carry absolute angles.
LABELS = ("H", "V", "D", "A", "R", "L")
_LABEL_OFFSETS = {"D": 0.0, "A": 45.0, "R": 22.5, "L": -22.5}


@dataclass(frozen=True)
class AnalyzerSetting:
    """Fast-axis angles (degrees from horizontal) of the QWP and HWP."""

    qwp_deg: float
    hwp_deg: float

    def __post_init__(self):
        object.__setattr__(self, "qwp_deg", float(self.qwp_deg) % 180.0)
        object.__setattr__(self, "hwp_deg", float(self.hwp_deg) % 180.0)


def label_setting(label, x_deg=0.0):
    """Analyzer setting for one of the six standard projections.

    H=(0,0), V=(0,45), D=(45,x), A=(45,x+45), R=(45,x+22.5), L=(45,x-22.5),
    with x the per-node compensation offset.
    """
    if label == "H":
        return AnalyzerSetting(0.0, 0.0)
    if label == "V":
        return AnalyzerSetting(0.0, 45.0)
    try:
        return AnalyzerSetting(45.0, x_deg + _LABEL_OFFSETS[label])
    except KeyError:
        raise ValueError(f"unknown projection label {label!r}") from None


def hwp_jones(theta_deg):
    """Half-wave plate with fast axis at theta (global phase dropped)."""
    t = np.deg2rad(theta_deg)
    c, s = np.cos(2 * t), np.sin(2 * t)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_jones(theta_deg):
    """Quarter-wave plate with fast axis at theta."""
    t = np.deg2rad(theta_deg)
    c, s = np.cos(t), np.sin(t)
    return np.exp(-1j * np.pi / 4) * np.array(
        [[c * c + 1j * s * s, (1 - 1j) * s * c],
         [(1 - 1j) * s * c, s * s + 1j * c * c]])


def analyzer_state(setting):
    """Input state transmitted by the PBS H-port: (HWP @ QWP)^dagger |H>."""
    m = hwp_jones(setting.hwp_deg) @ qwp_jones(setting.qwp_deg)
    chi = m.conj().T @ KET_H
    return chi / np.linalg.norm(chi)


def analyzer_projector(setting):
    """Rank-1 projector onto the analyzed state."""
    chi = analyzer_state(setting)
    return np.outer(chi, chi.conj())


def coincidence_probability(rho, setting1, setting2):
    """tr[rho (P1 x P2)] for analyzers at the two nodes."""
    proj = kron(analyzer_projector(setting1), analyzer_projector(setting2))
    return float(np.trace(np.asarray(rho, dtype=complex) @ proj).real)


def solve_compensation_x(rho, node=1, scan_step_deg=0.5, refine_tol_deg=0.01,
                         flat_tol=1e-9):
    """Compensation angle maximizing D/D coincidences for one link.

    Both QWPs sit at 45 degrees; the untuned node's HWP stays at 0 while the
    tuned node's HWP scans x. A coarse grid pass brackets the peak, then
    golden-section refinement narrows it to ``refine_tol_deg``.

    node: 0 to tune the first tensor slot, 1 the second.
    """
    fixed = AnalyzerSetting(45.0, 0.0)

    def objective(x):
        tuned = AnalyzerSetting(45.0, x)
        if node == 0:
            return coincidence_probability(rho, tuned, fixed)
        return coincidence_probability(rho, fixed, tuned)

    xs = np.arange(0.0, 180.0, scan_step_deg)
    values = np.array([objective(x) for x in xs])
    if values.max() - values.min() < flat_tol:
        raise DegenerateState("coincidence objective is flat; no phase to compensate")

    best = int(np.argmax(values))
    lo = xs[best] - scan_step_deg
    hi = xs[best] + scan_step_deg
    # Golden-section maximization on the bracketing interval.
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = objective(c), objective(d)
    while (b - a) > refine_tol_deg:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = objective(d)
    return float((0.5 * (a + b)) % 180.0)
